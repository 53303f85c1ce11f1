"""Hot loops of the network: 1-D convolution and the GRU recurrence.

Each kernel exists as a numba loop nest (``*_loops``) and a vectorised numpy
version (``*_np``). The public names at the bottom bind to one of the two
according to :mod:`ppgglu._accel`. All arrays are float64 and C-contiguous.

The convolution forward pass accumulates ``sum_ci sum_j K[o,ci,j] * x[ci,t+j]``
in that order, starting from 0.0, and adds the bias last; both versions share
this order so their outputs agree bit for bit with a naive nested loop.

GRU arrays are time-major: ``A`` is ``(T, B, 3H)`` holding ``x_t W + b`` with
gate blocks ordered update, reset, candidate.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, njit


# ---------------------------------------------------------------------------
# conv1d

def conv1d_forward_np(xpad, K, b):
    B, cin, Lp = xpad.shape
    cout, _, k = K.shape
    L = Lp - k + 1
    acc = np.zeros((B, cout, L))
    for ci in range(cin):
        for j in range(k):
            acc += K[None, :, ci, j, None] * xpad[:, None, ci, j:j + L]
    return acc + b[None, :, None]


def conv1d_backward_np(xpad, K, gout):
    B, cin, Lp = xpad.shape
    cout, _, k = K.shape
    L = Lp - k + 1
    windows = np.lib.stride_tricks.sliding_window_view(xpad, L, axis=2)  # (B, cin, k, L)
    dK = np.einsum("bot,bcjt->ocj", gout, windows)
    dxpad = np.zeros_like(xpad)
    for j in range(k):
        dxpad[:, :, j:j + L] += np.einsum("bot,oc->bct", gout, K[:, :, j])
    db = gout.sum(axis=(0, 2))
    return dxpad, dK, db


@njit(cache=True)
def conv1d_forward_loops(xpad, K, b):
    B, cin, Lp = xpad.shape
    cout, _, k = K.shape
    L = Lp - k + 1
    out = np.empty((B, cout, L))
    for n in range(B):
        for o in range(cout):
            for t in range(L):
                acc = 0.0
                for ci in range(cin):
                    for j in range(k):
                        acc += K[o, ci, j] * xpad[n, ci, t + j]
                out[n, o, t] = acc + b[o]
    return out


@njit(cache=True)
def conv1d_backward_loops(xpad, K, gout):
    B, cin, Lp = xpad.shape
    cout, _, k = K.shape
    L = Lp - k + 1
    dxpad = np.zeros_like(xpad)
    dK = np.zeros_like(K)
    db = np.zeros(cout)
    for n in range(B):
        for o in range(cout):
            for t in range(L):
                db[o] += gout[n, o, t]
            for ci in range(cin):
                for j in range(k):
                    w = K[o, ci, j]
                    acc = 0.0
                    for t in range(L):
                        acc += gout[n, o, t] * xpad[n, ci, t + j]
                        dxpad[n, ci, t + j] += gout[n, o, t] * w
                    dK[o, ci, j] += acc
    return dxpad, dK, db


# ---------------------------------------------------------------------------
# GRU recurrence

def _sigmoid_np(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def gru_forward_np(A, U, h0):
    T, B, H3 = A.shape
    H = H3 // 3
    hs = np.empty((T, B, H))
    z = np.empty((T, B, H))
    r = np.empty((T, B, H))
    n = np.empty((T, B, H))
    uhn = np.empty((T, B, H))
    hp = h0
    for t in range(T):
        uh = hp @ U
        a = A[t]
        z[t] = _sigmoid_np(a[:, :H] + uh[:, :H])
        r[t] = _sigmoid_np(a[:, H:2 * H] + uh[:, H:2 * H])
        uhn[t] = uh[:, 2 * H:]
        n[t] = np.tanh(a[:, 2 * H:] + r[t] * uhn[t])
        hs[t] = (1.0 - z[t]) * n[t] + z[t] * hp
        hp = hs[t]
    return hs, z, r, n, uhn


def gru_backward_np(dhs, hs, h0, U, z, r, n, uhn):
    T, B, H = hs.shape
    dA = np.empty((T, B, 3 * H))
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        hp = hs[t - 1] if t > 0 else h0
        dh = dhs[t] + dh_next
        dn = dh * (1.0 - z[t])
        dz = dh * (hp - n[t])
        dan = dn * (1.0 - n[t] * n[t])
        dr = dan * uhn[t]
        daz = dz * z[t] * (1.0 - z[t])
        dar = dr * r[t] * (1.0 - r[t])
        duh = np.concatenate((daz, dar, dan * r[t]), axis=1)
        dA[t, :, :H] = daz
        dA[t, :, H:2 * H] = dar
        dA[t, :, 2 * H:] = dan
        dU += hp.T @ duh
        dh_next = dh * z[t] + duh @ U.T
    return dA, dU, dh_next


@njit(cache=True, inline="always")
def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


@njit(cache=True)
def gru_forward_loops(A, U, h0):
    # gates via exp: scalar math.tanh is ~3x slower than math.exp under numba
    T, B, H3 = A.shape
    H = H3 // 3
    hs = np.empty((T, B, H))
    z = np.empty((T, B, H))
    r = np.empty((T, B, H))
    n = np.empty((T, B, H))
    uhn = np.empty((T, B, H))
    for t in range(T):
        hp = hs[t - 1] if t > 0 else h0
        uh = np.dot(hp, U)
        for b in range(B):
            for j in range(H):
                zz = _sig(A[t, b, j] + uh[b, j])
                rr = _sig(A[t, b, H + j] + uh[b, H + j])
                un = uh[b, 2 * H + j]
                nn = 2.0 * _sig(2.0 * (A[t, b, 2 * H + j] + rr * un)) - 1.0
                z[t, b, j] = zz
                r[t, b, j] = rr
                n[t, b, j] = nn
                uhn[t, b, j] = un
                hs[t, b, j] = (1.0 - zz) * nn + zz * hp[b, j]
    return hs, z, r, n, uhn


@njit(cache=True)
def gru_backward_loops(dhs, hs, h0, U, z, r, n, uhn):
    T, B, H = hs.shape
    dA = np.empty((T, B, 3 * H))
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, H))
    duh = np.empty((B, 3 * H))
    dh = np.empty((B, H))
    Ut = np.ascontiguousarray(U.T)
    for t in range(T - 1, -1, -1):
        if t > 0:
            hp = hs[t - 1]
        else:
            hp = h0
        for b in range(B):
            for j in range(H):
                g = dhs[t, b, j] + dh_next[b, j]
                zz = z[t, b, j]
                rr = r[t, b, j]
                nn = n[t, b, j]
                dan = g * (1.0 - zz) * (1.0 - nn * nn)
                daz = g * (hp[b, j] - nn) * zz * (1.0 - zz)
                dar = dan * uhn[t, b, j] * rr * (1.0 - rr)
                dA[t, b, j] = daz
                dA[t, b, H + j] = dar
                dA[t, b, 2 * H + j] = dan
                duh[b, j] = daz
                duh[b, H + j] = dar
                duh[b, 2 * H + j] = dan * rr
                dh[b, j] = g * zz
        dU += np.dot(np.ascontiguousarray(hp.T), duh)
        dh_next = dh + np.dot(duh, Ut)
    return dA, dU, dh_next


if HAVE_NUMBA:
    conv1d_forward = conv1d_forward_loops
    # a handful of BLAS-sized numpy ops; the loops only tie it, so keep the simpler path
    conv1d_backward = conv1d_backward_np
    gru_forward = gru_forward_loops
    gru_backward = gru_backward_loops
else:
    conv1d_forward = conv1d_forward_np
    conv1d_backward = conv1d_backward_np
    gru_forward = gru_forward_np
    gru_backward = gru_backward_np
