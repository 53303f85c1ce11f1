"""Dense float64 tensors with tape-based reverse-mode differentiation.

Operations run eagerly on numpy arrays. While a :class:`Tape` is active
(``with Tape() as tape:``) every operation whose inputs require gradients is
recorded together with its backward rule; ``tape.backward(loss)`` then walks
the record in reverse. Outside a tape nothing is recorded, so plain forward
evaluation is reentrant.

    >>> w = Tensor([3.0], requires_grad=True)
    >>> with Tape() as tape:
    ...     y = mul(w, w)
    >>> tape.backward(sum_all(y))
    >>> w.grad
    array([6.])
"""
import threading

import numpy as np

from . import kernels
from .errors import (
    EmptyInput,
    InvalidBatch,
    InvalidInput,
    InvalidKernel,
    NotScalar,
    ShapeMismatch,
)

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64, copy=True) if not isinstance(data, np.ndarray) \
            or data.dtype != np.float64 else data
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        if self.data.size != 1:
            raise NotScalar(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


class _Record:
    __slots__ = ("out", "inputs", "backward")

    def __init__(self, out, inputs, backward):
        self.out = out
        self.inputs = inputs
        self.backward = backward


_local = threading.local()


def _active_tape():
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


class Tape:
    """Ordered log of executed operations.

    Records are appended in execution order, which is a topological order of
    the computation graph by construction.
    """

    def __init__(self):
        self.records = []

    def __enter__(self):
        if not hasattr(_local, "stack"):
            _local.stack = []
        _local.stack.append(self)
        return self

    def __exit__(self, *exc):
        _local.stack.pop()
        return False

    def __len__(self):
        return len(self.records)

    def backward(self, loss):
        backward(loss, self)


def backward(loss, tape):
    """Accumulate d(loss)/d(t) into ``t.grad`` for every grad-requiring tensor."""
    if loss.data.size != 1:
        raise NotScalar(f"backward needs a scalar loss, got shape {loss.shape}")
    grads = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        rec.out.grad = g
        in_grads = rec.backward(g)
        for t, gi in zip(rec.inputs, in_grads):
            if gi is None or not t.requires_grad:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
    # anything left is a leaf (or an untaped intermediate)
    leaves = {}
    for rec in tape.records:
        for t in rec.inputs:
            leaves[id(t)] = t
    leaves[id(loss)] = loss
    for key, g in grads.items():
        t = leaves.get(key)
        if t is None or not t.requires_grad:
            continue
        t.grad = g.copy() if t.grad is None else t.grad + g


def _make(data, inputs, backward_fn):
    needs = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs)
    tape = _active_tape()
    if needs and tape is not None:
        tape.records.append(_Record(out, inputs, backward_fn))
    return out


# ---------------------------------------------------------------------------
# elementwise and reductions

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"add: {a.shape} vs {b.shape}")
    return _make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"sub: {a.shape} vs {b.shape}")
    return _make(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"mul: {a.shape} vs {b.shape}")
    ad, bd = a.data, b.data
    return _make(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def sum_all(x):
    shape = x.shape
    return _make(np.array(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, shape).copy(),))


def reshape(x, shape):
    old = x.shape
    out = x.data.reshape(shape)
    return _make(out, (x,), lambda g: (g.reshape(old),))


def flatten(x):
    """Collapse all but the leading (batch) axis."""
    return reshape(x, (x.shape[0], -1))


def concat(tensors, axis=-1):
    datas = [t.data for t in tensors]
    axis = axis % datas[0].ndim
    bounds = np.cumsum([d.shape[axis] for d in datas])[:-1]

    def bw(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(np.concatenate(datas, axis=axis), tuple(tensors), bw)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def activation(kind, x):
    x = as_tensor(x)
    if kind == "relu":
        mask = x.data > 0
        # np.maximum keeps NaN visible so the loss guard can see it
        return _make(np.maximum(x.data, 0.0), (x,), lambda g: (g * mask,))
    if kind == "sigmoid":
        s = _sigmoid(x.data)
        return _make(s, (x,), lambda g: (g * s * (1.0 - s),))
    if kind == "tanh":
        t = np.tanh(x.data)
        return _make(t, (x,), lambda g: (g * (1.0 - t * t),))
    raise InvalidInput(f"unknown activation {kind!r}")


def relu(x):
    return activation("relu", x)


def sigmoid(x):
    return activation("sigmoid", x)


def tanh(x):
    return activation("tanh", x)


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    return _make(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g))


def dense(x, W, b):
    """Affine map ``x W + b`` for ``x`` of shape (batch, in)."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    if x.data.ndim != 2 or W.data.ndim != 2 or x.shape[1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeMismatch(f"dense: x{x.shape} W{W.shape} b{b.shape}")
    xd, Wd = x.data, W.data

    def bw(g):
        return g @ Wd.T, xd.T @ g, g.sum(axis=0)

    return _make(xd @ Wd + b.data, (x, W, b), bw)


# ---------------------------------------------------------------------------
# convolution, pooling, normalisation

def conv1d(x, kernels_, bias):
    """Same-padded, stride-1 cross-correlation.

    ``x`` is (channels_in, length) or (batch, channels_in, length); kernels are
    (channels_out, channels_in, k) with k odd.
    """
    x, Kt, bt = as_tensor(x), as_tensor(kernels_), as_tensor(bias)
    K = Kt.data
    if K.ndim != 3:
        raise ShapeMismatch(f"conv1d: kernels must be 3-D, got {K.shape}")
    cout, cin, k = K.shape
    if k % 2 == 0:
        raise InvalidKernel(f"conv1d: kernel length must be odd, got {k}")
    batched = x.data.ndim == 3
    xd = x.data if batched else x.data[None]
    if xd.ndim != 3 or xd.shape[1] != cin:
        raise ShapeMismatch(f"conv1d: input {x.shape} vs kernels {K.shape}")
    if xd.shape[2] < 1:
        raise InvalidInput("conv1d: empty input")
    if bt.shape != (cout,):
        raise ShapeMismatch(f"conv1d: bias {bt.shape} vs {cout} output channels")
    pad = (k - 1) // 2
    xpad = np.ascontiguousarray(np.pad(xd, ((0, 0), (0, 0), (pad, pad))))
    Kc = np.ascontiguousarray(K)
    out = kernels.conv1d_forward(xpad, Kc, np.ascontiguousarray(bt.data))

    def bw(g):
        g3 = np.ascontiguousarray(g if batched else g[None])
        dxpad, dK, db = kernels.conv1d_backward(xpad, Kc, g3)
        dx = dxpad[:, :, pad:pad + xd.shape[2]]
        return (dx if batched else dx[0]), dK, db

    return _make(out if batched else out[0], (x, Kt, bt), bw)


def maxpool1d(x, window=2, stride=2):
    """Non-overlapping max over the last axis; a trailing odd sample is dropped."""
    x = as_tensor(x)
    if window != 2 or stride != 2:
        raise InvalidInput("maxpool1d supports window=2, stride=2 only")
    L = x.shape[-1]
    if L < 2:
        raise InvalidInput(f"maxpool1d: length {L} < 2")
    m = L // 2
    pairs = x.data[..., :2 * m].reshape(x.shape[:-1] + (m, 2))
    second = pairs[..., 1] > pairs[..., 0]  # ties keep index 0
    out = np.where(second, pairs[..., 1], pairs[..., 0])

    def bw(g):
        gp = np.zeros(pairs.shape)
        gp[..., 0] = np.where(second, 0.0, g)
        gp[..., 1] = np.where(second, g, 0.0)
        gx = np.zeros(x.shape)
        gx[..., :2 * m] = gp.reshape(x.shape[:-1] + (2 * m,))
        return (gx,)

    return _make(out, (x,), bw)


class BatchNormState:
    """Running mean/variance for one batch-norm layer."""

    def __init__(self, features):
        self.mean = np.zeros(features)
        self.var = np.ones(features)

    def copy(self):
        s = BatchNormState(len(self.mean))
        s.mean = self.mean.copy()
        s.var = self.var.copy()
        return s


def batchnorm1d(x, gamma, beta, state, mode="train"):
    """``gamma (x - mu) / sqrt(var + eps) + beta`` per feature.

    ``x`` is (batch, features), or (batch, features, length) in which case
    statistics are taken over batch and length. Train mode uses biased batch
    statistics and folds them into ``state`` with momentum 0.1 (the running
    variance receives the unbiased estimate); eval mode uses ``state``.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    xd = x.data
    if xd.ndim not in (2, 3):
        raise ShapeMismatch(f"batchnorm1d: expected 2-D or 3-D input, got {x.shape}")
    F = xd.shape[1]
    if gamma.shape != (F,) or beta.shape != (F,):
        raise ShapeMismatch(f"batchnorm1d: gamma/beta {gamma.shape}/{beta.shape} vs {F} features")
    axes = (0,) if xd.ndim == 2 else (0, 2)
    bshape = (1, F) if xd.ndim == 2 else (1, F, 1)
    count = xd.size // F
    if mode == "train":
        if xd.shape[0] < 2:
            raise InvalidBatch(f"batchnorm1d: train mode needs batch >= 2, got {xd.shape[0]}")
        mu = xd.mean(axis=axes)
        var = xd.var(axis=axes)
        state.mean = (1 - BN_MOMENTUM) * state.mean + BN_MOMENTUM * mu
        state.var = (1 - BN_MOMENTUM) * state.var + BN_MOMENTUM * var * count / (count - 1)
    elif mode == "eval":
        mu, var = state.mean, state.var
    else:
        raise InvalidInput(f"batchnorm1d: unknown mode {mode!r}")
    inv = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (xd - mu.reshape(bshape)) * inv.reshape(bshape)
    gd = gamma.data.reshape(bshape)
    out = gd * xhat + beta.data.reshape(bshape)

    def bw(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * gd
        if mode == "train":
            dx = (inv.reshape(bshape) / count) * (
                count * dxhat
                - dxhat.sum(axis=axes).reshape(bshape)
                - xhat * (dxhat * xhat).sum(axis=axes).reshape(bshape)
            )
        else:
            dx = dxhat * inv.reshape(bshape)
        return dx, dgamma, dbeta

    return _make(out, (x, gamma, beta), bw)


# ---------------------------------------------------------------------------
# recurrence

def gru_step(x_t, h_prev, W_z, W_r, W_n, U_z, U_r, U_n, b_z, b_r, b_n):
    """One GRU update built from taped primitives.

    z = sigmoid(x W_z + h U_z + b_z), r = sigmoid(x W_r + h U_r + b_r),
    n = tanh(x W_n + r * (h U_n) + b_n), h' = (1 - z) * n + z * h.
    ``x_t`` is (batch, in) and ``h_prev`` (batch, hidden).
    """
    x_t, h_prev = as_tensor(x_t), as_tensor(h_prev)
    if x_t.data.ndim != 2 or h_prev.data.ndim != 2 or x_t.shape[0] != h_prev.shape[0]:
        raise ShapeMismatch(f"gru_step: x {x_t.shape}, h {h_prev.shape}")
    H = h_prev.shape[1]
    for W in (W_z, W_r, W_n):
        if W.shape != (x_t.shape[1], H):
            raise ShapeMismatch(f"gru_step: input weights {W.shape}, expected {(x_t.shape[1], H)}")
    for U in (U_z, U_r, U_n):
        if U.shape != (H, H):
            raise ShapeMismatch(f"gru_step: recurrent weights {U.shape}, expected {(H, H)}")
    z = sigmoid(add(matmul(x_t, W_z), dense(h_prev, U_z, b_z)))
    r = sigmoid(add(matmul(x_t, W_r), dense(h_prev, U_r, b_r)))
    n = tanh(add(dense(x_t, W_n, b_n), mul(r, matmul(h_prev, U_n))))
    one_minus_z = sub(Tensor(np.ones(z.shape)), z)
    return add(mul(one_minus_z, n), mul(z, h_prev))


def gru_sequence(x, W, U, b, h0=None):
    """Run a GRU over a whole sequence as one fused, taped operation.

    ``x`` is (batch, time, in); ``W`` (in, 3H), ``U`` (H, 3H) and ``b`` (3H,)
    pack the update, reset and candidate blocks in that order. Returns all
    hidden states, (batch, time, H). Numerically the same recurrence as
    repeated :func:`gru_step`.
    """
    x, W, U, b = as_tensor(x), as_tensor(W), as_tensor(U), as_tensor(b)
    if x.data.ndim != 3:
        raise ShapeMismatch(f"gru_sequence: input must be (batch, time, in), got {x.shape}")
    B, T, nin = x.shape
    H3 = W.shape[1]
    H = H3 // 3
    if W.shape != (nin, H3) or H3 % 3 or U.shape != (H, H3) or b.shape != (H3,):
        raise ShapeMismatch(f"gru_sequence: W{W.shape} U{U.shape} b{b.shape} for input {nin}")
    h0d = np.zeros((B, H)) if h0 is None else np.ascontiguousarray(as_tensor(h0).data)
    xt = np.ascontiguousarray(x.data.transpose(1, 0, 2))  # (T, B, in)
    A = np.ascontiguousarray(xt @ W.data + b.data)
    Ud = np.ascontiguousarray(U.data)
    hs, z, r, n, uhn = kernels.gru_forward(A, Ud, h0d)

    def bw(g):
        dhs = np.ascontiguousarray(g.transpose(1, 0, 2))
        dA, dU, _ = kernels.gru_backward(dhs, hs, h0d, Ud, z, r, n, uhn)
        dA2 = dA.reshape(T * B, H3)
        dW = xt.reshape(T * B, nin).T @ dA2
        db = dA2.sum(axis=0)
        dx = (dA @ W.data.T).transpose(1, 0, 2)
        return dx, dW, dU, db

    return _make(hs.transpose(1, 0, 2), (x, W, U, b), bw)


def take_last(x):
    """Last time step of a (batch, time, features) tensor."""
    shape = x.shape

    def bw(g):
        gx = np.zeros(shape)
        gx[:, -1, :] = g
        return (gx,)

    return _make(x.data[:, -1, :].copy(), (x,), bw)


# ---------------------------------------------------------------------------
# loss

def mse_loss(pred, target):
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"mse_loss: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise EmptyInput("mse_loss on empty tensors")
    diff = pred.data - target.data
    n = diff.size
    return _make(np.array(np.mean(diff * diff)), (pred, target),
                 lambda g: (g * 2.0 * diff / n, -g * 2.0 * diff / n))
