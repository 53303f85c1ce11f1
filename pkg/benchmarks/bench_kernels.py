"""Numba vs numpy timings for the hot kernels and for one full training step.

    python benchmarks/bench_kernels.py [--repeat N]

Kernel rows call both implementations directly in one process. The
training-step rows run each backend in a subprocess, because the backend
is fixed at import time by PPGGLU_DISABLE_NUMBA.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from ppgglu import kernels
from ppgglu._accel import HAVE_NUMBA

STEP_SNIPPET = """
import time, numpy as np
from ppgglu.model import build
from ppgglu.tensor import Tape, Tensor, mse_loss
from ppgglu._accel import backend
m = build()
X = np.random.default_rng(0).random((16, 300)); y = np.full(16, 140.0)
def step():
    with Tape() as t:
        loss = mse_loss(m.forward(X, "train"), Tensor(y))
    t.backward(loss)
step()
t0 = time.perf_counter()
for _ in range({n}):
    step()
print(backend(), (time.perf_counter() - t0) / {n} * 1e3)
"""


def timeit(fn, args, repeat):
    fn(*args)  # warm-up / JIT
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def kernel_cases():
    rng = np.random.default_rng(0)
    B, L, cout = 16, 300, 32
    for k in (5, 11):
        xpad = rng.standard_normal((B, 1, L + k - 1))
        K = rng.standard_normal((cout, 1, k))
        b = rng.standard_normal(cout)
        g = rng.standard_normal((B, cout, L))
        yield f"conv1d fwd k={k}", kernels.conv1d_forward_np, kernels.conv1d_forward_loops, (xpad, K, b)
        yield f"conv1d bwd k={k}", kernels.conv1d_backward_np, kernels.conv1d_backward_loops, (xpad, K, g)
    T = 300
    for nin, H in ((1, 64), (64, 32)):
        A = rng.standard_normal((T, B, 3 * H))
        U = 0.1 * rng.standard_normal((H, 3 * H))
        h0 = np.zeros((B, H))
        cache = kernels.gru_forward_np(A, U, h0)
        hs, z, r, n, uhn = cache
        dhs = rng.standard_normal((T, B, H))
        yield f"gru fwd H={H}", kernels.gru_forward_np, kernels.gru_forward_loops, (A, U, h0)
        yield (f"gru bwd H={H}", kernels.gru_backward_np, kernels.gru_backward_loops,
               (dhs, hs, h0, U, z, r, n, uhn))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=10)
    args = ap.parse_args()

    if not HAVE_NUMBA:
        print("numba unavailable or disabled; only the numpy column is meaningful")
    print(f"{'kernel':<18} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, f_np, f_nb, a in kernel_cases():
        t_np = timeit(f_np, a, args.repeat)
        t_nb = timeit(f_nb, a, args.repeat) if HAVE_NUMBA else float("nan")
        print(f"{name:<18} {t_np:>10.2f} {t_nb:>10.2f} {t_np / t_nb:>7.2f}x")

    print("\nfull forward+backward, batch 16, default model")
    for flag in ("1", "0"):
        env = dict(os.environ, PPGGLU_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", STEP_SNIPPET.format(n=args.steps)], env=env,
                             capture_output=True, text=True, check=True)
        name, ms = res.stdout.split()
        print(f"  backend={name:<6} {float(ms):8.1f} ms/step")


if __name__ == "__main__":
    main()
