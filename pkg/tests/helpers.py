from ppgglu.acceptance import numeric_grad, rel_err  # noqa: F401
from ppgglu.tensor import Tape


def check_grads(loss_fn, tensors, step=1e-5, indices=None):
    """Worst relative error between tape gradients and central differences.

    ``loss_fn`` builds a scalar Tensor from ``tensors`` (each requires_grad).
    """
    for t in tensors:
        t.grad = None
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    worst = 0.0
    for t in tensors:
        analytic = t.grad.copy()
        numeric = numeric_grad(lambda: loss_fn().item(), t.data, step, indices)
        if indices is not None:
            sel = list(indices)
            analytic = analytic.reshape(-1)[sel]
            numeric = numeric.reshape(-1)[sel]
        worst = max(worst, rel_err(analytic, numeric))
    return worst
