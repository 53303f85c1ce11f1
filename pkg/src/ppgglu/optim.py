import numpy as np

from .errors import MissingGradient


class AdamState:
    """Moment buffers and step counter for one parameter."""

    def __init__(self, param, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(param.shape)
        self.v = np.zeros(param.shape)
        self.t = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


def adam_step(param, state):
    """Bias-corrected Adam update of ``param`` in place; clears ``param.grad``."""
    g = param.grad
    if g is None:
        raise MissingGradient(f"adam_step: {param!r} has no gradient")
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * g
    state.v = state.beta2 * state.v + (1 - state.beta2) * g * g
    m_hat = state.m / (1 - state.beta1 ** state.t)
    v_hat = state.v / (1 - state.beta2 ** state.t)
    param.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    param.grad = None


class Adam:
    """Adam over a list of parameter tensors."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.states = [AdamState(p, lr, beta1, beta2, eps) for p in self.params]

    def step(self):
        for p, s in zip(self.params, self.states):
            if p.grad is None:
                # parameter unused in this batch's graph
                p.grad = np.zeros(p.shape)
            adam_step(p, s)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
