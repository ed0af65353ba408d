# PEP-8
import numpy as np

from flight.diffcore import Tape, Tensor, backward


def numeric_gradient(fn, arrays, index, h=1e-6):
    base = arrays[index]
    grad = np.zeros_like(base)
    for idx in np.ndindex(base.shape):
        plus = [a.copy() for a in arrays]
        minus = [a.copy() for a in arrays]
        plus[index][idx] += h
        minus[index][idx] -= h
        f_plus = fn(*(Tensor(a) for a in plus)).item()
        f_minus = fn(*(Tensor(a) for a in minus)).item()
        grad[idx] = (f_plus - f_minus) / (2 * h)
    return grad


def assert_gradients(fn, *arrays, rtol=1e-5, atol=1e-7):
    """Tape gradients of the scalar ``fn`` against central differences, for every input."""
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    tape = Tape()
    leaves = [tape.leaf(a) for a in arrays]
    store = backward(tape, fn(*leaves))
    for i, leaf in enumerate(leaves):
        np.testing.assert_allclose(
            store.grad(leaf), numeric_gradient(fn, arrays, i), rtol=rtol, atol=atol,
        )
