"""Pure numpy implementation of the tensor-slot kernels.

All functions act on a batch of tensors stored row-wise: ``x`` has shape
``(batch, d**n)`` and slot 1 is the most significant (leftmost) tensor factor.
Slot indices are 1-based.
"""
import numpy as np


def apply_two_site(x, d, n, k, op):
    b = x.shape[0]
    y = x.reshape(b, d ** (k - 1), d * d, d ** (n - k - 1))
    return np.matmul(op, y).reshape(b, d ** n)


def contract(x, d, n, k, c):
    b = x.shape[0]
    y = x.reshape(b, d ** (k - 1), d * d, d ** (n - k - 1))
    return np.matmul(c, y).reshape(b, d ** (n - 2))


def insert(x, d, n, k, c):
    b = x.shape[0]
    y = x.reshape(b, d ** (k - 1), 1, d ** (n - k + 1))
    return (y * c.reshape(1, 1, d * d, 1)).reshape(b, d ** (n + 2))


def apply_plan(x, d, n, steps, t, c):
    for ci, tf, tt in steps:
        for k in range(tt - 1, tf - 1, -1):
            x = apply_two_site(x, d, n, k, t)
        x = contract(x, d, n, ci, c)
        n -= 2
    return x


def apply_plan_adjoint(x, d, n_out, steps, t_adj, c_conj):
    n = n_out - 2 * len(steps)
    for ci, tf, tt in reversed(list(steps)):
        x = insert(x, d, n, ci, c_conj)
        n += 2
        for k in range(tf, tt):
            x = apply_two_site(x, d, n, k, t_adj)
    return x
