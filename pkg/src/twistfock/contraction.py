"""Contraction operators C_i and twisted contractions W_π."""
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import IndexOutOfRange, SizeCapExceeded
from .matchings import crossing_numbers, plan_steps
from .twist import DEFAULT_SIZE_CAP, dense_from_action


def contraction_op(i, k, H):
    """Dense C_i: (C^d)^{⊗k} -> (C^d)^{⊗k-2}, pairing slots i, i+1 by <S x, y>."""
    if k < 2 or not 1 <= i < k:
        raise IndexOutOfRange(f"C_{i} undefined on {k} slots")
    d = H.d
    return np.kron(np.kron(np.eye(d ** (i - 1)), H.pairing.reshape(1, -1)), np.eye(d ** (k - i - 1)))


def c1_norm(H):
    return float(np.linalg.norm(H.pairing))


class ContractionPlan:
    """Compiled step list for W_π under a fixed admissible order."""

    def __init__(self, pi, order=None):
        self.pi = pi
        self.n = pi.n
        self.n_out = pi.num_singletons
        self.steps = np.array(plan_steps(pi, order), dtype=np.int64).reshape(-1, 3)
        self.steps.setflags(write=False)
        self.crossings = crossing_numbers(pi, order)[1]

    def __len__(self):
        return len(self.steps)

    def describe(self):
        """Operator word, leftmost factor applied last, e.g. 'C1T2 C1 C2T3T4'."""
        parts = []
        for a, tf, tt in self.steps:
            parts.append(f"C{a}" + "".join(f"T{k}" for k in range(tf, tt)))
        return " ".join(reversed(parts))

    def apply(self, x, T, H):
        if not len(self.steps):
            return np.array(x, dtype=np.complex128, copy=True)
        return kernels.apply_plan(x, H.d, self.n, self.steps, T.matrix, H.pairing)

    def apply_adjoint(self, y, T, H):
        if not len(self.steps):
            return np.array(y, dtype=np.complex128, copy=True)
        return kernels.apply_plan_adjoint(y, H.d, self.n, self.steps, T.adjoint_matrix,
                                          np.conj(H.pairing))


@lru_cache(maxsize=8192)
def _plan(pi, order):
    return ContractionPlan(pi, None if order is None else [tuple(p) for p in order])


def compile_plan(pi, order=None):
    """Cached plan for (π, order); the default order is left standard."""
    key = None if order is None else tuple(tuple(p) for p in order)
    return _plan(pi, key)


def apply_W(pi, x, T, H, order=None):
    return compile_plan(pi, order).apply(x, T, H)


def apply_W_adjoint(pi, y, T, H, order=None):
    return compile_plan(pi, order).apply_adjoint(y, T, H)


def twisted_contraction(pi, T, H, order=None, size_cap=DEFAULT_SIZE_CAP):
    """Dense W_π: (C^d)^{⊗n} -> (C^d)^{⊗|s(π)|}."""
    plan = compile_plan(pi, order)
    if H.d ** (pi.n + plan.n_out) > size_cap:
        raise SizeCapExceeded(f"dense W_π on {pi.n} slots exceeds the size cap")
    return dense_from_action(lambda x: plan.apply(x, T, H), H.d ** pi.n)


def w_norm_bound(pi, q, c1):
    """‖C_1‖^{|p(π)|} q^{Cr(π)}."""
    return float(c1 ** pi.num_pairs * q ** crossing_numbers(pi)[1])
