"""Tensor-slot kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``TWISTFOCK_KERNELS=numpy`` is set) the numpy version is
used.  Every public function here accepts a single vector or a batch of row
vectors and returns the same layout.
"""
import os

import numpy as np

from . import _pykernels

_compiled = None
if os.environ.get("TWISTFOCK_KERNELS", "").lower() != "numpy":
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"numpy": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "numpy"
_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return _impl
    if name not in BACKENDS:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}")
    return BACKENDS[name]


def _as_batch(x):
    x = np.ascontiguousarray(x, dtype=np.complex128)
    if x.ndim == 1:
        return x.reshape(1, -1), True
    return x, False


def _out(y, single):
    return y[0] if single else y


def _mat(op):
    return np.ascontiguousarray(op, dtype=np.complex128)


def _vec(c):
    return np.ascontiguousarray(c, dtype=np.complex128).reshape(-1)


def apply_two_site(x, d, n, k, op):
    """Apply a d^2 x d^2 operator on slots (k, k+1) of tensors in (C^d)^{⊗n}."""
    x, single = _as_batch(x)
    return _out(_impl.apply_two_site(x, d, n, k, _mat(op)), single)


def contract(x, d, n, k, c):
    """Contract slots (k, k+1) against the pairing vector ``c`` of length d^2."""
    x, single = _as_batch(x)
    return _out(_impl.contract(x, d, n, k, _vec(c)), single)


def insert(x, d, n, k, c):
    """Insert the vector ``c`` (length d^2) at slots (k, k+1); the result has n+2 slots."""
    x, single = _as_batch(x)
    return _out(_impl.insert(x, d, n, k, _vec(c)), single)


def _steps(steps):
    return np.ascontiguousarray(np.asarray(steps, dtype=np.int64).reshape(-1, 3))


def apply_plan(x, d, n, steps, t, c):
    """Run a contraction plan.

    Each step ``(a, i, j)`` applies the twist chain T_i...T_{j-1} (rightmost
    first) and then contracts slots (a, a+1).
    """
    x, single = _as_batch(x)
    return _out(_impl.apply_plan(x, d, n, _steps(steps), _mat(t), _vec(c)), single)


def apply_plan_adjoint(x, d, n_out, steps, t_adj, c_conj):
    """Adjoint of :func:`apply_plan` for a plan landing on ``n_out - 2*len(steps)`` slots."""
    x, single = _as_batch(x)
    return _out(_impl.apply_plan_adjoint(x, d, n_out, _steps(steps), _mat(t_adj),
                                         _vec(c_conj)), single)
