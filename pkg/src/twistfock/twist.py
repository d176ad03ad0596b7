"""Twists on C^d ⊗ C^d: constructors, slot embeddings and the validator."""
from dataclasses import dataclass, field
import threading
import warnings

import numpy as np

from . import kernels
from .errors import BadParams, SizeCapExceeded, IndexOutOfRange
from .hilbert import DEFAULT_TOL, build_standard_subspace

DEFAULT_SIZE_CAP = 2 ** 26
DEFAULT_POSITIVITY_LEVEL = 6
DENSE_LEVEL_CAP = 2048


def flip(d):
    F = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            F[j * d + i, i * d + j] = 1.0
    return F


class Twist:
    """A d^2 x d^2 operator T on C^d ⊗ C^d in tensor coordinates.

    Per-level kernel data (R, P, factorizations) is cached on the instance;
    the cache is filled under a lock so a twist can be shared across threads.
    """

    def __init__(self, matrix, kind="raw", params=None, subspace=None, tol=DEFAULT_TOL):
        m = np.array(matrix, dtype=np.complex128)
        d2 = m.shape[0]
        d = int(round(np.sqrt(d2)))
        if m.shape != (d2, d2) or d * d != d2:
            raise BadParams("twist matrix must be d^2 x d^2")
        m.setflags(write=False)
        self.d = d
        self.matrix = m
        self.adjoint_matrix = np.ascontiguousarray(m.conj().T)
        self.adjoint_matrix.setflags(write=False)
        self.kind = kind
        self.params = params or {}
        self.subspace = subspace
        self.tol = tol
        self.q = float(np.linalg.norm(m, 2)) if d2 else 0.0
        self.report = None
        self._cache = {}
        self._lock = threading.RLock()

    def cached(self, key, factory):
        """Return ``self._cache[key]``, creating it once with ``factory()``."""
        try:
            return self._cache[key]
        except KeyError:
            pass
        with self._lock:
            if key not in self._cache:
                self._cache[key] = factory()
            return self._cache[key]

    @property
    def is_zero(self):
        return not np.any(self.matrix)

    def apply(self, x, n, k):
        """Apply T_k to a vector or batch of rows in (C^d)^{⊗n}."""
        if not 1 <= k <= n - 1:
            raise IndexOutOfRange(f"slot {k} outside 1..{n - 1}")
        return kernels.apply_two_site(x, self.d, n, k, self.matrix)

    def apply_adjoint(self, x, n, k):
        return kernels.apply_two_site(x, self.d, n, k, self.adjoint_matrix)

    def apply_chain(self, x, n, i, j):
        """Apply T_{i,j} = T_i T_{i+1} ... T_{j-1} (rightmost first)."""
        if not 1 <= i <= j <= n:
            raise IndexOutOfRange(f"chain ({i}, {j}) invalid for n = {n}")
        for k in range(j - 1, i - 1, -1):
            x = kernels.apply_two_site(x, self.d, n, k, self.matrix)
        return x

    def to_dict(self):
        out = {"kind": self.kind, "d": self.d, "q": self.q,
               "params": _jsonable(self.params)}
        if self.report is not None:
            out["validation"] = self.report.to_dict()
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag] if obj.imag else obj.real
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def _check_cap(d, n, cap):
    if d ** (2 * n) > cap:
        raise SizeCapExceeded(f"dense operator on level {n} has {d ** (2 * n)} entries > cap {cap}")


def dense_from_action(action, dim):
    """Matrix of a linear map given by its action on a batch of row vectors."""
    return np.ascontiguousarray(action(np.eye(dim, dtype=np.complex128)).T)


def embed(T, k, n, size_cap=DEFAULT_SIZE_CAP):
    """Dense T_k = 1^{⊗k-1} ⊗ T ⊗ 1^{⊗n-k-1}."""
    if not 1 <= k <= n - 1:
        raise IndexOutOfRange(f"slot {k} outside 1..{n - 1}")
    _check_cap(T.d, n, size_cap)
    d = T.d
    return np.kron(np.kron(np.eye(d ** (k - 1)), T.matrix), np.eye(d ** (n - k - 1)))


def ranged_product(T, i, j, n, size_cap=DEFAULT_SIZE_CAP):
    """Dense T_{i,j} = T_i ... T_{j-1}; the identity when i = j."""
    _check_cap(T.d, n, size_cap)
    return dense_from_action(lambda x: T.apply_chain(x, n, i, j), T.d ** n)


# constructors

def matrix_algebra_subspace(h, basis_mode="complex-linear"):
    """Standard subspace of Hermitian matrices in L^2(M_n, Tr(h .)).

    Coordinates use the orthonormal basis eps_ij = E_ij / sqrt(h_j), ordered
    row-major; Δ eps_ij = (h_i/h_j) eps_ij and J eps_ij = eps_ji.
    """
    h = np.asarray(h, dtype=float)
    n = h.size
    lam = np.array([h[i] / h[j] for i in range(n) for j in range(n)])
    bar = [j * n + i for i in range(n) for j in range(n)]
    return build_standard_subspace(eigenvalues=lam, bar=bar, basis_mode=basis_mode)


def _matrix_algebra_matrix(h, c):
    h = np.asarray(h, dtype=float)
    n = h.size
    d = n * n
    m = np.zeros((d, d * d), dtype=np.complex128)
    # m(eps_ij ⊗ eps_kl) = delta_jk eps_il / sqrt(h_j)
    for i in range(n):
        for j in range(n):
            for l in range(n):
                m[i * n + l, (i * n + j) * d + (j * n + l)] = 1.0 / np.sqrt(h[j])
    return c * (m.conj().T @ m)


def _dim2_matrix(family, p, epsilon):
    if family == "diag":
        q1, q12, q2 = p
        return np.array([[q1, 0, 0, 0], [0, 0, q12, 0], [0, q12, 0, 0], [0, 0, 0, q2]])
    if family == "anti":
        q1, c = p
        return np.array([[q1, 0, 0, c], [0, c, -q1, 0], [0, -q1, c, 0], [c, 0, 0, q1]])
    if family == "mixed":
        q1, q2 = p
        a = (q1 + q2) / 2
        b = epsilon * np.sqrt((q1 ** 2 + q2 ** 2) / 2)
        return np.array([[q1, 0, 0, a], [0, a, b, 0], [0, b, a, 0], [a, 0, 0, q2]])
    raise BadParams(f"unknown dim2 family {family!r}")


def make_twist(kind, params, H=None, tol=DEFAULT_TOL):
    """Build a twist of one of the kinds

    ``q-flip``         params {"q": q}, T = q F with real |q| < 1
    ``q_ij``           params {"q": d x d matrix}, T(e_i⊗e_j) = q_ij e_j⊗e_i
    ``dim2``           params {"family": "diag"|"anti"|"mixed", "params": [...],
                       "epsilon": ±1}; tracial d = 2
    ``matrix-algebra`` params {"h": [h_1..h_n], "c": c}; its subspace is
                       built from h when H is omitted
    ``raw``            params {"matrix": d^2 x d^2}
    """
    params = dict(params or {})
    if kind == "q-flip":
        q = params.get("q")
        if q is None or np.iscomplexobj(q) and np.imag(q) != 0 or not abs(q) < 1:
            raise BadParams("q-flip needs real q with |q| < 1")
        q = float(np.real(q))
        d = H.d if H is not None else int(params.get("d", 0))
        if d < 1:
            raise BadParams("q-flip needs a subspace or a dimension d")
        return Twist(q * flip(d), kind, {"q": q}, H, tol)
    if kind == "q_ij":
        Q = np.array(params.get("q"), dtype=np.complex128)
        d = Q.shape[0]
        if Q.shape != (d, d) or (H is not None and H.d != d):
            raise BadParams("q_ij needs a d x d coefficient matrix matching the subspace")
        if np.abs(Q - Q.conj().T).max() > tol:
            raise BadParams("q_ij must satisfy q_ij = conj(q_ji)")
        if np.abs(Q).max() > 1 + tol:
            raise BadParams("q_ij coefficients must have modulus at most 1")
        M = np.zeros((d * d, d * d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                M[j * d + i, i * d + j] = Q[i, j]
        return Twist(M, kind, {"q": Q}, H, tol)
    if kind == "dim2":
        if H is not None and (H.d != 2 or not H.is_tracial):
            raise BadParams("dim2 families need a tracial subspace of dimension 2")
        family = params.get("family")
        p = [float(x) for x in params.get("params", [])]
        eps = int(params.get("epsilon", 1))
        need = {"diag": 3, "anti": 2, "mixed": 2}
        if family not in need or len(p) != need[family] or eps not in (1, -1):
            raise BadParams(f"dim2 family {family!r} with parameters {p} is invalid")
        M = _dim2_matrix(family, p, eps)
        out = {"family": family, "params": p}
        if family == "mixed":
            out["epsilon"] = eps
        return Twist(M, kind, out, H, tol)
    if kind == "matrix-algebra":
        h = np.asarray(params.get("h"), dtype=float)
        c = float(params.get("c", 0.0))
        if h.ndim != 1 or h.size < 1 or (h <= 0).any():
            raise BadParams("matrix-algebra needs positive weights h")
        if c < -1.0 / np.sum(1.0 / h) - tol:
            raise BadParams("matrix-algebra needs c >= -1/Tr(h^-1)")
        if H is None:
            H = matrix_algebra_subspace(h)
        elif H.d != h.size ** 2:
            raise BadParams("subspace dimension must be n^2")
        return Twist(_matrix_algebra_matrix(h, c), kind, {"h": h, "c": c}, H, tol)
    if kind == "raw":
        M = np.array(params.get("matrix"), dtype=np.complex128)
        if H is not None and M.shape != (H.d ** 2, H.d ** 2):
            raise BadParams("raw twist matrix does not match the subspace dimension")
        return Twist(M, kind, {"matrix": M}, H, tol)
    raise BadParams(f"unknown twist kind {kind!r}")


# validation

@dataclass
class Flag:
    passed: bool
    residual: float

    def to_dict(self):
        return {"pass": self.passed, "residual": self.residual}


@dataclass
class ValidationReport:
    self_adjoint: Flag
    norm_lt_one: Flag
    braided: Flag
    compatible: Flag
    crossing_symmetric: Flag
    strict_positivity_checked_to_level: int
    strictly_positive: bool = True
    min_eigenvalues: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    FLAGS = ("self_adjoint", "norm_lt_one", "braided", "compatible", "crossing_symmetric")

    @property
    def all_passed(self):
        return all(getattr(self, f).passed for f in self.FLAGS) and self.strictly_positive

    @property
    def structural_ok(self):
        """Braided, crossing symmetric and compatible."""
        return self.braided.passed and self.crossing_symmetric.passed and self.compatible.passed

    def failed(self):
        out = [f for f in self.FLAGS if not getattr(self, f).passed]
        if not self.strictly_positive:
            out.append("strict_positivity")
        return out

    def to_dict(self):
        out = {f: getattr(self, f).to_dict() for f in self.FLAGS}
        out["strict_positivity_checked_to_level"] = self.strict_positivity_checked_to_level
        out["strictly_positive"] = self.strictly_positive
        out["min_eigenvalues"] = list(self.min_eigenvalues)
        out["extras"] = dict(self.extras)
        out["warnings"] = list(self.warnings)
        return out

    @classmethod
    def from_dict(cls, data):
        kw = {f: Flag(data[f]["pass"], data[f]["residual"]) for f in cls.FLAGS}
        return cls(strict_positivity_checked_to_level=data["strict_positivity_checked_to_level"],
                   strictly_positive=data["strictly_positive"],
                   min_eigenvalues=list(data["min_eigenvalues"]),
                   extras=dict(data["extras"]), warnings=list(data["warnings"]), **kw)


def _flag(residual, tol):
    residual = float(residual)
    return Flag(residual < tol, residual)


def _max_abs(a):
    return float(np.abs(a).max()) if a.size else 0.0


def crossing_symmetry_residual(T, H):
    """max |C_1 T_2 - C_2 T_1| on (C^d)^{⊗3} -> C^d."""
    d = T.d
    c = H.pairing
    eye = np.eye(d ** 3, dtype=np.complex128)
    lhs = kernels.contract(T.apply(eye, 3, 2), d, 3, 1, c)
    rhs = kernels.contract(T.apply(eye, 3, 1), d, 3, 2, c)
    return _max_abs(lhs - rhs)


def braid_residual(T):
    d = T.d
    eye = np.eye(d ** 3, dtype=np.complex128)
    a = T.apply(T.apply(T.apply(eye, 3, 1), 3, 2), 3, 1)
    b = T.apply(T.apply(T.apply(eye, 3, 2), 3, 1), 3, 2)
    return _max_abs(a - b)


def commuting_residual(T):
    """max |T_1 T_2 - T_2 T_1|."""
    d = T.d
    eye = np.eye(d ** 3, dtype=np.complex128)
    return _max_abs(T.apply(T.apply(eye, 3, 2), 3, 1) - T.apply(T.apply(eye, 3, 1), 3, 2))


def compatibility_residual(T, H):
    DD = np.kron(H.delta, H.delta)
    return _max_abs(DD @ T.matrix - T.matrix @ DD)


def _annihilate_left(phi, v, d):
    # a(phi)(x ⊗ y) = <phi, x> y
    return np.conj(phi) @ v.reshape(d, d)


def secondary_crossing_residual(T, H, samples=20, seed=0):
    """max defect of S a(φ1) T(φ2⊗φ3) = a(φ3) T(Sφ2⊗φ1) on random vectors."""
    rng = np.random.default_rng(seed)
    d = T.d
    worst = 0.0
    for _ in range(samples):
        p1, p2, p3 = (rng.normal(size=d) + 1j * rng.normal(size=d) for _ in range(3))
        lhs = H.S(_annihilate_left(p1, T.matrix @ np.kron(p2, p3), d))
        rhs = _annihilate_left(p3, T.matrix @ np.kron(H.S(p2), p1), d)
        worst = max(worst, _max_abs(lhs - rhs))
    return worst


def cyclic_relation_residual(T):
    """Tracial form of crossing symmetry: t^{xm}_{yz} = t^{mz}_{xy}, where
    t^{kl}_{ij} = <e_k ⊗ e_l, T(e_i ⊗ e_j)> in an orthonormal basis of H."""
    d = T.d
    t = T.matrix.reshape(d, d, d, d)  # t[k, l, i, j]
    return _max_abs(t - np.transpose(t, (2, 0, 3, 1)))


def validate_twist(T, H, level=DEFAULT_POSITIVITY_LEVEL, tol=DEFAULT_TOL, secondary=False,
                   dense_cap=DENSE_LEVEL_CAP):
    """Run the structural checks and return a :class:`ValidationReport`.

    Failures are recorded in the report, never raised.  The report is also
    stored on ``T.report``.
    """
    from .fock import kernel_matrices

    if H.d != T.d:
        raise BadParams("twist and subspace have different dimensions")
    notes = []
    sa = _flag(_max_abs(T.matrix - T.matrix.conj().T), tol)
    norm = Flag(T.q < 1 - tol, max(0.0, T.q - 1 + tol))
    if T.q >= 1:
        notes.append(f"‖T‖ = {T.q:.6g} >= 1: twists of norm at least one are not supported")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    scale = max(1.0, T.q) ** 3
    braided = _flag(braid_residual(T) / scale, tol)
    compat = _flag(compatibility_residual(T, H) / max(1.0, T.q * H.s_norm ** 4), tol)
    cs = _flag(crossing_symmetry_residual(T, H) / max(1.0, T.q * H.s_norm), tol)
    extras = {"q": T.q, "commuting_residual": commuting_residual(T)}
    if secondary:
        extras["secondary_crossing_residual"] = secondary_crossing_residual(T, H)
    if H.is_tracial and np.allclose(H.basis, np.eye(H.d)):
        extras["cyclic_relation_residual"] = cyclic_relation_residual(T)

    checked, positive, mins = 0, True, []
    if sa.passed:
        for n in range(1, level + 1):
            if T.d ** n > dense_cap:
                notes.append(f"strict positivity not checked above level {checked} (dimension cap)")
                break
            P = kernel_matrices(T, n)[1]
            ev = float(np.linalg.eigvalsh(P).min())
            mins.append(ev)
            checked = n
            if ev <= tol:
                positive = False
                break
    else:
        positive = False
        notes.append("strict positivity skipped: T is not self-adjoint")
    report = ValidationReport(sa, norm, braided, compat, cs, checked, positive, mins, extras, notes)
    T.report = report
    return report
