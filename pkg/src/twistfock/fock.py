"""Truncated twisted Fock space over C^d.

Vectors are kept in plain tensor coordinates, level n being a vector of
length d**n.  The twist only enters through the kernels

    R_n = 1 + T_1 + T_1T_2 + ... + T_1...T_{n-1},   P_n = (1 ⊗ P_{n-1}) R_n,

which define the inner product sum_n <f_n, P_n g_n>.
"""
import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, cg

from . import kernels as K
from .errors import NotStrictlyPositive, ShapeMismatch, TruncationTooSmall, SizeCapExceeded
from .hilbert import DEFAULT_TOL
from .twist import DEFAULT_SIZE_CAP, dense_from_action

DENSE_SOLVE_CAP = 4096


# kernels

def apply_R(T, x, n):
    """R_n applied to rows of x, evaluated as 1 + T_1(1 + T_2(... (1 + T_{n-1})))."""
    x = np.asarray(x, dtype=np.complex128)
    if n <= 1 or T.is_zero:
        return x.copy()
    y = x
    for k in range(n - 1, 0, -1):
        y = x + K.apply_two_site(y, T.d, n, k, T.matrix)
    return y


def apply_R_adjoint(T, x, n):
    x = np.asarray(x, dtype=np.complex128)
    if n <= 1 or T.is_zero:
        return x.copy()
    # R* = 1 + (1 + (...)T*_{n-1}...)T*_1 ; accumulate from the left factor
    y = x
    acc = x.copy()
    for k in range(1, n):
        y = K.apply_two_site(y, T.d, n, k, T.adjoint_matrix)
        acc = acc + y
    return acc


def apply_P(T, x, n):
    """P_n applied to a vector or a batch of rows, matrix-free."""
    x = np.asarray(x, dtype=np.complex128)
    if n <= 1 or T.is_zero:
        return x.copy()
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    d = T.d
    y = apply_R(T, X, n)
    b = y.shape[0]
    y = apply_P(T, y.reshape(b * d, d ** (n - 1)), n - 1).reshape(b, d ** n)
    return y[0] if single else y


def kernel_matrices(T, n, size_cap=DEFAULT_SIZE_CAP):
    """Dense (R_n, P_n); P_n is symmetrized.  Cached on the twist."""
    if n < 0:
        raise ValueError("level must be non-negative")
    if T.d ** (2 * n) > size_cap:
        raise SizeCapExceeded(f"level {n} kernels exceed the size cap")

    def build():
        dim = T.d ** n
        if n <= 1 or T.is_zero:
            eye = np.eye(dim, dtype=np.complex128)
            return eye, eye
        R = dense_from_action(lambda x: apply_R(T, x, n), dim)
        Pprev = kernel_matrices(T, n - 1, size_cap)[1]
        P = np.kron(np.eye(T.d), Pprev) @ R
        P = (P + P.conj().T) / 2
        R.setflags(write=False)
        P.setflags(write=False)
        return R, P

    return T.cached(("kernels", n), build)


class LevelSolver:
    """Hermitian factorization of P_n used for solves and inverse norms."""

    def __init__(self, T, n, tol=DEFAULT_TOL):
        P = kernel_matrices(T, n)[1]
        w, V = np.linalg.eigh(P)
        self.n = n
        self.min_eig = float(w[0])
        self.max_eig = float(w[-1])
        if self.min_eig <= tol:
            raise NotStrictlyPositive(f"P_{n} has minimal eigenvalue {self.min_eig:.3e}")
        self._w = w
        self._V = V

    def solve(self, v):
        v = np.asarray(v, dtype=np.complex128)
        V = self._V
        if v.ndim == 1:
            return V @ ((V.conj().T @ v) / self._w)
        return ((V @ ((V.conj().T @ v.T) / self._w[:, None])).T)

    @property
    def inverse_norm(self):
        return 1.0 / self.min_eig


def level_solver(T, n, tol=DEFAULT_TOL):
    return T.cached(("solver", n, tol), lambda: LevelSolver(T, n, tol))


def solve_P(T, v, n, tol=DEFAULT_TOL, dense_cap=DENSE_SOLVE_CAP):
    """Solve P_n x = v.  Uses a cached eigendecomposition up to ``dense_cap``
    and matrix-free conjugate gradients above it."""
    v = np.asarray(v, dtype=np.complex128)
    if n <= 1 or T.is_zero:
        return v.copy()
    dim = T.d ** n
    if dim <= dense_cap:
        return level_solver(T, n, tol).solve(v)
    op = LinearOperator((dim, dim), matvec=lambda x: apply_P(T, x, n), dtype=np.complex128)
    rows = v.reshape(1, -1) if v.ndim == 1 else v
    out = []
    for r in rows:
        x, info = cg(op, r, rtol=1e-13, atol=0.0, maxiter=10 * dim)
        if info != 0:
            raise NotStrictlyPositive(f"conjugate gradients did not converge on level {n}")
        out.append(x)
    out = np.array(out)
    return out[0] if v.ndim == 1 else out


# graded vectors and operators

class FockVector:
    """Element of the truncated Fock space: ``levels[n]`` has length d**n."""

    def __init__(self, d, levels):
        self.d = d
        self.levels = [np.asarray(v, dtype=np.complex128).reshape(d ** n)
                       for n, v in enumerate(levels)]

    @property
    def N(self):
        return len(self.levels) - 1

    @classmethod
    def zeros(cls, d, N):
        return cls(d, [np.zeros(d ** n, dtype=np.complex128) for n in range(N + 1)])

    @classmethod
    def vacuum(cls, d, N):
        v = cls.zeros(d, N)
        v.levels[0][0] = 1.0
        return v

    @classmethod
    def from_tensor(cls, tensor, n, d, N=None):
        N = n if N is None else N
        if N < n:
            raise TruncationTooSmall(f"truncation {N} below level {n}")
        v = cls.zeros(d, N)
        v.levels[n] = np.asarray(tensor, dtype=np.complex128).reshape(d ** n).copy()
        return v

    def copy(self):
        return FockVector(self.d, [v.copy() for v in self.levels])

    def _check(self, other):
        if self.d != other.d or self.N != other.N:
            raise ShapeMismatch("Fock vectors with different dimension or truncation")

    def __add__(self, other):
        self._check(other)
        return FockVector(self.d, [a + b for a, b in zip(self.levels, other.levels)])

    def __sub__(self, other):
        self._check(other)
        return FockVector(self.d, [a - b for a, b in zip(self.levels, other.levels)])

    def __mul__(self, alpha):
        return FockVector(self.d, [alpha * a for a in self.levels])

    __rmul__ = __mul__

    def max_abs(self):
        return max(float(np.abs(v).max()) if v.size else 0.0 for v in self.levels)

    def to_dict(self):
        return {"d": self.d, "levels": [[[float(z.real), float(z.imag)] for z in v]
                                        for v in self.levels]}


class FockOperator:
    """Graded operator: ``blocks[(m, n)]`` maps level n to level m."""

    def __init__(self, d, N, blocks=None):
        self.d = d
        self.N = N
        self.blocks = {}
        for (m, n), B in (blocks or {}).items():
            B = np.asarray(B, dtype=np.complex128)
            if B.shape != (d ** m, d ** n):
                raise ShapeMismatch(f"block ({m},{n}) has shape {B.shape}")
            self.blocks[(m, n)] = B

    @classmethod
    def identity(cls, d, N):
        return cls(d, N, {(n, n): np.eye(d ** n) for n in range(N + 1)})

    def _check(self, other):
        if self.d != other.d or self.N != other.N:
            raise ShapeMismatch("operators on different Fock spaces")

    def __add__(self, other):
        self._check(other)
        out = dict(self.blocks)
        for k, B in other.blocks.items():
            out[k] = out[k] + B if k in out else B
        return FockOperator(self.d, self.N, out)

    def __sub__(self, other):
        return self + other * (-1.0)

    def __mul__(self, alpha):
        return FockOperator(self.d, self.N, {k: alpha * B for k, B in self.blocks.items()})

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        self._check(other)
        out = {}
        for (m, k), A in self.blocks.items():
            for (k2, n), B in other.blocks.items():
                if k == k2:
                    out[(m, n)] = out[(m, n)] + A @ B if (m, n) in out else A @ B
        return FockOperator(self.d, self.N, out)

    def apply(self, v):
        if v.d != self.d or v.N != self.N:
            raise ShapeMismatch("vector and operator live on different Fock spaces")
        out = FockVector.zeros(self.d, self.N)
        for (m, n), B in self.blocks.items():
            out.levels[m] = out.levels[m] + B @ v.levels[n]
        return out

    def block(self, m, n):
        return self.blocks.get((m, n), np.zeros((self.d ** m, self.d ** n), dtype=np.complex128))

    def max_abs_difference(self, other):
        keys = set(self.blocks) | set(other.blocks)
        return max((float(np.abs(self.block(*k) - other.block(*k)).max()) for k in keys), default=0.0)


def twisted_inner(f, g, T):
    """sum_n <f_n, P_n g_n>."""
    f._check(g)
    if f.d != T.d:
        raise ShapeMismatch("vector dimension differs from the twist")
    return complex(sum(np.vdot(a, apply_P(T, b, n)) for n, (a, b) in enumerate(zip(f.levels, g.levels))))


def twisted_norm(f, T):
    return float(np.sqrt(max(twisted_inner(f, f, T).real, 0.0)))


def _create_block(xi, n):
    return np.kron(np.asarray(xi, dtype=np.complex128).reshape(-1, 1), np.eye(xi.size ** n))


def _annihilate_block(h, n, T):
    d = h.size
    free = np.kron(np.conj(h).reshape(1, -1), np.eye(d ** (n - 1)))
    return free @ kernel_matrices(T, n)[0]


def ladder(kind, xi, N, T, H=None):
    """Creation, annihilation or field operator of ``xi`` truncated at level N.

    Creation maps level N to zero.  ``field`` needs the subspace H for S.
    """
    xi = np.asarray(xi, dtype=np.complex128)
    d = T.d
    blocks = {}
    if kind == "create":
        for n in range(N):
            blocks[(n + 1, n)] = _create_block(xi, n)
    elif kind == "annihilate":
        for n in range(1, N + 1):
            blocks[(n - 1, n)] = _annihilate_block(xi, n, T)
    elif kind == "field":
        if H is None:
            raise ValueError("field operators need the standard subspace")
        return ladder("create", xi, N, T) + ladder("annihilate", H.S(xi), N, T)
    else:
        raise ValueError(f"unknown ladder kind {kind!r}")
    return FockOperator(d, N, blocks)


def preservation(A, N, T):
    """Λ_T(A): level n -> level n, (A ⊗ 1) R_n for n >= 1."""
    A = np.asarray(A, dtype=np.complex128)
    d = T.d
    blocks = {(n, n): np.kron(A, np.eye(d ** (n - 1))) @ kernel_matrices(T, n)[0]
              for n in range(1, N + 1)}
    return FockOperator(d, N, blocks)


def twisted_adjoint(A, T, tol=DEFAULT_TOL):
    """Adjoint for the twisted inner product: A†[n,m] = P_n^{-1} A[m,n]^* P_m."""
    out = {}
    for (m, n), B in A.blocks.items():
        Pm = kernel_matrices(T, m)[1]
        X = B.conj().T @ Pm
        out[(n, m)] = solve_P(T, X.T, n, tol).T if n > 1 and not T.is_zero else X
    return FockOperator(A.d, A.N, out)


def _generalized_top(M, P):
    w = eigh(M, P, eigvals_only=True)
    return float(np.sqrt(max(w[-1], 0.0)))


def level_norm(A, n, T):
    """Twisted operator norm of A restricted to level n (all target levels)."""
    Pn = kernel_matrices(T, n)[1]
    M = np.zeros_like(Pn)
    for (m, k), B in A.blocks.items():
        if k == n:
            M = M + B.conj().T @ kernel_matrices(T, m)[1] @ B
    return _generalized_top((M + M.conj().T) / 2, Pn)


def operator_norm(A, T):
    levels = sorted({n for (_, n) in A.blocks})
    return max((level_norm(A, n, T) for n in levels), default=0.0)


def inverse_kernel_norm(T, n):
    """‖P_n^{-1}‖ (infinite if P_n is singular)."""
    if n <= 1 or T.is_zero:
        return 1.0
    ev = float(np.linalg.eigvalsh(kernel_matrices(T, n)[1])[0])
    return np.inf if ev <= 0 else 1.0 / ev


# vector-level field action

def apply_field(levels, xi, S_xi, T, N):
    """X(xi) applied to a list of level vectors (batch rows allowed),
    truncating creation at level N.  ``S_xi`` is S applied to xi."""
    d = T.d
    c = np.conj(S_xi)
    out = [None] * (N + 1)
    for n, v in enumerate(levels):
        if v is None:
            continue
        if n < N:
            up = np.einsum("...j,i->...ij", v, xi).reshape(*v.shape[:-1], d ** (n + 1))
            out[n + 1] = up if out[n + 1] is None else out[n + 1] + up
        if n >= 1:
            r = apply_R(T, v, n)
            down = np.tensordot(r.reshape(*v.shape[:-1], d, d ** (n - 1)), c, axes=([-2], [0]))
            out[n - 1] = down if out[n - 1] is None else out[n - 1] + down
    return out


def word_vector(word, H, T, N=None):
    """X(e_{w_1}) ... X(e_{w_k}) Ω as a list of level vectors (None = zero).

    Generator labels are 0-based.  The result is exact for N >= len(word).
    """
    N = len(word) if N is None else N
    levels = [np.ones(1, dtype=np.complex128)] + [None] * N
    for i in reversed(word):
        e = H.basis[:, i]
        levels = apply_field(levels, e, H.S(e), T, N)
    return levels


def vacuum_moment(word, H, T, N=None):
    """<Ω, X(e_{w_1}) ... X(e_{w_k}) Ω>."""
    if N is not None and N < len(word):
        raise TruncationTooSmall(f"truncation {N} below word length {len(word)}")
    if len(word) % 2:
        return 0j
    lv = word_vector(word, H, T, N)
    return complex(lv[0][0]) if lv[0] is not None else 0j
