"""Standard subspaces of C^d, antilinear maps and spectral classifiers.

Coordinates: vectors live in C^d with the inner product antilinear in the
first slot.  An antilinear map is stored as a matrix ``M`` acting by
``v -> M @ conj(v)``.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, log, exp
import warnings

import numpy as np
from scipy.linalg import null_space

from .errors import (BadPairing, InvalidNorm, ModularMismatch, NonPositiveEigenvalue,
                     NotInvolutive, NotPositive, BadParams)

DEFAULT_TOL = 1e-10
COMPLEX_LINEAR = "complex-linear"
REAL_ORTHONORMAL = "real-orthonormal"


class AntilinearMap:
    """Antilinear map v -> M conj(v)."""

    def __init__(self, matrix):
        m = np.array(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise BadParams("antilinear map needs a square matrix")
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __call__(self, v):
        v = np.asarray(v, dtype=np.complex128)
        return self.matrix @ np.conj(v) if v.ndim == 1 else (self.matrix @ np.conj(v.T)).T

    def compose(self, other):
        """Matrix of the linear map ``self o other`` when ``other`` is antilinear."""
        return self.matrix @ np.conj(other.matrix)

    def after_linear(self, L):
        """The antilinear map ``self o L`` for a linear map L."""
        return AntilinearMap(self.matrix @ np.conj(np.asarray(L)))

    def adjoint(self):
        # <A x, y> = <A* y, x>
        return AntilinearMap(self.matrix.T)

    def norm(self):
        return float(np.linalg.norm(self.matrix, 2))

    def involution_defect(self):
        return float(np.abs(self.compose(self) - np.eye(self.dim)).max())

    def is_involution(self, tol=DEFAULT_TOL):
        return self.involution_defect() <= tol


def _hermitian_function(mat, fn):
    w, v = np.linalg.eigh(mat)
    return (v * fn(w)) @ v.conj().T


class StandardSubspace:
    """Tomita data (Δ, J, S) of a standard subspace of C^d together with a
    chosen generator basis e_1..e_d and its dual basis f_1..f_d.

    ``basis`` holds e_i as columns, ``dual`` holds f_i as columns, so that
    ``dual.conj().T @ basis`` is the identity.
    """

    def __init__(self, delta, J, basis_mode=COMPLEX_LINEAR, basis=None, tol=DEFAULT_TOL,
                 eigen_data=None):
        delta = np.array(delta, dtype=np.complex128)
        d = delta.shape[0]
        if delta.shape != (d, d):
            raise BadParams("Δ must be square")
        self.d = d
        self.tol = tol
        if np.abs(delta - delta.conj().T).max() > tol:
            raise NotPositive("Δ is not Hermitian")
        delta = (delta + delta.conj().T) / 2
        evals = np.linalg.eigvalsh(delta)
        if evals.min() <= tol:
            raise NotPositive(f"Δ has eigenvalue {evals.min():.3e}")
        if evals.min() < 1e-8:
            warnings.warn("Δ is close to singular", RuntimeWarning, stacklevel=2)
        if not isinstance(J, AntilinearMap):
            J = AntilinearMap(J)
        if J.dim != d:
            raise BadParams("J and Δ have different dimensions")
        if J.involution_defect() > tol:
            raise NotInvolutive("J∘J is not the identity")
        mj = J.matrix
        if np.abs(mj.conj().T @ mj - np.eye(d)).max() > tol:
            raise NotInvolutive("J is not antiunitary")
        delta_inv = _hermitian_function(delta, lambda w: 1.0 / w)
        if np.abs(mj @ np.conj(delta) @ np.conj(mj) - delta_inv).max() > tol * max(1.0, evals.max()):
            raise ModularMismatch("JΔJ differs from Δ^{-1}")

        self.delta = delta
        self.delta_inv = delta_inv
        self.delta_half = _hermitian_function(delta, np.sqrt)
        self.spectrum = evals
        self.J = J
        self.S = J.after_linear(self.delta_half)
        self.S_adj = self.S.adjoint()
        self.s_norm = float(np.sqrt(evals.max()))
        self.eigen_data = eigen_data

        if basis_mode == COMPLEX_LINEAR:
            E = np.eye(d, dtype=np.complex128) if basis is None else np.array(basis, dtype=np.complex128)
        elif basis_mode == REAL_ORTHONORMAL:
            E = self._real_basis() if basis is None else np.array(basis, dtype=np.complex128)
            if basis is not None:
                self._check_real_basis(E)
        else:
            raise BadParams(f"unknown basis mode {basis_mode!r}")
        if E.shape != (d, d) or np.linalg.matrix_rank(E, tol=1e-12) < d:
            raise BadParams("basis must consist of d linearly independent vectors")
        self.basis_mode = basis_mode
        self.basis = E
        self.basis_inv = np.linalg.inv(E)
        self.dual = self.basis_inv.conj().T
        if basis_mode == REAL_ORTHONORMAL:
            # f_i = (1+Δ)/2 e_i agrees with the Gram-solve dual basis here
            alt = (np.eye(d) + delta) @ E / 2
            if np.abs(alt - self.dual).max() > 1e3 * tol * max(1.0, evals.max()):
                raise BadParams("real-orthonormal basis does not satisfy f_i = (1+Δ)e_i/2")
            self.dual = alt
        for arr in (self.delta, self.delta_inv, self.delta_half, self.basis, self.basis_inv,
                    self.dual, self.spectrum):
            arr.setflags(write=False)

    def _real_basis(self):
        d = self.d
        ed = self.eigen_data
        if ed is not None and np.allclose(self.delta, np.diag(np.diag(self.delta))):
            lam, bar = ed
            E = np.zeros((d, d), dtype=np.complex128)
            for i in range(d):
                j = bar[i]
                if j == i:
                    E[i, i] = 1.0
                elif i < j:
                    s = np.sqrt(lam[i])
                    nrm = np.sqrt(1.0 + lam[i])
                    E[i, i] = 1.0 / nrm
                    E[j, i] = s / nrm
                    E[i, j] = 1j / nrm
                    E[j, j] = -1j * s / nrm
            return E
        M = self.S.matrix
        # fixed points of S as a real-linear map on R^{2d}
        RS = np.block([[M.real, M.imag], [M.imag, -M.real]])
        ns = null_space(RS - np.eye(2 * d), rcond=1e-10)
        if ns.shape[1] != d:
            raise ModularMismatch("fixed-point space of S does not have real dimension d")
        return ns[:d] + 1j * ns[d:]

    def _check_real_basis(self, E):
        if np.abs(self.S(E.T).T - E).max() > 1e3 * self.tol:
            raise BadParams("basis vectors are not fixed by S")
        g = (E.conj().T @ E).real
        if np.abs(g - np.eye(self.d)).max() > 1e3 * self.tol:
            raise BadParams("basis is not orthonormal for Re<.,.>")

    # derived quantities

    @property
    def pairing(self):
        """Vector c of length d^2 with <Sx, y> = sum_{a,b} c[a*d+b] x_a y_b."""
        return self.S.matrix.conj().T.reshape(-1)

    @property
    def gram(self):
        """G[k, j] = <e_k, e_j>."""
        return self.basis.conj().T @ self.basis

    @property
    def quasi_free_matrix(self):
        """Matrix A with sigma_{-i}(x_j) = sum_k A[j, k] x_k."""
        return (self.basis_inv @ self.delta @ self.basis).T

    @property
    def is_tracial(self):
        return bool(np.abs(self.delta - np.eye(self.d)).max() <= self.tol)

    def dual_defect(self):
        return float(np.abs(self.dual.conj().T @ self.basis - np.eye(self.d)).max())

    def coords(self, v):
        """Coefficients of v (or rows of v) in the basis e."""
        v = np.asarray(v, dtype=np.complex128)
        return self.basis_inv @ v if v.ndim == 1 else v @ self.basis_inv.T

    def to_dict(self):
        return {
            "d": self.d,
            "basis_mode": self.basis_mode,
            "spectrum": [float(x) for x in self.spectrum],
            "s_norm": self.s_norm,
            "tracial": self.is_tracial,
        }


def build_standard_subspace(eigenvalues=None, bar=None, delta=None, J=None,
                            basis_mode=COMPLEX_LINEAR, basis=None, tol=DEFAULT_TOL):
    """Construct a validated standard subspace.

    Either give eigen-data (``eigenvalues`` λ_i > 0 and an index involution
    ``bar``, 0-based, with λ_bar(i) = 1/λ_i; ``bar`` defaults to the identity)
    or raw matrices ``delta`` and ``J`` (the matrix of the antilinear J).
    """
    if eigenvalues is not None:
        if delta is not None or J is not None:
            raise BadParams("give either eigen-data or matrices, not both")
        lam = np.asarray(eigenvalues, dtype=float)
        d = lam.size
        bar = list(range(d)) if bar is None else [int(b) for b in bar]
        if len(bar) != d or sorted(bar) != list(range(d)):
            raise NotInvolutive("bar must be a permutation of the indices")
        if any(bar[bar[i]] != i for i in range(d)):
            raise NotInvolutive("bar is not an involution")
        if (lam <= 0).any():
            raise NotPositive("eigenvalues must be positive")
        for i in range(d):
            if abs(lam[bar[i]] * lam[i] - 1.0) > tol:
                raise BadPairing(f"λ_{bar[i]} = {lam[bar[i]]} is not 1/λ_{i}")
        mj = np.zeros((d, d), dtype=np.complex128)
        mj[bar, np.arange(d)] = 1.0
        return StandardSubspace(np.diag(lam), AntilinearMap(mj), basis_mode=basis_mode,
                                basis=basis, tol=tol, eigen_data=(lam, bar))
    if delta is None or J is None:
        raise BadParams("raw form needs both Δ and J")
    return StandardSubspace(delta, J, basis_mode=basis_mode, basis=basis, tol=tol)


def tracial_subspace(d, basis_mode=COMPLEX_LINEAR):
    return build_standard_subspace(eigenvalues=np.ones(d), basis_mode=basis_mode)


# factor type

@dataclass(frozen=True)
class FactorType:
    tag: str
    lam: float = None
    confidence: str = "exact"

    def __post_init__(self):
        if self.tag not in ("II1", "IIIlambda", "III1"):
            raise ValueError(f"unknown factor type {self.tag}")
        if self.tag == "IIIlambda" and not (0 < self.lam < 1):
            raise ValueError("III_lambda needs 0 < lambda < 1")

    def to_dict(self):
        return {"tag": self.tag, "lambda": self.lam, "confidence": self.confidence}

    def __str__(self):
        if self.tag == "IIIlambda":
            return f"III_{self.lam:g} ({self.confidence})"
        return f"{self.tag} ({self.confidence})"


def _to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def _factorize(n):
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _rank(rows):
    m = [[Fraction(x) for x in r] for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / m[rank][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
        col += 1
    return rank


def _fraction_gcd(values):
    values = [v for v in values if v != 0]
    if not values:
        return Fraction(0)
    num = 0
    den = 1
    for v in values:
        den = den * v.denominator // gcd(den, v.denominator)
    for v in values:
        num = gcd(num, abs(v.numerator * (den // v.denominator)))
    return Fraction(num, den)


def _classify_rational(values):
    vecs = []
    for r in values:
        if r <= 0:
            raise NonPositiveEigenvalue(str(r))
        fa = _factorize(r.numerator)
        for p, k in _factorize(r.denominator).items():
            fa[p] = fa.get(p, 0) - k
        vecs.append(fa)
    primes = sorted({p for v in vecs for p in v})
    rows = [[v.get(p, 0) for p in primes] for v in vecs]
    rows = [r for r in rows if any(r)]
    if not rows:
        return FactorType("II1")
    rk = _rank(rows)
    if rk >= 2:
        return FactorType("III1")
    u = rows[0]
    g = 0
    for x in u:
        g = gcd(g, abs(x))
    v = [x // g for x in u]
    vv = sum(x * x for x in v)
    mults = [sum(a * b for a, b in zip(r, v)) // vv for r in rows]
    m = 0
    for x in mults:
        m = gcd(m, abs(x))
    lam = Fraction(1)
    for p, e in zip(primes, v):
        lam *= Fraction(p) ** (e * m)
    if lam > 1:
        lam = 1 / lam
    return FactorType("IIIlambda", float(lam))


def classify_factor_type(eigenvalues, mode="numerical", tolerance=DEFAULT_TOL, max_denominator=64,
                         base=None):
    """Type of the closed multiplicative group generated by the eigenvalues.

    Exact mode takes the eigenvalues as rationals, or, when ``base`` is given,
    as rational exponents k_i of base**k_i.  Numerical mode takes floats and
    rationalizes the log-ratios with denominators up to ``max_denominator``.
    """
    if mode == "exact":
        if base is not None:
            b = _to_fraction(base) if not isinstance(base, float) else base
            if b <= 0:
                raise NonPositiveEigenvalue(str(base))
            ks = [_to_fraction(k) for k in eigenvalues]
            g = _fraction_gcd(ks)
            if g == 0 or b == 1:
                return FactorType("II1")
            lam = float(b) ** float(g)
            if isinstance(b, Fraction) and g.denominator == 1:
                lam = float(b ** g.numerator)
            if lam > 1:
                lam = 1 / lam
            return FactorType("IIIlambda", lam)
        return _classify_rational([_to_fraction(x) for x in eigenvalues])
    if mode != "numerical":
        raise BadParams(f"unknown mode {mode!r}")
    vals = np.asarray(eigenvalues, dtype=float)
    if (vals <= 0).any():
        raise NonPositiveEigenvalue(str(vals.min()))
    logs = [log(v) for v in vals]
    logs = [x for x in logs if abs(x) > tolerance]
    if not logs:
        return FactorType("II1", confidence="numerical")
    ref = min(logs, key=abs)
    ratios = []
    for x in logs:
        fr = Fraction(x / ref).limit_denominator(max_denominator)
        if abs(x - float(fr) * ref) > tolerance * max(1.0, abs(x)):
            return FactorType("III1", confidence="numerical")
        ratios.append(fr)
    g = _fraction_gcd(ratios)
    return FactorType("IIIlambda", exp(-abs(ref * float(g))), confidence="numerical")


@dataclass(frozen=True)
class NoninjectivityResult:
    holds: bool
    witness: float
    ratio: float
    threshold: float
    note: str = "spectrum treated as atomic with finitely many eigenvalues"

    def to_dict(self):
        return {"holds": self.holds, "witness_C": self.witness, "best_ratio": self.ratio,
                "threshold": self.threshold, "note": self.note}


def noninjectivity_criterion(spectrum, q, multiplicities=None, tol=DEFAULT_TOL):
    """Test dim E_Δ([1, C]) / C > 16/(1-q)^2 over the spectral thresholds C >= 1."""
    if not (0 <= q < 1):
        raise InvalidNorm(f"q = {q} outside [0, 1)")
    spec = np.asarray(spectrum, dtype=float)
    mult = np.ones(spec.size, dtype=int) if multiplicities is None else np.asarray(multiplicities, dtype=int)
    threshold = 16.0 / (1.0 - q) ** 2
    best_c, best = None, -1.0
    cands = sorted({float(x) for x in spec if x >= 1 - tol})
    for c in cands:
        c_eff = max(c, 1.0)
        dim = int(mult[(spec >= 1 - tol) & (spec <= c + tol)].sum())
        r = dim / c_eff
        if r > best:
            best_c, best = c_eff, r
    if best_c is None:
        return NoninjectivityResult(False, None, 0.0, threshold)
    return NoninjectivityResult(bool(best > threshold), best_c, best, threshold)
