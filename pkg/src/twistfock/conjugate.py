"""Difference quotients, conjugate variables and the quasi-free potential.

The conjugate variable of x_i is the Fock vector

    Ξ_i = sum_n (-1)^n P_{2n+1}^{-1} sum_{π ∈ B(2n+1)} W_π^* f_i,

truncated at n = M, with a certified bound on the omitted levels.
"""
from dataclasses import dataclass, field
from math import lgamma, log, exp, inf
import warnings

import numpy as np

from .contraction import apply_W, apply_W_adjoint
from .errors import InvalidNorm, WrongBasisMode
from .fock import FockVector, solve_P, twisted_norm, apply_P
from .hilbert import REAL_ORTHONORMAL, DEFAULT_TOL
from .matchings import DEFAULT_CAP, enumerate_B, enumerate_matchings
from .wick import NCPolynomial, apply_to_vacuum, wick_polynomial

DEFAULT_SERIES_ORDER = 3
SIGMA_WINDOW = 64


class BiPolynomial:
    """Element of C<x> ⊗ C<x> as a map (u, v) -> coefficient."""

    def __init__(self, d, coeffs=None):
        self.d = d
        self.coeffs = {}
        for (u, v), c in (coeffs or {}).items():
            key = (tuple(u), tuple(v))
            self.coeffs[key] = self.coeffs.get(key, 0j) + complex(c)

    def __getitem__(self, key):
        u, v = key
        return self.coeffs.get((tuple(u), tuple(v)), 0j)

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0j) + c
        return BiPolynomial(self.d, out)

    def __mul__(self, alpha):
        return BiPolynomial(self.d, {k: alpha * c for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    def prune(self, threshold=1e-14):
        self.coeffs = {k: c for k, c in self.coeffs.items() if abs(c) > threshold}
        return self

    def max_abs_difference(self, other):
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def to_list(self):
        items = sorted(self.coeffs.items(), key=lambda kv: (len(kv[0][0]) + len(kv[0][1]), kv[0]))
        return [[[i + 1 for i in u], [i + 1 for i in v], [c.real, c.imag]] for (u, v), c in items]


def free_dq(P, i):
    """∂_i(x_{j_1}...x_{j_k}) = sum_m δ_{i, j_m} x_{j_1}..x_{j_{m-1}} ⊗ x_{j_{m+1}}..x_{j_k}."""
    out = {}
    for w, c in P.coeffs.items():
        for m, j in enumerate(w):
            if j == i:
                key = (w[:m], w[m + 1:])
                out[key] = out.get(key, 0j) + c
    return BiPolynomial(P.d, out)


def eth(P, j, H):
    """Quasi-free difference quotient ð_j = sum_k <e_j, e_k> ∂_k."""
    G = H.gram
    out = BiPolynomial(P.d)
    for k in range(H.d):
        if G[j, k] != 0:
            out = out + free_dq(P, k) * G[j, k]
    return out


def nabla(i, k, tensor, n, H):
    """∇_i^k: pair slot k against f_i; returns a d^{k-1} x d^{n-k} array."""
    from .errors import IndexOutOfRange
    if not 1 <= k <= n:
        raise IndexOutOfRange(f"slot {k} outside 1..{n}")
    d = H.d
    t = np.asarray(tensor, dtype=np.complex128).reshape(d ** (k - 1), d, d ** (n - k))
    return np.tensordot(np.conj(H.dual[:, i]), t, axes=([0], [1]))


class BiFockVector:
    """Element of F ⊗ F stored as blocks (l, r) of shape d^l x d^r."""

    def __init__(self, d, blocks=None):
        self.d = d
        self.blocks = dict(blocks or {})

    def add(self, l, r, B):
        self.blocks[(l, r)] = self.blocks[(l, r)] + B if (l, r) in self.blocks else np.array(B)

    def block(self, l, r):
        return self.blocks.get((l, r), np.zeros((self.d ** l, self.d ** r), dtype=np.complex128))

    @property
    def vacuum_component(self):
        return complex(self.block(0, 0)[0, 0])

    def max_abs_difference(self, other):
        keys = set(self.blocks) | set(other.blocks)
        return max((float(np.abs(self.block(*k) - other.block(*k)).max()) for k in keys), default=0.0)


def dq_wick(tensor, n, i, H, T, cap=DEFAULT_CAP):
    """∂_iΦ(Ξ) in F ⊗ F coordinates:
    sum_π sum_{k ∈ ∩p(π)} (-1)^{|p(π)|} ∇_i^{ps(k,π)} W_π Ξ."""
    x = np.asarray(tensor, dtype=np.complex128).reshape(H.d ** n)
    out = BiFockVector(H.d)
    for pi in enumerate_matchings(n, cap):
        ks = pi.interval_intersection()
        if not ks:
            continue
        v = apply_W(pi, x, T, H)
        s = pi.num_singletons
        pos = {p: t + 1 for t, p in enumerate(pi.singletons)}
        sign = (-1.0) ** pi.num_pairs
        for k in ks:
            t = pos[k]
            out.add(t - 1, s - t, sign * nabla(i, t, v, s, H))
    return out


def bi_apply_to_vacuum(B, H, T):
    """(u(X)Ω) ⊗ (v(X)Ω) summed over the terms of a BiPolynomial."""
    out = BiFockVector(H.d)
    for (u, v), c in B.coeffs.items():
        left = apply_to_vacuum(NCPolynomial(H.d, {u: 1.0}), H, T)
        right = apply_to_vacuum(NCPolynomial(H.d, {v: 1.0}), H, T)
        for l, a in enumerate(left.levels):
            if not np.any(a):
                continue
            for r, b in enumerate(right.levels):
                if np.any(b):
                    out.add(l, r, c * np.outer(a, b))
    return out


# series constants

def omega(q):
    """ω(q) with ω(q)^2 = (1-q^2)^{-1} prod_k (1-q^k)/(1+q^k)."""
    if not 0 <= q < 1:
        raise InvalidNorm(f"q = {q} outside [0, 1)")
    if q == 0:
        return 1.0
    logw2 = -np.log1p(-q * q)
    k = 1
    while True:
        qk = q ** k
        if qk < 1e-16:
            break
        logw2 += np.log1p(-qk) - np.log1p(qk)
        k += 1
    return float(np.exp(logw2 / 2))


def _log_series_tail(logterm, start, max_terms=100000):
    """sum_{m >= start} exp(logterm(m)), stopping once the terms are decreasing
    and negligible.  Returns inf if a term overflows."""
    total = 0.0
    prev = None
    for m in range(start, start + max_terms):
        lt = logterm(m)
        if lt == -inf:
            prev = lt
            continue
        if lt > 700:
            return inf
        t = exp(lt)
        total += t
        if prev is not None and lt < prev and t <= 1e-18 * total:
            return total
        if prev is not None and lt < prev and total == 0.0:
            return 0.0
        prev = lt
    return total


def _log(x):
    return log(x) if x > 0 else -inf


def conjugate_term_bound(n, d, q, s_norm, f_norm, refined=False):
    """(2n+1)! ω^{-(2n+1)} d^{n/2} ‖S‖^n q^{n(n+1)/2} ‖f_i‖; with ``refined`` the
    factorial is n! = |B(2n+1)|."""
    if q >= 1:
        return inf
    return exp(_log_term(n, d, q, s_norm, f_norm, refined)) if q > 0 or n == 0 else (f_norm if n == 0 else 0.0)


def _log_term(n, d, q, s_norm, f_norm, refined):
    if n > 0 and q == 0:
        return -inf
    fact = lgamma(n + 1) if refined else lgamma(2 * n + 2)
    w = omega(q)
    return (fact - (2 * n + 1) * log(w) + 0.5 * n * log(d) + n * _log(s_norm)
            + 0.5 * n * (n + 1) * _log(q) + _log(f_norm))


def conjugate_tail(M, d, q, s_norm, f_norm, refined=False):
    if q >= 1:
        return inf
    if q == 0 or f_norm == 0:
        return 0.0
    return _log_series_tail(lambda n: _log_term(n, d, q, s_norm, f_norm, refined), M + 1)


def transport_tail(M, d, q, s_norm, R):
    """sum_{m > M} d^{7m/2+1/2} ((2m+1)!)^2 ω^{-2m-1} q^{m(m+1)/2} ‖S‖^{3m+5} R^{2m+1}."""
    if q >= 1:
        return inf
    if q == 0:
        return 0.0
    lw = log(omega(q))

    def lt(m):
        return ((3.5 * m + 0.5) * log(d) + 2 * lgamma(2 * m + 2) - (2 * m + 1) * lw
                + 0.5 * m * (m + 1) * log(q) + (3 * m + 5) * _log(s_norm) + (2 * m + 1) * log(R))

    return _log_series_tail(lt, max(M, 0) + 1)


# conjugate system

@dataclass
class ConjugateResult:
    xi: list
    M: int
    tail_bounds: list
    refined_tail_bounds: list
    level_norms: list
    fisher_value: float
    fisher_interval: tuple
    q: float
    omega: float
    extras: dict = field(default_factory=dict)

    @property
    def tail_bound(self):
        return max(self.tail_bounds) if self.tail_bounds else 0.0

    def to_dict(self):
        return {
            "M": self.M,
            "q": self.q,
            "omega": self.omega,
            "tail_bound": self.tail_bound,
            "tail_bounds": list(self.tail_bounds),
            "refined_tail_bounds": list(self.refined_tail_bounds),
            "level_norms": [list(x) for x in self.level_norms],
            "fisher_value": self.fisher_value,
            "fisher_interval": list(self.fisher_interval),
            "xi": [v.to_dict() for v in self.xi],
            "extras": dict(self.extras),
        }


def conjugate_series(vectors, H, T, M=DEFAULT_SERIES_ORDER, tol=DEFAULT_TOL):
    """sum_{n<=M} (-1)^n P_{2n+1}^{-1} sum_{π∈B(2n+1)} W_π^* v for each column v."""
    out = []
    d = H.d
    for v in vectors:
        levels = [np.zeros(d ** k, dtype=np.complex128) for k in range(2 * M + 2)]
        for n in range(M + 1):
            m = 2 * n + 1
            if n > 0 and T.is_zero:
                continue
            acc = np.zeros(d ** m, dtype=np.complex128)
            for pi in enumerate_B(m, cap=max(DEFAULT_CAP, m)):
                acc += apply_W_adjoint(pi, v, T, H)
            levels[m] = (-1.0) ** n * solve_P(T, acc, m, tol)
        out.append(FockVector(d, levels))
    return out


def conjugate_variables(H, T, M=DEFAULT_SERIES_ORDER, tol=DEFAULT_TOL):
    """Truncated conjugate system Ξ_1..Ξ_d with certified tails and Fisher bounds."""
    xi = conjugate_series([H.dual[:, i] for i in range(H.d)], H, T, M, tol)
    q = T.q
    if q >= 1:
        raise InvalidNorm(f"‖T‖ = {q} >= 1")
    fnorms = [float(np.linalg.norm(H.dual[:, i])) for i in range(H.d)]
    tails = [conjugate_tail(M, H.d, q, H.s_norm, f) for f in fnorms]
    refined = [conjugate_tail(M, H.d, q, H.s_norm, f, refined=True) for f in fnorms]
    level_norms = []
    for v in xi:
        level_norms.append([float(np.sqrt(max(np.vdot(v.levels[k], apply_P(T, v.levels[k], k)).real, 0.0)))
                            for k in range(1, 2 * M + 2, 2)])
    fisher = float(sum(twisted_norm(v, T) ** 2 for v in xi))
    upper = fisher + float(sum(t * t for t in tails))
    return ConjugateResult(xi, M, tails, refined, level_norms, fisher, (fisher, upper), q, omega(q),
                           {"refined_fisher_upper": fisher + float(sum(t * t for t in refined)),
                            "dual_norms": fnorms})


def conjugate_pairing(xi_i, word, H, T):
    """<Ξ_i, e_w>_T for a word of 0-based labels."""
    n = len(word)
    if n > xi_i.N:
        return 0j
    e = np.ones(1, dtype=np.complex128)
    for j in word:
        e = np.kron(e, H.basis[:, j])
    return complex(np.vdot(xi_i.levels[n], apply_P(T, e, n)))


def word_tensor(word, H):
    e = np.ones(1, dtype=np.complex128)
    for j in word:
        e = np.kron(e, H.basis[:, j])
    return e


# quasi-free machinery

def _require_real(H):
    if H.basis_mode != REAL_ORTHONORMAL:
        raise WrongBasisMode("this operation needs a real-orthonormal generator basis")


@dataclass
class QuasiFreeResult:
    theta: list
    theta_direct: list
    agreement: float
    identity_defect: float

    def to_dict(self):
        return {"agreement": self.agreement, "identity_defect": self.identity_defect,
                "theta": [v.to_dict() for v in self.theta]}


def quasi_free(H, T, M=DEFAULT_SERIES_ORDER, tol=DEFAULT_TOL, conj=None):
    """Θ_j = sum_k <e_k, e_j> Ξ_k, cross-checked against the series with e_j."""
    _require_real(H)
    conj = conjugate_variables(H, T, M, tol) if conj is None else conj
    G = H.gram
    theta = []
    for j in range(H.d):
        v = FockVector.zeros(H.d, 2 * M + 1)
        for k in range(H.d):
            v = v + conj.xi[k] * G[k, j]
        theta.append(v)
    direct = conjugate_series([H.basis[:, j] for j in range(H.d)], H, T, M, tol)
    agree = max((a - b).max_abs() for a, b in zip(theta, direct))
    ident = float(np.abs(H.dual @ G - H.basis).max())
    return QuasiFreeResult(theta, direct, agree, ident)


def rnorm(P, R):
    return P.rnorm(R)


def _sigma_matrix(H):
    _require_real(H)
    return H.quasi_free_matrix


def rho(P, H, inverse=False):
    """σ-cyclic rearrangement ρ(x_{j_1}..x_{j_m}) = σ_{-i}(x_{j_m}) x_{j_1}..x_{j_{m-1}}."""
    A = _sigma_matrix(H)
    if inverse:
        A = np.linalg.inv(A)
    out = {}
    for w, c in P.coeffs.items():
        if not w:
            out[w] = out.get(w, 0j) + c
            continue
        if inverse:
            head, rest = w[0], w[1:]
            for k in range(H.d):
                if A[head, k] != 0:
                    key = rest + (k,)
                    out[key] = out.get(key, 0j) + c * A[head, k]
        else:
            last, rest = w[-1], w[:-1]
            for k in range(H.d):
                if A[last, k] != 0:
                    key = (k,) + rest
                    out[key] = out.get(key, 0j) + c * A[last, k]
    return NCPolynomial(P.d, out).prune(1e-15)


def sigma_rnorm(P, R, H, window=SIGMA_WINDOW, return_info=False):
    """sum_n sup_k ‖ρ^k(π_n(P))‖_R.

    The sup is exact when ρ^k returns to π_n(P) within the window (a period);
    otherwise it is taken over k in [-window, window] with a warning.
    """
    total = 0.0
    exact = True
    for n in sorted({len(w) for w in P.coeffs}):
        base = P.homogeneous(n)
        scale = max(abs(c) for c in base.coeffs.values()) if base.coeffs else 0.0
        best = base.rnorm(R)
        found = n == 0
        for inverse in (False, True):
            cur = base
            for _ in range(window):
                cur = rho(cur, H, inverse)
                best = max(best, cur.rnorm(R))
                if cur.max_abs_difference(base) <= 1e-12 * max(scale, 1.0):
                    found = True
                    break
            if found:
                break
        exact = exact and found
        total += best
    if not exact:
        warnings.warn(f"sigma R-norm sup not stabilized within {window} iterates", RuntimeWarning,
                      stacklevel=2)
    return (total, exact) if return_info else total


def _sigma_word(word, A):
    """σ_{-i} applied letterwise to a word: dict word -> coefficient."""
    out = {(): 1.0 + 0j}
    for j in word:
        nxt = {}
        for w, c in out.items():
            for k in range(A.shape[0]):
                if A[j, k] != 0:
                    key = w + (k,)
                    nxt[key] = nxt.get(key, 0j) + c * A[j, k]
        out = nxt
    return out


def cyclic_derivative(P, i, H):
    """𝒟_i(x_{k_1}..x_{k_n}) = sum_l [2/(1+A)]_{i k_l} σ_{-i}(x_{k_{l+1}}..x_{k_n}) x_{k_1}..x_{k_{l-1}}."""
    A = _sigma_matrix(H)
    B = 2 * np.linalg.inv(np.eye(H.d) + A)
    out = {}
    for w, c in P.coeffs.items():
        for l, k in enumerate(w):
            coef = B[i, k]
            if coef == 0:
                continue
            for s, cs in _sigma_word(w[l + 1:], A).items():
                key = s + w[:l]
                out[key] = out.get(key, 0j) + c * coef * cs
    return NCPolynomial(P.d, out).prune(1e-15)


def quadratic_potential(H):
    """V_0 = 1/2 sum_{j,k} [(1+A)/2]_{jk} x_k x_j."""
    A = _sigma_matrix(H)
    B = (np.eye(H.d) + A) / 2
    return NCPolynomial(H.d, {(k, j): 0.5 * B[j, k] for j in range(H.d) for k in range(H.d)}).prune(0.0)


def number_inverse(P):
    return NCPolynomial(P.d, {w: c / len(w) for w, c in P.coeffs.items() if w}).prune(0.0)


@dataclass
class PotentialResult:
    V: NCPolynomial
    W: NCPolynomial
    w_rnorm: float
    w_tail: float
    theta_deviation: list
    theta_tail: float
    R: float
    C_R: float
    in_regime: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"R": self.R, "C_R": self.C_R, "W_rnorm": self.w_rnorm, "W_tail": self.w_tail,
                "theta_deviation_rnorm": list(self.theta_deviation), "theta_tail": self.theta_tail,
                "in_regime": self.in_regime, "notes": list(self.notes),
                "V": self.V.to_list(), "W": self.W.to_list()}


def potential(H, T, M=DEFAULT_SERIES_ORDER, R=2.0, C_R=None, tol=DEFAULT_TOL, theta=None):
    """Free Gibbs potential V = 𝒩^{-1}(sum_{j,k} [(1+A)/2]_{jk} Φ(Θ_k) x_j) built from
    the truncated Θ, the deviation W = V - V_0 and the certified tails."""
    _require_real(H)
    if R <= 1:
        raise InvalidNorm("R must exceed 1")
    if theta is None:
        theta = quasi_free(H, T, M, tol).theta
    d = H.d
    A = H.quasi_free_matrix
    B = (np.eye(d) + A) / 2
    phis = []
    for v in theta:
        P = NCPolynomial(d)
        for n in range(1, 2 * M + 2, 2):
            if np.any(v.levels[n]):
                P = P + wick_polynomial(v.levels[n], n, H, T, cap=max(DEFAULT_CAP, n))
        phis.append(P.prune())
    acc = NCPolynomial(d)
    for j in range(d):
        xj = NCPolynomial.generator(d, j)
        for k in range(d):
            if B[j, k] != 0:
                acc = acc + (phis[k] * xj) * B[j, k]
    V = number_inverse(acc).prune()
    W = (V - quadratic_potential(H)).prune(1e-13)
    dev = [(phis[i] - NCPolynomial.generator(d, i)).prune(1e-13).rnorm(R) for i in range(d)]
    tail = transport_tail(M, d, T.q, H.s_norm, R)
    w_tail = 0.5 * float(np.abs(B).sum()) * tail * R
    w_norm = W.rnorm(R)
    notes = []
    a_norm = float(np.linalg.norm(A, 2))
    if R <= 4 * a_norm + 1:
        notes.append(f"R = {R} does not exceed 4‖A‖+1 = {4 * a_norm + 1:.6g}")
    in_regime = bool(C_R is not None and w_norm + w_tail < C_R)
    if C_R is None:
        notes.append("no threshold C_R supplied; regime verdict not available")
    return PotentialResult(V, W, w_norm, w_tail, dev, tail, R, C_R, in_regime, notes)
