"""T-Wick products as noncommutative polynomials in x_i = X_T(e_i)."""
import numpy as np

from .contraction import apply_W
from .errors import TruncationTooSmall
from .fock import FockOperator, FockVector, apply_R, ladder, word_vector
from .matchings import DEFAULT_CAP, enumerate_matchings

PRUNE = 1e-14


class NCPolynomial:
    """Finitely supported map word -> coefficient; words are tuples of
    0-based generator labels, the empty word is the unit."""

    def __init__(self, d, coeffs=None):
        self.d = d
        self.coeffs = {}
        for w, c in (coeffs or {}).items():
            w = tuple(int(i) for i in w)
            self.coeffs[w] = self.coeffs.get(w, 0j) + complex(c)

    @classmethod
    def one(cls, d):
        return cls(d, {(): 1.0})

    @classmethod
    def generator(cls, d, i):
        return cls(d, {(i,): 1.0})

    def copy(self):
        return NCPolynomial(self.d, dict(self.coeffs))

    def prune(self, threshold=PRUNE):
        self.coeffs = {w: c for w, c in self.coeffs.items() if abs(c) > threshold}
        return self

    @property
    def degree(self):
        return max((len(w) for w in self.coeffs), default=-1)

    def __getitem__(self, word):
        return self.coeffs.get(tuple(word), 0j)

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(sorted(self.coeffs.items(), key=lambda kv: (len(kv[0]), kv[0])))

    def __add__(self, other):
        out = dict(self.coeffs)
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0j) + c
        return NCPolynomial(self.d, out)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, NCPolynomial):
            out = {}
            for u, a in self.coeffs.items():
                for v, b in other.coeffs.items():
                    out[u + v] = out.get(u + v, 0j) + a * b
            return NCPolynomial(self.d, out)
        return NCPolynomial(self.d, {w: other * c for w, c in self.coeffs.items()})

    def __rmul__(self, alpha):
        return NCPolynomial(self.d, {w: alpha * c for w, c in self.coeffs.items()})

    def homogeneous(self, n):
        return NCPolynomial(self.d, {w: c for w, c in self.coeffs.items() if len(w) == n})

    def max_abs_difference(self, other):
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self[w] - other[w]) for w in keys), default=0.0)

    def rnorm(self, R):
        """sum_w |c(w)| R^{|w|}."""
        return float(sum(abs(c) * R ** len(w) for w, c in self.coeffs.items()))

    def to_list(self):
        """[[word (1-based labels), [re, im]], ...] in deterministic order."""
        return [[[i + 1 for i in w], [c.real, c.imag]] for w, c in self]

    @classmethod
    def from_list(cls, d, items):
        return cls(d, {tuple(i - 1 for i in w): complex(c[0], c[1]) for w, c in items})

    def __repr__(self):
        terms = " + ".join(f"({c:.4g})" + ("·" + "".join(f"x{i + 1}" for i in w) if w else "")
                           for w, c in self)
        return f"NCPolynomial({terms or '0'})"


def expand_in_basis(v, s, H):
    """Coefficients of v ∈ (C^d)^{⊗s} in the product basis e_w (flat, row-major)."""
    d = H.d
    t = np.asarray(v, dtype=np.complex128).reshape((d,) * s) if s else np.asarray(v).reshape(())
    for axis in range(s):
        t = np.moveaxis(np.tensordot(H.basis_inv, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def tensor_from_coeffs(coeffs, s, H):
    """Inverse of :func:`expand_in_basis`: sum_w coeffs[w] e_w."""
    d = H.d
    t = np.asarray(coeffs, dtype=np.complex128).reshape((d,) * s) if s else np.asarray(coeffs).reshape(())
    for axis in range(s):
        t = np.moveaxis(np.tensordot(H.basis, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def _words(d, s):
    return [tuple(int(x) for x in np.unravel_index(k, (d,) * s)) for k in range(d ** s)] if s else [()]


def polynomial_from_tensor(v, s, H, scale=1.0, into=None):
    """Accumulate scale * X(v) for v ∈ (C^d)^{⊗s}, i.e. sum_w scale*coeff(w) x_w."""
    out = {} if into is None else into
    coeffs = expand_in_basis(v, s, H)
    for w, c in zip(_words(H.d, s), coeffs):
        if c != 0:
            out[w] = out.get(w, 0j) + scale * c
    return out


def wick_polynomial(tensor, n, H, T, cap=DEFAULT_CAP):
    """Φ(Ξ) = X(sum_π (-1)^{|p(π)|} W_π Ξ) for Ξ ∈ (C^d)^{⊗n}."""
    x = np.asarray(tensor, dtype=np.complex128).reshape(H.d ** n)
    acc = {}
    for pi in enumerate_matchings(n, cap):
        v = apply_W(pi, x, T, H)
        polynomial_from_tensor(v, pi.num_singletons, H, (-1.0) ** pi.num_pairs, acc)
    return NCPolynomial(H.d, acc).prune()


def wick_recursive(tensor, n, H, T, cap=DEFAULT_CAP):
    """Φ by the level recursion Φ(ξ⊗η) = X(ξ)Φ(η) - Φ(a_T(Sξ)η)."""
    from .errors import CapExceeded
    if n > cap:
        raise CapExceeded(f"n = {n} exceeds the cap {cap}")
    d = H.d

    def phi(x, m):
        if m == 0:
            return NCPolynomial(d, {(): complex(x.reshape(-1)[0])})
        if m == 1:
            return NCPolynomial(d, polynomial_from_tensor(x, 1, H))
        rows = x.reshape(d, d ** (m - 1))
        heads = H.basis_inv @ rows  # heads[i] = tail attached to e_i
        out = NCPolynomial(d)
        for i in range(d):
            if np.any(heads[i]):
                tail = phi(heads[i], m - 1)
                out = out + NCPolynomial(d, {(i,) + w: c for w, c in tail.coeffs.items()})
        contracted = (H.pairing.reshape(1, -1) @ apply_R(T, rows, m - 1).reshape(d * d, -1)).reshape(-1) \
            if m > 2 else H.pairing @ x.reshape(-1)
        return out - phi(np.asarray(contracted).reshape(-1), m - 2)

    return phi(np.asarray(tensor, dtype=np.complex128).reshape(d ** n), n).prune()


def apply_to_vacuum(P, H, T, N=None):
    """P(X) Ω as a FockVector truncated at N (default: deg P, where it is exact)."""
    N = max(P.degree, 0) if N is None else N
    if N < P.degree:
        raise TruncationTooSmall(f"truncation {N} below degree {P.degree}")
    out = FockVector.zeros(H.d, N)
    for w, c in P.coeffs.items():
        lv = word_vector(w, H, T, N)
        for k, v in enumerate(lv):
            if v is not None:
                out.levels[k] = out.levels[k] + c * v
    return out


def evaluate(P, N, H, T, exact=True):
    """sum_w c(w) X(e_{w_1}) ... X(e_{w_k}) as a graded operator truncated at N."""
    if exact and N < P.degree:
        raise TruncationTooSmall(f"truncation {N} below degree {P.degree}")
    fields = [ladder("field", H.basis[:, i], N, T, H) for i in range(H.d)]
    cache = {(): FockOperator.identity(H.d, N)}

    def mono(w):
        if w not in cache:
            cache[w] = fields[w[0]] @ mono(w[1:])
        return cache[w]

    out = FockOperator(H.d, N)
    for w, c in P:
        out = out + mono(w) * c
    return out
