"""Incomplete matchings of [n] = {1..n}: pairs and singletons.

Points are 1-based.  Pairs are stored as (i, j) with i < j, sorted by i.
"""
from dataclasses import dataclass
from itertools import permutations

from .errors import (CapExceeded, InconsistentSizes, NotAdmissible, NotASingleton, NotOdd,
                     WrongCase)

DEFAULT_CAP = 10
MAX_ORDERS = 10 ** 4
MAX_ORDER_PAIRS = 8


@dataclass(frozen=True)
class IncompleteMatching:
    n: int
    pairs: tuple
    singletons: tuple

    def __post_init__(self):
        pairs = tuple(sorted((min(p), max(p)) for p in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "singletons", tuple(sorted(self.singletons)))
        pts = [x for p in pairs for x in p] + list(self.singletons)
        if sorted(pts) != list(range(1, self.n + 1)):
            raise ValueError(f"blocks do not partition [1..{self.n}]")
        if any(i == j for i, j in pairs):
            raise ValueError("degenerate pair")

    @classmethod
    def from_pairs(cls, n, pairs):
        used = {x for p in pairs for x in p}
        return cls(n, tuple(tuple(p) for p in pairs), tuple(x for x in range(1, n + 1) if x not in used))

    @property
    def num_pairs(self):
        return len(self.pairs)

    @property
    def num_singletons(self):
        return len(self.singletons)

    def partner(self, x):
        for i, j in self.pairs:
            if x == i:
                return j
            if x == j:
                return i
        return None

    def interval_intersection(self):
        """Points k with i < k < j for every pair; all of [n] without pairs."""
        if not self.pairs:
            return list(range(1, self.n + 1))
        lo = max(i for i, _ in self.pairs)
        hi = min(j for _, j in self.pairs)
        return list(range(lo + 1, hi))

    @property
    def crossing_number(self):
        return crossing_numbers(self)[1]

    def __str__(self):
        blocks = [f"{{{i},{j}}}" for i, j in self.pairs] + [f"{{{s}}}" for s in self.singletons]
        return "{" + ",".join(blocks) + "}"

    def to_dict(self):
        return {"n": self.n, "pairs": [list(p) for p in self.pairs], "singletons": list(self.singletons)}


def _enumerate(points):
    if not points:
        yield ()
        return
    first, rest = points[0], points[1:]
    for tail in _enumerate(rest):
        yield tail
    for idx, j in enumerate(rest):
        for tail in _enumerate(rest[:idx] + rest[idx + 1:]):
            yield ((first, j),) + tail


def enumerate_matchings(n, cap=DEFAULT_CAP):
    """All incomplete matchings of [n] in a fixed deterministic order."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > cap:
        raise CapExceeded(f"n = {n} exceeds the enumeration cap {cap}")
    return [IncompleteMatching.from_pairs(n, pairs) for pairs in _enumerate(tuple(range(1, n + 1)))]


def nests(outer, inner):
    return outer[0] < inner[0] and inner[1] < outer[1]


def is_admissible(pi, order):
    order = [tuple(p) for p in order]
    if sorted(order) != list(pi.pairs):
        return False
    pos = {p: k for k, p in enumerate(order)}
    return all(pos[a] < pos[b] for a in order for b in order if nests(a, b))


def _check_order(pi, order):
    if order is None:
        return left_standard(pi)
    order = [tuple(p) for p in order]
    if not is_admissible(pi, order):
        raise NotAdmissible(f"{order} is not an admissible order for {pi}")
    return order


def left_standard(pi):
    return sorted(pi.pairs, key=lambda p: p[0])


def right_standard(pi):
    return sorted(pi.pairs, key=lambda p: -p[1])


def admissible_orders(pi, max_pairs=MAX_ORDER_PAIRS, max_orders=MAX_ORDERS):
    """All linear extensions of the nesting order (outer pairs first)."""
    if pi.num_pairs > max_pairs:
        raise CapExceeded(f"{pi.num_pairs} pairs exceed the order-enumeration guard {max_pairs}")
    pairs = list(pi.pairs)
    out = []

    def rec(prefix, remaining):
        if len(out) > max_orders:
            raise CapExceeded(f"more than {max_orders} admissible orders")
        if not remaining:
            out.append(list(prefix))
            return
        for p in remaining:
            if not any(nests(o, p) for o in remaining if o != p):
                rec(prefix + [p], [r for r in remaining if r != p])

    rec([], pairs)
    return out


def _offsets(order):
    """For each step k, the positions (a_k, b_k) of the pair after removing the
    points of the earlier pairs."""
    removed = []
    out = []
    for i, j in order:
        ri = sum(1 for x in removed if x < i)
        rj = sum(1 for x in removed if x < j)
        out.append((i - ri, j - rj))
        removed.extend((i, j))
    return out


def crossing_numbers(pi, order=None):
    """Per-pair crossings (in the order's sequence) and their total."""
    order = _check_order(pi, order)
    per = [b - a - 1 for a, b in _offsets(order)]
    return per, sum(per)


def plan_steps(pi, order=None):
    """Steps (c_index, t_from, t_to): apply T_{t_from, t_to}, then C_{c_index}."""
    order = _check_order(pi, order)
    return [(a, a + 1, b) for a, b in _offsets(order)]


def enumerate_B(m, cap=DEFAULT_CAP):
    """Matchings of [2n+1] with middle singleton n+1 and every k <= n paired
    to a point on the right."""
    if m < 1 or m % 2 == 0:
        raise NotOdd(f"{m} is not odd")
    if m > cap:
        raise CapExceeded(f"m = {m} exceeds the enumeration cap {cap}")
    n = (m - 1) // 2
    right = list(range(n + 2, m + 1))
    return [IncompleteMatching(m, tuple((k + 1, perm[k]) for k in range(n)), (n + 1,))
            for perm in permutations(right)]


# decomposition with respect to a singleton

@dataclass(frozen=True)
class Decomposition:
    pi_m: IncompleteMatching
    k: int
    sigma_l: IncompleteMatching
    sigma_r: IncompleteMatching


def _restrict(pi, points):
    """Restriction of pi to a union of blocks, renumbered in increasing order."""
    idx = {x: t + 1 for t, x in enumerate(sorted(points))}
    pairs = [(idx[i], idx[j]) for i, j in pi.pairs if i in idx]
    return IncompleteMatching.from_pairs(len(points), pairs)


def dcp(pi, k):
    if k not in pi.singletons:
        raise NotASingleton(f"{k} is not a singleton of {pi}")
    straddle = [p for p in pi.pairs if p[0] < k < p[1]]
    pi_m = IncompleteMatching.from_pairs(pi.n, straddle)
    left = [s for s in pi_m.singletons if s < k]
    right = [s for s in pi_m.singletons if s > k]
    return Decomposition(pi_m, k, _restrict(pi, left), _restrict(pi, right))


def dcp_inverse(dec):
    pi_m, k = dec.pi_m, dec.k
    if k not in pi_m.interval_intersection():
        raise NotASingleton(f"{k} is not inside every pair of {pi_m}")
    left = [s for s in pi_m.singletons if s < k]
    right = [s for s in pi_m.singletons if s > k]
    if dec.sigma_l.n != len(left) or dec.sigma_r.n != len(right):
        raise InconsistentSizes("sigma sizes do not match the left/right singleton counts")
    pairs = list(pi_m.pairs)
    pairs += [(left[i - 1], left[j - 1]) for i, j in dec.sigma_l.pairs]
    pairs += [(right[i - 1], right[j - 1]) for i, j in dec.sigma_r.pairs]
    return IncompleteMatching.from_pairs(pi_m.n, pairs), k


# deletion maps

def d_s(pi):
    if 1 not in pi.singletons:
        raise WrongCase("{1} is not a singleton")
    if pi.n < 1:
        raise WrongCase("empty matching")
    return IncompleteMatching.from_pairs(pi.n - 1, [(i - 1, j - 1) for i, j in pi.pairs])


def d_s_inverse(sigma):
    return IncompleteMatching.from_pairs(sigma.n + 1, [(i + 1, j + 1) for i, j in sigma.pairs])


def D_p(pi):
    j1 = pi.partner(1)
    if j1 is None:
        raise WrongCase("1 is a singleton")
    rest = [x for x in range(1, pi.n + 1) if x not in (1, j1)]
    return _restrict(pi, rest), j1 - 1


def D_p_inverse(sigma, k):
    n = sigma.n + 2
    if not 1 <= k <= n - 1:
        raise WrongCase(f"k = {k} outside 1..{n - 1}")
    rest = [x for x in range(1, n + 1) if x not in (1, k + 1)]
    pairs = [(1, k + 1)] + [(rest[i - 1], rest[j - 1]) for i, j in sigma.pairs]
    return IncompleteMatching.from_pairs(n, pairs)
