"""The Farey graph: the exact rank-2 model.

Vertices are slopes p/q (coprime, q > 0, plus 1/0); two slopes are adjacent
iff |p s - q r| = 1.  Distances come from a continued-fraction descent with
branching over both remainder choices, cross-validated against plain BFS
with a height cap.  GL(2, Z) acts by isometries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .words import Word, reduce_word


@dataclass(frozen=True, order=True)
class Slope:
    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if p == 0 and q == 0:
            raise ValueError("0/0 is not a slope")
        g = math.gcd(abs(p), abs(q))
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"

    @classmethod
    def parse(cls, s: str) -> "Slope":
        num, _, den = s.partition("/")
        return cls(int(num), int(den) if den else 1)

    def height(self) -> int:
        return max(abs(self.p), self.q)


INFINITY = Slope(1, 0)
ZERO = Slope(0, 1)


def abelianize(w: Sequence[int], rank: int = 2) -> tuple[int, ...]:
    v = [0] * rank
    for a in w:
        v[abs(a) - 1] += 1 if a > 0 else -1
    return tuple(v)


def slope_of(w: Sequence[int], *, check_primitive: bool = True) -> Slope:
    """Slope of a primitive element of F_2 (normalized abelianization)."""
    w = reduce_word(w)
    if check_primitive:
        from .whitehead import is_primitive

        if not is_primitive(w, 2):
            raise ValueError(f"{w!r} is not primitive")
    p, q = abelianize(w, 2)
    return Slope(p, q)


def determinant(s: Slope, t: Slope) -> int:
    return s.p * t.q - s.q * t.p


def adjacent(s: Slope, t: Slope) -> bool:
    if s == t:
        raise ValueError("adjacency needs distinct slopes")
    return abs(determinant(s, t)) == 1


def neighbors(s: Slope, height_cap: int) -> Iterator[Slope]:
    """All slopes adjacent to s with height <= height_cap."""
    seen: set[Slope] = set()
    for t in _neighbor_candidates(s, height_cap):
        if t not in seen:
            seen.add(t)
            yield t


def _neighbor_candidates(s: Slope, height_cap: int) -> Iterator[Slope]:
    p, q = s.p, s.q
    # solve p*y - q*x = eps
    for eps in (1, -1):
        # extended gcd for p*y0 - q*x0 = eps
        g, a, b = _xgcd(p, -q)  # p*a + (-q)*b = g = +-1
        if g == -1:
            a, b = -a, -b
            g = 1
        y0, x0 = a * eps, b * eps
        # family: (x0 + k p, y0 + k q)
        ks: Iterable[int]
        if q != 0:
            lo = math.ceil((-height_cap - y0) / q)
            hi = math.floor((height_cap - y0) / q)
            ks = range(lo, hi + 1)
        else:
            lo = math.ceil((-height_cap - x0) / p)
            hi = math.floor((height_cap - x0) / p)
            ks = range(lo, hi + 1)
        for k in ks:
            num, den = x0 + k * p, y0 + k * q
            if max(abs(num), abs(den)) <= height_cap and (num or den):
                yield Slope(num, den)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """g, x, y with a*x + b*y = g."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


@lru_cache(maxsize=None)
def _dist_to_infinity(q: int, r: int) -> int:
    """Distance from infinity to any slope with denominator q and numerator
    congruent to r mod q (translations fix infinity)."""
    if q == 0:
        return 0
    if q == 1:
        return 1
    r = r % q
    # neighbors of infinity are the integers; descend through both
    # continued-fraction remainder choices
    return 1 + min(_dist_to_infinity(r, q), _dist_to_infinity(q - r, q))


def distance(s: Slope, t: Slope) -> int:
    """Graph distance in the Farey graph (continued-fraction descent)."""
    if s == t:
        return 0
    # move t to infinity by an integer matrix of determinant 1
    p, q = t.p, t.q
    g, a, b = _xgcd(p, q)  # a p + b q = 1
    # M = [[a, b], [-q, p]] has det = a p + b q = 1, M t = 1/0
    np_, nq = a * s.p + b * s.q, -q * s.p + p * s.q
    u = Slope(np_, nq)
    if u.q == 0:
        return 0
    return _dist_to_infinity(u.q, u.p % u.q)


def distance_bfs(s: Slope, t: Slope, height_cap: int | None = None) -> int:
    """Plain BFS distance with a height cap (validation oracle)."""
    if s == t:
        return 0
    if height_cap is None:
        height_cap = 2 * max(s.height(), t.height(), 1)
    dist = {s: 0}
    frontier = [s]
    while frontier:
        nxt = []
        for v in frontier:
            for w in neighbors(v, height_cap):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    if w == t:
                        return dist[w]
                    nxt.append(w)
        frontier = nxt
    raise ValueError(f"{t} unreachable from {s} at height cap {height_cap}")


def single_source_distances(s: Slope, height_cap: int) -> dict[Slope, int]:
    """BFS distances from s to every slope of height <= height_cap."""
    dist = {s: 0}
    frontier = [s]
    while frontier:
        nxt = []
        for v in frontier:
            for w in neighbors(v, height_cap):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def all_slopes(height_cap: int) -> list[Slope]:
    out = [INFINITY]
    for q in range(1, height_cap + 1):
        for p in range(-height_cap, height_cap + 1):
            if math.gcd(abs(p), q) == 1:
                out.append(Slope(p, q))
    return out


# -- GL(2, Z) ----------------------------------------------------------------

@dataclass(frozen=True)
class IntegerMatrix2:
    """Integer 2x2 matrix with determinant +-1, acting on slopes."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if abs(self.det()) != 1:
            raise ValueError("matrix is not in GL(2, Z)")

    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def trace(self) -> int:
        return self.a + self.d

    def __mul__(self, other: "IntegerMatrix2") -> "IntegerMatrix2":
        return IntegerMatrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def act(self, s: Slope) -> Slope:
        return Slope(self.a * s.p + self.b * s.q, self.c * s.p + self.d * s.q)

    def is_hyperbolic(self) -> bool:
        t, d = self.trace(), self.det()
        if d == 1:
            return abs(t) > 2
        return t != 0

    @classmethod
    def identity(cls) -> "IntegerMatrix2":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_lr_word(cls, word: str) -> "IntegerMatrix2":
        """Product of L = [[1,0],[1,1]] and R = [[1,1],[0,1]] factors."""
        m = cls.identity()
        for ch in word:
            if ch == "L":
                m = m * cls(1, 0, 1, 1)
            elif ch == "R":
                m = m * cls(1, 1, 0, 1)
            else:
                raise ValueError(f"bad L/R letter {ch!r}")
        return m


# -- quasi-geodesic testing ---------------------------------------------------

@dataclass
class QuasigeodesicReport:
    n_points: int
    min_l: float
    worst_pair: tuple[int, int] | None
    degenerate: bool
    pair_count: int = 0

    def passes(self, l_threshold: float) -> bool:
        return not self.degenerate and self.min_l <= l_threshold


def minimal_l_for_pairs(pairs: Iterable[tuple[int, int]],
                        dist_fn) -> tuple[float, tuple[int, int] | None, int]:
    """Smallest L >= 1 satisfying the two-sided quasi-geodesic inequality
    |i-j|/... on all index pairs; returns (L, worst pair, #pairs)."""
    best = 1.0
    worst = None
    count = 0
    for i, j in pairs:
        count += 1
        gap = abs(i - j)
        d = dist_fn(i, j)
        # |i-j| <= L d + L
        lo1 = gap / (d + 1)
        # d/L - L <= |i-j|  =>  L^2 + |i-j| L - d >= 0
        lo2 = (-gap + math.sqrt(gap * gap + 4 * d)) / 2
        lo = max(lo1, lo2)
        if lo > best:
            best = lo
            worst = (i, j)
    return best, worst, count


def quasigeodesic_test(seq: Sequence[Slope]) -> QuasigeodesicReport:
    """Minimal parameterized quasi-geodesic constant of a slope sequence."""
    n = len(seq)
    if n <= 1:
        return QuasigeodesicReport(n, 1.0, None, degenerate=True)
    cache: dict[tuple[Slope, Slope], int] = {}

    def dist_fn(i: int, j: int) -> int:
        key = (seq[i], seq[j]) if seq[i] <= seq[j] else (seq[j], seq[i])
        if key not in cache:
            cache[key] = distance(key[0], key[1])
        return cache[key]

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    min_l, worst, count = minimal_l_for_pairs(pairs, dist_fn)
    degenerate = len(set(seq)) <= 1
    return QuasigeodesicReport(n, min_l, worst, degenerate, count)
