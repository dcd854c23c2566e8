"""Spheres as one-edge free splittings, marked graphs, and the edge oracles.

A non-separating sphere is identified with the conjugacy class of its
complementary corank-1 free factor (an HNN splitting); a separating sphere
with a pair of complementary factors up to simultaneous conjugation.  Sphere
systems are marked graphs (graphs of trivial groups with a marking), and
disjointness is decided through explicit witnesses: a common rose chart for
edges of the non-separating-sphere graph, a (P, k, s) configuration for
bounding pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import whitehead
from .stallings import ConjSubgroup, CoreGraph, Subgroup, fold_words, is_basis, pullback
from .whitehead import (
    free_factor_witness,
    is_primitive,
    minimize_cyclic_tuple,
    minimize_subgroup_tuple,
    primitivity_witness,
)
from .words import (
    Automorphism,
    Basis,
    Word,
    automorphism_from_basis,
    cyclic_word,
    format_word,
    inv,
    mul,
    nielsen_moves,
    reduce_word,
)


# -- charts ------------------------------------------------------------------

@dataclass(frozen=True)
class SphereChart:
    """A rose chart: ordered basis plus petal index (0-based).

    The chart denotes the non-separating sphere dual to the index-th petal:
    factor generated by the remaining elements, stable letter the petal.
    """

    basis: Basis
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.basis.rank:
            raise ValueError("petal index out of range")

    def factor_words(self) -> tuple[Word, ...]:
        return tuple(w for j, w in enumerate(self.basis.elements) if j != self.index)

    def stable_word(self) -> Word:
        return self.basis.elements[self.index]


class NonSepSphere:
    """Non-separating sphere: HNN splitting, keyed by the factor's class."""

    __slots__ = ("factor", "stable", "chart", "rank", "_key")

    def __init__(self, factor: ConjSubgroup, stable: Word, rank: int,
                 chart: SphereChart | None = None):
        self.factor = factor
        self.stable = reduce_word(stable)
        self.rank = rank
        self.chart = chart
        self._key: str | None = None

    @classmethod
    def from_chart(cls, chart: SphereChart) -> "NonSepSphere":
        rank = chart.basis.rank
        factor = ConjSubgroup.from_words(chart.factor_words(), rank)
        return cls(factor, chart.stable_word(), rank, chart)

    @classmethod
    def standard(cls, rank: int, index: int = 0) -> "NonSepSphere":
        return cls.from_chart(SphereChart(Basis.standard(rank), index))

    def key(self) -> str:
        if self._key is None:
            self._key = "ns:" + repr(self.factor.key())
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, NonSepSphere) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"NonSepSphere({self.key()[:60]})"

    def is_separating(self) -> bool:
        return False

    def factor_subgroup(self) -> Subgroup:
        return self.factor.pointed_at(0, self.rank)

    def reduced_stable(self) -> Word:
        """Stable letter reduced modulo absorption into the factor and
        inversion (greedy double-coset reduction; for display and tests)."""
        gens = self.factor_subgroup().free_basis()
        t = self.stable
        improved = True
        while improved:
            improved = False
            for a in gens + tuple(inv(g) for g in gens):
                for cand in (mul(a, t), mul(t, a)):
                    if len(cand) < len(t):
                        t = cand
                        improved = True
        return min(t, inv(t))

    def ensure_chart(self) -> SphereChart:
        """A rose chart containing this sphere (computed if not stored)."""
        if self.chart is None:
            self.chart = chart_from_splitting(self.factor, self.stable, self.rank)
        return self.chart

    def apply(self, phi: Automorphism) -> "NonSepSphere":
        chart = None
        if self.chart is not None:
            chart = SphereChart(phi.apply_to_basis(self.chart.basis), self.chart.index)
        gens = self.factor_subgroup().free_basis()
        factor = ConjSubgroup.from_words([phi(g) for g in gens], self.rank)
        return NonSepSphere(factor, phi(self.stable), self.rank, chart)


def chart_from_splitting(factor: ConjSubgroup, stable: Word, rank: int) -> SphereChart:
    """Find a rose chart for a splitting given by factor and stable letter."""
    sub = factor.pointed_at(0, rank)
    gens = sub.free_basis()
    elements = (reduce_word(stable),) + gens
    if is_basis(elements, rank):
        return SphereChart(Basis(elements), 0)
    # conjugate the factor representative so that factor + stable is a basis
    phi = free_factor_witness(gens, rank)
    if phi is None:
        raise ValueError("factor is not certified as a free factor")
    rose_letters = sorted({abs(l) for row in ConjSubgroup.from_words(
        [phi(g) for g in gens], rank).graph.adj for l, _ in row})
    missing = [i for i in range(1, rank + 1) if i not in rose_letters]
    if len(missing) != 1:
        raise ValueError("factor does not have corank one")
    inv_phi = phi.inverse()
    elements = (inv_phi((missing[0],)),) + tuple(inv_phi((l,)) for l in rose_letters)
    if not is_basis(elements, rank):
        raise ValueError("splitting data is inconsistent")
    return SphereChart(Basis(elements), 0)


class SepSphere:
    """Separating sphere: unordered pair of complementary free factors up to
    simultaneous conjugation."""

    __slots__ = ("parts", "rank", "chart_basis", "partition", "_key")

    def __init__(self, part_gens: tuple[tuple[Word, ...], tuple[Word, ...]],
                 rank: int, chart_basis: Basis | None = None,
                 partition: tuple[tuple[int, ...], tuple[int, ...]] | None = None):
        self.parts = part_gens
        self.rank = rank
        self.chart_basis = chart_basis
        self.partition = partition
        self._key: str | None = None

    @classmethod
    def from_chart(cls, basis: Basis, side: Sequence[int]) -> "SepSphere":
        side = tuple(sorted(side))
        other = tuple(j for j in range(basis.rank) if j not in side)
        if not side or not other:
            raise ValueError("both sides of a separating sphere are nontrivial")
        g1 = tuple(basis.elements[j] for j in side)
        g2 = tuple(basis.elements[j] for j in other)
        return cls((g1, g2), basis.rank, basis, (side, other))

    def key(self) -> str:
        if self._key is None:
            self._key = "sep:" + repr(_sep_canonical(self.parts, self.rank))
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, SepSphere) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"SepSphere({self.key()[:60]})"

    def is_separating(self) -> bool:
        return True

    def part_classes(self) -> tuple[ConjSubgroup, ConjSubgroup]:
        return (ConjSubgroup.from_words(self.parts[0], self.rank),
                ConjSubgroup.from_words(self.parts[1], self.rank))


Sphere = NonSepSphere | SepSphere


def _based_size(gens: tuple[Word, ...], rank: int) -> int:
    return Subgroup.from_words(gens, rank).graph.n_edges()


def _sep_canonical(parts, rank: int, plateau_budget: int = 64) -> tuple:
    """Canonical form of a factor pair under simultaneous conjugation:
    greedy single-letter conjugation descent on total based size, plateau
    exploration, then the sorted pair of based serializations."""

    def complexity(pr) -> int:
        return _based_size(pr[0], rank) + _based_size(pr[1], rank)

    def conjugates(pr):
        for a in range(1, rank + 1):
            for g in ((a,), (-a,)):
                yield (tuple(mul(g, w, inv(g)) for w in pr[0]),
                       tuple(mul(g, w, inv(g)) for w in pr[1]))

    def serial(pr) -> tuple:
        ks = sorted((Subgroup.from_words(p, rank).key() for p in pr))
        return tuple(ks)

    cur = (tuple(reduce_word(w) for w in parts[0]),
           tuple(reduce_word(w) for w in parts[1]))
    best = complexity(cur)
    frontier = [cur]
    seen = {serial(cur)}
    minima = {serial(cur): cur}
    while frontier:
        nxt = []
        for pr in frontier:
            for cand in conjugates(pr):
                c = complexity(cand)
                if c < best:
                    best, frontier, nxt = c, [], []
                    seen = {serial(cand)}
                    minima = {serial(cand): cand}
                    nxt = [cand]
                    break
                if c == best:
                    s = serial(cand)
                    if s not in seen and len(seen) < plateau_budget:
                        seen.add(s)
                        minima[s] = cand
                        nxt.append(cand)
            else:
                continue
            break
        frontier = nxt
    return min(minima)


def sphere_from_chart(chart: SphereChart) -> NonSepSphere:
    return NonSepSphere.from_chart(chart)


def canonicalize(sphere: Sphere) -> str:
    return sphere.key()


def rank1_generator(conj: ConjSubgroup, rank: int) -> Word:
    if conj.subgroup_rank() != 1:
        raise ValueError("not a rank-1 subgroup")
    return conj.pointed_at(0, rank).free_basis()[0]


def sphere_slope(s: NonSepSphere):
    """Rank-2 cross-model: slope of the factor generator."""
    from .farey import slope_of

    if s.rank != 2:
        raise ValueError("slopes are a rank-2 notion")
    return slope_of(rank1_generator(s.factor, 2), check_primitive=False)


def sphere_of_slope(slope) -> NonSepSphere:
    """The rank-2 sphere with the given factor slope (Christoffel chart)."""
    w = _primitive_of_slope(slope.p, slope.q)
    stable = _complete_primitive_rank2(w)
    return NonSepSphere.from_chart(SphereChart(Basis((stable, w)), 0))


def _primitive_of_slope(p: int, q: int) -> Word:
    """A primitive word of F_2 with abelianization (p, q) (Stern-Brocot)."""
    if q < 0 or (q == 0 and p < 0):
        p, q = -p, -q
    if (p, q) == (1, 0):
        return (1,)
    if (p, q) == (0, 1):
        return (2,)
    sgn = 1 if p > 0 else -1
    a, b = abs(p), q
    # walk the Stern-Brocot tree to (a, b), gcd(a, b) = 1, a, b >= 1
    lo, hi = (0, 1), (1, 0)
    wlo, whi = (2,), (1,)
    while True:
        med = (lo[0] + hi[0], lo[1] + hi[1])
        wmed = reduce_word(whi + wlo)
        if med == (a, b):
            w = wmed
            break
        if a * med[1] - b * med[0] > 0:
            lo, wlo = med, wmed
        else:
            hi, whi = med, wmed
    if sgn < 0:
        w = tuple(-x if abs(x) == 1 else x for x in w)
    return reduce_word(w)


def _complete_primitive_rank2(w: Word) -> Word:
    """A word completing the primitive w to a basis of F_2."""
    phi = primitivity_witness(w, 2)
    if phi is None:
        raise ValueError("not primitive")
    inv_phi = phi.inverse()
    img = cyclic_word(phi(w))
    other = 2 if abs(img[0]) == 1 else 1
    # phi(w) is conjugate to a letter; conjugate the completion accordingly
    cand = inv_phi((other,))
    for g in _conjugators_to_letter(phi(w), img):
        c = mul(inv(g), cand, g)
        if is_basis((c, w), 2):
            return c
    # fallback: search short completions
    from .words import words_up_to

    for c in words_up_to(2, max(4, len(w) + 2)):
        if c and is_basis((c, w), 2):
            return c
    raise ValueError("no completion found")


def _conjugators_to_letter(w: Word, target: Word):
    """Conjugators g with g^-1 w g == target, for |target| = 1 (w ~ letter)."""
    # w = u t u^-1 with t the letter
    u = []
    ww = list(w)
    while len(ww) > 1:
        u.append(ww[0])
        ww = ww[1:-1]
    yield inv(tuple(u))
    yield tuple()


# -- oracles ------------------------------------------------------------------

@dataclass
class OracleAnswer:
    value: str  # "yes" | "no" | "unknown"
    witness: object = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.value == "yes"


@dataclass(frozen=True)
class OracleBounds:
    """Search bounds for the three-valued splitting oracles."""

    plateau_budget: int = 200
    conjugator_len: int = 2
    stable_mod: int = 1
    element_len: int = 8

    def as_dict(self) -> dict:
        return {
            "plateau_budget": self.plateau_budget,
            "conjugator_len": self.conjugator_len,
            "stable_mod": self.stable_mod,
            "element_len": self.element_len,
        }


DEFAULT_BOUNDS = OracleBounds()


def _chart_pair_from_autos(phi: Automorphism, letters1: set[int],
                           letters2: set[int], rank: int):
    """Witness chart for a pair minimized to roses on letter sets l1, l2."""
    inv_phi = phi.inverse()
    common = sorted(letters1 & letters2)
    only1 = sorted(letters1 - letters2)
    only2 = sorted(letters2 - letters1)
    order = only2 + only1 + common  # sphere1 dual to the only2 petal
    elements = tuple(inv_phi((l,)) for l in order)
    basis = Basis(elements)
    return basis, 0, 1  # indices of the petals dual to sphere1, sphere2


def disjoint(s1: Sphere, s2: Sphere,
             bounds: OracleBounds = DEFAULT_BOUNDS) -> OracleAnswer:
    """Can the two spheres be realized disjointly?

    Witnessed yes-answers carry either a common rose chart (connected
    complement) or a bounding-pair configuration.  "no" is exact in rank 2
    (Whitehead's algorithm for pairs of conjugacy classes) and
    plateau-certified otherwise.
    """
    if s1.key() == s2.key():
        raise ValueError("disjointness is about distinct spheres")
    if isinstance(s1, NonSepSphere) and isinstance(s2, NonSepSphere):
        return _disjoint_nonsep(s1, s2, bounds)
    if isinstance(s1, SepSphere) and isinstance(s2, NonSepSphere):
        return _disjoint_sep_nonsep(s1, s2, bounds)
    if isinstance(s2, SepSphere) and isinstance(s1, NonSepSphere):
        return _disjoint_sep_nonsep(s2, s1, bounds)
    return _disjoint_sep_sep(s1, s2, bounds)


def _disjoint_nonsep(s1: NonSepSphere, s2: NonSepSphere,
                     bounds: OracleBounds) -> OracleAnswer:
    rank = s1.rank
    if rank == 2:
        u = rank1_generator(s1.factor, 2)
        v = rank1_generator(s2.factor, 2)
        res = minimize_cyclic_tuple((u, v), 2, unordered=True, plateau_budget=1)
        state, phi = res.best()
        if res.complexity == 2 and abs(state[0][0]) != abs(state[1][0]):
            basis, i, j = _chart_pair_from_autos(
                phi, {abs(state[1][0])}, {abs(state[0][0])}, 2)
            return OracleAnswer("yes", witness=("chart", basis, i, j))
        return OracleAnswer("no", detail="pair minimum exceeds a basis pair")
    ans = _joint_chart(s1, s2, bounds)
    if ans.value == "yes":
        return ans
    bp = _bounding_pair_witness(s1, s2, bounds)
    if bp.value == "yes":
        return bp
    if ans.value == "no" and bp.value == "no":
        return OracleAnswer("no", detail="no chart and no bounding pair at bounds")
    return OracleAnswer("unknown", detail=f"bounds {bounds.as_dict()}")


def _joint_chart(s1: NonSepSphere, s2: NonSepSphere,
                 bounds: OracleBounds) -> OracleAnswer:
    """Common rose chart search: edge of the non-separating sphere graph."""
    rank = s1.rank
    g1 = s1.factor_subgroup().free_basis()
    g2 = s2.factor_subgroup().free_basis()
    res = minimize_subgroup_tuple((g1, g2), rank, unordered=False,
                                  plateau_budget=bounds.plateau_budget)
    if res.complexity == 2 * (rank - 1):
        for state, phi in zip(res.states, res.autos):
            gr1 = ConjSubgroup.from_words(state[0], rank).graph
            gr2 = ConjSubgroup.from_words(state[1], rank).graph
            if gr1.n_vertices != 1 or gr2.n_vertices != 1:
                continue
            l1 = {abs(l) for l, _ in gr1.adj[0]}
            l2 = {abs(l) for l, _ in gr2.adj[0]}
            if len(l1) == rank - 1 and len(l2) == rank - 1 and l1 != l2:
                basis, i, j = _chart_pair_from_autos(phi, l1, l2, rank)
                return OracleAnswer("yes", witness=("chart", basis, i, j))
        # minimum reached but only non-chart shapes
        if res.exhausted:
            return OracleAnswer("no", detail="minimum has no joint rose shape")
        return OracleAnswer("unknown")
    if res.exhausted:
        return OracleAnswer("no", detail="pair minimum exceeds a joint rose")
    return OracleAnswer("unknown")


def _short_words(rank: int, max_len: int) -> list[Word]:
    from .words import words_up_to

    return list(words_up_to(rank, max_len))


def _conjugator_of_words(w1: Word, w2: Word) -> Word | None:
    """g with g w2 g^-1 = w1, if the words are conjugate."""
    c1, c2 = cyclic_reduce_with_conj(w1), cyclic_reduce_with_conj(w2)
    (core1, u1), (core2, u2) = c1, c2
    if len(core1) != len(core2):
        return None
    for r in range(max(1, len(core2))):
        if core1 == core2[r:] + core2[:r]:
            t = core2[:r]
            return mul(u1, inv(t), inv(u2))
    return None


def cyclic_reduce_with_conj(w: Word) -> tuple[Word, Word]:
    """(core, u) with w = u core u^-1 and core cyclically reduced."""
    w = reduce_word(w)
    u: list[int] = []
    while len(w) >= 2 and w[0] == -w[-1]:
        u.append(w[0])
        w = w[1:-1]
    return w, tuple(u)


def _bounding_pair_witness(s1: NonSepSphere, s2: NonSepSphere,
                           bounds: OracleBounds) -> OracleAnswer:
    """Search for F = P * <k> * <s> with factors <P, k> and <P, s k s^-1>."""
    rank = s1.rank
    if rank == 2:
        return OracleAnswer("no", detail="no bounding pairs in rank 2")
    a1 = s1.factor_subgroup()
    key2 = s2.factor.key()
    conjugators = _short_words(rank, bounds.conjugator_len)
    a2_base = s2.factor_subgroup()
    for g in conjugators:
        a2 = a2_base.conjugate(g) if g else a2_base
        p_sub = pullback(a1, a2)
        if p_sub.subgroup_rank() != rank - 2:
            continue
        k1 = _complement_in(a1, p_sub)
        k2 = _complement_in(a2, p_sub)
        if k1 is None or k2 is None:
            continue
        base_conj = [s0 for s0 in (_conjugator_of_words(k2, k1),
                                   _conjugator_of_words(k2, inv(k1)))
                     if s0 is not None]
        cands = []
        for s0 in base_conj:
            for m in range(-bounds.stable_mod, bounds.stable_mod + 1):
                power = (k1 if m > 0 else inv(k1)) * abs(m)
                cands.append(mul(s0, power))
        p_gens = p_sub.free_basis()
        for s_ in cands:
            if not s_:
                continue
            if not is_basis(p_gens + (k1, s_), rank):
                continue
            built = ConjSubgroup.from_words(
                p_gens + (mul(s_, k1, inv(s_)),), rank)
            if built.key() == key2:
                return OracleAnswer(
                    "yes", witness=("bounding", p_gens, k1, s_),
                    detail="bounding pair")
    return OracleAnswer("unknown", detail="no bounding witness at bounds")


def _complement_in(big: Subgroup, small: Subgroup) -> Word | None:
    """k with big = small * <k>, when small has corank 1 in big (rank-1
    complements only: enough for desk scale)."""
    if big.subgroup_rank() - small.subgroup_rank() != 1:
        return None
    try:
        coords = [big.rewrite(w) for w in small.free_basis()]
    except ValueError:
        return None
    r = big.subgroup_rank()
    if small.subgroup_rank() == 0:
        if r != 1:
            return None
        return big.free_basis()[0]
    phi = free_factor_witness(tuple(coords), r)
    if phi is None:
        return None
    inv_phi = phi.inverse()
    used = set()
    for w in coords:
        used |= {abs(a) for a in phi(w)}
    free_letters = [i for i in range(1, r + 1) if i not in used]
    if len(free_letters) != 1:
        # small's image may use all letters; pick any letter not needed
        return None
    k_in = inv_phi((free_letters[0],))
    basis = big.free_basis()
    return reduce_word(tuple(itertools.chain.from_iterable(
        basis[abs(a) - 1] if a > 0 else inv(basis[abs(a) - 1]) for a in k_in)))


def nsg_edge(s1: NonSepSphere, s2: NonSepSphere,
             bounds: OracleBounds = DEFAULT_BOUNDS) -> OracleAnswer:
    """Edge of the non-separating sphere graph: disjoint with connected
    joint complement, i.e. a common rose chart exists."""
    if s1.key() == s2.key():
        raise ValueError("same sphere")
    rank = s1.rank
    if rank == 2:
        ans = _disjoint_nonsep(s1, s2, bounds)
        return ans
    ans = _joint_chart(s1, s2, bounds)
    if ans.value == "yes":
        return ans
    if ans.value == "no":
        return OracleAnswer("no", detail=ans.detail)
    return OracleAnswer("unknown", detail=ans.detail)


def _disjoint_sep_nonsep(sep: SepSphere, ns: NonSepSphere,
                         bounds: OracleBounds) -> OracleAnswer:
    """Witness: basis with sep = partition split and ns dual to a petal on
    one side; equivalently ns's factor contains one whole side."""
    rank = ns.rank
    g1, g2 = sep.parts
    gf = ns.factor_subgroup().free_basis()
    res = minimize_subgroup_tuple((g1, g2, gf), rank,
                                  plateau_budget=bounds.plateau_budget)
    target = None
    for state, phi in zip(res.states, res.autos):
        graphs = [ConjSubgroup.from_words(s, rank).graph for s in state]
        if any(g.n_vertices != 1 for g in graphs):
            continue
        l1 = {abs(l) for l, _ in graphs[0].adj[0]}
        l2 = {abs(l) for l, _ in graphs[1].adj[0]}
        lf = {abs(l) for l, _ in graphs[2].adj[0]}
        if l1 & l2:
            continue
        if l1 | l2 != set(range(1, rank + 1)):
            continue
        # ns factor = one side plus all but one of the other side
        for side, other in ((l1, l2), (l2, l1)):
            if side <= lf and len(other - lf) == 1 and lf <= l1 | l2:
                return OracleAnswer("yes", witness=("sep-chart", phi))
    if res.exhausted:
        return OracleAnswer("no", detail="no laminar chart shape at minimum")
    return OracleAnswer("unknown")


def _disjoint_sep_sep(s1: SepSphere, s2: SepSphere,
                      bounds: OracleBounds) -> OracleAnswer:
    """Laminar-chart search for two separating spheres."""
    rank = s1.rank
    g = list(s1.parts) + list(s2.parts)
    res = minimize_subgroup_tuple(tuple(g), rank,
                                  plateau_budget=bounds.plateau_budget)
    for state, phi in zip(res.states, res.autos):
        graphs = [ConjSubgroup.from_words(s, rank).graph for s in state]
        if any(gr.n_vertices != 1 for gr in graphs):
            continue
        sets = [{abs(l) for l, _ in gr.adj[0]} for gr in graphs]
        a1, a2, b1, b2 = sets
        if a1 & a2 or b1 & b2:
            continue
        if (a1 | a2) != set(range(1, rank + 1)) or (b1 | b2) != set(range(1, rank + 1)):
            continue
        # laminar: some side of one is contained in some side of the other
        if a1 <= b1 or a1 <= b2 or a2 <= b1 or a2 <= b2:
            return OracleAnswer("yes", witness=("laminar", phi))
    if res.exhausted:
        return OracleAnswer("no", detail="no laminar shape at minimum")
    return OracleAnswer("unknown")


# -- marked graphs ------------------------------------------------------------

class MarkedGraph:
    """Connected graph of trivial groups with a marking of rank n.

    ``edges`` is a tuple of (u, v) pairs; the marking assigns a word to each
    edge outside the chosen spanning tree and epsilon to tree edges, and the
    non-tree words must form a free basis (the marking isomorphism).
    """

    def __init__(self, n_vertices: int, edges: Sequence[tuple[int, int]],
                 marking: dict[int, Word], rank: int,
                 tree: set[int] | None = None, basepoint: int = 0):
        self.n_vertices = n_vertices
        self.edges = tuple((int(u), int(v)) for u, v in edges)
        self.rank = rank
        self.basepoint = basepoint
        self.tree = set(tree) if tree is not None else self._bfs_tree()
        self.marking = {e: reduce_word(w) for e, w in marking.items()}
        self._validate()

    # construction helpers
    @classmethod
    def rose(cls, basis: Basis) -> "MarkedGraph":
        n = basis.rank
        edges = [(0, 0)] * n
        marking = {i: basis.elements[i] for i in range(n)}
        return cls(1, edges, marking, n, tree=set())

    @classmethod
    def dumbbell(cls, side1: Sequence[Word], side2: Sequence[Word],
                 crossing: Word, rank: int) -> "MarkedGraph":
        """Two vertices, loops carrying side1 at 0 and (conjugated) side2 at
        1, a tree edge 0-1 and a second crossing edge marked by ``crossing``."""
        edges: list[tuple[int, int]] = [(0, 1), (0, 1)]
        marking: dict[int, Word] = {1: reduce_word(crossing)}
        for w in side1:
            edges.append((0, 0))
            marking[len(edges) - 1] = reduce_word(w)
        for w in side2:
            edges.append((1, 1))
            marking[len(edges) - 1] = reduce_word(w)
        return cls(2, edges, marking, rank, tree={0})

    def _bfs_tree(self) -> set[int]:
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(self.n_vertices)}
        for i, (u, v) in enumerate(self.edges):
            adj[u].append((i, v))
            adj[v].append((i, u))
        seen = {self.basepoint}
        tree: set[int] = set()
        frontier = [self.basepoint]
        while frontier:
            nxt = []
            for x in frontier:
                for i, y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        tree.add(i)
                        nxt.append(y)
            frontier = nxt
        if len(seen) != self.n_vertices:
            raise ValueError("graph is not connected")
        return tree

    def _validate(self):
        betti = len(self.edges) - self.n_vertices + 1
        if betti != self.rank:
            raise ValueError(f"first Betti number {betti} != rank {self.rank}")
        non_tree = [i for i in range(len(self.edges)) if i not in self.tree]
        if sorted(self.marking) != sorted(non_tree):
            raise ValueError("marking must cover exactly the non-tree edges")
        if not is_basis([self.marking[i] for i in non_tree], self.rank):
            raise ValueError("marking words do not form a basis")

    def non_tree_edges(self) -> list[int]:
        return [i for i in range(len(self.edges)) if i not in self.tree]

    def marking_automorphism(self) -> Automorphism:
        return Automorphism([self.marking[i] for i in self.non_tree_edges()])

    # tree paths as edge sequences
    def _tree_adj(self):
        adj: dict[int, list[tuple[int, int, int]]] = {v: [] for v in range(self.n_vertices)}
        for i in self.tree:
            u, v = self.edges[i]
            adj[u].append((i, 1, v))
            adj[v].append((i, -1, u))
        return adj

    def _tree_paths(self) -> dict[int, list[tuple[int, int]]]:
        adj = self._tree_adj()
        paths: dict[int, list[tuple[int, int]]] = {self.basepoint: []}
        frontier = [self.basepoint]
        while frontier:
            nxt = []
            for x in frontier:
                for i, d, y in adj[x]:
                    if y not in paths:
                        paths[y] = paths[x] + [(i, d)]
                        nxt.append(y)
            frontier = nxt
        return paths

    def edge_loop(self, e: int) -> list[tuple[int, int]]:
        """Based loop crossing the non-tree edge e once (as edge path)."""
        paths = self._tree_paths()
        u, v = self.edges[e]
        back = [(i, -d) for i, d in reversed(paths[v])]
        return paths[u] + [(e, 1)] + back

    def cyclic_edge_length(self, w: Sequence[int]) -> int:
        """Number of edges crossed by the free homotopy class of w realized
        in this marked graph (counts sphere intersections of the loop)."""
        mu = self.marking_automorphism()
        coords = mu.inverse()(reduce_word(w))
        loops = {j + 1: self.edge_loop(e) for j, e in enumerate(self.non_tree_edges())}
        path: list[tuple[int, int]] = []
        for a in coords:
            seg = loops[a] if a > 0 else [(i, -d) for i, d in reversed(loops[-a])]
            for step in seg:
                if path and path[-1] == (step[0], -step[1]):
                    path.pop()
                else:
                    path.append(step)
        # cyclic cancellation
        i, j = 0, len(path)
        while j - i >= 2 and path[i] == (path[j - 1][0], -path[j - 1][1]):
            i += 1
            j -= 1
        return j - i

    # splittings of edges
    def is_bridge(self, e: int) -> bool:
        adj: dict[int, list[int]] = {v: [] for v in range(self.n_vertices)}
        for i, (u, v) in enumerate(self.edges):
            if i == e:
                continue
            adj[u].append(v)
            adj[v].append(u)
        u0, v0 = self.edges[e]
        seen = {u0}
        frontier = [u0]
        while frontier:
            nxt = []
            for x in frontier:
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return v0 not in seen

    def remark_avoiding(self, e: int) -> "MarkedGraph":
        """Equivalent marked graph whose spanning tree avoids edge e."""
        if e not in self.tree:
            return self
        if self.is_bridge(e):
            raise ValueError("edge is a bridge; every tree contains it")
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(self.n_vertices)}
        for i, (u, v) in enumerate(self.edges):
            if i == e:
                continue
            adj[u].append((i, v))
            adj[v].append((i, u))
        seen = {self.basepoint}
        tree: set[int] = set()
        frontier = [self.basepoint]
        while frontier:
            nxt = []
            for x in frontier:
                for i, y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        tree.add(i)
                        nxt.append(y)
            frontier = nxt
        # recompute the marking: value of each new non-tree loop under the
        # old marking isomorphism
        mu = self.marking_automorphism()
        old_non_tree = self.non_tree_edges()
        symbol = {eid: j + 1 for j, eid in enumerate(old_non_tree)}
        paths = self._tree_paths()

        def loop_value(eid: int) -> Word:
            u, v = self.edges[eid]
            seq = paths[u] + [(eid, 1)] + [(i, -d) for i, d in reversed(paths[v])]
            out: list[int] = []
            for i, d in seq:
                if i in symbol:
                    out.append(d * symbol[i])
            return mu(reduce_word(out))

        new_non_tree = [i for i in range(len(self.edges)) if i not in tree]
        marking = {i: loop_value(i) for i in new_non_tree}
        return MarkedGraph(self.n_vertices, self.edges, marking, self.rank,
                           tree=tree, basepoint=self.basepoint)

    def edge_splitting(self, e: int) -> Sphere:
        """The one-edge splitting obtained by collapsing all edges but e."""
        if self.is_bridge(e):
            # two components of the complement: separating sphere
            comp = self._component_split(e)
            side1 = [self.marking[i] for i in self.non_tree_edges()
                     if comp[self.edges[i][0]] == 0]
            side2 = [self.marking[i] for i in self.non_tree_edges()
                     if comp[self.edges[i][0]] == 1]
            if not side1 or not side2:
                raise ValueError("inessential edge (trivial side)")
            return SepSphere((tuple(side1), tuple(side2)), self.rank)
        g = self.remark_avoiding(e)
        stable = g.marking[e]
        factor = tuple(g.marking[i] for i in g.non_tree_edges() if i != e)
        return NonSepSphere(
            ConjSubgroup.from_words(factor, self.rank), stable, self.rank)

    def _component_split(self, e: int) -> dict[int, int]:
        adj: dict[int, list[int]] = {v: [] for v in range(self.n_vertices)}
        for i, (u, v) in enumerate(self.edges):
            if i == e:
                continue
            adj[u].append(v)
            adj[v].append(u)
        u0, v0 = self.edges[e]
        comp = {}
        for cid, start in ((0, u0), (1, v0)):
            if start in comp:
                continue
            comp[start] = cid
            frontier = [start]
            while frontier:
                nxt = []
                for x in frontier:
                    for y in adj[x]:
                        if y not in comp:
                            comp[y] = cid
                            nxt.append(y)
                frontier = nxt
        return comp

    def spheres(self) -> list[Sphere]:
        return [self.edge_splitting(e) for e in range(len(self.edges))]

    def apply(self, phi: Automorphism) -> "MarkedGraph":
        marking = {e: phi(w) for e, w in self.marking.items()}
        return MarkedGraph(self.n_vertices, self.edges, marking, self.rank,
                           tree=set(self.tree), basepoint=self.basepoint)


def theta(system: MarkedGraph) -> Sphere:
    """Deterministic component choice: the edge splitting with least key."""
    if not system.edges:
        raise ValueError("edgeless graph")
    best = None
    for e in range(len(system.edges)):
        try:
            s = system.edge_splitting(e)
        except ValueError:
            continue
        if best is None or s.key() < best.key():
            best = s
    if best is None:
        raise ValueError("no essential edge")
    return best


# -- level-m free factor graph edges -----------------------------------------

def contains_rank_m_factor(h: Subgroup, m: int,
                           cutoff: int = 8) -> OracleAnswer:
    """Does h contain a rank-m free factor of the ambient group?

    Bounded search; for m = 1 a proper-power certificate makes "no" exact
    on rank-1 subgroups, otherwise exhaustion returns unknown.
    """
    rank = h.rank
    if m > h.subgroup_rank():
        return OracleAnswer("no", detail="rank too small")
    if m == 1:
        if h.subgroup_rank() == 1:
            gen = h.free_basis()[0]
            if is_primitive(gen, rank):
                return OracleAnswer("yes", witness=gen)
            return OracleAnswer("no", detail="powers of a non-primitive")
        for w in _subgroup_elements(h, cutoff):
            if is_primitive(w, rank):
                return OracleAnswer("yes", witness=w)
        return OracleAnswer("unknown", detail=f"no primitive up to length {cutoff}")
    gens = list(_subgroup_elements(h, max(4, cutoff // 2)))
    for combo in itertools.combinations(gens[: 3 * cutoff], m):
        k = Subgroup.from_words(combo, rank)
        if k.subgroup_rank() != m:
            continue
        if whitehead.is_free_factor(combo, rank) is True:
            return OracleAnswer("yes", witness=combo)
    return OracleAnswer("unknown", detail="subgroup search exhausted")


def _subgroup_elements(h: Subgroup, max_len: int):
    """Nontrivial elements of h of length <= max_len (graph loops)."""
    g = h.graph
    base = g.basepoint
    stack = [(base, ())]
    seen_words = set()
    while stack:
        v, w = stack.pop()
        if len(w) >= max_len:
            continue
        for l, z in g.adj[v]:
            if w and l == -w[-1]:
                continue
            nw = w + (l,)
            if z == base and nw not in seen_words:
                seen_words.add(nw)
                yield nw
            stack.append((z, nw))


def ffm_edge(a1: ConjSubgroup, a2: ConjSubgroup, m: int, rank: int,
             bounds: OracleBounds = DEFAULT_BOUNDS) -> OracleAnswer:
    """Edge of the level-m free factor graph between corank-1 classes."""
    if a1.key() == a2.key():
        raise ValueError("same vertex")
    if m > rank - 2:
        raise ValueError("level must be at most rank - 2")
    s1 = a1.pointed_at(0, rank)
    for g in _short_words(rank, bounds.conjugator_len):
        s2 = a2.pointed_at(0, rank).conjugate(g) if g else a2.pointed_at(0, rank)
        p = pullback(s1, s2)
        if p.subgroup_rank() < m:
            continue
        ans = contains_rank_m_factor(p, m, bounds.element_len)
        if ans.value == "yes":
            return OracleAnswer("yes", witness=(g, ans.witness))
    return OracleAnswer("unknown", detail="conjugator search exhausted")


def tau(s: NonSepSphere) -> ConjSubgroup:
    """Projection to the free factor graph: the complementary factor."""
    return s.factor


def corank_one_completion(k: ConjSubgroup, rank: int) -> ConjSubgroup:
    """A corank-1 free factor containing the given free factor class."""
    gens = k.pointed_at(0, rank).free_basis() if k.graph.n_vertices else ()
    phi = free_factor_witness(gens, rank)
    if phi is None:
        raise ValueError("not certified as a free factor")
    letters = sorted({abs(l) for row in ConjSubgroup.from_words(
        [phi(g) for g in gens], rank).graph.adj for l, _ in row})
    pad = [i for i in range(1, rank + 1) if i not in letters]
    target = letters + pad[: rank - 1 - len(letters)]
    inv_phi = phi.inverse()
    return ConjSubgroup.from_words([inv_phi((l,)) for l in sorted(target)], rank)


def conj_included(small: ConjSubgroup, big: ConjSubgroup, rank: int,
                  conj_len: int = 2) -> bool:
    """Is small contained in big up to conjugation (bounded search)?"""
    sg = small.pointed_at(0, rank).free_basis() if small.graph.n_vertices else ()
    bp = big.pointed_at(0, rank)
    for g in _short_words(rank, conj_len):
        b = bp.conjugate(g) if g else bp
        for h in _short_words(rank, conj_len):
            if all(b.contains(mul(h, w, inv(h))) for w in sg):
                return True
    return False


def ff1_shorten(path: Sequence[ConjSubgroup], rank: int) -> list[ConjSubgroup]:
    """Halve an alternating inclusion path in the free factor graph into a
    path of corank-1 factors (completing each even entry upward)."""
    if len(path) % 2 == 0:
        raise ValueError("alternating path must have odd length (2k+1 vertices)")
    out = [path[0]]
    for i in range(1, len(path) - 1, 2):
        mid = corank_one_completion(path[i], rank)
        out.append(mid)
    out.append(path[-1])
    return out


# -- path repairs --------------------------------------------------------------

def repair_bounding_pairs(path: Sequence[NonSepSphere],
                          bounds: OracleBounds = DEFAULT_BOUNDS
                          ) -> list[NonSepSphere]:
    """Replace each bounding-pair edge S_i, S_{i+1} by S_i, D, S_{i+1} with
    both new pairs joint-chart edges; output at most twice as long."""
    out: list[NonSepSphere] = [path[0]]
    for s1, s2 in zip(path, path[1:]):
        edge = nsg_edge(s1, s2, bounds)
        if edge.value == "yes":
            out.append(s2)
            continue
        bp = _bounding_pair_witness(s1, s2, bounds)
        if bp.value != "yes":
            raise ValueError("no insertion sphere found within bounds")
        _, p_gens, k1, s_ = bp.witness
        d = NonSepSphere.from_chart(
            SphereChart(Basis((k1,) + p_gens + (s_,)), 0))
        out.append(d)
        out.append(s2)
    return out


def repair_nonseparating(path: Sequence[Sphere],
                         bounds: OracleBounds = DEFAULT_BOUNDS) -> list[Sphere]:
    """Replace separating spheres on a path by non-separating ones in the
    complementary side, keeping length and endpoints."""
    out = list(path)
    for idx in range(1, len(out) - 1):
        s = out[idx]
        if not s.is_separating():
            continue
        repl = _nonsep_replacement(out[idx - 1], s, out[idx + 1], bounds)
        if repl is None:
            raise ValueError(f"no non-separating replacement at index {idx}")
        out[idx] = repl
    if out and out[0].is_separating() or out[-1].is_separating():
        raise ValueError("endpoints must be non-separating")
    return out


def _nonsep_replacement(prev: Sphere, sep: SepSphere, nxt: Sphere,
                        bounds: OracleBounds) -> NonSepSphere | None:
    rank = sep.rank
    candidates: list[NonSepSphere] = []
    for side, other in (sep.parts, sep.parts[::-1]):
        # non-separating spheres inside the `side` piece: factor = other
        # side's group joined with a corank-1 piece of `side`
        sub = Subgroup.from_words(side, rank)
        r = sub.subgroup_rank()
        if r == 0:
            continue
        basis = sub.free_basis()
        for drop in range(len(basis)):
            gens = tuple(b for j, b in enumerate(basis) if j != drop) + tuple(other)
            cand_words = gens
            if len(cand_words) != rank - 1:
                continue
            sub_c = Subgroup.from_words(cand_words, rank)
            if sub_c.subgroup_rank() != rank - 1:
                continue
            if not is_basis(cand_words + (basis[drop],), rank):
                continue
            chart = SphereChart(Basis((basis[drop],) + cand_words), 0)
            candidates.append(NonSepSphere.from_chart(chart))
    for cand in candidates:
        ok = True
        for nb in (prev, nxt):
            if nb.key() == cand.key():
                ok = False
                break
            if disjoint(cand, nb, bounds).value != "yes":
                ok = False
                break
        if ok:
            return cand
    return None
