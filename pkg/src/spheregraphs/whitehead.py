"""Whitehead moves and greedy-plus-plateau minimization.

One engine drives several oracles: primitivity and conjugacy canonical forms
for cyclic words (where greedy descent provably reaches the orbit minimum),
free-factor detection for subgroups (greedy + plateau search; global
minimality for graphs is an assumption, flagged where used), and joint
minimization of pairs for disjointness witnesses.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

from .stallings import ConjSubgroup, CoreGraph, Subgroup, fold_words
from .words import (
    Automorphism,
    Word,
    cyclic_len,
    cyclic_word,
    reduce_word,
)


@lru_cache(maxsize=None)
def whitehead_moves(rank: int) -> tuple[Automorphism, ...]:
    """Nontrivial Whitehead automorphisms of the second kind.

    For a multiplier letter v and a cut set Y (with v in Y, -v not in Y):
    x maps to v^-1 x for -x in Y, to x v for x in Y, v maps to v.  Empty and
    full cut sets (identity / inner) are omitted.
    """
    moves = []
    letters = [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)]
    for v in letters:
        others = [a for a in letters if abs(a) != abs(v)]
        m = len(others)
        for mask in range(1, 2 ** m - 1):
            y = {others[i] for i in range(m) if mask >> i & 1}
            images = []
            for x in range(1, rank + 1):
                if x == abs(v):
                    images.append((x,))
                    continue
                img: list[int] = []
                if -x in y:
                    img.append(-v)
                img.append(x)
                if x in y:
                    img.append(v)
                images.append(reduce_word(img))
            moves.append(Automorphism(tuple(images)))
    # deduplicate (different (Y, v) data can give equal maps)
    uniq: dict[tuple, Automorphism] = {}
    for m_ in moves:
        uniq.setdefault(m_.images, m_)
    uniq.pop(tuple((i,) for i in range(1, rank + 1)), None)
    return tuple(uniq.values())


@lru_cache(maxsize=None)
def signed_perms(rank: int) -> tuple[dict[int, int], ...]:
    """All letter maps induced by permuting and inverting generators."""
    out = []
    for perm in itertools.permutations(range(1, rank + 1)):
        for signs in itertools.product((1, -1), repeat=rank):
            m: dict[int, int] = {}
            for a in range(1, rank + 1):
                m[a] = signs[a - 1] * perm[a - 1]
                m[-a] = -m[a]
            out.append(m)
    return tuple(out)


def relabel_word(w: Sequence[int], m: dict[int, int]) -> Word:
    return tuple(m[a] for a in w)


def relabel_graph(g: CoreGraph, m: dict[int, int]) -> CoreGraph:
    adj = tuple(
        tuple(sorted((m[l], v) for l, v in row)) for row in g.adj
    )
    return CoreGraph(g.n_vertices, adj, g.basepoint)


@dataclass
class MinimizationResult:
    complexity: int
    states: list[tuple]
    autos: list[Automorphism]
    exhausted: bool

    def best(self) -> tuple[tuple, Automorphism]:
        return self.states[0], self.autos[0]


def _minimize(start: tuple, rank: int,
              complexity: Callable[[tuple], int],
              apply_auto: Callable[[Automorphism, tuple], tuple],
              canon: Callable[[tuple], tuple],
              plateau_budget: int) -> MinimizationResult:
    moves = whitehead_moves(rank)
    ident = Automorphism.identity(rank)
    cur_states: dict[tuple, tuple] = {canon(start): start}
    cur_autos: dict[tuple, Automorphism] = {canon(start): ident}
    best = complexity(start)
    while True:
        frontier = list(cur_states)
        visited = set(cur_states)
        improved = False
        i = 0
        while i < len(frontier):
            ck = frontier[i]
            i += 1
            state = cur_states[ck]
            phi = cur_autos[ck]
            for m in moves:
                t = apply_auto(m, state)
                c = complexity(t)
                if c < best:
                    best = c
                    tk = canon(t)
                    cur_states = {tk: t}
                    cur_autos = {tk: m.compose(phi)}
                    improved = True
                    break
                if c == best:
                    tk = canon(t)
                    if tk not in visited and len(visited) < plateau_budget:
                        visited.add(tk)
                        cur_states[tk] = t
                        cur_autos[tk] = m.compose(phi)
                        frontier.append(tk)
            if improved:
                break
        if improved:
            continue
        exhausted = len(visited) < plateau_budget
        keys = sorted(cur_states)
        return MinimizationResult(
            best,
            [cur_states[k] for k in keys],
            [cur_autos[k] for k in keys],
            exhausted,
        )


# -- cyclic words ------------------------------------------------------------

def _canon_cyclic_tuple(state: tuple, rank: int, unordered: bool) -> tuple:
    best = None
    for m in signed_perms(rank):
        t = tuple(cyclic_word(relabel_word(w, m)) for w in state)
        if unordered:
            t = tuple(sorted(t))
        if best is None or t < best:
            best = t
    return best


def minimize_cyclic_tuple(words: Sequence[Sequence[int]], rank: int, *,
                          unordered: bool = False,
                          plateau_budget: int = 400) -> MinimizationResult:
    """Joint Whitehead minimization of a tuple of conjugacy classes.

    Greedy descent provably reaches the orbit minimum for tuples of cyclic
    words, so ``complexity`` of the result is exact regardless of the
    plateau budget.
    """
    start = tuple(cyclic_word(w) for w in words)
    return _minimize(
        start,
        rank,
        complexity=lambda s: sum(len(w) for w in s),
        apply_auto=lambda m, s: tuple(cyclic_word(m(w)) for w in s),
        canon=lambda s: _canon_cyclic_tuple(s, rank, unordered),
        plateau_budget=plateau_budget,
    )


def minimize_cyclic_word(w: Sequence[int], rank: int,
                         plateau_budget: int = 400) -> MinimizationResult:
    return minimize_cyclic_tuple((w,), rank, plateau_budget=plateau_budget)


def is_primitive(w: Sequence[int], rank: int) -> bool:
    """True iff w is part of some free basis (Whitehead descent to length 1)."""
    w = reduce_word(w)
    if not w:
        raise ValueError("the trivial word is not primitive")
    if len(cyclic_word(w)) == 1:
        return True
    return minimize_cyclic_word(w, rank, plateau_budget=1).complexity == 1


def primitivity_witness(w: Sequence[int], rank: int) -> Automorphism | None:
    """An automorphism phi with phi(w) conjugate to a single letter, if any."""
    res = minimize_cyclic_word(w, rank, plateau_budget=1)
    if res.complexity != 1:
        return None
    return res.autos[0]


# -- subgroups ---------------------------------------------------------------

class _GraphCache:
    def __init__(self, rank: int):
        self.rank = rank
        self.cache: dict[tuple, CoreGraph] = {}

    def graph(self, gens: tuple[Word, ...]) -> CoreGraph:
        g = self.cache.get(gens)
        if g is None:
            g = ConjSubgroup.from_words(gens, self.rank).graph
            self.cache[gens] = g
        return g


def _canon_graph_tuple(state: tuple, rank: int, cache: _GraphCache,
                       unordered: bool) -> tuple:
    graphs = [cache.graph(gens) for gens in state]
    best = None
    for m in signed_perms(rank):
        t = tuple(relabel_graph(g, m).canonical_key() for g in graphs)
        if unordered:
            t = tuple(sorted(t))
        if best is None or t < best:
            best = t
    return best


def minimize_subgroup_tuple(gen_tuples: Sequence[Sequence[Sequence[int]]],
                            rank: int, *, unordered: bool = False,
                            plateau_budget: int = 200) -> MinimizationResult:
    """Joint Whitehead minimization of conjugacy classes of subgroups.

    Complexity is the total edge count of the folded basepoint-free core
    graphs.  Global minimality of the closed plateau is an assumption for
    graphs (unlike the cyclic-word case); callers treat non-witnessed
    negative answers accordingly.
    """
    cache = _GraphCache(rank)
    start = tuple(tuple(reduce_word(w) for w in gens) for gens in gen_tuples)

    def complexity(state: tuple) -> int:
        return sum(cache.graph(g).n_edges() for g in state)

    def apply_auto(m: Automorphism, state: tuple) -> tuple:
        return tuple(tuple(m(w) for w in gens) for gens in state)

    return _minimize(
        start,
        rank,
        complexity=complexity,
        apply_auto=apply_auto,
        canon=lambda s: _canon_graph_tuple(s, rank, cache, unordered),
        plateau_budget=plateau_budget,
    )


def whitehead_minimize_subgroup(gens: Sequence[Sequence[int]], rank: int,
                                plateau_budget: int = 200) -> MinimizationResult:
    return minimize_subgroup_tuple((gens,), rank, plateau_budget=plateau_budget)


def is_free_factor(gens: Sequence[Sequence[int]], rank: int,
                   plateau_budget: int = 200) -> bool | None:
    """Is the subgroup generated by gens a free factor of F_rank?

    Yes-answers carry an implicit certificate (descent reached a rose
    subgraph, the absolute minimum).  No-answers rely on the closed plateau
    being a global minimum; None means the search budget was exhausted.
    """
    res = whitehead_minimize_subgroup(gens, rank, plateau_budget)
    cache = _GraphCache(rank)
    for state in res.states:
        g = cache.graph(state[0])
        if g.n_vertices == 1:
            return True
    if res.exhausted:
        return False
    return None


def free_factor_witness(gens: Sequence[Sequence[int]], rank: int,
                        plateau_budget: int = 200) -> Automorphism | None:
    """phi carrying the subgroup to a standard-letter rose, if found."""
    res = whitehead_minimize_subgroup(gens, rank, plateau_budget)
    cache = _GraphCache(rank)
    for state, phi in zip(res.states, res.autos):
        if cache.graph(state[0]).n_vertices == 1:
            return phi
    return None


def whitehead_minimize(obj, rank: int, plateau_budget: int = 200):
    """Spec-level entry point: minimize a cyclic word or a ConjSubgroup.

    Returns (minimal object, automorphism certificate).
    """
    if isinstance(obj, ConjSubgroup):
        gens = Subgroup(
            CoreGraph(obj.graph.n_vertices, obj.graph.adj, 0), rank
        ).free_basis() if obj.graph.n_vertices else ()
        res = minimize_subgroup_tuple((gens,), rank, plateau_budget=plateau_budget)
        state, phi = res.best()
        return ConjSubgroup.from_words(state[0], rank), phi
    res = minimize_cyclic_word(tuple(obj), rank, plateau_budget=plateau_budget)
    state, phi = res.best()
    return state[0], phi
