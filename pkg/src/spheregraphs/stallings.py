"""Folded core graphs for finitely generated subgroups of free groups.

Folding optionally carries witness labels: every directed edge holds a word
in the abstract generator symbols of the subgroup, multiplicative along
paths.  Tracing a loop at the basepoint then rewrites the loop's label as a
product of the original generators, which gives constructive membership and
lets us solve automorphism inverses exactly (no search).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .words import Word, inv, mul, reduce_word

Letter = int  # signed, nonzero


def _letter_order(letter: int) -> tuple[int, int]:
    return (abs(letter), 0 if letter > 0 else 1)


class _Folder:
    """Worklist folding with union-by-relocation and witness transport."""

    def __init__(self, witness: bool):
        self.witness = witness
        self.out: dict[int, dict[int, tuple[int, Word | None]]] = {}
        self.reloc: dict[int, tuple[int, Word | None]] = {}
        self.pending: list[tuple[int, int, Word | None]] = []
        self.n = 0

    def new_vertex(self) -> int:
        v = self.n
        self.n += 1
        self.out[v] = {}
        return v

    def find(self, v: int) -> int:
        while v in self.reloc:
            v = self.reloc[v][0]
        return v

    def _resolve_keep(self, v: int, delta: Word | None):
        while v in self.reloc:
            p, d = self.reloc[v]
            if self.witness:
                delta = mul(d, delta)
            v = p
        return v, delta

    def _resolve_drop(self, v: int, delta: Word | None):
        while v in self.reloc:
            p, d = self.reloc[v]
            if self.witness:
                delta = mul(delta, inv(d))
            v = p
        return v, delta

    def add_edge(self, u: int, v: int, letter: int, val: Word | None = None):
        if letter < 0:
            u, v, letter = v, u, -letter
            if self.witness:
                val = inv(val)
        if self.witness and val is None:
            val = ()
        self._insert(self.find(u), letter, self.find(v), val)

    def _insert(self, u: int, letter: int, v: int, val: Word | None):
        ex = self.out[u].get(letter)
        if ex is not None:
            v0, val0 = ex
            if v0 == v:
                return  # parallel duplicate
            delta = mul(inv(val0), val) if self.witness else None
            self.pending.append((v0, v, delta))
            return
        ex = self.out[v].get(-letter)
        if ex is not None:
            u0, valr = ex
            if u0 == u:
                return
            delta = mul(inv(valr), inv(val)) if self.witness else None
            self.pending.append((u0, u, delta))
            return
        self.out[u][letter] = (v, val)
        self.out[v][-letter] = (u, inv(val) if self.witness else None)

    def run(self, basepoint: int | None = None):
        while self.pending:
            keep, drop, delta = self.pending.pop()
            keep, delta = self._resolve_keep(keep, delta)
            drop, delta = self._resolve_drop(drop, delta)
            if keep == drop:
                continue
            if basepoint is not None and self.find(basepoint) == drop:
                keep, drop = drop, keep
                if self.witness:
                    delta = inv(delta)
            self._merge(keep, drop, delta)

    def _merge(self, keep: int, drop: int, delta: Word | None):
        edges = self.out.pop(drop)
        self.reloc[drop] = (keep, delta)
        done: set[int] = set()
        for letter, (z, val) in list(edges.items()):
            if letter in done:
                continue
            if z == drop:
                done.add(-letter)
                nv = mul(delta, val, inv(delta)) if self.witness else None
                self._insert(keep, letter, keep, nv)
            else:
                del self.out[z][-letter]
                nv = mul(delta, val) if self.witness else None
                self._insert(keep, letter, z, nv)


@dataclass(frozen=True)
class CoreGraph:
    """Folded labeled graph; adjacency per vertex as ((letter, target), ...)."""

    n_vertices: int
    adj: tuple[tuple[tuple[int, int], ...], ...]
    basepoint: int | None = None

    def out(self, v: int, letter: int) -> int | None:
        for l, w in self.adj[v]:
            if l == letter:
                return w
        return None

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def n_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def rank(self) -> int:
        if self.n_vertices == 0:
            return 0
        return self.n_edges() - self.n_vertices + 1

    def trace(self, word: Sequence[int], start: int | None = None) -> int | None:
        v = self.basepoint if start is None else start
        if v is None:
            raise ValueError("no basepoint")
        for a in word:
            v = self.out(v, a)
            if v is None:
                return None
        return v

    def is_rose(self, rank: int | None = None) -> bool:
        if self.n_vertices != 1:
            return False
        letters = {abs(l) for l, _ in self.adj[0]}
        if rank is None:
            return len(self.adj[0]) == 2 * len(letters)
        return letters == set(range(1, rank + 1)) and len(self.adj[0]) == 2 * rank

    def edges(self) -> list[tuple[int, int, int]]:
        """Undirected edge list as (u, v, positive letter)."""
        out = []
        for u in range(self.n_vertices):
            for l, v in self.adj[u]:
                if l > 0:
                    out.append((u, v, l))
        return out

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "vertices": self.n_vertices,
            "edges": [[u, v, f"x{l}"] for u, v, l in self.edges()],
            "basepoint": self.basepoint,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CoreGraph":
        edges = []
        for u, v, lab in data["edges"]:
            if not lab.startswith("x"):
                raise ValueError(f"bad edge label {lab!r}")
            edges.append((u, v, int(lab[1:])))
        return build_graph(data["vertices"], edges, data.get("basepoint"))

    def bfs_serialization(self, start: int) -> tuple:
        """Deterministic BFS serialization from a start vertex.

        Folded graphs are deterministic automata, so the traversal and hence
        the serialization is a function of (graph, start) only.
        """
        number = {start: 0}
        order = [start]
        i = 0
        while i < len(order):
            v = order[i]
            i += 1
            for l, w in sorted(self.adj[v], key=lambda e: _letter_order(e[0])):
                if w not in number:
                    number[w] = len(order)
                    order.append(w)
        if len(order) != self.n_vertices:
            raise ValueError("graph is not connected")
        ser = []
        for v in order:
            row = tuple(
                sorted(
                    (l, number[w])
                    for l, w in self.adj[v]
                )
            )
            ser.append(row)
        return tuple(ser)

    def canonical_key(self) -> tuple:
        """Label-preserving canonical form of the (unbased) graph."""
        if self.n_vertices == 0:
            return ()
        return min(self.bfs_serialization(s) for s in range(self.n_vertices))

    def based_key(self) -> tuple:
        if self.basepoint is None:
            raise ValueError("no basepoint")
        return self.bfs_serialization(self.basepoint)


def build_graph(n_vertices: int, edges: Iterable[tuple[int, int, int]],
                basepoint: int | None = None) -> CoreGraph:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_vertices)]
    for u, v, l in edges:
        if l <= 0:
            raise ValueError("edge labels are positive generator indices")
        adj[u].append((l, v))
        adj[v].append((-l, u))
    return CoreGraph(n_vertices, tuple(tuple(a) for a in adj), basepoint)


class FoldResult:
    """Folded graph plus (optionally) witness data for member rewriting."""

    def __init__(self, graph: CoreGraph, values: dict[tuple[int, int], Word] | None):
        self.graph = graph
        self._values = values

    def express(self, word: Sequence[int]) -> Word:
        """Rewrite a member of the subgroup as a word in the generators fed
        to the fold (symbols 1..m).  Raises ValueError for non-members."""
        if self._values is None:
            raise ValueError("folded without witness tracking")
        g = self.graph
        v = g.basepoint
        acc: list[int] = []
        for a in reduce_word(word):
            w = g.out(v, a)
            if w is None:
                raise ValueError("word is not in the subgroup")
            acc.extend(self._values[(v, a)])
            v = w
        if v != g.basepoint:
            raise ValueError("word is not in the subgroup")
        return reduce_word(acc)


def _strip_to_core(folder: _Folder, basepoint: int | None):
    """Iteratively delete valence-<=1 vertices (basepoint excepted)."""
    base = None if basepoint is None else folder.find(basepoint)
    alive = dict(folder.out)
    changed = True
    while changed:
        changed = False
        for v in list(alive):
            if v == base:
                continue
            if len(alive[v]) <= 1:
                for l, (z, _val) in list(alive[v].items()):
                    if z != v and z in alive:
                        del alive[z][-l]
                del alive[v]
                changed = True
    return alive, base


def fold_words(words: Sequence[Sequence[int]], *, witness: bool = False,
               keep_base: bool = True) -> FoldResult:
    """Fold the wedge of loops spelling the given words.

    With ``witness=True`` the result can rewrite members in terms of the
    input words (symbol i stands for words[i-1]).
    """
    f = _Folder(witness)
    base = f.new_vertex()
    for i, w in enumerate(words):
        w = reduce_word(w)
        if not w:
            continue
        prev = base
        for j, a in enumerate(w):
            nxt = base if j == len(w) - 1 else f.new_vertex()
            val = ((i + 1,) if j == 0 else ()) if witness else None
            f.add_edge(prev, nxt, a, val)
            prev = nxt
        f.run(base if keep_base else None)
    f.run(base if keep_base else None)
    alive, bp = _strip_to_core(f, base if keep_base else None)
    if keep_base and bp not in alive:
        alive[bp] = {}
    index = {v: i for i, v in enumerate(sorted(alive))}
    adj: list[list[tuple[int, int]]] = [[] for _ in alive]
    values: dict[tuple[int, int], Word] | None = {} if witness else None
    for v, nbrs in alive.items():
        for l, (z, val) in nbrs.items():
            if z not in index:
                continue
            adj[index[v]].append((l, index[z]))
            if witness:
                values[(index[v], l)] = val
    graph = CoreGraph(len(alive), tuple(tuple(sorted(a)) for a in adj),
                      index[bp] if keep_base else None)
    return FoldResult(graph, values)


def is_basis(words: Sequence[Sequence[int]], rank: int) -> bool:
    """True iff the given rank-many words freely generate F_rank."""
    if len(words) != rank:
        return False
    if any(not reduce_word(w) for w in words):
        return False
    g = fold_words(words).graph
    return g.is_rose(rank)


def invert_images(images: Sequence[Sequence[int]], rank: int) -> tuple[Word, ...]:
    """Images of the inverse of the automorphism x_i -> images[i-1]."""
    res = fold_words(images, witness=True)
    if not res.graph.is_rose(rank):
        raise ValueError("images do not form a basis")
    return tuple(res.express((i,)) for i in range(1, rank + 1))


# -- subgroups ---------------------------------------------------------------

class Subgroup:
    """Finitely generated subgroup of F_rank as a based folded core graph."""

    def __init__(self, graph: CoreGraph, rank: int,
                 generators: tuple[Word, ...] | None = None):
        if graph.basepoint is None:
            raise ValueError("subgroup graphs need a basepoint")
        self.graph = graph
        self.rank = rank
        self._gens = generators
        self._tree: tuple[tuple[Word, ...], dict] | None = None

    @classmethod
    def from_words(cls, words: Sequence[Sequence[int]], rank: int) -> "Subgroup":
        ws = tuple(reduce_word(w) for w in words)
        return cls(fold_words(ws).graph, rank, ws)

    def subgroup_rank(self) -> int:
        return self.graph.rank()

    def contains(self, word: Sequence[int]) -> bool:
        return self.graph.trace(reduce_word(word)) == self.graph.basepoint

    def _tree_data(self):
        """BFS spanning tree: (basis words, non-tree edge index map)."""
        if self._tree is not None:
            return self._tree
        g = self.graph
        base = g.basepoint
        parent: dict[int, tuple[int, int]] = {}
        order = [base]
        seen = {base}
        i = 0
        while i < len(order):
            v = order[i]
            i += 1
            for l, w in sorted(g.adj[v], key=lambda e: _letter_order(e[0])):
                if w not in seen:
                    seen.add(w)
                    parent[w] = (v, l)
                    order.append(w)
        paths: dict[int, Word] = {base: ()}
        for v in order[1:]:
            u, l = parent[v]
            paths[v] = paths[u] + (l,)
        tree_edges = {(parent[v][0], parent[v][1], v) for v in parent}
        tree_edges |= {(v, -l, u) for u, l, v in tree_edges}
        basis: list[Word] = []
        symbol: dict[tuple[int, int], int] = {}
        for u in range(g.n_vertices):
            for l, v in sorted(g.adj[u], key=lambda e: _letter_order(e[0])):
                if (u, l, v) in tree_edges or (u, l) in symbol:
                    continue
                if (v, -l) in symbol:
                    symbol[(u, l)] = -symbol[(v, -l)]
                    continue
                basis.append(reduce_word(paths[u] + (l,) + inv(paths[v])))
                symbol[(u, l)] = len(basis)
                symbol[(v, -l)] = -len(basis)
        self._tree = (tuple(basis), symbol)
        return self._tree

    def free_basis(self) -> tuple[Word, ...]:
        """A free basis of the subgroup (spanning-tree generators)."""
        return self._tree_data()[0]

    def rewrite(self, word: Sequence[int]) -> Word:
        """Coordinates of a member in the spanning-tree basis (ValueError if
        the word is not a member)."""
        basis, symbol = self._tree_data()
        g = self.graph
        v = g.basepoint
        out: list[int] = []
        for a in reduce_word(word):
            w = g.out(v, a)
            if w is None:
                raise ValueError("not a member")
            s = symbol.get((v, a))
            if s is not None:
                out.append(s)
            v = w
        if v != g.basepoint:
            raise ValueError("not a member")
        return reduce_word(out)

    def key(self) -> tuple:
        return self.graph.based_key()

    def conjugacy(self) -> "ConjSubgroup":
        return ConjSubgroup.from_subgroup(self)

    def conjugate(self, g: Sequence[int]) -> "Subgroup":
        gens = self.free_basis() if self._gens is None else self._gens
        return Subgroup.from_words([mul(g, w, inv(g)) for w in gens], self.rank)

    def index_like_size(self) -> int:
        return self.graph.n_edges()


class ConjSubgroup:
    """Conjugacy class of a subgroup: basepoint-free core graph, canonical."""

    def __init__(self, graph: CoreGraph):
        self.graph = graph
        self._key: tuple | None = None

    @classmethod
    def from_words(cls, words: Sequence[Sequence[int]], rank: int) -> "ConjSubgroup":
        return cls.from_subgroup(Subgroup.from_words(words, rank))

    @classmethod
    def from_subgroup(cls, sub: Subgroup) -> "ConjSubgroup":
        g = sub.graph
        # strip the basepoint stem
        alive = {v: dict(g.adj[v]) for v in range(g.n_vertices)}
        for v in alive:
            alive[v] = {l: w for l, w in g.adj[v]}
        changed = True
        while changed:
            changed = False
            for v in list(alive):
                if len(alive[v]) <= 1:
                    for l, z in list(alive[v].items()):
                        if z != v and z in alive:
                            del alive[z][-l]
                    del alive[v]
                    changed = True
        index = {v: i for i, v in enumerate(sorted(alive))}
        adj: list[list[tuple[int, int]]] = [[] for _ in alive]
        for v, nbrs in alive.items():
            for l, z in nbrs.items():
                adj[index[v]].append((l, index[z]))
        return cls(CoreGraph(len(alive), tuple(tuple(sorted(a)) for a in adj), None))

    def key(self) -> tuple:
        if self._key is None:
            self._key = self.graph.canonical_key()
        return self._key

    def subgroup_rank(self) -> int:
        return self.graph.rank()

    def __eq__(self, other) -> bool:
        return isinstance(other, ConjSubgroup) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def pointed_at(self, vertex: int, rank: int) -> Subgroup:
        """A concrete representative subgroup based at the given vertex."""
        g = CoreGraph(self.graph.n_vertices, self.graph.adj, vertex)
        return Subgroup(g, rank)


def pullback(h: Subgroup, k: Subgroup) -> Subgroup:
    """Basepoint component of the fiber product: the intersection of h, k."""
    gh, gk = h.graph, k.graph
    start = (gh.basepoint, gk.basepoint)
    seen = {start}
    order = [start]
    edges = []
    i = 0
    while i < len(order):
        (u1, u2) = order[i]
        i += 1
        for l, v1 in gh.adj[u1]:
            v2 = gk.out(u2, l)
            if v2 is None:
                continue
            if l > 0:
                edges.append(((u1, u2), (v1, v2), l))
            t = (v1, v2)
            if t not in seen:
                seen.add(t)
                order.append(t)
    index = {p: i for i, p in enumerate(order)}
    f = _Folder(witness=False)
    for _ in order:
        f.new_vertex()
    for (p, q, l) in edges:
        f.add_edge(index[p], index[q], l)
    f.run(index[start])
    alive, bp = _strip_to_core(f, index[start])
    if bp not in alive:
        alive[bp] = {}
    ridx = {v: i for i, v in enumerate(sorted(alive))}
    adj: list[list[tuple[int, int]]] = [[] for _ in alive]
    for v, nbrs in alive.items():
        for l, (z, _val) in nbrs.items():
            if z in ridx:
                adj[ridx[v]].append((l, ridx[z]))
    g = CoreGraph(len(alive), tuple(tuple(sorted(a)) for a in adj), ridx[bp])
    return Subgroup(g, h.rank)


def pullback_components(h: Subgroup, k: Subgroup) -> list[ConjSubgroup]:
    """All non-trivial components of the fiber product (conjugacy classes of
    the intersections of h with conjugates of k)."""
    gh, gk = h.graph, k.graph
    comps: list[ConjSubgroup] = []
    seen: set[tuple[int, int]] = set()
    for s1 in range(gh.n_vertices):
        for s2 in range(gk.n_vertices):
            if (s1, s2) in seen:
                continue
            order = [(s1, s2)]
            comp_seen = {(s1, s2)}
            edges = []
            i = 0
            while i < len(order):
                (u1, u2) = order[i]
                i += 1
                for l, v1 in gh.adj[u1]:
                    v2 = gk.out(u2, l)
                    if v2 is None:
                        continue
                    if l > 0:
                        edges.append(((u1, u2), (v1, v2), l))
                    t = (v1, v2)
                    if t not in comp_seen:
                        comp_seen.add(t)
                        order.append(t)
            seen |= comp_seen
            index = {p: i for i, p in enumerate(order)}
            f = _Folder(witness=False)
            for _ in order:
                f.new_vertex()
            for (p, q, l) in edges:
                f.add_edge(index[p], index[q], l)
            f.run(None)
            alive, _ = _strip_to_core(f, None)
            if not alive:
                continue
            ridx = {v: i for i, v in enumerate(sorted(alive))}
            adj: list[list[tuple[int, int]]] = [[] for _ in alive]
            for v, nbrs in alive.items():
                for l, (z, _val) in nbrs.items():
                    if z in ridx:
                        adj[ridx[v]].append((l, ridx[z]))
            g = CoreGraph(len(alive), tuple(tuple(sorted(a)) for a in adj), None)
            if g.n_edges() > 0:
                comps.append(ConjSubgroup(g))
    # deduplicate by canonical key
    uniq: dict[tuple, ConjSubgroup] = {}
    for c in comps:
        uniq.setdefault(c.key(), c)
    return list(uniq.values())


def membership(h: Subgroup, word: Sequence[int]) -> bool:
    return h.contains(word)
