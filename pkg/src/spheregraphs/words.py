"""Reduced words, bases, Nielsen moves and automorphisms of a free group.

Letters are nonzero integers: ``i`` (1-based) is the i-th generator, ``-i``
its inverse.  A word is a freely reduced tuple of letters.  Serialization
uses lowercase for positive letters and uppercase for inverses, so the word
``(1, -2)`` prints as ``"x1 X2"``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

Word = tuple[int, ...]

EPSILON: Word = ()


def reduce_word(letters: Iterable[int]) -> Word:
    """Freely reduce a letter sequence (stack cancellation)."""
    out: list[int] = []
    for a in letters:
        if a == 0:
            raise ValueError("letter 0 is not a generator")
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def mul(*ws: Iterable[int]) -> Word:
    return reduce_word(itertools.chain(*ws))


def inv(w: Sequence[int]) -> Word:
    return tuple(-a for a in reversed(w))


def conj(g: Sequence[int], w: Sequence[int]) -> Word:
    """g w g^-1, reduced."""
    return mul(g, w, inv(g))


def cyclic_reduce(w: Sequence[int]) -> Word:
    w = reduce_word(w)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == -w[j - 1]:
        i += 1
        j -= 1
    return tuple(w[i:j])


def cyclic_word(w: Sequence[int]) -> Word:
    """Canonical conjugacy-class representative.

    Lexicographically least rotation of the cyclically reduced core.
    """
    c = cyclic_reduce(w)
    if not c:
        return ()
    return min(c[r:] + c[:r] for r in range(len(c)))


def cyclic_len(w: Sequence[int]) -> int:
    return len(cyclic_reduce(w))


def max_index(w: Sequence[int]) -> int:
    return max((abs(a) for a in w), default=0)


def check_rank(w: Sequence[int], rank: int) -> None:
    if max_index(w) > rank:
        raise ValueError(f"word {w!r} uses generators beyond rank {rank}")


# -- serialization ---------------------------------------------------------

def format_word(w: Sequence[int]) -> str:
    parts = []
    for a in w:
        parts.append(f"x{a}" if a > 0 else f"X{-a}")
    return " ".join(parts)


def parse_word(s: str) -> Word:
    letters = []
    for tok in s.split():
        if len(tok) < 2 or tok[0] not in "xX" or not tok[1:].isdigit():
            raise ValueError(f"bad letter token {tok!r}")
        i = int(tok[1:])
        if i == 0:
            raise ValueError("generator indices are 1-based")
        letters.append(i if tok[0] == "x" else -i)
    return reduce_word(letters)


# -- Nielsen moves ---------------------------------------------------------

@dataclass(frozen=True)
class NielsenMove:
    """Elementary move on an ordered basis.

    kind ``"right"``: b_i <- b_i * b_j^sign; ``"left"``: b_i <- b_j^sign * b_i;
    ``"inv"``: b_i <- b_i^-1; ``"swap"``: exchange b_i, b_j.
    """

    kind: str
    i: int
    j: int = 0
    sign: int = 1

    def apply(self, elts: Sequence[Word]) -> tuple[Word, ...]:
        out = list(elts)
        i = self.i
        if self.kind == "inv":
            out[i] = inv(out[i])
        elif self.kind == "swap":
            out[i], out[self.j] = out[self.j], out[i]
        elif self.kind == "right":
            t = out[self.j] if self.sign > 0 else inv(out[self.j])
            out[i] = mul(out[i], t)
        elif self.kind == "left":
            t = out[self.j] if self.sign > 0 else inv(out[self.j])
            out[i] = mul(t, out[i])
        else:
            raise ValueError(f"unknown move kind {self.kind!r}")
        return tuple(out)

    def inverse(self) -> "NielsenMove":
        if self.kind in ("inv", "swap"):
            return self
        return NielsenMove(self.kind, self.i, self.j, -self.sign)

    def is_twist(self) -> bool:
        return self.kind in ("left", "right")


def nielsen_moves(rank: int) -> list[NielsenMove]:
    """All elementary moves on a rank-n basis (fixed enumeration order)."""
    moves: list[NielsenMove] = []
    for i in range(rank):
        for j in range(rank):
            if i == j:
                continue
            for sign in (1, -1):
                moves.append(NielsenMove("right", i, j, sign))
                moves.append(NielsenMove("left", i, j, sign))
    moves.extend(NielsenMove("inv", i) for i in range(rank))
    moves.extend(
        NielsenMove("swap", i, j)
        for i in range(rank)
        for j in range(i + 1, rank)
    )
    return moves


# -- bases and automorphisms ------------------------------------------------

def standard_basis(rank: int) -> tuple[Word, ...]:
    return tuple((i,) for i in range(1, rank + 1))


@dataclass(frozen=True)
class Basis:
    """Ordered free basis of F_n, optionally with Nielsen-move provenance."""

    elements: tuple[Word, ...]
    provenance: tuple[NielsenMove, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(tuple(w) for w in self.elements))

    @property
    def rank(self) -> int:
        return len(self.elements)

    def validate(self) -> None:
        """Raise unless the elements form a basis (folds to the full rose)."""
        from . import stallings

        if not stallings.is_basis(self.elements, self.rank):
            raise ValueError(f"{self.elements!r} is not a basis")

    def apply_move(self, move: NielsenMove) -> "Basis":
        prov = None
        if self.provenance is not None:
            prov = self.provenance + (move,)
        return Basis(move.apply(self.elements), prov)

    def automorphism(self) -> "Automorphism":
        return Automorphism(self.elements)

    def total_length(self) -> int:
        return sum(len(w) for w in self.elements)

    def to_json(self) -> list[str]:
        return [format_word(w) for w in self.elements]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> "Basis":
        return cls(tuple(parse_word(s) for s in data))

    @classmethod
    def standard(cls, rank: int) -> "Basis":
        return cls(standard_basis(rank), provenance=())


def nielsen_neighbors(basis: Basis) -> set[Basis]:
    """All bases one Nielsen move away (as ordered tuples, deduplicated)."""
    seen: dict[tuple[Word, ...], Basis] = {}
    for move in nielsen_moves(basis.rank):
        nb = basis.apply_move(move)
        seen.setdefault(nb.elements, nb)
    return set(seen.values())


class Automorphism:
    """Automorphism of F_n given by the images of the standard generators."""

    __slots__ = ("images", "rank", "_inverse")

    def __init__(self, images: Sequence[Sequence[int]]):
        self.images: tuple[Word, ...] = tuple(reduce_word(w) for w in images)
        self.rank = len(self.images)
        for w in self.images:
            check_rank(w, self.rank)
        self._inverse: "Automorphism | None" = None

    def __call__(self, w: Sequence[int]) -> Word:
        check_rank(w, self.rank)
        parts: list[int] = []
        for a in w:
            img = self.images[a - 1] if a > 0 else inv(self.images[-a - 1])
            parts.extend(img)
        return reduce_word(parts)

    def __eq__(self, other) -> bool:
        return isinstance(other, Automorphism) and self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)

    def __repr__(self) -> str:
        return f"Automorphism({[format_word(w) for w in self.images]})"

    def is_identity(self) -> bool:
        return self.images == standard_basis(self.rank)

    def compose(self, other: "Automorphism") -> "Automorphism":
        """self after other: (self.compose(other))(w) == self(other(w))."""
        if self.rank != other.rank:
            raise ValueError("rank mismatch")
        return Automorphism(tuple(self(w) for w in other.images))

    def inverse(self) -> "Automorphism":
        """Solve the images of the inverse by folding with witness labels."""
        if self._inverse is None:
            from . import stallings

            inv_images = stallings.invert_images(self.images, self.rank)
            self._inverse = Automorphism(inv_images)
            self._inverse._inverse = self
        return self._inverse

    def apply_to_basis(self, basis: Basis) -> Basis:
        return Basis(tuple(self(w) for w in basis.elements))

    def to_json(self) -> list[str]:
        return [format_word(w) for w in self.images]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> "Automorphism":
        return cls(tuple(parse_word(s) for s in data))

    @classmethod
    def identity(cls, rank: int) -> "Automorphism":
        return cls(standard_basis(rank))

    @classmethod
    def from_moves(cls, rank: int, moves: Iterable[NielsenMove]) -> "Automorphism":
        elts = standard_basis(rank)
        for m in moves:
            elts = m.apply(elts)
        return cls(elts)


def automorphism_from_basis(basis: Basis) -> Automorphism:
    """The automorphism carrying the standard basis to ``basis``."""
    if basis.provenance is not None:
        return Automorphism.from_moves(basis.rank, basis.provenance)
    return Automorphism(basis.elements)


def word_length(w: Sequence[int], basis: Basis) -> int:
    """Length of the reduced expression of w in the given basis."""
    phi = automorphism_from_basis(basis)
    return len(phi.inverse()(reduce_word(w)))


def rewrite_in_basis(w: Sequence[int], basis: Basis) -> Word:
    """Expression of w in basis coordinates (as a word in fresh letters)."""
    return automorphism_from_basis(basis).inverse()(reduce_word(w))


@lru_cache(maxsize=None)
def nielsen_neighbor_count(rank: int) -> int:
    """Size of nielsen_neighbors for the standard basis (same for all n)."""
    return len(nielsen_neighbors(Basis.standard(rank)))


# -- enumeration helpers -----------------------------------------------------

def all_letters(rank: int) -> list[int]:
    return [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)]


def words_up_to(rank: int, max_len: int) -> Iterator[Word]:
    """All reduced words of length <= max_len (including the empty word)."""
    yield ()
    frontier: list[Word] = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for a in all_letters(rank):
                if w and w[-1] == -a:
                    continue
                nw = w + (a,)
                nxt.append(nw)
                yield nw
        frontier = nxt
