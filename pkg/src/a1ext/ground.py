"""Ground rings F2[tau] and F2[tau, rho] and trigraded degrees.

Elements are F2-sums of monomials tau^i rho^j, stored as a frozenset of
(i, j) exponent pairs (addition = symmetric difference).  Degrees are
(stem, filtration, weight) triples; tau has degree (0, 0, -1) and rho has
degree (-1, 0, -1), so tau^i rho^j sits in degree (-j, 0, -i-j).
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

# Base field of definition: 'R' allows rho, 'C' forces j == 0.
BASES = ("R", "C")
Base = str


class TriDegree(NamedTuple):
    s: int  # stem
    f: int  # homological filtration
    w: int  # motivic weight

    @property
    def t(self) -> int:
        """Internal degree s + f."""
        return self.s + self.f

    @property
    def coweight(self) -> int:
        return self.s - self.w

    def __add__(self, other):  # type: ignore[override]
        return TriDegree(self.s + other[0], self.f + other[1], self.w + other[2])

    def __sub__(self, other):
        return TriDegree(self.s - other[0], self.f - other[1], self.w - other[2])


def monomial_degree(i: int, j: int) -> TriDegree:
    """Degree of tau^i rho^j."""
    return TriDegree(-j, 0, -i - j)


class GroundElement:
    """An element of F2[tau, rho] (or F2[tau] when j == 0 throughout)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple[int, int]] = ()):
        ts = frozenset((int(i), int(j)) for i, j in terms)
        for i, j in ts:
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in tau^{i} rho^{j}")
        object.__setattr__(self, "terms", ts)

    def __setattr__(self, *a):
        raise AttributeError("GroundElement is immutable")

    # -- ring operations (characteristic 2) --
    def __add__(self, other: "GroundElement") -> "GroundElement":
        return GroundElement(self.terms ^ other.terms)

    def __mul__(self, other: "GroundElement") -> "GroundElement":
        acc: set[tuple[int, int]] = set()
        for i1, j1 in self.terms:
            for i2, j2 in other.terms:
                acc ^= {(i1 + i2, j1 + j2)}
        return GroundElement(acc)

    def scale(self, i: int, j: int) -> "GroundElement":
        """Multiply by the monomial tau^i rho^j."""
        return GroundElement((i1 + i, j1 + j) for i1, j1 in self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroundElement) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(self.terms)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def in_base(self, base: Base) -> bool:
        return base == "R" or all(j == 0 for _, j in self.terms)

    def sorted_terms(self) -> list[tuple[int, int]]:
        # lex order: tau exponent first, then rho exponent, descending.
        return sorted(self.terms, reverse=True)

    def text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for i, j in self.sorted_terms():
            if i == 0 and j == 0:
                parts.append("1")
                continue
            bits = []
            if i:
                bits.append("t" if i == 1 else f"t^{i}")
            if j:
                bits.append("r" if j == 1 else f"r^{j}")
            parts.append(" ".join(bits))
        return " + ".join(parts)

    def to_json(self) -> list[list[int]]:
        return [[i, j] for i, j in self.sorted_terms()]

    @classmethod
    def from_json(cls, data) -> "GroundElement":
        return cls((i, j) for i, j in data)

    def __repr__(self) -> str:
        return f"G({self.text()})"


ZERO = GroundElement()
ONE = GroundElement([(0, 0)])
TAU = GroundElement([(1, 0)])
RHO = GroundElement([(0, 1)])


def G(i: int, j: int = 0) -> GroundElement:
    """The monomial tau^i rho^j."""
    return GroundElement([(i, j)])


def ground_basis_in_degree(base: Base, degree: TriDegree) -> list[GroundElement]:
    """F2-basis of the ground ring in a given tridegree (empty unless f == 0).

    tau^i rho^j has degree (-j, 0, -i-j), so at most one monomial fits.
    """
    s, f, w = degree
    if f != 0:
        return []
    j = -s
    i = -w - j
    if i < 0 or j < 0 or (base == "C" and j != 0):
        return []
    return [G(i, j)]
