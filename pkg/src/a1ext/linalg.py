"""F2 linear algebra on int bitmask row vectors."""

from __future__ import annotations


def acc_dict(d: dict, key, val) -> None:
    """Accumulate (characteristic-2 addition) into a dict, dropping zeros."""
    cur = d.get(key)
    new = val if cur is None else cur + val
    if new:
        d[key] = new
    elif cur is not None:
        del d[key]


class Echelon:
    """Row space over F2 with combination tracking.

    Rows are int bitmasks; each stored row has a distinct leading bit.
    `combo` bitmasks record the stored row as a combination of added vectors.
    """

    def __init__(self):
        self.rows: dict[int, tuple[int, int]] = {}  # pivot -> (row, combo)
        self.n_added = 0

    def reduce(self, v: int, combo: int = 0) -> tuple[int, int]:
        """Fully reduce v; returns (residue, combo of used rows)."""
        out = 0
        while v:
            p = v.bit_length() - 1
            e = self.rows.get(p)
            if e is None:
                out |= 1 << p
                v ^= 1 << p
            else:
                v ^= e[0]
                combo ^= e[1]
        return out, combo

    def add(self, v: int) -> tuple[int, int]:
        """Add a vector; returns (residue, combo). residue==0 means dependent."""
        tag = 1 << self.n_added
        self.n_added += 1
        res, combo = self.reduce(v, tag)
        if res:
            self.rows[res.bit_length() - 1] = (res, combo)
        return res, combo

    def contains(self, v: int) -> bool:
        return self.reduce(v)[0] == 0

    @property
    def rank(self) -> int:
        return len(self.rows)


def rank_of_rows(rows: list[int]) -> int:
    e = Echelon()
    for r in rows:
        e.add(r)
    return e.rank


def nullspace_of_rows(rows: list[int]) -> list[int]:
    """Basis of {x : xor of rows[i] over set bits of x == 0}."""
    e = Echelon()
    out = []
    for r in rows:
        res, combo = e.add(r)
        if not res:
            out.append(combo)
    return out


def solve(rows: list[int], target: int) -> int | None:
    """Find x with xor of rows[i] over set bits of x == target, or None."""
    e = Echelon()
    for r in rows:
        e.add(r)
    res, combo = e.reduce(target)
    return None if res else combo


class Subquotient:
    """A subquotient Z/B of F2^n with canonical coordinates.

    Z is given by spanning vectors (cycles), B by spanning vectors
    (boundaries, assumed contained in span Z).  Representatives of the
    quotient basis are the added Z-vectors that are independent mod B.
    """

    def __init__(self, boundaries: list[int], cycles: list[int]):
        self.b_ech = Echelon()
        for b in boundaries:
            self.b_ech.add(b)
        self.rep_ech = Echelon()  # echelon of chosen representatives mod B
        self.reps: list[int] = []
        for z in cycles:
            res, _ = self.b_ech.reduce(z)
            if self.rep_ech.reduce(res)[0]:
                self.rep_ech.add(res)  # combo bit index == rep index
                self.reps.append(z)

    @property
    def dim(self) -> int:
        return len(self.reps)

    def coords(self, v: int) -> int | None:
        """Coordinates of [v] in the chosen basis; None if v is not in Z+B."""
        res, _ = self.b_ech.reduce(v)
        res, combo = self.rep_ech.reduce(res)
        return None if res else combo
