"""Trigraded Ext charts: dimensions, named operator actions, borders.

An ExtChart records, over a finite declared range, the F2-dimension of
Ext^{s,f,w} together with the actions of the named Ext(M2) classes
(h0, h1, rho, tau4, b, a, tau_h1, tau2_h0, tau2_a) on a chosen basis.
Border flags mark tridegrees whose recorded data could be affected by
range truncation; comparisons skip them.

Chart JSON: {base, module, range, classes: [{s,f,w,dim,border}],
actions: {name: [[src, f-idx, dst-vector]...]}} where src/dst tridegrees
are [s,f,w] triples and dst-vector is the F2 coordinate bitmask (or null
for out-of-range targets).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

OPERATOR_DEGREES = {
    "rho": (-1, 0, -1), "h0": (0, 1, 0), "h1": (1, 1, 1),
    "a": (4, 3, 2), "b": (8, 4, 4), "tau4": (0, 0, -4),
    "tau_h1": (1, 1, 0), "tau2_h0": (0, 1, -2), "tau2_a": (4, 3, 0),
}

Range = tuple  # ((smin, smax), (fmin, fmax), (wmin, wmax))


def in_range(rng: Range, s: int, f: int, w: int) -> bool:
    return (rng[0][0] <= s <= rng[0][1] and rng[1][0] <= f <= rng[1][1]
            and rng[2][0] <= w <= rng[2][1])


@dataclass
class ExtChart:
    base: str
    module: str
    rng: Range
    dims: dict = field(default_factory=dict)      # (s,f,w) -> dim > 0
    # actions[name][((s,f,w), i)] = coordinate bitmask in the target slice,
    # or None when the target tridegree leaves the range (border-flagged).
    actions: dict = field(default_factory=dict)
    border: set = field(default_factory=set)      # flagged tridegrees

    def dim(self, s: int, f: int, w: int) -> int:
        return self.dims.get((s, f, w), 0)

    def total(self) -> int:
        return sum(self.dims.values())

    def classes(self):
        return sorted(self.dims)

    # -- structural transforms (used by the closed-form chart assembly) ----
    def shift(self, p: int, q: int) -> "ExtChart":
        """Sigma^{p,q}: (s,f,w) -> (s+p, f, w+q)."""
        out = ExtChart(self.base, f"S({p},{q}){self.module}",
                       ((self.rng[0][0] + p, self.rng[0][1] + p),
                        self.rng[1],
                        (self.rng[2][0] + q, self.rng[2][1] + q)))
        out.dims = {(s + p, f, w + q): d for (s, f, w), d in self.dims.items()}
        out.border = {(s + p, f, w + q) for (s, f, w) in self.border}
        for name, table in self.actions.items():
            out.actions[name] = {
                ((s + p, f, w + q), i): v
                for ((s, f, w), i), v in table.items()}
        return out

    def retag(self, n: int) -> "ExtChart":
        """Filtration shift <n>: (s,f,w) -> (s, f+n, w)."""
        if n == 0:
            return self
        out = ExtChart(self.base, f"{self.module}<{n}>",
                       (self.rng[0],
                        (self.rng[1][0] + n, self.rng[1][1] + n),
                        self.rng[2]))
        out.dims = {(s, f + n, w): d for (s, f, w), d in self.dims.items()}
        out.border = {(s, f + n, w) for (s, f, w) in self.border}
        for name, table in self.actions.items():
            out.actions[name] = {
                ((s, f + n, w), i): v for ((s, f, w), i), v in table.items()}
        return out

    def restrict(self, rng: Range) -> "ExtChart":
        out = ExtChart(self.base, self.module, rng)
        out.dims = {k: d for k, d in self.dims.items() if in_range(rng, *k)}
        out.border = {k for k in self.border if in_range(rng, *k)}
        for name, table in self.actions.items():
            out.actions[name] = {
                (k, i): v for (k, i), v in table.items()
                if in_range(rng, *k)}
        return out

    def coweight_page(self, c: int) -> "ExtChart":
        """The classes with coweight s - w congruent to c mod 4."""
        out = ExtChart(self.base, f"{self.module}[cw={c % 4}]", self.rng)
        out.dims = {k: d for k, d in self.dims.items() if (k[0] - k[2]) % 4 == c % 4}
        out.border = {k for k in self.border if (k[0] - k[2]) % 4 == c % 4}
        return out

    @staticmethod
    def direct_sum(parts: list, base: str, module: str, rng: Range) -> "ExtChart":
        out = ExtChart(base, module, rng)
        for p in parts:
            for k, d in p.dims.items():
                if in_range(rng, *k):
                    out.dims[k] = out.dims.get(k, 0) + d
            out.border |= {k for k in p.border if in_range(rng, *k)}
        return out

    # -- action-derived invariants -----------------------------------------
    def action_rank(self, name: str, key) -> int | None:
        """Rank of the operator on the slice; None if any target is
        out of range (uncertified)."""
        table = self.actions.get(name)
        if table is None:
            return None
        d = self.dims.get(key, 0)
        rows = []
        for i in range(d):
            v = table.get((key, i))
            if v is None:
                return None
            rows.append(v)
        from . import linalg
        return linalg.rank_of_rows(rows)

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        classes = [{"s": s, "f": f, "w": w, "dim": d,
                    "border": (s, f, w) in self.border}
                   for (s, f, w), d in sorted(self.dims.items())]
        actions = {}
        for name in sorted(self.actions):
            rows = []
            for ((s, f, w), i), v in sorted(self.actions[name].items()):
                rows.append([[s, f, w], i, v])
            actions[name] = rows
        return {"base": self.base, "module": self.module,
                "range": [list(self.rng[0]), list(self.rng[1]),
                          list(self.rng[2])],
                "classes": classes, "actions": actions}

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def from_json(data: dict) -> "ExtChart":
        rng = tuple(tuple(x) for x in data["range"])
        out = ExtChart(data["base"], data["module"], rng)
        for c in data["classes"]:
            k = (c["s"], c["f"], c["w"])
            out.dims[k] = c["dim"]
            if c.get("border"):
                out.border.add(k)
        for name, rows in data.get("actions", {}).items():
            out.actions[name] = {
                ((r[0][0], r[0][1], r[0][2]), r[1]): r[2] for r in rows}
        return out

    @staticmethod
    def load(path: str) -> "ExtChart":
        with open(path) as fh:
            return ExtChart.from_json(json.load(fh))


@dataclass
class ChartDiff:
    rng: Range
    dim_mismatches: list = field(default_factory=list)   # (key, expected, got)
    action_mismatches: list = field(default_factory=list)  # (key, op, exp, got)
    skipped_border: int = 0

    @property
    def empty(self) -> bool:
        return not self.dim_mismatches and not self.action_mismatches

    def to_json(self) -> dict:
        return {"range": [list(x) for x in self.rng],
                "empty": self.empty,
                "dim_mismatches": [
                    {"s": k[0], "f": k[1], "w": k[2],
                     "expected": e, "computed": g}
                    for (k, e, g) in self.dim_mismatches],
                "action_mismatches": [
                    {"s": k[0], "f": k[1], "w": k[2], "op": op,
                     "expected": e, "computed": g}
                    for (k, op, e, g) in self.action_mismatches],
                "skipped_border": self.skipped_border}

    def render(self) -> str:
        if self.empty:
            return (f"empty diff ({self.skipped_border} border tridegrees "
                    "skipped)")
        lines = []
        for (k, e, g) in self.dim_mismatches:
            lines.append(f"  dim at (s,f,w)={k}: expected {e}, computed {g}")
        for (k, op, e, g) in self.action_mismatches:
            lines.append(f"  rank of {op} at {k}: expected {e}, computed {g}")
        return "\n".join([f"{len(self.dim_mismatches)} dimension and "
                          f"{len(self.action_mismatches)} action mismatches:"]
                         + lines)


def compare(expected: ExtChart, computed: ExtChart, rng: Range | None = None,
            action_names: tuple = ()) -> ChartDiff:
    """Dimension (and action-rank) diff over non-border tridegrees.

    Action tables are basis-dependent, so actions are compared through the
    basis-free invariant rank(op restricted to each slice).
    """
    if rng is None:
        rng = tuple(
            (max(a[0], b[0]), min(a[1], b[1]))
            for a, b in zip(expected.rng, computed.rng))
    diff = ChartDiff(rng)
    keys = {k for k in expected.dims if in_range(rng, *k)}
    keys |= {k for k in computed.dims if in_range(rng, *k)}
    for k in sorted(keys):
        if k in expected.border or k in computed.border:
            diff.skipped_border += 1
            continue
        e, g = expected.dims.get(k, 0), computed.dims.get(k, 0)
        if e != g:
            diff.dim_mismatches.append((k, e, g))
            continue
        for name in action_names:
            re_ = expected.action_rank(name, k)
            rg = computed.action_rank(name, k)
            if re_ is None or rg is None:
                continue
            if re_ != rg:
                diff.action_mismatches.append((k, name, re_, rg))
    return diff
