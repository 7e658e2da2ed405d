"""The dual Hopf algebroids A(1)-dual and A(0)-dual over M2.

A(1)-dual = M2[xb1, tb0, tb1] / (xb1^2, tb1^2, tb0^2 = rho tb1 + tau xb1),
an M2-free quotient algebroid of A-dual on the eight monomials
xb1^e tb0^a tb1^b (e, a, b in {0, 1}).  A(0)-dual = M2[tb0]/(tb0^2).
Base 'C' sets rho = 0 throughout.  There is no antipode here; only the
structure maps needed for comodule algebra are exposed.

Elements are dicts {monomial: GroundElement} with monomials as in
:mod:`a1ext.dualsteenrod`; all arithmetic is done in the ambient A-dual and
then projected (the defining ideal is a monomial span in the canonical basis).
"""

from __future__ import annotations

import itertools

from . import dualsteenrod as ds
from .ground import ONE, GroundElement, TriDegree
from .dualsteenrod import UNIT, Elem, Mono, Tensor


class Algebroid:
    """A(level)-dual over base 'R' or 'C'."""

    def __init__(self, base: str, level: int):
        if base not in ("R", "C"):
            raise ValueError(f"base must be 'R' or 'C', got {base!r}")
        if level not in (0, 1):
            raise ValueError(f"level must be 0 or 1, got {level}")
        self.base = base
        self.level = level
        monos = []
        for e, a, b in itertools.product((0, 1), repeat=3):
            m = ds.make_mono((e,), (a, b))
            if ds.level_keeps(m, level):
                monos.append(m)
        monos.sort(key=lambda m: (ds.mono_degree(m)[0], ds.mono_degree(m)[1], m))
        self.basis: list[Mono] = monos
        self.index = {m: i for i, m in enumerate(monos)}

    # -- structure maps -------------------------------------------------
    def multiply(self, e1: Elem, e2: Elem) -> Elem:
        return ds.project_level(ds.elem_mul(e1, e2, self.base), self.level)

    def comultiply(self, e: Elem) -> Tensor:
        out: Tensor = {}
        for m, c in e.items():
            for (l, r), cm in ds.delta(m, self.base).items():
                if ds.level_keeps(l, self.level) and ds.level_keeps(r, self.level):
                    ds._acc(out, (l, r), c * cm)
        return out

    def eta_r(self, c: GroundElement) -> Elem:
        return ds.project_level(ds.eta_r(c, self.base), self.level)

    def counit(self, e: Elem) -> GroundElement:
        c = e.get(UNIT)
        return c if c is not None else GroundElement()

    def mono_degree(self, m: Mono) -> TriDegree:
        s, w = ds.mono_degree(m)
        return TriDegree(s, 0, w)

    def mono_weight(self, m: Mono) -> int:
        return ds.mono_weight(m)

    def mono_json(self, m: Mono) -> list[int]:
        xi, tau = m
        e = xi[0] if xi else 0
        a = tau[0] if tau else 0
        b = tau[1] if len(tau) > 1 else 0
        return [e, a, b]

    def mono_name(self, m: Mono) -> str:
        xi, tau = m
        parts = []
        if tau and tau[0]:
            parts.append("t0")
        if xi and xi[0]:
            parts.append("x1")
        if len(tau) > 1 and tau[1]:
            parts.append("t1")
        return " ".join(parts) if parts else "1"

    # -- axiom verification ----------------------------------------------
    def check_axioms(self, fault=None) -> tuple[bool, list[str]]:
        """Verify the algebroid axioms on the whole basis.

        `fault` (for demonstration) is an optional callable
        (monomial, Tensor) -> Tensor applied after each comultiplication.
        Returns (ok, list of failure descriptions).
        """
        failures: list[str] = []
        comul = self.comultiply
        if fault is not None:
            def comul(e, _inner=self.comultiply):  # noqa: E306
                out: Tensor = {}
                for m, c in e.items():
                    t = fault(m, _inner({m: ONE}))
                    for k, cm in t.items():
                        ds._acc(out, k, c * cm)
                return out

        B = [{m: ONE} for m in self.basis]
        # associativity of the product
        for x, y, z in itertools.product(B, repeat=3):
            if self.multiply(self.multiply(x, y), z) != self.multiply(
                x, self.multiply(y, z)
            ):
                failures.append(f"assoc fails at {x} {y} {z}")
        # counit axioms
        for m in self.basis:
            t = comul({m: ONE})
            left: Elem = {}
            right: Elem = {}
            for (a, b), c in t.items():
                if a == UNIT:
                    ds._acc(left, b, c)
                if b == UNIT:
                    ds._acc(right, a, c)
            if left != {m: ONE}:
                failures.append(f"(eps x 1)Delta != id at {ds.mono_text(m)}")
            if right != {m: ONE}:
                failures.append(f"(1 x eps)Delta != id at {ds.mono_text(m)}")
        # coassociativity
        for m in self.basis:
            t = comul({m: ONE})
            if self._delta_left_f(t, comul) != self._delta_right_f(t, comul):
                failures.append(f"coassociativity fails at {ds.mono_text(m)}")
        # Delta is multiplicative
        for x, y in itertools.product(self.basis, repeat=2):
            lhs = comul(self.multiply({x: ONE}, {y: ONE}))
            rhs = ds.tensor_mul(comul({x: ONE}), comul({y: ONE}), self.base)
            rhs = {
                k: c
                for k, c in rhs.items()
                if ds.level_keeps(k[0], self.level) and ds.level_keeps(k[1], self.level)
            }
            if lhs != rhs:
                failures.append(
                    f"Delta not multiplicative at {ds.mono_text(x)} * {ds.mono_text(y)}"
                )
        # unit compatibilities: Delta(eta_L c) = c (1x1), Delta(eta_R c) = (1 x eta_R c)
        from .ground import G, TAU, RHO

        scalars = [TAU, G(2), G(4)] + ([RHO, G(1, 1)] if self.base == "R" else [])
        for c in scalars:
            lhs = comul(self.eta_r(c))
            rhs: Tensor = {}
            for m, cm in self.eta_r(c).items():
                for ml, cl in self.eta_r(cm).items():
                    ds._acc(rhs, (ml, m), cl)
            if lhs != rhs:
                failures.append(f"Delta eta_R incompatible at {c.text()}")
            if comul({UNIT: c}) != {(UNIT, UNIT): c}:
                failures.append(f"Delta eta_L incompatible at {c.text()}")
            if self.counit(self.eta_r(c)) != c:
                failures.append(f"eps eta_R != id at {c.text()}")
        return (not failures, failures)

    def _delta_left_f(self, t: Tensor, comul) -> dict:
        out: dict = {}
        for (x, y), c in t.items():
            for (a, b), cm in comul({x: ONE}).items():
                ds._acc(out, (a, b, y), c * cm)
        return out

    def _delta_right_f(self, t: Tensor, comul) -> dict:
        out: dict = {}
        for (x, y), c in t.items():
            for (u, v), cm in comul({y: ONE}).items():
                left = self.multiply({x: ONE}, self.eta_r(cm))
                for ml, cl in left.items():
                    ds._acc(out, (ml, u, v), c * cl)
        return out


_CACHE: dict = {}


def make_algebroid(base: str, level: int) -> Algebroid:
    key = (base, level)
    if key not in _CACHE:
        _CACHE[key] = Algebroid(base, level)
    return _CACHE[key]
