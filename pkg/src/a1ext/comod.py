"""Finitely generated free comodules over A(1)-dual / A(0)-dual.

A `Comodule` is a free M2-module on a finite labeled basis, each element
carrying a tridegree (stem, 0, weight) and an optional Mahowald weight,
together with a coaction psi(m_i) = sum coeff * (gamma (x) m_j) over the
basis of the level algebroid (the primitive term 1 (x) m_i is stored
explicitly).  Setting `rho_killed` restricts scalars to F2[tau] (the same
underlying data describes M/rho as a comodule that is no longer M2-free).

Brown-Gitler comodules B0(k), B1(k) are realized as weight-truncated spans
of admissible monomials inside (A || A(0))-dual resp. (A || A(1))-dual,
with coaction computed in the ambient dual Steenrod algebroid and the left
tensor factor projected to the level algebroid.  The right factors stay
admissible; this is asserted, not imposed.
"""

from __future__ import annotations

import itertools
import random

from . import dualsteenrod as ds
from .dualsteenrod import UNIT, Mono
from .ground import ONE, G, GroundElement, TriDegree, ground_basis_in_degree
from .hopf import Algebroid, make_algebroid
from . import linalg


def mod_rho(c: GroundElement) -> GroundElement:
    return GroundElement((i, j) for i, j in c.terms if j == 0)


class Comodule:
    def __init__(self, base, level, labels, degrees, weights, coaction,
                 rho_killed=False, name=""):
        self.base = base
        self.level = level
        self.rho_killed = rho_killed
        self.name = name
        self.labels = list(labels)
        self.degrees = [TriDegree(*d) for d in degrees]
        self.weights = list(weights)
        # coaction[i] = [(gamma_mono, GroundElement, j), ...]
        self.coaction = [list(terms) for terms in coaction]
        if rho_killed:
            self.coaction = [
                [(g, mod_rho(c), j) for (g, c, j) in terms if mod_rho(c)]
                for terms in self.coaction
            ]
        self.algebroid: Algebroid = make_algebroid(base, level)

    @property
    def rank(self) -> int:
        return len(self.labels)

    def scalars_have_rho(self) -> bool:
        return self.base == "R" and not self.rho_killed

    def ground_monomial(self, deg: TriDegree):
        """The unique scalar monomial in a tridegree, or None."""
        cands = ground_basis_in_degree(self.base, deg)
        if not cands:
            return None
        c = cands[0]
        if self.rho_killed and any(j for _, j in c.terms):
            return None
        return c

    # -- the dual algebra action (gamma* . m), see resolve.py ------------
    def act_gamma(self, gamma: Mono, i: int) -> list[tuple[GroundElement, int]]:
        return [(c, j) for (g, c, j) in self.coaction[i] if g == gamma]

    def act(self, lam: dict, elem: dict) -> dict:
        """Action of a dual-algebra element on a module element.

        `lam` is {gamma_mono: GroundElement}, `elem` is {i: GroundElement};
        psi(c*m) = eta_R(c) psi(m), so scalar parts of `elem` are pushed
        through eta_R before pairing.
        """
        out: dict = {}
        A = self.algebroid
        for i, c in elem.items():
            etac = A.eta_r(c)
            for (g, cg, j) in self.coaction[i]:
                # full Gamma-coefficient of m_j in psi(c*m_i)
                prod = A.multiply(etac, {g: cg})
                for gm, cp in prod.items():
                    lv = lam.get(gm)
                    if lv is None:
                        continue
                    val = lv * cp
                    if self.rho_killed:
                        val = mod_rho(val)
                    if val:
                        cur = out.get(j)
                        new = val if cur is None else cur + val
                        if new:
                            out[j] = new
                        elif cur is not None:
                            del out[j]
        return out

    # -- verification -----------------------------------------------------
    def check_comodule(self) -> tuple[bool, list[str]]:
        """Counit and coassociativity of the stored coaction."""
        fails = []
        A = self.algebroid
        for i in range(self.rank):
            # counit
            acc: dict = {}
            for (g, c, j) in self.coaction[i]:
                if g == UNIT:
                    cur = acc.get(j, GroundElement())
                    acc[j] = cur + c
            acc = {j: c for j, c in acc.items() if c}
            if acc != {i: ONE}:
                fails.append(f"counit fails at basis {self.labels[i]}")
            # coassociativity: (Delta x 1) psi = (1 x psi) psi
            lhs: dict = {}
            for (g, c, j) in self.coaction[i]:
                for (a, b), cd in A.comultiply({g: c}).items():
                    linalg.acc_dict(lhs, (a, b, j), cd)
            rhs: dict = {}
            for (g, c, j) in self.coaction[i]:
                for (g2, c2, k) in self.coaction[j]:
                    left = A.multiply({g: c}, A.eta_r(c2))
                    for gm, cl in left.items():
                        linalg.acc_dict(rhs, (gm, g2, k), cl)
            if self.rho_killed:
                lhs = {k: mod_rho(c) for k, c in lhs.items() if mod_rho(c)}
                rhs = {k: mod_rho(c) for k, c in rhs.items() if mod_rho(c)}
            if lhs != rhs:
                fails.append(f"coassociativity fails at basis {self.labels[i]}")
        return (not fails, fails)

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "base": self.base,
            "level": self.level,
            "rho_killed": self.rho_killed,
            "name": self.name,
            "basis": [
                {"label": l, "s": d.s, "f": d.f, "w": d.w, "wt": wt}
                for l, d, wt in zip(self.labels, self.degrees, self.weights)
            ],
            "coaction": [
                [[self.algebroid.mono_json(g), c.to_json(), j] for (g, c, j) in terms]
                for terms in self.coaction
            ],
        }

    def fingerprint(self) -> str:
        """Content hash, used as a cache key for derived computations."""
        import hashlib
        import json
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __repr__(self):
        return f"Comodule({self.name or 'anon'}, base={self.base}, rank={self.rank})"


# ---------------------------------------------------------------------------
# constructors

def trivial_M2(base: str, level: int = 1, rho_killed: bool = False) -> Comodule:
    return Comodule(base, level, ["1"], [TriDegree(0, 0, 0)], [0],
                    [[(UNIT, ONE, 0)]], rho_killed=rho_killed, name="M2")


def _span_coaction(monos: list[Mono], base: str, level: int, ambient: bool = True):
    """Coaction of a monomial-span subcomodule.

    `ambient=True`: span sits inside A-dual, left factors projected to the
    level algebroid.  `ambient=False`: span sits inside A(level)-dual itself,
    so both factors are projected before the span membership test.
    """
    index = {m: i for i, m in enumerate(monos)}
    coaction = []
    for m in monos:
        terms = []
        for (l, r), c in ds.delta(m, base).items():
            if not ds.level_keeps(l, level):
                continue
            if not ambient and not ds.level_keeps(r, level):
                continue
            assert r in index, (
                f"coaction of {ds.mono_text(m)} leaves the span at {ds.mono_text(r)}"
            )
            terms.append((l, c, index[r]))
        coaction.append(terms)
    return coaction


def _admissible_monos(module_level: int, max_wt: int) -> list[Mono]:
    """All admissible monomials of (A || A(module_level))-dual of weight <= max_wt."""
    gens: list[tuple[Mono, int, bool]] = []  # (mono, wt, is_tau)
    i = 1
    while 2 ** i <= max_wt:
        if module_level == 0 or i >= 2:
            gens.append((ds.gen_xi(i), 2 ** i, False))
            gens.append((ds.gen_tau(i), 2 ** i, True))
        i += 1
    if module_level == 1 and max_wt >= 4:
        gens.append((ds.make_mono((2,), ()), 4, False))  # xb1^2
    out = [UNIT]
    for g, wt, is_tau in gens:
        cur = list(out)
        for m in cur:
            acc = m
            while True:
                res = ds.mono_mul(acc, g, "C")
                assert len(res) == 1  # no taubar repetition happens here
                acc = next(iter(res))
                if ds.mono_weight(acc) > max_wt:
                    break
                assert ds.admissible(acc, module_level)
                out.append(acc)
                if is_tau:
                    break
    return out


def _sorted_span(monos: list[Mono], base: str, level: int, name: str,
                 ambient: bool = True) -> Comodule:
    monos = sorted(set(monos), key=lambda m: (
        ds.mono_weight(m), ds.mono_degree(m)[0], ds.mono_text(m)))
    labels = [ds.mono_text(m) for m in monos]
    degrees = [TriDegree(ds.mono_degree(m)[0], 0, ds.mono_degree(m)[1]) for m in monos]
    weights = [ds.mono_weight(m) for m in monos]
    return Comodule(base, level, labels, degrees, weights,
                    _span_coaction(monos, base, level, ambient), name=name)


def brown_gitler_B0(base: str, k: int) -> Comodule:
    """B0(k): weight <= 2k part of (A || A(0))-dual, as an A(1)-dual comodule."""
    return _sorted_span(_admissible_monos(0, 2 * k), base, 1, f"B0({k})")


def brown_gitler_B1(base: str, k: int) -> Comodule:
    """B1(k): weight <= 4k part of (A || A(1))-dual, as an A(1)-dual comodule."""
    return _sorted_span(_admissible_monos(1, 4 * k), base, 1, f"B1({k})")


def a_mod_a1_truncated(base: str, weight_bound: int) -> Comodule:
    """The weight <= bound part of (A || A(1))-dual."""
    return _sorted_span(_admissible_monos(1, weight_bound), base, 1,
                        f"AmodA1({weight_bound})")


def quotient_comodule_A1_mod_A0(base: str) -> Comodule:
    """(A(1) || A(0))-dual: the rank-4 subcomodule M2{1, xb1, tb1, xb1 tb1}.

    This is the cotensor M2 box_{A(0)-dual} A(1)-dual; tensoring a comodule
    with it implements the change of rings down to A(0)-dual.
    """
    monos = [UNIT, ds.gen_xi(1), ds.gen_tau(1), ds.make_mono((1,), (0, 1))]
    return _sorted_span(monos, base, 1, "A1modA0", ambient=False)


def shift(M: Comodule, p: int, q: int) -> Comodule:
    """Sigma^{p,q}: add (p, 0, q) to every basis degree."""
    return Comodule(
        M.base, M.level,
        [f"S({p},{q}){l}" for l in M.labels],
        [d + (p, 0, q) for d in M.degrees],
        M.weights, M.coaction, rho_killed=M.rho_killed,
        name=f"S({p},{q}){M.name}",
    )


def tensor(M: Comodule, N: Comodule) -> Comodule:
    """M (x)_{M2} N with the diagonal coaction."""
    assert (M.base, M.level, M.rho_killed) == (N.base, N.level, N.rho_killed)
    A = M.algebroid
    labels, degrees, weights, coaction = [], [], [], []
    pairs = list(itertools.product(range(M.rank), range(N.rank)))
    index = {p: i for i, p in enumerate(pairs)}
    for (i, j) in pairs:
        labels.append(f"{M.labels[i]}(x){N.labels[j]}")
        degrees.append(M.degrees[i] + N.degrees[j])
        wi, wj = M.weights[i], N.weights[j]
        weights.append(None if wi is None or wj is None else wi + wj)
        terms: dict = {}
        for (g1, c1, i2) in M.coaction[i]:
            for (g2, c2, j2) in N.coaction[j]:
                # both coefficients are far-left (eta_L); they just multiply
                for gm, cp in A.multiply({g1: c1 * c2}, {g2: ONE}).items():
                    linalg.acc_dict(terms, (gm, index[(i2, j2)]), cp)
        coaction.append([(g, c, t) for (g, t), c in terms.items()])
    out = Comodule(M.base, M.level, labels, degrees, weights, coaction,
                   rho_killed=M.rho_killed, name=f"{M.name}(x){N.name}")
    return out


def quotient_rho(M: Comodule) -> Comodule:
    assert M.base == "R" and not M.rho_killed
    return Comodule(M.base, M.level, M.labels, M.degrees, M.weights,
                    M.coaction, rho_killed=True, name=f"{M.name}/rho")


def base_change_C(M: Comodule) -> Comodule:
    """The base 'C' comodule with the same basis (coaction coefficients mod rho)."""
    assert M.base == "R"
    coaction = [
        [(g, mod_rho(c), j) for (g, c, j) in terms if mod_rho(c)]
        for terms in M.coaction
    ]
    return Comodule("C", M.level, M.labels, M.degrees, M.weights, coaction,
                    name=M.name)


def restrict_level0(M: Comodule) -> Comodule:
    """View an A(1)-dual comodule as an A(0)-dual comodule."""
    assert M.level == 1
    t0 = ds.gen_tau(0)
    coaction = [
        [(g, c, j) for (g, c, j) in terms if g in (UNIT, t0)]
        for terms in M.coaction
    ]
    return Comodule(M.base, 0, M.labels, M.degrees, M.weights, coaction,
                    rho_killed=M.rho_killed, name=M.name)


# ---------------------------------------------------------------------------
# comodule maps

class ComoduleMap:
    """An M2-linear, coaction-commuting map M -> N of tridegree `deg`.

    entries[i] = list of (GroundElement, j): image of m_i.
    """

    def __init__(self, M: Comodule, N: Comodule, entries, deg=(0, 0, 0)):
        self.M, self.N = M, N
        self.deg = TriDegree(*deg)
        self.entries = [list(e) for e in entries]

    def apply(self, elem: dict) -> dict:
        out: dict = {}
        for i, c in elem.items():
            for (ce, j) in self.entries[i]:
                linalg.acc_dict(out, j, c * ce)
        if self.N.rho_killed:
            out = {j: mod_rho(c) for j, c in out.items() if mod_rho(c)}
        return out


def comodule_hom_space(M: Comodule, N: Comodule, deg=(0, 0, 0)) -> list[ComoduleMap]:
    """F2-basis of the space of comodule maps M -> N of the given tridegree."""
    deg = TriDegree(*deg)
    # unknowns: x_{ij} with phi(m_i) = sum x_ij c_ij n_j, c_ij forced by degree
    unknowns = []
    for i in range(M.rank):
        for j in range(N.rank):
            c = N.ground_monomial(M.degrees[i] + deg - N.degrees[j])
            if c is not None:
                unknowns.append((i, j, c))
    if not unknowns:
        return []
    return _hom_system(M, N, deg, unknowns)


def _hom_system(M: Comodule, N: Comodule, deg: TriDegree, unknowns) -> list[ComoduleMap]:
    """Comodule maps M -> N through the contravariant dual dictionary.

    phi corresponds to the transposed matrix X: N-dual -> M-dual with the
    same ground coefficients; phi is a comodule map iff X commutes with the
    dual-algebra action on both duals (checked on the algebra basis, which
    together with M2-linearity generates).
    """
    from .resolve import DualModule
    if M.rho_killed:
        # rho-torsion comodules have no M2-linear dual; compare after the
        # base change to C, which is Ext-faithful for them (resolve.py).
        M, N = base_change_C(M), base_change_C(N)
    Md, Nd = DualModule(M), DualModule(N)
    basis_by_src: dict = {}
    for u, (i, j, c) in enumerate(unknowns):
        basis_by_src.setdefault(j, []).append(u)
    cols: dict = {}
    rowvecs = [0] * len(unknowns)

    def add(u, key):
        idx = cols.setdefault(key, len(cols))
        rowvecs[u] ^= 1 << idx

    for gm in Nd.L.basis:
        lam = {gm: ONE}
        for j0 in range(N.rank):
            # LHS: X(gm* . e_j0); unknown (i, j, c) contributes c times the
            # j-component of gm* . e_j0, landing on dual basis vector i.
            for jj, dc in Nd.act(lam, {j0: ONE}).items():
                for u in basis_by_src.get(jj, ()):
                    i, _, c = unknowns[u]
                    for mono in (dc * c).terms:
                        add(u, (gm, j0, i, mono))
        # RHS: gm* . X(e_j0) = gm* . (c e_i) for each unknown with source j0
        for u, (i, j0, c) in enumerate(unknowns):
            for ii, cc in Md.act(lam, {i: c}).items():
                for mono in cc.terms:
                    add(u, (gm, j0, ii, mono))
    null = linalg.nullspace_of_rows(rowvecs)
    maps = []
    for combo in null:
        entries = [[] for _ in range(M.rank)]
        for u, (i, j, c) in enumerate(unknowns):
            if (combo >> u) & 1:
                entries[i].append((c, j))
        maps.append(ComoduleMap(M, N, entries, deg))
    return maps


def _reduced_matrix(phi: ComoduleMap):
    """The map modulo (tau, rho): rows over source basis, F2 columns over
    target basis (only unit ground coefficients survive)."""
    rows = []
    for i in range(phi.M.rank):
        v = 0
        for (c, j) in phi.entries[i]:
            if (0, 0) in c.terms:
                v ^= 1 << j
        rows.append(v)
    return rows


def _compose_maps(psi: ComoduleMap, phi: ComoduleMap) -> list[dict]:
    """Entries of psi o phi as dicts {target index: GroundElement}."""
    out = []
    for i in range(phi.M.rank):
        acc: dict = {}
        for (c, j) in phi.entries[i]:
            for (c2, k) in psi.entries[j]:
                linalg.acc_dict(acc, k, c * c2)
        out.append({k: c for k, c in acc.items() if c})
    return out


def ses_bg(k: int, base: str, parity: str = "even") -> tuple[ComoduleMap, ComoduleMap]:
    """The Brown-Gitler short exact sequence with middle term B0(2k) or
    B0(2k+1):

        even: 0 -> S^{4k,2k} B0(k)            -> B0(2k)   -> B1(k-1) (x) Q -> 0
        odd:  0 -> S^{4k,2k} B0(k) (x) B0(1)  -> B0(2k+1) -> B1(k-1) (x) Q -> 0

    with Q = (A(1)||A(0))-dual.  Returns (inclusion, projection), both
    coaction-commuting, with the composite zero and exactness certified
    degreewise: modulo (tau, rho) the inclusion is injective and the
    projection surjective in every basis tridegree, which by graded
    Nakayama gives exactness of the sequence of free M2-modules.

    For k = 1 the projection lands on the honest tensor product.  From
    k = 2 on, no comodule surjection onto the tensor exists with the
    conjugated generators (exhaustively verified over the full hom space
    for k = 2): the quotient is a twisted form of the tensor.  There the
    projection returned is the one onto the actual cokernel comodule of
    the inclusion, which has the same basis tridegrees as B1(k-1) (x) Q;
    the degreewise rank identity against the tensor is still certified.
    """
    assert k >= 1 and parity in ("even", "odd")
    if parity == "even":
        sub = shift(brown_gitler_B0(base, k), 4 * k, 2 * k)
        mid = brown_gitler_B0(base, 2 * k)
    else:
        sub = shift(tensor(brown_gitler_B0(base, k), brown_gitler_B0(base, 1)),
                    4 * k, 2 * k)
        mid = brown_gitler_B0(base, 2 * k + 1)
    quo = tensor(brown_gitler_B1(base, k - 1), quotient_comodule_A1_mod_A0(base))
    if mid.rank != sub.rank + quo.rank:
        raise ValueError(
            f"rank mismatch: {sub.rank} + {quo.rank} != {mid.rank}")

    def from_mask(maps, mask):
        entries = [[] for _ in range(maps[0].M.rank)]
        for b, phi in enumerate(maps):
            if (mask >> b) & 1:
                for i, ent in enumerate(phi.entries):
                    entries[i].extend(ent)
        ent2 = []
        for row in entries:
            acc: dict = {}
            for (c, j) in row:
                linalg.acc_dict(acc, j, c)
            ent2.append([(c, j) for j, c in acc.items() if c])
        return ComoduleMap(maps[0].M, maps[0].N, ent2, maps[0].deg)

    def combos(maps):
        for mask in range(1, 1 << len(maps)):
            yield from_mask(maps, mask)

    incs = comodule_hom_space(sub, mid)
    # Find an F2-combination that is injective mod (tau, rho).  The reduced
    # matrix is linear in the combination, so test masks on precomputed
    # per-basis-map reduced matrices: singles first, then random masks
    # (a random element of a matrix space containing full-rank elements is
    # full-rank with high probability over F2).
    red = [_reduced_matrix(phi) for phi in incs]

    def mask_rank(mask):
        rows = [0] * sub.rank
        for b in range(len(incs)):
            if (mask >> b) & 1:
                for i in range(sub.rank):
                    rows[i] ^= red[b][i]
        return linalg.rank_of_rows(rows)

    good_mask = next((1 << b for b in range(len(incs))
                      if mask_rank(1 << b) == sub.rank), None)
    if good_mask is None:
        rnd = random.Random(0)
        top = (1 << len(incs)) - 1
        for _ in range(20000):
            m = rnd.randint(1, top)
            if mask_rank(m) == sub.rank:
                good_mask = m
                break
    if good_mask is None:
        raise ValueError(f"no injective inclusion for k={k} ({parity}, {base})")
    good_inc = from_mask(incs, good_mask)
    if k == 1:
        projs = comodule_hom_space(mid, quo)
        for proj in combos(projs):
            if linalg.rank_of_rows(_reduced_matrix(proj)) != quo.rank:
                continue
            if any(_compose_maps(proj, good_inc)):
                continue
            if _exactness_failure(sub, mid, quo, good_inc, proj) is None:
                return good_inc, proj
    # twisted case: project onto the literal cokernel comodule instead
    coker, proj = _cokernel_map(mid, good_inc,
                                f"B1({k - 1})(x)A1modA0~{mid.name}")
    if sorted(coker.degrees) != sorted(quo.degrees):
        bad = next(d for d in sorted(set(coker.degrees) | set(quo.degrees))
                   if coker.degrees.count(d) != quo.degrees.count(d))
        raise ValueError(f"exactness failure at tridegree {tuple(bad)}")
    ok, fails = coker.check_comodule()
    assert ok, f"cokernel fails comodule axioms: {fails[:3]}"
    assert is_comodule_map(proj), "cokernel projection not a comodule map"
    assert not any(_compose_maps(proj, good_inc)), "composite nonzero"
    return good_inc, proj


def _eliminate(g: dict, rewrites: dict) -> dict:
    """Substitute pivot rewrite rules m_p = sum c_j m_j into g."""
    out = dict(g)
    for p in list(out):
        if p in rewrites:
            c = out.pop(p)
            for j2, c2 in rewrites[p].items():
                linalg.acc_dict(out, j2, c * c2)
    return {j: c for j, c in out.items() if c}


def _cokernel_map(mid: Comodule, inc: ComoduleMap, name: str):  # noqa: F811
    """The cokernel comodule of an injective, M2-split inclusion into mid,
    together with the projection map onto it.

    Gauss-Jordan over M2 on the image generators: each must reduce to a
    rewrite rule m_pivot = sum (non-pivot terms) with unit pivot
    coefficient (otherwise the cokernel is not free and we give up).
    """
    A = mid.algebroid
    rewrites: dict = {}   # pivot index -> {other index: coefficient}
    for ent in inc.entries:
        g = _eliminate({j: c for (c, j) in ent}, rewrites)
        piv = min((j for j, c in g.items() if c == ONE), default=None)
        if piv is None:
            raise ValueError("inclusion not M2-split; cokernel not free")
        del g[piv]
        # substitute the new rule into the existing ones
        for p2 in list(rewrites):
            rewrites[p2] = _eliminate(rewrites[p2], {piv: g})
        rewrites[piv] = g
    keep = [j for j in range(mid.rank) if j not in rewrites]
    index = {j: i for i, j in enumerate(keep)}

    def push(terms):
        """Rewrite right factors through the pivot rules; module-side
        coefficients cross into the algebroid factor via eta_R."""
        acc: dict = {}
        for (g, c, j) in terms:
            if j in index:
                linalg.acc_dict(acc, (g, index[j]), c)
            else:
                for j3, c3 in rewrites[j].items():
                    for gm, cp in A.multiply({g: c}, A.eta_r(c3)).items():
                        linalg.acc_dict(acc, (gm, index[j3]), cp)
        return [(g, c, j) for (g, j), c in acc.items() if c]

    coaction = [push(mid.coaction[j]) for j in keep]
    coker = Comodule(mid.base, mid.level,
                     [mid.labels[j] for j in keep],
                     [mid.degrees[j] for j in keep],
                     [mid.weights[j] for j in keep],
                     coaction, rho_killed=mid.rho_killed, name=name)
    entries = []
    for j in range(mid.rank):
        if j in index:
            entries.append([(ONE, index[j])])
        else:
            entries.append([(c3, index[j3])
                            for j3, c3 in rewrites[j].items()])
    return coker, ComoduleMap(mid, coker, entries)


def is_comodule_map(phi: ComoduleMap) -> bool:
    """Check coaction-commuting through the contravariant dual dictionary
    (the transposed matrix must commute with the dual-algebra action)."""
    from .resolve import DualModule
    M, N = phi.M, phi.N
    if M.rho_killed:
        M, N = base_change_C(M), base_change_C(N)
    Md, Nd = DualModule(M), DualModule(N)
    X = [dict() for _ in range(N.rank)]   # X[j] = {i: c}
    for i, ent in enumerate(phi.entries):
        for (c, j) in ent:
            X[j][i] = c
    for gm in Nd.L.basis:
        lam = {gm: ONE}
        for j0 in range(N.rank):
            lhs: dict = {}
            for jj, dc in Nd.act(lam, {j0: ONE}).items():
                for i, c in X[jj].items():
                    linalg.acc_dict(lhs, i, dc * c)
            rhs = Md.act(lam, dict(X[j0]))
            lhs = {i: c for i, c in lhs.items() if c}
            rhs = {i: c for i, c in rhs.items() if c}
            if lhs != rhs:
                return False
    return True


def _exactness_failure(sub, mid, quo, inc, proj):
    """Per-tridegree rank check of the reduced (mod (tau,rho)) sequence;
    returns the offending tridegree or None."""
    rinc, rproj = _reduced_matrix(inc), _reduced_matrix(proj)
    for d in sorted(set(mid.degrees) | set(sub.degrees) | set(quo.degrees)):
        n_sub = sum(1 for x in sub.degrees if x == d)
        n_mid = sum(1 for x in mid.degrees if x == d)
        n_quo = sum(1 for x in quo.degrees if x == d)
        mask = 0
        for j in range(mid.rank):
            if mid.degrees[j] == d:
                mask |= 1 << j
        ri = linalg.rank_of_rows(
            [rinc[i] & mask for i in range(sub.rank) if sub.degrees[i] == d])
        rp = linalg.rank_of_rows(
            [_column_select(rproj, quo, d)[j] for j in range(mid.rank)
             if mid.degrees[j] == d])
        if not (ri == n_sub and rp == n_quo and n_mid == n_sub + n_quo):
            return d
    return None


def _column_select(rows, quo, d):
    mask = 0
    for j in range(quo.rank):
        if quo.degrees[j] == d:
            mask |= 1 << j
    return [r & mask for r in rows]
