"""The reduced cobar complex of A(level)-dual comodules.

C^f(M) = Gammabar^{(x) f} (x) M over M2, with all ground coefficients
normalized to the far left (crossing a letter rightward-to-leftward applies
eta_R: x (x) c y = x.eta_R(c) (x) y).  Basis words are

    tau^i rho^j [gamma_1 | ... | gamma_f] m

with gamma_k non-unit monomials of the level algebroid and m a basis element
of M.  The differential has f + 2 faces and is only F2-linear:

    d(c [w] m) = [etabar_R(c) | w] m                    (coefficient face)
               + c * sum_i [.. | Deltabar gamma_i | ..] m
               + c * [w | psibar(m)]

where etabar_R(c) = eta_R(c) - c.1 and unit tensor factors are dropped
(reduced complex); coefficients produced in inner slots are pushed to the
front through eta_R.  d o d = 0 is asserted while building matrices.

This complex is the definitional description of Ext and serves as the
cross-validation oracle for the resolution engine (resolve.py), which is
asymptotically much faster.  It is also the home of Massey products, via the
concatenation product of cocycles.
"""

from __future__ import annotations

import itertools

from . import linalg
from .comod import Comodule
from .dualsteenrod import UNIT, Mono
from .ground import ONE, G, GroundElement, TriDegree
from .hopf import Algebroid, make_algebroid

# A word is (i, j, letters, m): tau^i rho^j [letters] m_index.
Word = tuple


class CobarComplex:
    def __init__(self, M: Comodule):
        self.M = M
        self.A: Algebroid = M.algebroid
        self.letters = [g for g in self.A.basis if g != UNIT]
        import a1ext.dualsteenrod as ds
        self.ldeg = {g: ds.mono_degree(g) for g in self.letters}
        self._push_cache: dict = {}
        self._buckets: list = [{(0, 0): [()]}]

    # -- normalization ------------------------------------------------------
    def push_left(self, letters: tuple, c: GroundElement) -> dict:
        """Move a coefficient sitting right of `letters` to the front.

        Returns {new_letters: GroundElement}; new_letters has the same length.
        """
        if not letters:
            return {(): c}
        out: dict = {}
        for (i, j) in c.terms:
            key = (letters, i, j)
            res = self._push_cache.get(key)
            if res is None:
                res = {}
                last = letters[-1]
                prod = self.A.multiply({last: ONE}, self.A.eta_r(G(i, j)))
                for gm, cp in prod.items():
                    assert gm != UNIT
                    for pre, cpre in self.push_left(letters[:-1], cp).items():
                        linalg.acc_dict(res, pre + (gm,), cpre)
                self._push_cache[key] = res
            for w2, c2 in res.items():
                linalg.acc_dict(out, w2, c2)
        return out

    # -- slice bookkeeping ----------------------------------------------------
    def word_degree(self, word: Word) -> TriDegree:
        i, j, letters, mi = word
        t = sum(self.ldeg[g][0] for g in letters) + self.M.degrees[mi].t - j
        w = (sum(self.ldeg[g][1] for g in letters) + self.M.degrees[mi].w
             - i - j)
        f = len(letters)
        return TriDegree(t - f, f, w)

    def _letter_buckets(self, f: int) -> dict:
        """Letter tuples of length f grouped by (total t, total w)."""
        while len(self._buckets) <= f:
            prev, nxt = self._buckets[-1], {}
            for (lt, lw), tups in prev.items():
                for g in self.letters:
                    gt, gw = self.ldeg[g]
                    nxt.setdefault((lt + gt, lw + gw), []).extend(
                        tup + (g,) for tup in tups)
            self._buckets.append(nxt)
        return self._buckets[f]

    def basis(self, s: int, f: int, w: int) -> list[Word]:
        """All basis words in tridegree (s, f, w)."""
        if f < 0:
            return []
        out = []
        has_rho = self.M.scalars_have_rho()
        t = s + f
        for (lt, lw), tups in self._letter_buckets(f).items():
            for mi, dm in enumerate(self.M.degrees):
                j = lt + dm.t - t
                i = lw + dm.w - w - j
                if i >= 0 and j >= 0 and (has_rho or j == 0):
                    out.extend((i, j, letters, mi) for letters in tups)
        return out

    # -- differential ---------------------------------------------------------
    def _acc_word(self, out: dict, letters: tuple, c: GroundElement, mi: int,
                  scale: GroundElement) -> None:
        for (ci, cj) in (scale * c).terms:
            key = (ci, cj, letters, mi)
            if key in out:
                del out[key]
            else:
                out[key] = True

    def differential(self, word: Word) -> list[Word]:
        i, j, letters, mi = word
        out: dict = {}
        c = G(i, j)
        mod_rho_kill = self.M.rho_killed or self.M.base == "C"
        # face 0: etabar_R of the coefficient becomes a new first letter
        eta = self.A.eta_r(c)
        for gm, cg in eta.items():
            if gm == UNIT:
                continue
            for (ci, cj) in cg.terms:
                self._acc_word(out, (gm,) + letters, ONE, mi, G(ci, cj))
        # faces 1..f: reduced Delta of each letter, coefficient pushed left
        for pos, gm in enumerate(letters):
            for (l, r), cd in self.A.comultiply({gm: ONE}).items():
                if l == UNIT or r == UNIT:
                    continue
                for pre, cp in self.push_left(letters[:pos], cd).items():
                    nl = pre + (l, r) + letters[pos + 1:]
                    self._acc_word(out, nl, cp, mi, c)
        # face f+1: reduced coaction on m, coefficient pushed left
        for (g, cg, mj) in self.M.coaction[mi]:
            if g == UNIT:
                continue
            for pre, cp in self.push_left(letters, cg).items():
                self._acc_word(out, pre + (g,), cp, mj, c)
        if mod_rho_kill:
            return [w for w in out if w[1] == 0]
        return list(out)

    def _matrix(self, basis: list[Word], index_up: dict) -> list[int]:
        rows = []
        for word in basis:
            v = 0
            for w2 in self.differential(word):
                pos = index_up.get(w2)
                assert pos is not None, f"differential leaves the slice: {w2}"
                v ^= 1 << pos
            rows.append(v)
        return rows

    def d_squared_check(self, s: int, f: int, w: int) -> None:
        b0 = self.basis(s, f, w)
        b1 = self.basis(s - 1, f + 1, w)
        b2 = self.basis(s - 2, f + 2, w)
        i1 = {x: i for i, x in enumerate(b1)}
        i2 = {x: i for i, x in enumerate(b2)}
        m0 = self._matrix(b0, i1)
        m1 = self._matrix(b1, i2)
        for r in m0:
            v = 0
            for i in range(len(b1)):
                if (r >> i) & 1:
                    v ^= m1[i]
            if v:
                raise AssertionError(
                    f"d^2 != 0 at ({s},{f},{w}); witness word index in slice")

    def ext_dim(self, s: int, f: int, w: int, check: bool = True) -> int:
        if check:
            self.d_squared_check(s, f, w)
        b0 = self.basis(s + 1, f - 1, w) if f >= 1 else []
        b1 = self.basis(s, f, w)
        b2 = self.basis(s - 1, f + 1, w)
        i1 = {x: i for i, x in enumerate(b1)}
        i2 = {x: i for i, x in enumerate(b2)}
        m1 = self._matrix(b1, i2)
        cycles = len(b1) - linalg.rank_of_rows(m1)
        bdry = linalg.rank_of_rows(self._matrix(b0, i1)) if f >= 1 else 0
        return cycles - bdry

# ---------------------------------------------------------------------------
# cochain algebra (concatenation product) and Massey products

def _word_mul(C: CobarComplex, w1: Word, w2: Word) -> dict:
    """Concatenation product of two basis words (coefficients of the
    second word are pushed left through the letters of the first)."""
    i1, j1, l1, m1 = w1
    i2, j2, l2, m2 = w2
    assert m1 == 0 and C.M.rank == 1, "cochain products need M = M2"
    out: dict = {}
    for pre, cp in C.push_left(l1, G(i2, j2)).items():
        for (ci, cj) in (G(i1, j1) * cp).terms:
            key = (ci, cj, pre + l2, m2)
            if key in out:
                del out[key]
            else:
                out[key] = True
    return out


def cochain_mul(C: CobarComplex, ws1, ws2) -> list:
    out: dict = {}
    for w1 in ws1:
        for w2 in ws2:
            for w in _word_mul(C, w1, w2):
                if w in out:
                    del out[w]
                else:
                    out[w] = True
    return list(out)


class CobarExtSlice:
    """Cohomology of one cobar tridegree slice with chosen representatives."""

    def __init__(self, C: CobarComplex, s: int, f: int, w: int):
        self.C, self.deg = C, TriDegree(s, f, w)
        self.basis = C.basis(s, f, w)
        self.index = {x: i for i, x in enumerate(self.basis)}
        up = C.basis(s - 1, f + 1, w)
        iup = {x: i for i, x in enumerate(up)}
        rows = C._matrix(self.basis, iup)
        cycles = linalg.nullspace_of_rows(rows)
        boundaries = []
        if f >= 1:
            dn = C.basis(s + 1, f - 1, w)
            boundaries = C._matrix(dn, self.index)
        self.sq = linalg.Subquotient(boundaries, cycles)

    @property
    def dim(self) -> int:
        return self.sq.dim

    def words_to_vec(self, words) -> int:
        v = 0
        for word in words:
            pos = self.index.get(word)
            assert pos is not None, f"word {word} not in slice {self.deg}"
            v ^= 1 << pos
        return v

    def coords(self, words) -> int | None:
        return self.sq.coords(self.words_to_vec(words))

    def rep_words(self, i: int) -> list:
        v = self.sq.reps[i]
        out = []
        j = 0
        while v:
            if v & 1:
                out.append(self.basis[j])
            v >>= 1
            j += 1
        return out


def solve_dx(C: CobarComplex, target_words, s: int, f: int, w: int):
    """Find a cochain u in C^f(s,f,w) with d(u) = target (in (s-1,f+1,w)),
    or None."""
    b0 = C.basis(s, f, w)
    b1 = C.basis(s - 1, f + 1, w)
    i1 = {x: i for i, x in enumerate(b1)}
    rows = C._matrix(b0, i1)
    tv = 0
    for word in target_words:
        tv ^= 1 << i1[word]
    combo = linalg.solve(rows, tv)
    if combo is None:
        return None
    return [b0[i] for i in range(len(b0)) if (combo >> i) & 1]


class ExtClass:
    """A named Ext class with a cobar cocycle representative."""

    def __init__(self, name: str, deg: TriDegree, words: list):
        self.name, self.deg, self.words = name, deg, list(words)

    def __repr__(self):
        return f"ExtClass({self.name}, {tuple(self.deg)})"


def named_ext_class(base: str, level: int, name: str) -> ExtClass:
    """Cobar representatives of the named Ext(M2) generators.

    h0 = [taubar0], h1 = [xibar1], rho and tau4 are scalars, and
    tau_h1 = tau[xibar1] + rho[taubar1]; the remaining named classes are
    located by deterministic slice search at their tridegrees.
    """
    import a1ext.dualsteenrod as ds
    from .resolve import NAMED_DEGREES
    t0, x1, t1 = ds.gen_tau(0), ds.gen_xi(1), ds.gen_tau(1)
    deg = NAMED_DEGREES[name]
    if name == "h0":
        words = [(0, 0, (t0,), 0)]
    elif name == "h1":
        words = [(0, 0, (x1,), 0)]
    elif name == "rho":
        words = [(0, 1, (), 0)] if base == "R" else []
    elif name == "tau4":
        words = [(4, 0, (), 0)]
    elif name == "tau_h1":
        words = ([(1, 0, (x1,), 0), (0, 1, (t1,), 0)] if base == "R"
                 else [(1, 0, (x1,), 0)])
    else:
        from .comod import trivial_M2
        C = CobarComplex(trivial_M2(base, level))
        sl = CobarExtSlice(C, deg.s, deg.f, deg.w)
        assert sl.dim == 1, f"slice search for {name}: dim {sl.dim}"
        words = sl.rep_words(0)
    return ExtClass(name, deg, words)


def massey_triple(alpha: ExtClass, beta: ExtClass, gamma: ExtClass,
                  M) -> dict:
    """The triple Massey product <alpha, beta, gamma> in cobar cohomology.

    Returns {"degree", "defined", "classes" (coords of one representative),
    "slice" (the CobarExtSlice), "indeterminacy_dim"}.  Requires M = M2
    (the cochain concatenation product is only implemented there).
    """
    C = CobarComplex(M)
    da, db, dg = alpha.deg, beta.deg, gamma.deg
    # bounding cochains: d(u) = alpha.beta, d(v) = beta.gamma
    ab = cochain_mul(C, alpha.words, beta.words)
    bg = cochain_mul(C, beta.words, gamma.words)
    u = solve_dx(C, ab, da.s + db.s + 1, da.f + db.f - 1, da.w + db.w)
    v = solve_dx(C, bg, db.s + dg.s + 1, db.f + dg.f - 1, db.w + dg.w)
    if u is None or v is None:
        return {"defined": False,
                "reason": "a product does not bound (hypotheses fail)"}
    rep = cochain_mul(C, u, gamma.words) + cochain_mul(C, alpha.words, v)
    # cancel duplicated words (char 2)
    acc: dict = {}
    for word in rep:
        if word in acc:
            del acc[word]
        else:
            acc[word] = True
    deg = TriDegree(da.s + db.s + dg.s + 1, da.f + db.f + dg.f - 1,
                    da.w + db.w + dg.w)
    sl = CobarExtSlice(C, deg.s, deg.f, deg.w)
    coords = sl.coords(list(acc))
    # indeterminacy: alpha.Ext^{x} + Ext^{y}.gamma inside the target slice
    ind = linalg.Echelon()
    x = CobarExtSlice(C, deg.s - da.s, deg.f - da.f, deg.w - da.w)
    for i in range(x.dim):
        ind.add(sl.coords(cochain_mul(C, alpha.words, x.rep_words(i))) or 0)
    y = CobarExtSlice(C, deg.s - dg.s, deg.f - dg.f, deg.w - dg.w)
    for i in range(y.dim):
        ind.add(sl.coords(cochain_mul(C, y.rep_words(i), gamma.words)) or 0)
    return {"defined": True, "degree": deg, "classes": coords, "slice": sl,
            "indeterminacy_dim": ind.rank}


# ---------------------------------------------------------------------------
# CobarSlice (the spec's literal slice object)

class CobarSlice:
    """One tridegree of the reduced cobar complex with its differential
    matrix to filtration f+1; d.d = 0 is verified on construction."""

    def __init__(self, M, d: TriDegree):
        self.M, self.deg = M, TriDegree(*d)
        C = CobarComplex(M)
        C.d_squared_check(self.deg.s, self.deg.f, self.deg.w)
        self.complex = C
        self.basis = C.basis(self.deg.s, self.deg.f, self.deg.w)
        up = C.basis(self.deg.s - 1, self.deg.f + 1, self.deg.w)
        self.basis_up = up
        iup = {x: i for i, x in enumerate(up)}
        self.matrix = C._matrix(self.basis, iup)


def build_slice(M, d) -> CobarSlice:
    return CobarSlice(M, TriDegree(*d))

# ---------------------------------------------------------------------------
# chart front end (resolution-backed by default, literal cobar on request)

from .chart import ExtChart, OPERATOR_DEGREES, in_range  # noqa: E402
from .resolve import (CocycleLift, Resolution,  # noqa: E402
                      named_cocycle)

_RES_CACHE: dict = {}


def _round_up(x: int, m: int) -> int:
    return ((x + m - 1) // m) * m


def get_resolution(M, fmax: int, t_hi: int, w_hi: int,
                   rng=None) -> Resolution:
    """Cached minimal resolution covering at least the requested region,
    certified adequate for chart slices inside `rng`."""
    fmax, t_hi, w_hi = _round_up(fmax, 4), _round_up(t_hi, 8), _round_up(w_hi, 8)
    key = (M.fingerprint(), fmax, t_hi, w_hi)
    res = _RES_CACHE.get(key)
    if res is None:
        res = Resolution(M, fmax=fmax, t_hi=t_hi, w_hi=w_hi)
        _RES_CACHE[key] = res
    ok, issues = res.certify(rng)
    if not ok:
        raise RuntimeError(
            "resolution region too small to certify: " + "; ".join(issues))
    return res


def _region_for(M, rng, f_extra: int = 2):
    """Region big enough for the weight-bound certificate (resolve.certify):
    generators at filtration f live in weight <= f + shift, so coefficients
    tau^a rho^b hitting a chart slice have b <= f + shift - wmin."""
    smax, fmax, wmin, wmax = rng[0][1], rng[1][1], rng[2][0], rng[2][1]
    shift = max([d.w for d in M.degrees] + [0])
    fr = fmax + f_extra
    fc = fmax + 1                       # coboundary level of the top slices
    t_hi = smax + fc + (fc + shift - wmin) + 4
    w_hi = max(fr + shift + 8, wmax + 4)
    return fr, t_hi, w_hi


def _named(res_m2: Resolution):
    out = {}
    for name in OPERATOR_DEGREES:
        d, psi = named_cocycle(res_m2, name)
        out[name] = (d, psi)
    return out


def _resolutions_for(M, rng, f_extra: int = 2):
    """(res of M, res of the matching trivial comodule, named cocycles)."""
    from .comod import trivial_M2
    fmax, t_hi, w_hi = _region_for(M, rng, f_extra)
    res = get_resolution(M, fmax, t_hi, w_hi, rng)
    # rho-killed comodules are computed after base change to C (resolve.py)
    triv = trivial_M2(res.base, res.level)
    res_m2 = get_resolution(triv, fmax, t_hi, w_hi, rng)
    return res, res_m2


def ext_dimensions(M, rng, method: str = "resolution",
                   actions=(), label: str | None = None) -> ExtChart:
    """Ext chart of a comodule over a finite range.

    method "resolution" (default): minimal free resolution of the dual
    module; method "cobar": the literal reduced cobar complex (slow; used
    as the definitional cross-check).
    """
    chart = ExtChart(M.base, label or M.name, tuple(tuple(x) for x in rng))
    (smin, smax), (fmin, fmax), (wmin, wmax) = chart.rng
    if method == "cobar":
        C = CobarComplex(M)
        for s in range(smin, smax + 1):
            for f in range(max(fmin, 0), fmax + 1):
                for w in range(wmin, wmax + 1):
                    d = C.ext_dim(s, f, w, check=False)
                    if d:
                        chart.dims[(s, f, w)] = d
        return chart
    assert method == "resolution", f"unknown method {method!r}"
    res, res_m2 = _resolutions_for(M, rng)
    chart.dims = res.ext_dims((smin, smax), (fmin, fmax), (wmin, wmax))
    for name in actions:
        act(name, chart, M)
    return chart


def act(name: str, chart: ExtChart, M) -> ExtChart:
    """Record the action of a named Ext(M2) class on every chart class.

    Out-of-range targets are stored as None and border-flag the source.
    """
    res, res_m2 = _resolutions_for(M, chart.rng)
    deg, psi = named_cocycle(res_m2, name)
    table: dict = {}
    for (s, f, w) in sorted(chart.dims):
        sl = res.ext_slice(s, f, w)
        tgt = (s + deg.s, f + deg.f, w + deg.w)
        tgt_in = in_range(chart.rng, *tgt)
        tsl = res.ext_slice(*tgt) if tgt_in else None
        for i in range(sl.dim):
            if tgt_in:
                lift = CocycleLift(res, res_m2, f, sl.rep(i))
                prod = lift.compose(psi, deg.f)
                v = tsl.coords(prod)
                assert v is not None, "product left the computed subquotient"
                table[((s, f, w), i)] = v
            else:
                table[((s, f, w), i)] = None
                chart.border.add((s, f, w))
    chart.actions[name] = table
    return chart


def f0_line(M, rng) -> ExtChart:
    """The filtration-0 line Ext^{s,0,w} = comodule primitives, computed
    from the literal cobar complex (independently of the resolution)."""
    chart = ExtChart(M.base, f"{M.name} (f=0)",
                     (tuple(rng[0]), (0, 0), tuple(rng[2])))
    C = CobarComplex(M)
    for s in range(rng[0][0], rng[0][1] + 1):
        for w in range(rng[2][0], rng[2][1] + 1):
            d = C.ext_dim(s, 0, w, check=False)
            if d:
                chart.dims[(s, 0, w)] = d
    return chart


def b_torsion_quotient(chart: ExtChart, M, n_steps: int = 2) -> ExtChart:
    """Quotient by classes annihilated by a power of b within reach."""
    return torsion_quotient(chart, M, "b", n_steps)


def torsion_quotient(chart: ExtChart, M, op: str = "b",
                     n_steps: int = 2) -> ExtChart:
    """Quotient by classes annihilated by a power of the named operator.

    Follows op-chains n_steps beyond each class (using the resolution past
    the chart range).  A tridegree whose kernel chain has not stabilized
    when the chain leaves the computed region is flagged uncertified
    (border) instead of being classified.
    """
    bdeg = OPERATOR_DEGREES[op]
    rng = chart.rng
    ext_rng = ((rng[0][0], rng[0][1] + n_steps * bdeg[0]),
               (rng[1][0], rng[1][1] + n_steps * bdeg[1]),
               (rng[2][0], rng[2][1] + n_steps * bdeg[2]))
    res, res_m2 = _resolutions_for(M, ext_rng, f_extra=2)
    _, psi_b = named_cocycle(res_m2, op)
    out = ExtChart(chart.base, f"{chart.module} mod {op}-torsion", chart.rng)
    out.border = set(chart.border)
    for (s, f, w) in sorted(chart.dims):
        sl = res.ext_slice(s, f, w)
        # composite b^k matrices as rows over the k-th target slice
        rows = [1 << i for i in range(sl.dim)]  # identity (k = 0)
        kdims = [0]
        cur = sl
        certified = False
        for step in range(1, n_steps + 1):
            tgt = (s + step * bdeg[0], f + step * bdeg[1], w + step * bdeg[2])
            if tgt[1] + 1 > res.fmax:
                break
            tsl = res.ext_slice(*tgt)
            new_rows = []
            for v in rows:
                acc: dict = {}
                i = 0
                vv = v
                while vv:
                    if vv & 1:
                        lift = CocycleLift(res, res_m2, cur.deg.f,
                                           cur.rep(i))
                        for k2, c in lift.compose(psi_b, bdeg[1]).items():
                            linalg.acc_dict(acc, k2, c)
                    vv >>= 1
                    i += 1
                co = tsl.coords(acc)
                assert co is not None
                new_rows.append(co)
            rows, cur = new_rows, tsl
            k = sl.dim - linalg.rank_of_rows(rows)
            kdims.append(k)
            if k == kdims[-2]:
                certified = True
                break
        torsion = kdims[-1]
        if not certified and sl.dim - torsion > 0:
            out.border.add((s, f, w))
        if sl.dim - torsion > 0:
            out.dims[(s, f, w)] = sl.dim - torsion
    return out
