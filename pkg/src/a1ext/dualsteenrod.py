"""Arithmetic in the (motivic) dual Steenrod algebroid A-dual.

Over the ground ring M2 (base 'C': F2[tau], base 'R': F2[tau, rho]) the dual
Steenrod algebra is generated by the conjugates xibar_k (k >= 1) and
taubar_k (k >= 0) subject to

    taubar_k^2 = rho * taubar_{k+1} + tau * xibar_{k+1}   (base 'R')
    taubar_k^2 = tau * xibar_{k+1}                        (base 'C')

(The frequently quoted relation with an extra rho*taubar_0*xibar_{k+1} term
is the one for the unconjugated Milnor generators; applying the antipode
cancels that term.  With the conjugate comultiplication below, only this
form satisfies coassociativity and multiplicativity of Delta over base 'R'.)

Canonical basis monomials therefore have square-free taubar part.  A monomial
is stored as a pair of tuples (xi, tau): xi[i] is the exponent of xibar_{i+1},
tau[i] in {0, 1} is the exponent of taubar_i, both with trailing zeros removed.

Degrees (stem, weight), filtration 0:
    xibar_k:  (2^{k+1} - 2, 2^k - 1)     taubar_k: (2^{k+1} - 1, 2^k - 1)
Mahowald weight: wt(xibar_k) = wt(taubar_k) = 2^k.

Comultiplication on the conjugate generators:
    Delta(xibar_n)  = sum_{i+j=n} xibar_i (x) xibar_j^{2^i}
    Delta(taubar_n) = sum_{i+j=n} taubar_i (x) xibar_j^{2^i} + 1 (x) taubar_n

Right unit: eta_R(tau) = tau + rho * taubar_0, eta_R(rho) = rho.

Elements are dicts {monomial: GroundElement}; tensors are dicts
{(mono_left, mono_right): GroundElement} with all ground coefficients
normalized to the far left (moving a coefficient leftward across a tensor
sign applies eta_R).
"""

from __future__ import annotations

from functools import lru_cache

from .ground import ZERO, ONE, GroundElement, G

Mono = tuple[tuple[int, ...], tuple[int, ...]]

UNIT: Mono = ((), ())


def _strip(t: tuple[int, ...]) -> tuple[int, ...]:
    n = len(t)
    while n and t[n - 1] == 0:
        n -= 1
    return t[:n]


def make_mono(xi=(), tau=()) -> Mono:
    return (_strip(tuple(xi)), _strip(tuple(tau)))


def gen_xi(k: int) -> Mono:
    """xibar_k, k >= 1."""
    return make_mono((0,) * (k - 1) + (1,), ())


def gen_tau(k: int) -> Mono:
    """taubar_k, k >= 0."""
    return make_mono((), (0,) * k + (1,))


def mono_degree(m: Mono) -> tuple[int, int]:
    """(stem, weight); homological filtration is 0."""
    xi, tau = m
    s = sum(e * (2 ** (i + 2) - 2) for i, e in enumerate(xi))
    w = sum(e * (2 ** (i + 1) - 1) for i, e in enumerate(xi))
    s += sum(e * (2 ** (i + 1) - 1) for i, e in enumerate(tau))
    w += sum(e * (2 ** i - 1) for i, e in enumerate(tau))
    return (s, w)


def mono_weight(m: Mono) -> int:
    """Mahowald weight: 2^k per xibar_k / taubar_k factor."""
    xi, tau = m
    return sum(e * 2 ** (i + 1) for i, e in enumerate(xi)) + sum(
        e * 2 ** i for i, e in enumerate(tau)
    )


def mono_text(m: Mono) -> str:
    xi, tau = m
    parts = []
    for i, e in enumerate(tau):
        if e:
            parts.append(f"tb{i}")
    for i, e in enumerate(xi):
        if e == 1:
            parts.append(f"xb{i + 1}")
        elif e:
            parts.append(f"xb{i + 1}^{e}")
    return " ".join(parts) if parts else "1"


Elem = dict  # Mono -> GroundElement
Tensor = dict  # (Mono, Mono) -> GroundElement


def _acc(d: dict, key, c: GroundElement) -> None:
    cur = d.get(key)
    new = c if cur is None else cur + c
    if new:
        d[key] = new
    elif cur is not None:
        del d[key]


def elem_add(a: Elem, b: Elem) -> Elem:
    out = dict(a)
    for m, c in b.items():
        _acc(out, m, c)
    return out


def tau_squared(i: int, base: str) -> Elem:
    """The relation value of taubar_i^2 as a canonical element."""
    out: Elem = {gen_xi(i + 1): G(1)}  # tau * xibar_{i+1}
    if base == "R":
        _acc(out, gen_tau(i + 1), G(0, 1))  # rho * taubar_{i+1}
    return out


def _reduce_mono(xi: tuple, tau: tuple, base: str) -> Elem:
    """Rewrite a monomial with possibly repeated taubar factors canonically."""
    for i, e in enumerate(tau):
        if e >= 2:
            rest = list(tau)
            rest[i] -= 2
            rel = tau_squared(i, base)
            out: Elem = {}
            for m, c in elem_mul({make_mono(xi, rest): ONE}, rel, base).items():
                _acc(out, m, c)
            return out
    return {make_mono(xi, tau): ONE}


def mono_mul(m1: Mono, m2: Mono, base: str) -> Elem:
    xi1, tau1 = m1
    xi2, tau2 = m2
    n = max(len(xi1), len(xi2))
    xi = tuple(
        (xi1[i] if i < len(xi1) else 0) + (xi2[i] if i < len(xi2) else 0)
        for i in range(n)
    )
    n = max(len(tau1), len(tau2))
    tau = tuple(
        (tau1[i] if i < len(tau1) else 0) + (tau2[i] if i < len(tau2) else 0)
        for i in range(n)
    )
    return _reduce_mono(xi, tau, base)


def elem_mul(a: Elem, b: Elem, base: str) -> Elem:
    out: Elem = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            c = c1 * c2
            for m, cm in mono_mul(m1, m2, base).items():
                _acc(out, m, c * cm)
    return out


def elem_scale(a: Elem, c: GroundElement) -> Elem:
    return {m: cm * c for m, cm in a.items() if cm * c}


@lru_cache(maxsize=None)
def _eta_r_tau_pow(i: int, base: str) -> tuple:
    """eta_R(tau^i) as a tuple of (mono, coeff) pairs (cached)."""
    if base == "C":
        return ((UNIT, G(i)),)
    if i == 0:
        return ((UNIT, ONE),)
    prev = dict(_eta_r_tau_pow(i - 1, base))
    step: Elem = {UNIT: G(1), gen_tau(0): G(0, 1)}  # tau + rho taubar_0
    out = elem_mul(prev, step, base)
    return tuple(sorted(out.items()))


def eta_r(c: GroundElement, base: str) -> Elem:
    """eta_R of a ground element, as an element of A-dual."""
    out: Elem = {}
    for i, j in c.terms:
        for m, cm in _eta_r_tau_pow(i, base):
            _acc(out, m, cm.scale(0, j))
    return out


def tensor_mul(t1: Tensor, t2: Tensor, base: str) -> Tensor:
    """Product in A-dual (x) A-dual, ground coefficients kept far left."""
    out: Tensor = {}
    for (l1, r1), c1 in t1.items():
        for (l2, r2), c2 in t2.items():
            c = c1 * c2
            lt = mono_mul(l1, l2, base)
            rt = mono_mul(r1, r2, base)
            for mr, cr in rt.items():
                # cr sits immediately left of mr: cross the tensor sign.
                left = elem_mul(lt, eta_r(cr, base), base)
                for ml, cl in left.items():
                    _acc(out, (ml, mr), c * cl)
    return out


@lru_cache(maxsize=None)
def _delta_gen_pow(kind: str, k: int, e: int, base: str) -> tuple:
    """Delta(gen^e) for gen = xibar_k ('x') or taubar_k ('t'), cached."""
    if e == 0:
        return (((UNIT, UNIT), ONE),)
    if e == 1:
        t: Tensor = {}
        if kind == "x":
            for i in range(k + 1):
                j = k - i
                left = gen_xi(i) if i else UNIT
                right = make_mono((0,) * (j - 1) + (2 ** i,), ()) if j else UNIT
                _acc(t, (left, right), ONE)
        else:
            for i in range(k + 1):
                j = k - i
                left = gen_tau(i)
                right = make_mono((0,) * (j - 1) + (2 ** i,), ()) if j else UNIT
                _acc(t, (left, right), ONE)
            _acc(t, (UNIT, gen_tau(k)), ONE)
        return tuple(sorted(t.items()))
    prev = dict(_delta_gen_pow(kind, k, e - 1, base))
    one = dict(_delta_gen_pow(kind, k, 1, base))
    return tuple(sorted(tensor_mul(prev, one, base).items()))


def delta(m: Mono, base: str) -> Tensor:
    """Comultiplication of a canonical basis monomial, in the ambient A-dual."""
    xi, tau = m
    out: Tensor = {(UNIT, UNIT): ONE}
    for i, e in enumerate(tau):
        if e:
            out = tensor_mul(out, dict(_delta_gen_pow("t", i, e, base)), base)
    for i, e in enumerate(xi):
        if e:
            out = tensor_mul(out, dict(_delta_gen_pow("x", i + 1, e, base)), base)
    return out


# ---------------------------------------------------------------------------
# Level algebroids A(1)-dual (level 1) and A(0)-dual (level 0) as quotients.

def level_keeps(m: Mono, level: int) -> bool:
    """Whether an ambient basis monomial survives projection to A(level)-dual."""
    xi, tau = m
    if level == 0:
        return not xi and len(tau) <= 1
    if level == 1:
        return len(xi) <= 1 and (not xi or xi[0] <= 1) and len(tau) <= 2
    raise ValueError(f"unsupported level {level}")


def project_level(e: Elem, level: int) -> Elem:
    return {m: c for m, c in e.items() if level_keeps(m, level)}


def admissible(m: Mono, level: int) -> bool:
    """Whether a monomial lies in the (A || A(level))-dual monomial basis."""
    xi, tau = m
    if level == 0:
        return len(tau) == 0 or tau[0] == 0
    if level == 1:
        return (not tau or tau[0] == 0) and (len(tau) < 2 or tau[1] == 0) and (
            not xi or xi[0] % 2 == 0
        )
    raise ValueError(f"unsupported level {level}")
