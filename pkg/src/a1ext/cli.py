"""Command-line front end: Ext charts, spectral sequences, chart rendering
(text and SVG), chart comparison, named verification suites, and a
content-addressed result cache.

Module expressions follow the grammar

    expr ::= 'S(p,q)' expr | atom ( '*' atom | '/' 'rho' )*
    atom ::= 'M2' | 'B0(k)' | 'B1(k)' | 'A1modA0' | 'AmodA1(wt)' | '(' expr ')'

Ranges are closed integer intervals, written  s=-4..16 f=0..10 w=-8..10 ;
the weight range is mandatory (the rho/tau directions are infinite
otherwise).  Cache directory: --cache-dir flag, else $A1EXT_CACHE, else
.a1ext-cache in the working directory; the cache key hashes the job
together with the package source, so stale results are never served
across code versions.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys

from . import chart as chart_mod
from . import cobar, comod, sseq, zoo
from .chart import ExtChart, OPERATOR_DEGREES, compare

DEFAULT_ACTIONS = {"R": ("rho", "h0", "h1", "tau4"),
                   "C": ("h0", "h1", "tau4")}


# ---------------------------------------------------------------------------
# module expression grammar

class ModuleExprError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_TOKEN = re.compile(r"\s*([A-Za-z][A-Za-z0-9]*|-?\d+|[(),*/])")


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ModuleExprError(f"unexpected character {text[pos]!r}", pos)
        out.append((m.group(1), m.start(1)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def pos(self):
        return self.toks[self.i][1] if self.i < len(self.toks) else len(self.text)

    def take(self, expected=None):
        if self.i >= len(self.toks):
            raise ModuleExprError(
                f"unexpected end of expression, wanted {expected}", self.pos())
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            raise ModuleExprError(f"expected {expected!r}, got {tok!r}", pos)
        self.i += 1
        return tok

    def int_arg(self):
        tok, pos = self.toks[self.i] if self.i < len(self.toks) else (None, self.pos())
        if tok is None or not re.fullmatch(r"-?\d+", tok):
            raise ModuleExprError("expected an integer", pos)
        self.i += 1
        return int(tok)

    def expr(self):
        if self.peek() == "S":
            self.take("S")
            self.take("(")
            p = self.int_arg()
            self.take(",")
            q = self.int_arg()
            self.take(")")
            inner = self.expr()
            return ("shift", p, q, inner)
        node = self.atom()
        while self.peek() in ("*", "/"):
            op = self.take()
            if op == "*":
                node = ("tensor", node, self.atom())
            else:
                pos = self.pos()
                if self.take() != "rho":
                    raise ModuleExprError("only '/ rho' is supported", pos)
                node = ("mod_rho", node)
        return node

    def atom(self):
        tok = self.peek()
        pos = self.pos()
        if tok == "(":
            self.take("(")
            node = self.expr()
            self.take(")")
            return node
        if tok == "M2":
            self.take()
            return ("M2",)
        if tok in ("B0", "B1"):
            self.take()
            self.take("(")
            k = self.int_arg()
            self.take(")")
            return (tok, k)
        if tok == "A1modA0":
            self.take()
            return ("A1modA0",)
        if tok == "AmodA1":
            self.take()
            self.take("(")
            wt = self.int_arg()
            self.take(")")
            return ("AmodA1", wt)
        if tok == "S":
            self.take("S")
            self.take("(")
            p = self.int_arg()
            self.take(",")
            q = self.int_arg()
            self.take(")")
            return ("shift", p, q, self.expr())
        raise ModuleExprError(f"unknown module {tok!r}", pos)


def parse_module_expr(text: str):
    """Parse a module expression; returns a constructor base -> Comodule."""
    parser = _Parser(text)
    tree = parser.expr()
    if parser.i != len(parser.toks):
        raise ModuleExprError("trailing input", parser.pos())

    def build(node, base):
        tag = node[0]
        if tag == "M2":
            return comod.trivial_M2(base)
        if tag == "B0":
            return comod.brown_gitler_B0(base, node[1])
        if tag == "B1":
            return comod.brown_gitler_B1(base, node[1])
        if tag == "A1modA0":
            return comod.quotient_comodule_A1_mod_A0(base)
        if tag == "AmodA1":
            return comod.a_mod_a1_truncated(base, node[1])
        if tag == "shift":
            return comod.shift(build(node[3], base), node[1], node[2])
        if tag == "tensor":
            return comod.tensor(build(node[1], base), build(node[2], base))
        if tag == "mod_rho":
            return comod.quotient_rho(build(node[1], base))
        raise AssertionError(tag)

    return lambda base: build(tree, base)


# ---------------------------------------------------------------------------
# range syntax

def parse_range(tokens) -> tuple:
    got = {}
    for tok in tokens:
        m = re.fullmatch(r"([sfw])=(-?\d+)\.\.(-?\d+)", tok)
        if not m:
            raise ValueError(
                f"bad range component {tok!r}; expected e.g. s=-4..16")
        got[m.group(1)] = (int(m.group(2)), int(m.group(3)))
    missing = [ax for ax in "sfw" if ax not in got]
    if missing:
        raise ValueError(
            f"range must give all of s, f, w (missing {', '.join(missing)})")
    return (got["s"], got["f"], got["w"])


# ---------------------------------------------------------------------------
# content-addressed cache

def _code_version() -> str:
    h = hashlib.sha256()
    pkg = os.path.dirname(__file__)
    for name in sorted(os.listdir(pkg)):
        if name.endswith(".py"):
            with open(os.path.join(pkg, name), "rb") as fh:
                h.update(name.encode())
                h.update(fh.read())
    return h.hexdigest()


def cache_dir(flag: str | None) -> str:
    return flag or os.environ.get("A1EXT_CACHE") or ".a1ext-cache"


def cache_key(job: dict) -> str:
    payload = json.dumps({"job": job, "code": _code_version()},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def cache_get(cdir: str, key: str):
    path = os.path.join(cdir, key + ".json")
    if os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)
    return None


def cache_put(cdir: str, key: str, data: dict) -> None:
    os.makedirs(cdir, exist_ok=True)
    path = os.path.join(cdir, key + ".json")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# chart rendering

def _collapsed(chart: ExtChart, page):
    """(s,f) -> class count with tau^4-translates collapsed: within each
    coweight residue the count is the maximal dim along the w-column."""
    cells: dict = {}
    border: set = set()
    for (s, f, w), d in chart.dims.items():
        if page is not None and (s - w) % 4 != page % 4:
            continue
        if (s, f, w) in chart.border:
            border.add((s, f))
            continue
        if d:
            key = (s, f, (s - w) % 4)
            cells[key] = max(cells.get(key, 0), d)
    out: dict = {}
    for (s, f, _), d in cells.items():
        out[(s, f)] = out.get((s, f), 0) + d
    return out, border


def _lines(chart: ExtChart, page):
    """Structure-line segments ((s,f),(s',f'),op) from nonzero actions."""
    segs = set()
    for op in ("h0", "h1", "rho"):
        table = chart.actions.get(op)
        if not table:
            continue
        dp, df, dq = OPERATOR_DEGREES[op]
        for ((s, f, w), _i), v in table.items():
            if not v:
                continue
            if page is not None and (s - w) % 4 != page % 4:
                continue
            segs.add(((s, f), (s + dp, f + df), op))
    return sorted(segs)


def render_text(chart: ExtChart, page=None) -> str:
    cells, border = _collapsed(chart, page)
    title = chart.module + ("" if page is None else f"  [coweight {page} mod 4]")
    if not cells and not border:
        return title + "\n(empty chart)\n"
    pts = list(cells) + list(border)
    s_lo, s_hi = min(p[0] for p in pts), max(p[0] for p in pts)
    f_lo, f_hi = min(p[1] for p in pts), max(p[1] for p in pts)
    rows = [title]
    for f in range(f_hi, f_lo - 1, -1):
        row = [f"{f:3d} |"]
        for s in range(s_lo, s_hi + 1):
            d = cells.get((s, f), 0)
            mark = "." if (s, f) in border and not d else (
                " " if not d else (str(d) if d < 10 else "#"))
            row.append(f" {mark} ")
        rows.append("".join(row))
    rows.append("    +" + "---" * (s_hi - s_lo + 1))
    rows.append("     " + "".join(f"{s:^3d}" for s in range(s_lo, s_hi + 1)))
    rows.append("('.' = uncertified border cell; counts collapse tau^4-translates)")
    return "\n".join(rows) + "\n"


_SVG_STYLE = {"h0": ("#000000", "none"), "h1": ("#000000", "none"),
              "rho": ("#777777", "4,3")}


def render_svg(chart: ExtChart, page=None) -> str:
    cells, border = _collapsed(chart, page)
    pts = list(cells) + list(border) or [(0, 0)]
    s_lo, s_hi = min(p[0] for p in pts) - 1, max(p[0] for p in pts) + 1
    f_lo, f_hi = min(min(p[1] for p in pts) - 1, 0), max(p[1] for p in pts) + 1
    unit = 28
    wpx = (s_hi - s_lo + 1) * unit + 40
    hpx = (f_hi - f_lo + 1) * unit + 40

    def X(s):
        return 30 + (s - s_lo) * unit

    def Y(f):
        return hpx - 30 - (f - f_lo) * unit

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{wpx}" height="{hpx}" viewBox="0 0 {wpx} {hpx}">',
           f'<rect width="{wpx}" height="{hpx}" fill="white"/>']
    title = chart.module + ("" if page is None else f" [cw={page} mod 4]")
    out.append(f'<text x="8" y="14" font-size="11" font-family="monospace">'
               f'{title}</text>')
    # shaded border cells
    for (s, f) in sorted(border):
        out.append(f'<rect x="{X(s) - unit // 2}" y="{Y(f) - unit // 2}" '
                   f'width="{unit}" height="{unit}" fill="#dddddd"/>')
    # axes
    out.append(f'<line x1="{X(s_lo)}" y1="{Y(f_lo)}" x2="{X(s_hi)}" '
               f'y2="{Y(f_lo)}" stroke="#aaaaaa"/>')
    out.append(f'<line x1="{X(s_lo)}" y1="{Y(f_lo)}" x2="{X(s_lo)}" '
               f'y2="{Y(f_hi)}" stroke="#aaaaaa"/>')
    for s in range(s_lo, s_hi + 1, max(1, (s_hi - s_lo) // 16)):
        out.append(f'<text x="{X(s) - 4}" y="{Y(f_lo) + 16}" font-size="9" '
                   f'font-family="monospace">{s}</text>')
    for f in range(f_lo, f_hi + 1):
        out.append(f'<text x="{X(s_lo) - 18}" y="{Y(f) + 3}" font-size="9" '
                   f'font-family="monospace">{f}</text>')
    # structure lines (h0 vertical, h1 diagonal, rho horizontal)
    for (a, b, op) in _lines(chart, page):
        if a not in cells or b not in cells:
            continue
        color, dash = _SVG_STYLE[op]
        dash_attr = "" if dash == "none" else f' stroke-dasharray="{dash}"'
        out.append(f'<line x1="{X(a[0])}" y1="{Y(a[1])}" x2="{X(b[0])}" '
                   f'y2="{Y(b[1])}" stroke="{color}"{dash_attr}/>')
    # classes (tau^4-translates already collapsed)
    for (s, f), d in sorted(cells.items()):
        out.append(f'<circle cx="{X(s)}" cy="{Y(f)}" r="4" fill="black"/>')
        if d > 1:
            out.append(f'<text x="{X(s) + 5}" y="{Y(f) - 5}" font-size="9" '
                       f'font-family="monospace">{d}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# named verification suites

def _suite_tables_1_2(rng, report):
    """Ext(M2^R) from the resolution equals the 9-generator/22-relation
    presentation; f = 0 line is the polynomial algebra on tau^4, rho."""
    acts = ("rho", "h0", "h1", "tau4")
    computed = cobar.ext_dimensions(
        comod.trivial_M2("R"), rng, actions=acts)
    expected = zoo.ext_m2_chart("R", rng)
    diff = compare(expected, computed, rng=rng, action_names=acts)
    report.append(("ext-m2-r chart+actions", diff.empty, diff))
    f0 = cobar.f0_line(comod.trivial_M2("R"), rng)
    want = {k: d for k, d in expected.dims.items() if k[1] == 0}
    have = {k: d for k, d in f0.dims.items() if k[1] == 0 and d}
    report.append(("ext-m2-r f=0 line", want == have, None))


def _suite_ext_m2_c(rng, report):
    acts = ("h0", "h1", "a", "b")
    computed = cobar.ext_dimensions(
        comod.trivial_M2("C"), rng, actions=acts)
    expected = zoo.ext_m2_chart("C", rng)
    diff = compare(expected, computed, rng=rng, action_names=acts)
    report.append(("ext-m2-c chart+actions", diff.empty, diff))


def _suite_b01_pages(rng, report):
    acts = ("rho", "h0", "h1", "tau4")
    M = comod.brown_gitler_B0("R", 1)
    computed = cobar.torsion_quotient(
        cobar.ext_dimensions(M, rng, actions=acts), M, "b", 2)
    cw1 = computed.coweight_page(1)
    live = {k: d for k, d in cw1.dims.items()
            if d and k not in computed.border}
    report.append(("b01 coweight-1 page empty", not live, live or None))
    expected = zoo.z_chart(1, "R", rng)
    diff = compare(expected, computed, rng=rng, action_names=acts)
    report.append(("b01 equals Z_1 chart", diff.empty, diff))


def _suite_e2_page(rng, report):
    acts = ("rho", "h0", "h1", "tau4")
    kmax = max(0, (rng[0][1] - rng[2][0] // 2) // 4)
    parts = []
    for k in range(0, kmax + 1):
        M = comod.trivial_M2("R") if k == 0 else comod.brown_gitler_B0("R", k)
        r2 = ((rng[0][0] - 4 * k, rng[0][1] - 4 * k), rng[1],
              (rng[2][0] - 2 * k, rng[2][1] - 2 * k))
        c = cobar.ext_dimensions(M, r2, actions=acts)
        c = cobar.torsion_quotient(c, M, "b", 2)
        parts.append(c.shift(4 * k, 2 * k))
    computed = zoo.sum_charts(parts, "R", "computed E2", rng)
    predicted, _bound = zoo.predicted_e2_coop("R", kmax, rng)
    diff = compare(predicted, computed, rng=rng, action_names=acts)
    report.append((f"e2 page k<={kmax}", diff.empty, diff))
    offenders = zoo.tau4_periodic(predicted, rng)
    report.append(("e2 tau4-periodicity", not offenders, offenders or None))


SUITES = {
    "tables-1-2": (_suite_tables_1_2, ((-8, 12), (0, 8), (-10, 10))),
    "tables-4-1": (_suite_tables_1_2, ((-8, 12), (0, 8), (-10, 10))),
    "ext-m2-c": (_suite_ext_m2_c, ((0, 16), (0, 8), (-2, 10))),
    "b01-pages": (_suite_b01_pages, ((-2, 9), (0, 4), (-4, 9))),
    "e2-page": (_suite_e2_page, ((-2, 10), (0, 4), (-4, 8))),
}


# ---------------------------------------------------------------------------
# commands

def _emit_chart(chart: ExtChart, args) -> None:
    if args.json:
        chart.dump(args.json)
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(render_svg(chart, args.coweight))
    if not args.json and not args.svg:
        sys.stdout.write(render_text(chart, args.coweight))


def cmd_ext(args) -> int:
    rng = parse_range(args.range)
    job = {"command": "ext", "base": args.base, "module": args.module,
           "range": [list(x) for x in rng], "mod_b": args.mod_b,
           "actions": sorted(args.actions)}
    cdir = cache_dir(args.cache_dir)
    key = cache_key(job)
    data = cache_get(cdir, key)
    if data is None:
        M = parse_module_expr(args.module)(args.base)
        acts = tuple(args.actions)
        chart = cobar.ext_dimensions(M, rng, actions=acts)
        if args.mod_b:
            chart = cobar.torsion_quotient(chart, M, "b", 2)
        data = chart.to_json()
        cache_put(cdir, key, data)
    chart = ExtChart.from_json(data)
    if args.coweight is not None and args.json:
        chart = chart.coweight_page(args.coweight)
    _emit_chart(chart, args)
    return 0


def cmd_aahss(args) -> int:
    rng = parse_range(args.range)
    job = {"command": "aahss", "base": args.base,
           "range": [list(x) for x in rng]}
    cdir = cache_dir(args.cache_dir)
    key = cache_key(job)
    data = cache_get(cdir, key)
    if data is None:
        FM = sseq.cellular_filtration_B01(args.base)
        res = sseq.aahss(FM, rng)
        data = res.to_json()
        cache_put(cdir, key, data)
    out = json.dumps(data, indent=1, sort_keys=True) + "\n"
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_bockstein(args) -> int:
    rng = parse_range(args.range)
    job = {"command": "bockstein", "module": args.module,
           "level": args.level, "range": [list(x) for x in rng]}
    cdir = cache_dir(args.cache_dir)
    key = cache_key(job)
    data = cache_get(cdir, key)
    if data is None:
        M = parse_module_expr(args.module)("R")
        if args.level == 0:
            M = comod.restrict_level0(M)
        res = sseq.rho_bockstein(M, rng)
        data = res.to_json()
        cache_put(cdir, key, data)
    out = json.dumps(data, indent=1, sort_keys=True) + "\n"
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise ValueError(f"unknown suite {args.suite!r}; "
                         f"known: {', '.join(sorted(SUITES))}")
    fn, default_rng = SUITES[args.suite]
    rng = parse_range(args.range) if args.range else default_rng
    report: list = []
    fn(rng, report)
    ok = all(passed for _, passed, _ in report)
    for label, passed, detail in report:
        print(f"{'PASS' if passed else 'FAIL'}  {label}")
        if not passed and detail is not None:
            text = detail.render() if hasattr(detail, "render") else repr(detail)
            print("      " + text.replace("\n", "\n      "))
    if args.json:
        payload = {"suite": args.suite, "range": [list(x) for x in rng],
                   "ok": ok,
                   "checks": [{"label": lb, "ok": p} for lb, p, _ in report]}
        with open(args.json, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return 0 if ok else 1


def cmd_compare(args) -> int:
    expected = ExtChart.load(args.expected)
    computed = ExtChart.load(args.computed)
    names = tuple(args.actions) if args.actions else ()
    diff = compare(expected, computed, action_names=names)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(diff.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")
    print(diff.render() if not diff.empty else "charts agree")
    return 0 if diff.empty else 1


def cmd_chart(args) -> int:
    chart = ExtChart.load(args.input)
    if args.svg is not None:
        doc = render_svg(chart, args.coweight)
        if args.svg == "-":
            sys.stdout.write(doc)
        else:
            with open(args.svg, "w") as fh:
                fh.write(doc)
    else:
        sys.stdout.write(render_text(chart, args.coweight))
    return 0


# ---------------------------------------------------------------------------

def _add_common(p, with_module=True):
    if with_module:
        p.add_argument("--module", required=True,
                       help="module expression, e.g. 'B0(1) * B0(1)'")
    p.add_argument("--range", nargs=3, required=True,
                   metavar=("s=LO..HI", "f=LO..HI", "w=LO..HI"))
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--json", default=None, help="write JSON output here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="a1ext",
        description="Trigraded Ext charts over motivic A(0)/A(1) algebroids")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ext", help="compute an Ext chart")
    p.add_argument("--base", choices=("R", "C"), required=True)
    _add_common(p)
    p.add_argument("--mod-b", action="store_true",
                   help="quotient by b-power torsion (v1-torsion)")
    p.add_argument("--actions", nargs="*", default=None,
                   help="operator tables to compute (default per base)")
    p.add_argument("--coweight", type=int, default=None)
    p.add_argument("--svg", default=None, help="write an SVG rendering here")
    p.set_defaults(fn=cmd_ext)

    p = sub.add_parser("aahss",
                       help="algebraic Atiyah-Hirzebruch SS for B0(1)")
    p.add_argument("--base", choices=("R", "C"), default="R")
    _add_common(p, with_module=False)
    p.set_defaults(fn=cmd_aahss)

    p = sub.add_parser("bockstein", help="rho-Bockstein SS over base R")
    _add_common(p)
    p.add_argument("--level", type=int, choices=(0, 1), default=1,
                   help="0 = A(0)-level coaction, 1 = A(1)-level")
    p.set_defaults(fn=cmd_bockstein)

    p = sub.add_parser("verify", help="run a named verification suite")
    p.add_argument("suite", help=", ".join(sorted(SUITES)))
    p.add_argument("--range", nargs=3, default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("compare", help="diff two chart JSON files")
    p.add_argument("expected")
    p.add_argument("computed")
    p.add_argument("--actions", nargs="*", default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("chart", help="render a chart JSON file")
    p.add_argument("input")
    p.add_argument("--svg", nargs="?", const="-", default=None,
                   help="SVG output path ('-' for stdout); default is text")
    p.add_argument("--coweight", type=int, default=None,
                   help="restrict to the coweight page c mod 4")
    p.set_defaults(fn=cmd_chart)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "actions", None) is None and args.command == "ext":
        args.actions = list(DEFAULT_ACTIONS[args.base])
    try:
        return args.fn(args)
    except (ValueError, OSError, KeyError, AssertionError) as exc:
        err = {"error": str(exc), "type": type(exc).__name__}
        if isinstance(exc, ModuleExprError):
            err["position"] = exc.position
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
