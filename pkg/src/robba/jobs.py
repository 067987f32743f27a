"""Batch job documents: a line-oriented structured-text format, a
validating parser, and a deterministic runner/report writer.

Grammar (tokens are whitespace-separated; ``#`` starts a comment):

    job {
      config { p 3  prec 12  annulus 1/6 1/2  window -24 160  zdim 1 }
      module <id> { rank1 { pvalue <rat> weight <int> [dev <rat>...] } }
      module <id> { sum <id> <id> }         # also: tensor, wedge <id> <int>,
                                            # twist <id> <int>
      module <id> { basis <id>
                    u [ <entry>* ; ... ]    # entry: exp:rat or .
                    uinv [ <entry>* ; ... ] }
      query <id> { norm <module> s <rat> }
      query <id> { sen <module> level <int> }
      query <id> { period <module> pvalue <rat> weight <int>
                   level <int> k <int> }
      query <id> { solve alpha <rat> radius <rat> M <int>
                   elem ( <rat> : <rat> )* }
      query <id> { chain <module> level <int> k <int> }
      query <id> { triangulate <module> level <int> k <int> }
      query <id> { locus { weights [<rat>*] ... units [<rat>*] ...
                   ordering <int>* samples <rat>* level <int>
                   [artinian] } }
      query <id> { selftest [quick] }
    }

Rational literals are ``a`` or ``a/b``; p-adic values in reports are
rendered exactly as ``m*p^v!N``.  Reports are deterministic: identical
documents give byte-identical reports at any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .base import BaseAlgebra, Character
from .errors import ParseError, RobbaError, ValidationError
from .hahn import HahnContext, criterion_check, solve_frobenius
from .modules import PhiGammaModule, mat_identity, sen_operator
from .padics import PadicScalar
from .periods import (saturation_test, slope_threshold, solve_period)
from .series import INF, RobbaRing
from .triang import (RefinementFamily, chain_test, default_cutoff,
                     extract_triangulation, locus_scan)


@dataclass
class Token:
    text: str
    line: int
    col: int


def tokenize(text):
    out = []
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        col = 0
        for raw in body.split():
            col = line.index(raw, col) + 1
            word = raw
            for ch in "{}[];":
                word = word.replace(ch, " %s " % ch)
            for piece in word.split():
                out.append(Token(piece, ln, col))
            col += len(raw) - 1
    return out


class _Cursor:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self, expect=None):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of document")
        self.pos += 1
        if expect is not None and tok.text != expect:
            raise ParseError("expected %r, got %r" % (expect, tok.text),
                             tok.line, tok.col)
        return tok

    def at(self, text):
        tok = self.peek()
        return tok is not None and tok.text == text


def _rat(tok: Token) -> Fraction:
    try:
        if "/" in tok.text:
            a, b = tok.text.split("/")
            return Fraction(int(a), int(b))
        return Fraction(int(tok.text))
    except (ValueError, ZeroDivisionError):
        raise ParseError("expected a rational, got %r" % tok.text,
                         tok.line, tok.col)


def _int(tok: Token) -> int:
    try:
        return int(tok.text)
    except ValueError:
        raise ParseError("expected an integer, got %r" % tok.text,
                         tok.line, tok.col)


@dataclass
class JobConfig:
    p: int = 3
    prec: int = 12
    r_lo: Fraction = None
    r_hi: Fraction = None
    cap_lo: int = -24
    cap_hi: int = 160
    zdim: int = 1

    def ring(self):
        r_lo = self.r_lo if self.r_lo is not None else \
            Fraction(1, self.p * (self.p - 1))
        r_hi = self.r_hi if self.r_hi is not None else \
            Fraction(1, self.p - 1)
        return RobbaRing(BaseAlgebra(self.p, self.prec, self.zdim),
                         r_lo, r_hi, self.cap_lo, self.cap_hi)


@dataclass
class JobDocument:
    config: JobConfig
    modules: list                # (id, spec-dict) in order
    queries: list                # (id, spec-dict) in order

    def to_text(self):
        out = ["job {"]
        c = self.config
        out.append("  config { p %d prec %d annulus %s %s window %d %d "
                   "zdim %d }" % (c.p, c.prec,
                                  c.r_lo or Fraction(1, c.p * (c.p - 1)),
                                  c.r_hi or Fraction(1, c.p - 1),
                                  c.cap_lo, c.cap_hi, c.zdim))
        for mid, spec in self.modules:
            out.append("  module %s { %s }" % (mid, _spec_text(spec)))
        for qid, spec in self.queries:
            out.append("  query %s { %s }" % (qid, _spec_text(spec)))
        out.append("}")
        return "\n".join(out) + "\n"


def _spec_text(spec):
    kind = spec["kind"]
    if kind == "rank1":
        dev = " dev " + " ".join(str(x) for x in spec["dev"]) \
            if spec.get("dev") else ""
        return "rank1 { pvalue %s weight %d%s }" % (
            spec["pvalue"], spec["weight"], dev)
    if kind in ("sum", "tensor"):
        return "%s %s %s" % (kind, spec["left"], spec["right"])
    if kind in ("wedge", "twist"):
        return "%s %s %d" % (kind, spec["arg"], spec["i"])
    if kind == "basis":
        return "basis %s u %s uinv %s" % (
            spec["arg"], _mat_text(spec["u"]), _mat_text(spec["uinv"]))
    if kind == "selftest":
        return "selftest" + (" quick" if spec.get("quick") else "")
    if kind == "locus":
        f = spec["family"]
        return ("locus { weights %s units %s ordering %s samples %s "
                "level %d%s }" % (
                    " ".join(_list_text(w) for w in f["weights"]),
                    " ".join(_list_text(u) for u in f["units"]),
                    " ".join(str(i) for i in f["ordering"]),
                    " ".join(str(s) for s in spec["samples"]),
                    spec["level"],
                    " artinian" if spec.get("artinian") else ""))
    if kind == "solve":
        return "solve alpha %s radius %s M %d elem %s" % (
            spec["alpha"], spec["radius"], spec["M"],
            " ".join("( %s : %s )" % t for t in spec["terms"]))
    parts = [kind, spec["arg"]]
    for key in ("pvalue", "weight", "s", "level", "k"):
        if key in spec:
            parts.append("%s %s" % (key, spec[key]))
    return " ".join(str(x) for x in parts)


def _list_text(xs):
    return "[ " + " ".join(str(x) for x in xs) + " ]"


def _mat_text(rows):
    body = " ; ".join(" ".join("%d:%s" % (e, c) if c else "."
                               for e, c in row) if row else "."
                      for row in rows)
    return "[ " + body + " ]"


def parse_job(text) -> JobDocument:
    cur = _Cursor(tokenize(text))
    cur.next("job")
    cur.next("{")
    config = JobConfig()
    modules, queries = [], []
    seen = set()
    while not cur.at("}"):
        head = cur.next()
        if head.text == "config":
            _parse_config(cur, config)
        elif head.text == "module":
            mid = cur.next().text
            if mid in seen:
                raise ValidationError("duplicate module id %r" % mid)
            seen.add(mid)
            modules.append((mid, _parse_module(cur, seen)))
        elif head.text == "query":
            qid = cur.next().text
            queries.append((qid, _parse_query(cur, seen)))
        else:
            raise ParseError("unexpected %r" % head.text, head.line,
                             head.col)
    cur.next("}")
    if cur.peek() is not None:
        tok = cur.peek()
        raise ParseError("trailing input %r" % tok.text, tok.line, tok.col)
    return JobDocument(config, modules, queries)


def _parse_config(cur, config):
    cur.next("{")
    while not cur.at("}"):
        key = cur.next().text
        if key == "p":
            config.p = _int(cur.next())
        elif key == "prec":
            config.prec = _int(cur.next())
        elif key == "annulus":
            config.r_lo = _rat(cur.next())
            config.r_hi = _rat(cur.next())
        elif key == "window":
            config.cap_lo = _int(cur.next())
            config.cap_hi = _int(cur.next())
        elif key == "zdim":
            config.zdim = _int(cur.next())
        else:
            tok = cur.peek()
            raise ParseError("unknown config key %r" % key,
                             tok.line if tok else None,
                             tok.col if tok else None)
    cur.next("}")
    if config.p % 2 == 0 or config.p < 3:
        raise ValidationError("p must be an odd prime")


def _parse_module(cur, seen):
    cur.next("{")
    kind = cur.next().text
    if kind == "rank1":
        cur.next("{")
        spec = {"kind": "rank1", "weight": 0, "pvalue": Fraction(1)}
        while not cur.at("}"):
            key = cur.next().text
            if key == "pvalue":
                spec["pvalue"] = _rat(cur.next())
            elif key == "weight":
                spec["weight"] = _int(cur.next())
            elif key == "dev":
                dev = []
                while not cur.at("}") and not cur.peek().text.isalpha():
                    dev.append(_rat(cur.next()))
                spec["dev"] = dev
            else:
                tok = cur.peek()
                raise ParseError("unknown rank1 key %r" % key,
                                 tok.line if tok else None, 0)
        cur.next("}")
    elif kind in ("sum", "tensor"):
        left, right = cur.next().text, cur.next().text
        for ref in (left, right):
            if ref not in seen:
                raise ValidationError("unknown module id %r" % ref)
        spec = {"kind": kind, "left": left, "right": right}
    elif kind in ("wedge", "twist"):
        arg = cur.next().text
        if arg not in seen:
            raise ValidationError("unknown module id %r" % arg)
        spec = {"kind": kind, "arg": arg, "i": _int(cur.next())}
    elif kind == "basis":
        arg = cur.next().text
        if arg not in seen:
            raise ValidationError("unknown module id %r" % arg)
        cur.next("u")
        u = _parse_matrix(cur)
        cur.next("uinv")
        uinv = _parse_matrix(cur)
        spec = {"kind": "basis", "arg": arg, "u": u, "uinv": uinv}
    else:
        raise ValidationError("unknown module kind %r" % kind)
    cur.next("}")
    return spec


def _parse_matrix(cur):
    cur.next("[")
    rows = [[]]
    while not cur.at("]"):
        tok = cur.next()
        if tok.text == ";":
            rows.append([])
        elif tok.text == ".":
            pass
        else:
            if ":" not in tok.text:
                raise ParseError("matrix entry must be exp:coeff, got %r"
                                 % tok.text, tok.line, tok.col)
            e, c = tok.text.split(":", 1)
            rows[-1].append((int(e), Fraction(c) if "/" not in c
                             else Fraction(*map(int, c.split("/")))))
    cur.next("]")
    return rows


def _parse_query(cur, seen):
    cur.next("{")
    kind = cur.next().text
    spec = {"kind": kind}
    if kind == "selftest":
        if cur.at("quick"):
            cur.next()
            spec["quick"] = True
    elif kind == "solve":
        while not cur.at("}"):
            key = cur.next().text
            if key == "alpha":
                spec["alpha"] = _rat(cur.next())
            elif key == "radius":
                spec["radius"] = _rat(cur.next())
            elif key == "M":
                spec["M"] = _int(cur.next())
            elif key == "elem":
                terms = []
                while cur.at("("):
                    cur.next("(")
                    e = _rat(cur.next())
                    cur.next(":")
                    c = _rat(cur.next())
                    cur.next(")")
                    terms.append((e, c))
                spec["terms"] = terms
            else:
                tok = cur.peek()
                raise ParseError("unknown solve key %r" % key,
                                 tok.line if tok else None, 0)
        spec.setdefault("terms", [])
        spec.setdefault("radius", Fraction(1))
        spec.setdefault("M", 2)
        if "alpha" not in spec:
            raise ValidationError("solve needs alpha")
    elif kind == "locus":
        cur.next("{")
        fam = {"weights": [], "units": [], "ordering": []}
        spec["family"] = fam
        spec.setdefault("level", 1)
        while not cur.at("}"):
            key = cur.next().text
            if key in ("weights", "units"):
                target = fam[key]
                while cur.at("["):
                    cur.next("[")
                    poly = []
                    while not cur.at("]"):
                        poly.append(_rat(cur.next()))
                    cur.next("]")
                    target.append(poly)
            elif key == "ordering":
                while cur.peek().text.lstrip("-").isdigit():
                    fam["ordering"].append(_int(cur.next()))
            elif key == "samples":
                spec["samples"] = []
                while not cur.at("}") and not cur.peek().text.isalpha():
                    spec["samples"].append(_rat(cur.next()))
            elif key == "level":
                spec["level"] = _int(cur.next())
            elif key == "artinian":
                spec["artinian"] = True
            else:
                tok = cur.peek()
                raise ParseError("unknown locus key %r" % key,
                                 tok.line if tok else None, 0)
        cur.next("}")
        if not (len(fam["weights"]) == len(fam["units"])
                == len(fam["ordering"])):
            raise ValidationError("locus family shape mismatch")
    else:
        arg = cur.next().text
        if arg not in seen:
            raise ValidationError("unknown module id %r" % arg)
        spec["arg"] = arg
        while not cur.at("}"):
            key = cur.next().text
            if key in ("level", "k", "weight"):
                spec[key] = _int(cur.next())
            elif key in ("pvalue", "s"):
                spec[key] = _rat(cur.next())
            else:
                tok = cur.peek()
                raise ParseError("unknown %s key %r" % (kind, key),
                                 tok.line if tok else None, 0)
        if kind not in ("norm", "sen", "period", "chain", "triangulate"):
            raise ValidationError("unknown query kind %r" % kind)
    cur.next("}")
    return spec


# -- execution -------------------------------------------------------------------

def build_modules(doc: JobDocument):
    ring = doc.config.ring()
    built = {}
    for mid, spec in doc.modules:
        kind = spec["kind"]
        if kind == "rank1":
            base = ring.base
            dev = base.elem([0] + list(spec.get("dev") or [])[1:]) \
                if spec.get("dev") else None
            if spec.get("dev"):
                dev = base.elem(spec["dev"])
            delta = Character(base, base.elem([spec["pvalue"]]),
                              spec["weight"], dev)
            built[mid] = PhiGammaModule.rank1(ring, delta)
        elif kind == "sum":
            built[mid] = built[spec["left"]].direct_sum(built[spec["right"]])
        elif kind == "tensor":
            built[mid] = built[spec["left"]].tensor(built[spec["right"]])
        elif kind == "wedge":
            built[mid] = built[spec["arg"]].wedge(spec["i"])
        elif kind == "twist":
            built[mid] = built[spec["arg"]].twist_t(spec["i"])
        elif kind == "basis":
            D = built[spec["arg"]]
            U = _matrix_from_rows(ring, D.rank, spec["u"])
            Ui = _matrix_from_rows(ring, D.rank, spec["uinv"])
            built[mid] = D.change_basis(U, Ui)
        else:
            raise ValidationError("unknown module kind %r" % kind)
    return ring, built


def _matrix_from_rows(ring, d, rows):
    if len(rows) != d or any(False for _ in rows):
        if len(rows) != d:
            raise ValidationError("matrix needs %d rows, got %d"
                                  % (d, len(rows)))
    out = mat_identity(ring, d)
    for i, row in enumerate(rows):
        if len(row) not in (0, d):
            raise ValidationError("row %d needs %d entries" % (i, d))
        for j, (e, c) in enumerate(row):
            out[i][j] = ring.T(e, coef=c)
    return out


def _fmt(x):
    if isinstance(x, PadicScalar):
        return x.to_text()
    if x is INF:
        return "inf"
    if isinstance(x, Fraction):
        return "%s" % x
    return str(x)


def _char_text(c: Character):
    dev = "" if c.weight_dev.is_zero() else " dev %s" % c.weight_dev.to_text()
    return "pvalue %s weight %d%s" % (c.p_value.to_text(), c.weight, dev)


def run_query(qid, spec, ring, built, quick=False):
    lines = []
    kind = spec["kind"]
    try:
        if kind == "norm":
            D = built[spec["arg"]]
            s = spec["s"]
            vals = [x.w_norm(s) for row in D.A for x in row]
            lines.append("w_norm s %s phi_matrix_min %s"
                         % (s, _fmt(min(vals))))
        elif kind == "sen":
            D = built[spec["arg"]]
            sd = sen_operator(D, spec.get("level", 1))
            lines.append("sen level %d gamma_power %d" % (sd.level,
                                                          sd.gamma_power))
            lines.append("poly " + " ".join(c.to_text() for c in sd.poly))
            lines.append("commutation_floor %s projection_floor %s"
                         % (_fmt(sd.commutation_floor),
                            _fmt(sd.projection_floor)))
        elif kind == "period":
            D = built[spec["arg"]]
            base = ring.base
            delta = Character(base, base.elem([spec["pvalue"]]),
                              spec.get("weight", 0))
            k = spec.get("k") or slope_threshold(delta, D)
            sol = solve_period(D, delta, spec.get("level", 1), k)
            lines.append("period level %d k %d" % (sol.level, sol.cutoff))
            lines.append("upper %d upper_raw %d lower %d certified %s"
                         % (sol.upper_bound, sol.upper_raw,
                            sol.lower_bound, sol.certified))
            lines.append("residual_floor %s propagation %s"
                         % (_fmt(sol.residual_floor), sol.propagation_ok))
            lines.append("t_orders " + " ".join(str(o) for o in
                                                sol.t_orders))
            for i, vec in enumerate(sol.vectors):
                sat, order = saturation_test(D, vec, sol.level)
                lines.append("vector %d saturated %s t_order %d"
                             % (i, sat, order))
        elif kind == "solve":
            ctx = HahnContext(ring.base.p, spec["M"], spec["radius"])
            a = ctx.elem({e: c for e, c in spec["terms"]})
            try:
                b, cert = solve_frobenius(spec["alpha"], a)
                lines.append("solved terms %d" % len(b.terms))
                lines.append("residual_w_r %s norm_gap %s C %s floor %d"
                             % (_fmt(cert.residual_w_r),
                                _fmt(cert.norm_gap),
                                _fmt(cert.C_bound), cert.floor))
                lines.append("b " + " ".join(
                    "(%s:%s)" % (i, b.terms[i][0][0])
                    for i in b.support()[:12]))
            except RobbaError as exc:
                obs = getattr(exc, "obstructions", None)
                if obs is None:
                    raise
                lines.append("no_solution obstructed_orbits %d" % len(obs))
                for i in sorted(obs):
                    lines.append("obstruction %s %s"
                                 % (i, obs[i][0][0]))
        elif kind in ("chain", "triangulate"):
            D = built[spec["arg"]]
            if D.split is None:
                raise ValidationError("chain queries need a split module")
            base = ring.base
            chars = D.split.chars
            n = spec.get("level", 1)
            k = spec.get("k") or default_cutoff(D, chars)
            chain = []
            Delta = None
            for i in range(1, D.rank + 1):
                Delta = chars[i - 1] if Delta is None \
                    else Delta * chars[i - 1]
                kq = max(k, slope_threshold(Delta, D.wedge(i)
                                            if i > 1 else D))
                sol = solve_period(D.wedge(i) if i > 1 else D, Delta,
                                   n, kq)
                if not sol.vectors:
                    lines.append("stage %d rank %d certified %s"
                                 % (i, sol.lower_bound, sol.certified))
                    raise ValidationError("no generator at stage %d" % i)
                chain.append((sol.vectors[0], Delta))
            rep = chain_test(D, chain, n, k, check_eigen=False)
            lines.append("chain %s level %d k %d" % (rep.is_chain, rep.level,
                                                     rep.cutoff))
            lines.append("stage_orders " + " ".join(str(o) for o in
                                                    rep.stage_orders))
            if not rep.is_chain:
                lines.append("failure %s" % rep.failure_stage)
            elif kind == "triangulate":
                out = extract_triangulation(D, chain, n, k)
                for i, c in enumerate(out["parameters"], start=1):
                    lines.append("parameter %d %s" % (i, _char_text(c)))
        elif kind == "locus":
            fam = RefinementFamily(ring.base.p, ring.base.prec,
                                   spec["family"]["weights"],
                                   spec["family"]["units"],
                                   spec["family"]["ordering"])
            art = bool(spec.get("artinian"))

            def factory(artinian):
                cfg = ring
                if artinian and cfg.base.zdim == 1:
                    return RobbaRing(BaseAlgebra(cfg.base.p, cfg.base.prec,
                                                 2), cfg.r_lo, cfg.r_hi,
                                     cfg.cap_lo, cfg.cap_hi)
                return cfg

            rows = locus_scan(fam, spec.get("samples", []), factory,
                              n=spec.get("level", 1), artinian=art)
            for row in rows:
                if "error" in row:
                    lines.append("point %s error %s" % (row["z"],
                                                        row["error"]))
                    continue
                qs = " ".join(
                    "q%d[rank %s certified %s t_order %s saturated %s]"
                    % (i + 1, e["rank"], e["certified"], e["t_order"],
                       e["saturated"])
                    for i, e in enumerate(row["queries"]))
                lines.append("point %s saturated %s chain %s %s"
                             % (row["z"], row["saturated_point"],
                                row["chain"], qs))
                if row.get("parameters"):
                    lines.append("point %s parameters %s"
                                 % (row["z"], " | ".join(
                                     _char_text(c)
                                     for c in row["parameters"])))
        elif kind == "selftest":
            from .selfcheck import run_all
            results = run_all(quick=bool(spec.get("quick")) or quick)
            passed = sum(1 for r in results if r.passed)
            lines.append("selftest suites %d passed %d failed %d"
                         % (len(results), passed, len(results) - passed))
            for r in results:
                lines.append("suite %s %s %s"
                             % (r.name, "pass" if r.passed else "FAIL",
                                r.detail))
        else:
            raise ValidationError("unknown query kind %r" % kind)
        status = "ok"
    except RobbaError as exc:
        lines.append("error %s: %s" % (type(exc).__name__, exc))
        status = "error"
    return qid, status, lines


def run_job(doc: JobDocument, workers=1, quick=False):
    """Execute all queries; the report is assembled in input order and is
    byte-identical for any worker count."""
    ring, built = build_modules(doc)
    results = {}
    if workers <= 1:
        ordered = [run_query(qid, spec, ring, built, quick)
                   for qid, spec in doc.queries]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_query, qid, spec, ring, built, quick)
                       for qid, spec in doc.queries]
            ordered = [f.result() for f in futures]
    lines = ["report {"]
    lines.append("  config p %d prec %d" % (doc.config.p, doc.config.prec))
    errors = 0
    for qid, status, body in ordered:
        lines.append("  query %s %s {" % (qid, status))
        for b in body:
            lines.append("    " + b)
        lines.append("  }")
        if status != "ok":
            errors += 1
    lines.append("  status %s" % ("ok" if errors == 0 else
                                  "errors %d" % errors))
    lines.append("}")
    return "\n".join(lines) + "\n", errors
