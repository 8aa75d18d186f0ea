"""Text syntax for specifications.

Grammar (whitespace-insensitive)::

    spec    := clause ('&&' clause)*
    clause  := 'G[' int ',' int ']' region
             | 'F[' int ',' int ']' region
             | region 'U[' int ',' int ']' region
             | region 'origU[' int ',' int ']' region
             | '(' clause ')'
    region  := conj ('|' conj)*
    conj    := unary ('&' unary)*
    unary   := '!' unary | '(' region ')' | atom
    atom    := 'TRUE' | name 'in' '[' num ',' num ']'
             | linexpr ('>=' | '<=' | '>' | '<') num
             | region-name
    linexpr := ['-'] term (('+' | '-') term)*
    term    := [num ['*']] variable

``F[a,b] P`` is read as ``TRUE U[a,b] P``.  ``P1 origU[a,b] P2`` is the
standard until and becomes ``G[0,a] P1 && P1 U[a,b] P2``.
"""
from __future__ import annotations

import re

import numpy as np

from .geometry import ConvexPolytope, Region, region_from_json
from .stl import G, U, SpecError, StlSpec, SubFormula


class SpecSyntaxError(SpecError):
    def __init__(self, msg, line, col):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line, self.col = line, col


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>&&|>=|<=|[\[\](),&|!<>+\-*])
""", re.VERBOSE)

_TEMPORAL = {"G", "F", "U", "origU"}


class _Tokens:
    def __init__(self, text):
        self.toks = []
        pos, line, col = 0, 1, 1
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise SpecSyntaxError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup
            val = m.group()
            if kind != "ws":
                self.toks.append((kind, val, line, col))
            nl = val.count("\n")
            if nl:
                line += nl
                col = len(val) - val.rfind("\n")
            else:
                col += len(val)
            pos = m.end()
        self.toks.append(("end", "", line, col))
        self.i = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.peek()
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        shown = tok[1] or "end of input"
        return SpecSyntaxError(f"{msg}, found {shown!r}", tok[2], tok[3])

    def expect(self, val):
        t = self.peek()
        if t[1] != val:
            raise self.error(f"expected {val!r}")
        return self.next()

    def at_temporal(self):
        t = self.peek()
        return t[0] == "name" and t[1] in _TEMPORAL and self.peek(1)[1] == "["


class _Parser:
    def __init__(self, text, state_dim, variables, regions):
        self.t = _Tokens(text)
        self.n = state_dim
        self.vars = list(variables or [f"x{k + 1}" for k in range(state_dim)])
        if len(self.vars) != state_dim:
            raise SpecError("one variable name per state coordinate is required")
        self.regions = {}
        for name, r in (regions or {}).items():
            if not isinstance(r, Region):
                r = region_from_json(r, state_dim)
            if r.dim != state_dim:
                raise SpecError(f"region {name!r} has dimension {r.dim}, expected {state_dim}")
            self.regions[name] = r

    # -- clauses ----------------------------------------------------------
    def spec(self):
        subs = self.clause()
        while self.t.peek()[1] == "&&":
            self.t.next()
            subs += self.clause()
        if self.t.peek()[0] != "end":
            raise self.t.error("expected '&&' or end of input")
        return subs

    def clause(self):
        if self.t.at_temporal():
            op = self.t.next()
            a, b = self.interval(op)
            body = self.region()
            if op[1] == "G":
                return [SubFormula(G, a, b, body)]
            if op[1] == "F":
                return [SubFormula(U, a, b, Region.full(self.n), body)]
            raise self.t.error("missing left operand for until", op)
        if self.t.peek()[1] == "(":
            save = self.t.i
            self.t.next()
            if self.t.at_temporal():
                inner = self.clause()
                self.t.expect(")")
                return inner
            self.t.i = save
        left = self.region()
        if not self.t.at_temporal() or self.t.peek()[1] not in ("U", "origU"):
            raise self.t.error("expected 'U[' or 'origU['")
        op = self.t.next()
        a, b = self.interval(op)
        right = self.region()
        if op[1] == "U":
            return [SubFormula(U, a, b, left, right)]
        return [SubFormula(G, 0, a, left), SubFormula(U, a, b, left, right)]

    def interval(self, op_tok):
        self.t.expect("[")
        a = self.integer()
        self.t.expect(",")
        b = self.integer()
        self.t.expect("]")
        if a > b:
            raise SpecSyntaxError(f"interval [{a},{b}] has a > b", op_tok[2], op_tok[3])
        return a, b

    def integer(self):
        tok = self.t.peek()
        if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
            raise self.t.error("expected a non-negative integer")
        self.t.next()
        return int(tok[1])

    def number(self):
        sign = 1.0
        while self.t.peek()[1] in ("+", "-"):
            if self.t.next()[1] == "-":
                sign = -sign
        tok = self.t.peek()
        if tok[0] == "name" and tok[1] == "inf":
            self.t.next()
            return sign * np.inf
        if tok[0] != "num":
            raise self.t.error("expected a number")
        self.t.next()
        return sign * float(tok[1])

    # -- regions ----------------------------------------------------------
    def region(self):
        start = self.t.peek()
        r = self.conj()
        while self.t.peek()[1] == "|":
            self.t.next()
            r = r | self.conj()
        if r.is_empty():
            raise SpecSyntaxError("predicate region is empty", start[2], start[3])
        return r

    def conj(self):
        r = self.unary()
        while self.t.peek()[1] == "&":
            self.t.next()
            r = r & self.unary()
        return r

    def unary(self):
        tok = self.t.peek()
        if tok[1] == "!":
            self.t.next()
            return self.unary().complement()
        if tok[1] == "(":
            self.t.next()
            r = self.region_inner()
            self.t.expect(")")
            return r
        return self.atom()

    def region_inner(self):
        r = self.conj()
        while self.t.peek()[1] == "|":
            self.t.next()
            r = r | self.conj()
        return r

    def atom(self):
        tok = self.t.peek()
        if tok[0] == "name" and tok[1] == "TRUE":
            self.t.next()
            return Region.full(self.n)
        if tok[0] == "name" and self.t.peek(1)[1] == "in":
            return self.interval_atom()
        if tok[0] == "name" and tok[1] in self.regions and tok[1] not in self.vars:
            self.t.next()
            return self.regions[tok[1]]
        if tok[0] in ("name", "num") or tok[1] in ("+", "-"):
            return self.inequality()
        raise self.t.error("expected a region")

    def var_index(self, tok):
        if tok[0] != "name" or tok[1] not in self.vars:
            raise SpecSyntaxError(f"unknown variable {tok[1]!r} for a {self.n}-dimensional state",
                                  tok[2], tok[3])
        return self.vars.index(tok[1])

    def interval_atom(self):
        k = self.var_index(self.t.next())
        self.t.expect("in")
        self.t.expect("[")
        lo = self.number()
        self.t.expect(",")
        hi = self.number()
        self.t.expect("]")
        bounds = np.full((self.n, 2), [-np.inf, np.inf])
        bounds[k] = lo, hi
        return Region([ConvexPolytope.box(bounds)], self.n)

    def inequality(self):
        coef = np.zeros(self.n)
        sign = 1.0
        first = True
        while True:
            tok = self.t.peek()
            if tok[1] in ("+", "-") and tok[0] == "op":
                self.t.next()
                sign = -1.0 if tok[1] == "-" else 1.0
                if self.t.peek()[1] in ("+", "-"):
                    sign *= -1.0 if self.t.next()[1] == "-" else 1.0
            elif not first:
                break
            c = 1.0
            if self.t.peek()[0] == "num":
                c = float(self.t.next()[1])
                if self.t.peek()[1] == "*":
                    self.t.next()
            coef[self.var_index(self.t.next())] += sign * c
            sign = 1.0
            first = False
        op = self.t.next()
        if op[1] not in (">=", "<=", ">", "<"):
            raise self.t.error("expected a comparison", op)
        d = self.number()
        if not np.any(coef):
            raise SpecSyntaxError("inequality has no variables", op[2], op[3])
        if op[1] in (">=", ">"):
            coef, d = -coef, -d
        return Region([ConvexPolytope(coef[None, :], [d], [op[1] in "<>"], dim=self.n)], self.n)


def parse_spec(text, state_dim, variables=None, regions=None):
    """Parse ``text`` into a normalized :class:`StlSpec`.

    ``variables`` names the state coordinates (default ``x1 .. xn``);
    ``regions`` binds identifiers to :class:`Region` objects or JSON literals.
    """
    p = _Parser(text, state_dim, variables, regions)
    return StlSpec(tuple(p.spec()), state_dim, tuple(p.vars))


# -- printing ----------------------------------------------------------------

def _fmt_row(a, d, strict, names):
    terms = [f"{float(c)!r}*{v}" for c, v in zip(a, names) if c != 0.0]
    return f"{' + '.join(terms)} {'<' if strict else '<='} {float(d)!r}"


def format_region(r, names=None):
    names = names or [f"x{k + 1}" for k in range(r.dim)]
    parts = []
    for p in r.parts:
        if p.n_rows == 0:
            parts.append("TRUE")
        else:
            parts.append(" & ".join(_fmt_row(a, d, s, names) for a, d, s in zip(p.A, p.b, p.strict)))
    if not parts:
        raise SpecError("cannot print an empty region")
    if len(parts) == 1:
        return parts[0]
    return " | ".join(f"({s})" for s in parts)


def format_spec(spec, variables=None):
    """Text that :func:`parse_spec` maps back to an equal specification."""
    names = list(variables or spec.variables)
    out = []
    for f in spec.subformulae:
        if f.op == G:
            out.append(f"G[{f.a},{f.b}] ({format_region(f.h1, names)})")
        else:
            out.append(f"({format_region(f.h1, names)}) U[{f.a},{f.b}] ({format_region(f.h2, names)})")
    return " && ".join(out)
