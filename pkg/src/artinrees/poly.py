"""Exact multivariate polynomial arithmetic over Q.

Polynomials live in a fixed ring Q[x1..xn] described by a ``PolyRing``.
Coefficients are ``fractions.Fraction`` (arbitrary precision), exponent
vectors are dense tuples of non-negative ints.  Terms are stored in a dict
keyed by exponent vector; sorted views are produced explicitly against a
``MonomialOrder``, never implicitly.

Also provided: free-module elements (vectors of polynomials), sparse
polynomial matrices, and a small text grammar for polynomials and vectors
(round-trip exact)::

    3/2*x1^2*x2 - x3 + 1        polynomial
    (x^2 - y, 0, 1/3*z)         module element
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

Monomial = tuple  # dense exponent vector, one entry per ring variable


class RingMismatchError(ValueError):
    """Operands belong to different rings."""


class ParseError(ValueError):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (column {pos + 1})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# monomial helpers

def mono_degree(m: Monomial) -> int:
    return sum(m)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def mono_divides(a: Monomial, b: Monomial) -> bool:
    """True when x^a divides x^b."""
    return all(x <= y for x, y in zip(a, b))


def mono_div(a: Monomial, b: Monomial) -> Monomial:
    """Exponent vector of x^a / x^b; requires divisibility."""
    q = tuple(x - y for x, y in zip(a, b))
    if any(e < 0 for e in q):
        raise ValueError(f"{b} does not divide {a}")
    return q


def mono_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# monomial orders

_KIND_ALIASES = {"lex": "lex", "grevlex": "grevlex", "grlex": "grlex", "graded-lex": "grlex"}


@dataclass(frozen=True)
class MonomialOrder:
    """A global monomial order plus its extension to free modules.

    kind: "lex", "grevlex" or "grlex" (alias "graded-lex").
    module_extension: "top" (term over position) or "pot" (position over term).
    position_preference: "ascending" means a higher component index wins ties
    (e_0 < e_1 < ...); "descending" the opposite.
    """

    kind: str = "grevlex"
    module_extension: str = "top"
    position_preference: str = "ascending"

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown monomial order kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.module_extension not in ("top", "pot"):
            raise ValueError(f"unknown module extension {self.module_extension!r}")
        if self.position_preference not in ("ascending", "descending"):
            raise ValueError(f"unknown position preference {self.position_preference!r}")

    def sort_key(self, m: Monomial):
        """Key tuple; bigger key means bigger monomial."""
        if self.kind == "lex":
            return m
        if self.kind == "grlex":
            return (sum(m),) + tuple(m)
        # grevlex: by degree, ties broken so that the last non-zero entry of
        # the exponent difference being negative means "greater"
        return (sum(m),) + tuple(-e for e in reversed(m))

    def position_key(self, pos: int) -> int:
        return pos if self.position_preference == "ascending" else -pos

    def module_sort_key(self, pos: int, m: Monomial):
        if self.module_extension == "top":
            return (self.sort_key(m), self.position_key(pos))
        return (self.position_key(pos), self.sort_key(m))

    def describe(self) -> str:
        return f"{self.kind} {self.module_extension} {self.position_preference}"


DEFAULT_ORDER = MonomialOrder()


def compare(m1: Monomial, m2: Monomial, order: MonomialOrder = DEFAULT_ORDER) -> int:
    """Total-order comparison of two monomials: -1, 0 or +1."""
    if len(m1) != len(m2):
        raise ValueError(f"exponent length mismatch: {len(m1)} vs {len(m2)}")
    k1, k2 = order.sort_key(m1), order.sort_key(m2)
    return (k1 > k2) - (k1 < k2)


class _TElimination:
    """Internal block order: the first variable dominates, then ``base``.

    Used for intersection via the tag-variable trick; satisfies the
    elimination property (a leading term free of the tag variable forces the
    whole element to be).
    """

    def __init__(self, base: MonomialOrder):
        self.base = base

    def sort_key(self, m: Monomial):
        return (m[0],) + tuple(self.base.sort_key(m[1:]))

    def module_sort_key(self, pos: int, m: Monomial):
        return (m[0],) + tuple(self.base.module_sort_key(pos, m[1:]))


# ---------------------------------------------------------------------------
# rings and polynomials

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")


@dataclass(frozen=True)
class PolyRing:
    """Q[variables] with named, ordered variables."""

    variables: tuple[str, ...]

    def __post_init__(self):
        if not self.variables:
            raise ValueError("a ring needs at least one variable")
        seen = set()
        for name in self.variables:
            if not _NAME_RE.match(name):
                raise ValueError(f"bad variable name {name!r}")
            if name in seen:
                raise ValueError(f"duplicate variable {name!r}")
            seen.add(name)

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def var_index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def zero(self) -> "Polynomial":
        return Polynomial(self, {})

    def one(self) -> "Polynomial":
        return Polynomial.constant(self, 1)

    def var(self, i: int | str) -> "Polynomial":
        if isinstance(i, str):
            i = self.var_index(i)
        expo = tuple(1 if j == i else 0 for j in range(self.nvars))
        return Polynomial(self, {expo: Fraction(1)})

    def gens(self) -> tuple["Polynomial", ...]:
        return tuple(self.var(i) for i in range(self.nvars))


def ring(*names: str) -> PolyRing:
    return PolyRing(tuple(names))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"coefficient must be int or Fraction, got {type(c).__name__}")


class Polynomial:
    """Immutable dense-exponent polynomial with exact rational coefficients."""

    __slots__ = ("ring", "_terms", "_hash")

    def __init__(self, ring: PolyRing, terms: dict):
        clean = {}
        n = ring.nvars
        for expo, coeff in terms.items():
            coeff = _as_fraction(coeff)
            if coeff == 0:
                continue
            if len(expo) != n or any(e < 0 or not isinstance(e, int) for e in expo):
                raise ValueError(f"bad exponent vector {expo!r} for {n} variables")
            clean[tuple(expo)] = coeff
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):  # pragma: no cover - defensive
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, ring: PolyRing, c) -> "Polynomial":
        return cls(ring, {(0,) * ring.nvars: _as_fraction(c)})

    @classmethod
    def monomial(cls, ring: PolyRing, expo: Monomial, coeff=1) -> "Polynomial":
        return cls(ring, {tuple(expo): _as_fraction(coeff)})

    # -- basic queries -------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def num_terms(self) -> int:
        return len(self._terms)

    def total_degree(self) -> int:
        """Degree of the zero polynomial is -1 by convention here."""
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._terms)

    def constant_value(self) -> Fraction:
        zero = (0,) * self.ring.nvars
        return self._terms.get(zero, Fraction(0))

    def coefficient(self, expo: Monomial) -> Fraction:
        return self._terms.get(tuple(expo), Fraction(0))

    def leading_term(self, order: MonomialOrder = DEFAULT_ORDER) -> tuple[Monomial, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        m = max(self._terms, key=order.sort_key)
        return m, self._terms[m]

    def sorted_terms(self, order: MonomialOrder = DEFAULT_ORDER) -> list[tuple[Monomial, Fraction]]:
        """Terms in strictly descending order."""
        return [(m, self._terms[m]) for m in sorted(self._terms, key=order.sort_key, reverse=True)]

    # -- ring operations -----------------------------------------------------
    def _check_ring(self, other: "Polynomial"):
        if self.ring != other.ring:
            raise RingMismatchError(f"rings differ: {self.ring} vs {other.ring}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check_ring(other)
            return other
        return Polynomial.constant(self.ring, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Polynomial(self.ring, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.ring, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = _as_fraction(other)
            return Polynomial(self.ring, {e: c * v for e, v in self._terms.items()})
        self._check_ring(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = mono_mul(e1, e2)
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Polynomial(self.ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.ring, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def mul_term(self, expo: Monomial, coeff) -> "Polynomial":
        """Multiply by coeff * x^expo (single term, fast path)."""
        coeff = _as_fraction(coeff)
        if coeff == 0:
            return self.ring.zero()
        return Polynomial(self.ring, {mono_mul(e, expo): c * coeff for e, c in self._terms.items()})

    def exact_div_term(self, expo: Monomial, coeff) -> "Polynomial":
        """Exact division by coeff * x^expo; every term must be divisible."""
        coeff = _as_fraction(coeff)
        if coeff == 0:
            raise ZeroDivisionError("division by the zero term")
        out = {}
        for e, c in self._terms.items():
            out[mono_div(e, expo)] = c / coeff
        return Polynomial(self.ring, out)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.ring, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.ring == other.ring and self._terms == other._terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.ring, frozenset(self._terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    # -- calculus / evaluation ------------------------------------------------
    def derivative(self, i: int) -> "Polynomial":
        """Partial derivative with respect to variable i."""
        out = {}
        for e, c in self._terms.items():
            if e[i] == 0:
                continue
            e2 = e[:i] + (e[i] - 1,) + e[i + 1:]
            out[e2] = out.get(e2, 0) + c * e[i]
        return Polynomial(self.ring, out)

    def evaluate(self, values: Sequence[complex]) -> complex:
        if len(values) != self.ring.nvars:
            raise ValueError("wrong number of values")
        total = 0j
        for e, c in self._terms.items():
            term = complex(float(c.numerator) / float(c.denominator))
            for v, k in zip(values, e):
                if k:
                    term *= v ** k
            total += term
        return total

    def evaluate_exact(self, values: Sequence[Fraction]) -> Fraction:
        if len(values) != self.ring.nvars:
            raise ValueError("wrong number of values")
        total = Fraction(0)
        for e, c in self._terms.items():
            term = c
            for v, k in zip(values, e):
                if k:
                    term *= Fraction(v) ** k
            total += term
        return total

    # -- printing --------------------------------------------------------------
    def to_str(self, order: MonomialOrder = DEFAULT_ORDER, spaces: bool = True) -> str:
        if not self._terms:
            return "0"
        parts = []
        for idx, (m, c) in enumerate(self.sorted_terms(order)):
            factors = []
            for name, e in zip(self.ring.variables, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if factors and mag == 1:
                body = "*".join(factors)
            elif factors:
                body = "*".join([str(mag)] + factors)
            else:
                body = str(mag)
            if idx == 0:
                parts.append(body if c > 0 else "-" + body)
            else:
                sign = " + " if c > 0 else " - "
                if not spaces:
                    sign = sign.strip()
                parts.append(sign + body)
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_str()

    def __repr__(self) -> str:
        return f"Polynomial({self.to_str()!r})"


# ---------------------------------------------------------------------------
# parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ParseError(f"unexpected character {rest[0]!r}", pos=len(text) - len(rest))
        if m.lastgroup is not None:
            out.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, ring: PolyRing):
        self.text = text
        self.ring = ring
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op: str):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", pos=pos)

    def parse_polynomial(self) -> Polynomial:
        p = self._parse_sum()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r} after polynomial", pos=pos)
        return p

    def _parse_sum(self) -> Polynomial:
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        total = self._parse_term() * sign
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                term = self._parse_term()
                total = total + (term if val == "+" else -term)
            else:
                return total

    def _parse_term(self) -> Polynomial:
        p = self._parse_factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = p * self._parse_factor()
            else:
                return p

    def _parse_factor(self) -> Polynomial:
        kind, val, pos = self.take()
        if kind == "int":
            num = int(val)
            k2, v2, _ = self.peek()
            if k2 == "op" and v2 == "/":
                self.take()
                k3, v3, p3 = self.take()
                if k3 != "int":
                    raise ParseError("expected integer denominator", pos=p3)
                den = int(v3)
                if den == 0:
                    raise ParseError("zero denominator", pos=p3)
                return Polynomial.constant(self.ring, Fraction(num, den))
            return Polynomial.constant(self.ring, num)
        if kind == "name":
            try:
                i = self.ring.var_index(val)
            except KeyError:
                raise ParseError(f"unknown variable {val!r}", pos=pos) from None
            k2, v2, _ = self.peek()
            if k2 == "op" and v2 == "^":
                self.take()
                k3, v3, p3 = self.take()
                if k3 != "int":
                    raise ParseError("expected integer exponent", pos=p3)
                return self.ring.var(i) ** int(v3)
            return self.ring.var(i)
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos=pos)


def parse_polynomial(text: str, ring: PolyRing) -> Polynomial:
    return _Parser(text, ring).parse_polynomial()


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on sep outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced ')'")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ParseError("unbalanced '('")
    parts.append("".join(cur))
    return parts


def parse_vector(text: str, ring: PolyRing, rank: int | None = None) -> "FreeModuleElement":
    """Parse ``(p1, p2, ...)``; a bare polynomial is accepted when rank is 1."""
    s = text.strip()
    if s.startswith("("):
        if not s.endswith(")"):
            raise ParseError("expected ')' at end of vector")
        inner = s[1:-1]
        comps = [parse_polynomial(part, ring) for part in split_top_level(inner)]
    else:
        comps = [parse_polynomial(s, ring)]
    if rank is not None and len(comps) != rank:
        raise ParseError(f"expected {rank} components, found {len(comps)}")
    return FreeModuleElement(ring, tuple(comps))


# ---------------------------------------------------------------------------
# free module elements

class FreeModuleElement:
    """Element of R^rank: a tuple of polynomials over a common ring."""

    __slots__ = ("ring", "components", "_hash")

    def __init__(self, ring: PolyRing, components: Sequence[Polynomial]):
        comps = tuple(components)
        if not comps:
            raise ValueError("rank must be positive")
        for p in comps:
            if p.ring != ring:
                raise RingMismatchError("component ring differs from ambient ring")
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):  # pragma: no cover - defensive
        raise AttributeError("FreeModuleElement is immutable")

    @classmethod
    def zero(cls, ring: PolyRing, rank: int) -> "FreeModuleElement":
        return cls(ring, tuple(ring.zero() for _ in range(rank)))

    @classmethod
    def basis_vector(cls, ring: PolyRing, rank: int, pos: int, coeff: Polynomial | None = None) -> "FreeModuleElement":
        comps = [ring.zero()] * rank
        comps[pos] = coeff if coeff is not None else ring.one()
        return cls(ring, tuple(comps))

    @classmethod
    def from_poly(cls, p: Polynomial) -> "FreeModuleElement":
        return cls(p.ring, (p,))

    @property
    def rank(self) -> int:
        return len(self.components)

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in self.components)

    def _check(self, other: "FreeModuleElement"):
        if self.ring != other.ring:
            raise RingMismatchError("rings differ")
        if self.rank != other.rank:
            raise ValueError(f"rank mismatch: {self.rank} vs {other.rank}")

    def __add__(self, other: "FreeModuleElement") -> "FreeModuleElement":
        self._check(other)
        return FreeModuleElement(self.ring, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "FreeModuleElement") -> "FreeModuleElement":
        self._check(other)
        return FreeModuleElement(self.ring, tuple(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "FreeModuleElement":
        return FreeModuleElement(self.ring, tuple(-a for a in self.components))

    def scaled(self, p) -> "FreeModuleElement":
        """Multiply every component by a polynomial or scalar."""
        return FreeModuleElement(self.ring, tuple(a * p for a in self.components))

    def mul_term(self, expo: Monomial, coeff) -> "FreeModuleElement":
        return FreeModuleElement(self.ring, tuple(a.mul_term(expo, coeff) for a in self.components))

    def leading_term(self, order: MonomialOrder = DEFAULT_ORDER):
        """(position, monomial, coeff) of the module leading term, or None."""
        best = None
        best_key = None
        for pos, p in enumerate(self.components):
            for m, c in p.items():
                key = order.module_sort_key(pos, m)
                if best_key is None or key > best_key:
                    best_key = key
                    best = (pos, m, c)
        return best

    def total_degree(self) -> int:
        return max((p.total_degree() for p in self.components), default=-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FreeModuleElement):
            return NotImplemented
        return self.ring == other.ring and self.components == other.components

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.ring, self.components))
            object.__setattr__(self, "_hash", h)
        return h

    def to_str(self, order: MonomialOrder = DEFAULT_ORDER, spaces: bool = True) -> str:
        if self.rank == 1:
            return self.components[0].to_str(order, spaces)
        sep = ", " if spaces else ","
        return "(" + sep.join(p.to_str(order, spaces) for p in self.components) + ")"

    def __str__(self) -> str:
        return self.to_str()

    def __repr__(self) -> str:
        return f"FreeModuleElement({self.to_str()!r})"


# ---------------------------------------------------------------------------
# sparse polynomial matrices

class PolyMatrix:
    """Sparse matrix of polynomials; entries keyed (row, col), zeros absent."""

    __slots__ = ("ring", "rows", "cols", "entries")

    def __init__(self, ring: PolyRing, rows: int, cols: int, entries: dict | None = None):
        self.ring = ring
        self.rows = rows
        self.cols = cols
        self.entries = {}
        if entries:
            for (i, j), p in entries.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError(f"entry ({i},{j}) outside {rows}x{cols}")
                if p.ring != ring:
                    raise RingMismatchError("entry ring differs")
                if not p.is_zero:
                    self.entries[(i, j)] = p

    @classmethod
    def from_rows(cls, ring: PolyRing, rows: Sequence[Sequence[Polynomial]]) -> "PolyMatrix":
        r = len(rows)
        c = len(rows[0]) if r else 0
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != c:
                raise ValueError("ragged rows")
            for j, p in enumerate(row):
                if not p.is_zero:
                    entries[(i, j)] = p
        return cls(ring, r, c, entries)

    @classmethod
    def from_columns(cls, ring: PolyRing, rank: int, cols: Sequence[FreeModuleElement]) -> "PolyMatrix":
        entries = {}
        for j, v in enumerate(cols):
            if v.rank != rank:
                raise ValueError("column rank mismatch")
            for i, p in enumerate(v.components):
                if not p.is_zero:
                    entries[(i, j)] = p
        return cls(ring, rank, len(cols), entries)

    @classmethod
    def identity(cls, ring: PolyRing, n: int) -> "PolyMatrix":
        one = ring.one()
        return cls(ring, n, n, {(i, i): one for i in range(n)})

    def entry(self, i: int, j: int) -> Polynomial:
        return self.entries.get((i, j), self.ring.zero())

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def column(self, j: int) -> FreeModuleElement:
        return FreeModuleElement(
            self.ring, tuple(self.entries.get((i, j), self.ring.zero()) for i in range(self.rows))
        )

    def columns(self) -> list[FreeModuleElement]:
        return [self.column(j) for j in range(self.cols)]

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        by_row: dict[int, list] = {}
        for (k, j), p in other.entries.items():
            by_row.setdefault(k, []).append((j, p))
        out: dict = {}
        for (i, k), p in self.entries.items():
            for j, q in by_row.get(k, ()):
                key = (i, j)
                prod = p * q
                if key in out:
                    out[key] = out[key] + prod
                else:
                    out[key] = prod
        out = {k: v for k, v in out.items() if not v.is_zero}
        return PolyMatrix(self.ring, self.rows, other.cols, out)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        out = dict(self.entries)
        for k, p in other.entries.items():
            s = out.get(k)
            s = p if s is None else s + p
            if s.is_zero:
                out.pop(k, None)
            else:
                out[k] = s
        return PolyMatrix(self.ring, self.rows, self.cols, out)

    def __neg__(self) -> "PolyMatrix":
        return PolyMatrix(self.ring, self.rows, self.cols, {k: -p for k, p in self.entries.items()})

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + (-other)

    def scaled(self, c) -> "PolyMatrix":
        return PolyMatrix(self.ring, self.rows, self.cols, {k: p * c for k, p in self.entries.items()})

    def kron(self, other: "PolyMatrix") -> "PolyMatrix":
        """Kronecker product, row-major index (i_self * other.rows + i_other)."""
        entries = {}
        for (i1, j1), p in self.entries.items():
            for (i2, j2), q in other.entries.items():
                entries[(i1 * other.rows + i2, j1 * other.cols + j2)] = p * q
        return PolyMatrix(self.ring, self.rows * other.rows, self.cols * other.cols, entries)

    def evaluate(self, values: Sequence[complex]) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=complex)
        for (i, j), p in self.entries.items():
            out[i, j] = p.evaluate(values)
        return out

    def evaluate_exact(self, values: Sequence[Fraction]) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (i, j), p in self.entries.items():
            out[i][j] = p.evaluate_exact(values)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return (
            self.ring == other.ring
            and (self.rows, self.cols) == (other.rows, other.cols)
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"PolyMatrix({self.rows}x{self.cols}, {len(self.entries)} nonzero)"


def fraction_matrix_rank(mat: list[list[Fraction]]) -> int:
    """Exact rank by Gaussian elimination over Q."""
    if not mat or not mat[0]:
        return 0
    m = [row[:] for row in mat]
    rows, cols = len(m), len(m[0])
    rank = 0
    row = 0
    for col in range(cols):
        pivot = None
        for r in range(row, rows):
            if m[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        pv = m[row][col]
        for r in range(row + 1, rows):
            if m[r][col] != 0:
                factor = m[r][col] / pv
                for c in range(col, cols):
                    m[r][c] -= factor * m[row][c]
        row += 1
        rank += 1
        if row == rows:
            break
    return rank
