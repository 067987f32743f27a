"""Cyclotomic extensions K_n = Q_p(eps_n) with coefficients in a base
algebra S, realized as S[x]/Phi_{p^n}(x).

eps_n is the class of x, a primitive p^n-th root of unity.  The tower maps
send eps_n to eps_{n+1}^p.  The Galois group acts by eps_n -> eps_n^a for
units a mod p^n.  Valuations are exact: eps_n - 1 is a uniformizer of the
totally ramified extension K_n/Q_p of degree e_n = p^(n-1)(p-1), and in
the basis (eps_n - 1)^l the valuation of an element is the minimum of
v_p(coefficient) + l/e_n (the candidate values are pairwise distinct
mod 1, so the minimum is attained once).
"""
from __future__ import annotations

import math
from fractions import Fraction

from .base import AlgElem, BaseAlgebra
from .errors import DivisionByZero
from .linalg import solve_mod, solve_padic_columns
from .padics import PadicScalar


def PadicScalarSafe(p, unit, vord, prec):
    """PadicScalar that tolerates unit == 0 with a shifted window."""
    if unit == 0:
        return PadicScalar.zero(p, max(1, prec))
    return PadicScalar(p, unit, vord, prec)


class CycloRing:
    """K_n tensor S, for S the given base algebra."""

    _cache: dict = {}

    def __new__(cls, base: BaseAlgebra, n: int):
        key = (base, n)
        if key not in cls._cache:
            obj = super().__new__(cls)
            obj._init(base, n)
            cls._cache[key] = obj
        return cls._cache[key]

    def _init(self, base, n):
        self.base = base
        self.n = n
        p = base.p
        self.degree = 1 if n == 0 else p ** (n - 1) * (p - 1)
        self.group_order = p ** n
        self._pow_table = self._build_pow_table()
        self._pi_matrix = self._build_pi_matrix()

    def _build_pow_table(self):
        """Integer coordinate vectors of eps^e, e in [0, p^n)."""
        p, n, d = self.base.p, self.n, self.degree
        if n == 0:
            return [[1]]
        table = []
        cur = [0] * d
        cur[0] = 1
        # relation: x^d = -(x^0 + x^{p^{n-1}} + ... + x^{(p-2)p^{n-1}})
        rel = [0] * d
        for i in range(p - 1):
            rel[i * p ** (n - 1)] = -1
        for _ in range(p ** n):
            table.append(list(cur))
            nxt = [0] + cur[:-1]
            top = cur[-1]
            if top:
                nxt = [a + top * b for a, b in zip(nxt, rel)]
            cur = nxt
        return table

    def _build_pi_matrix(self):
        """M with (eps^j)-coords -> (pi^l)-coords, pi = eps - 1:
        eps^j = sum_l binom(j, l) pi^l, so M[l][j] = binom(j, l)."""
        d = self.degree
        return [[math.comb(j, l) for j in range(d)] for l in range(d)]

    # -- element factories -------------------------------------------------

    def elem(self, coords):
        out = []
        for c in list(coords)[: self.degree]:
            if not isinstance(c, AlgElem):
                c = self.base.elem([c])
            out.append(c)
        while len(out) < self.degree:
            out.append(self.base.zero())
        return CycloElem(self, tuple(out))

    def zero(self):
        return self.elem([])

    def one(self):
        return self.elem([1])

    def eps(self):
        if self.n == 0:
            return self.one()
        return self.eps_power(1)

    def eps_power(self, e):
        e %= self.group_order
        return self.elem(self._pow_table[e])

    def from_base(self, a: AlgElem):
        return self.elem([a])

    def qp_dim(self):
        return self.degree * self.base.zdim


class CycloElem:
    __slots__ = ("ring", "coords")

    def __init__(self, ring, coords):
        self.ring = ring
        self.coords = coords

    def _coerce(self, other):
        if isinstance(other, CycloElem):
            if (other.ring.n != self.ring.n
                    or other.ring.base.p != self.ring.base.p
                    or other.ring.base.zdim != self.ring.base.zdim):
                raise ValueError("mixed cyclotomic rings")
            return other
        if isinstance(other, AlgElem):
            return self.ring.from_base(other)
        return self.ring.elem([other])

    def __add__(self, other):
        other = self._coerce(other)
        return CycloElem(self.ring, tuple(a + b for a, b in
                                          zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return CycloElem(self.ring, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) or hasattr(other, "vord"):
            return CycloElem(self.ring,
                             tuple(c * other for c in self.coords))
        other = self._coerce(other)
        d = self.ring.degree
        if d == 1:
            return CycloElem(self.ring,
                             (self.coords[0] * other.coords[0],))
        acc = [None] * (2 * d - 1)
        for i, a in enumerate(self.coords):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coords):
                if b.is_zero():
                    continue
                t = a * b
                acc[i + j] = t if acc[i + j] is None else acc[i + j] + t
        out = [None] * d
        table = self.ring._pow_table
        for e, c in enumerate(acc):
            if c is None:
                continue
            if e < d:
                out[e] = c if out[e] is None else out[e] + c
            else:
                for l, m in enumerate(table[e % self.ring.group_order]):
                    if m:
                        t = c * m
                        out[l] = t if out[l] is None else out[l] + t
        zero = self.ring.base.zero()
        return CycloElem(self.ring, tuple(zero if c is None else c
                                          for c in out))

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            return self.inv() ** (-e)
        out = self.ring.one()
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    # -- structure ----------------------------------------------------------

    def is_zero(self):
        return all(c.is_zero() for c in self.coords)

    def galois(self, a: int):
        """eps -> eps^a entrywise; a must be a unit mod p^n."""
        ring = self.ring
        if ring.n == 0:
            return self
        if math.gcd(a, ring.base.p) != 1:
            raise ValueError("galois exponent must be a unit")
        d = ring.degree
        out = [None] * d
        for j, c in enumerate(self.coords):
            if c.is_zero():
                continue
            vec = ring._pow_table[(a * j) % ring.group_order]
            for l, m in enumerate(vec):
                if m:
                    t = c * m
                    out[l] = t if out[l] is None else out[l] + t
        zero = ring.base.zero()
        return CycloElem(ring, tuple(zero if c is None else c for c in out))

    def embed(self, m: int):
        """Image in level m >= n under eps_n -> eps_m^(p^(m-n))."""
        ring = self.ring
        if m == ring.n:
            return self
        if m < ring.n:
            raise ValueError("can only embed upward")
        up = CycloRing(ring.base, m)
        step = ring.base.p ** (m - ring.n)
        out = [None] * up.degree
        for j, c in enumerate(self.coords):
            if c.is_zero():
                continue
            vec = up._pow_table[(j * step) % up.group_order]
            for l, mult in enumerate(vec):
                if mult:
                    t = c * mult
                    out[l] = t if out[l] is None else out[l] + t
        zero = up.base.zero()
        return CycloElem(up, tuple(zero if c is None else c for c in out))

    def valuation(self):
        """Exact valuation (Fraction), or math.inf if zero at precision."""
        ring = self.ring
        e = ring.degree
        best = math.inf
        M = ring._pi_matrix
        for zi in range(ring.base.zdim):
            col = [c.coords[zi] for c in self.coords]
            for l in range(e):
                acc = None
                for j in range(l, e):
                    if M[l][j] and not col[j].is_zero():
                        t = col[j] * M[l][j]
                        acc = t if acc is None else acc + t
                if acc is not None and not acc.is_zero():
                    cand = Fraction(acc.valuation()) + Fraction(l, e)
                    if cand < best:
                        best = cand
        return best

    def is_unit(self):
        """Invertible in K_n tensor S, i.e. nonzero constant part in K_n."""
        red = [c.coords[0] for c in self.coords]
        return any(not x.is_zero() for x in red)

    def z_slice(self, zi):
        """The z^zi-coefficient, an element of K_n over Q_p."""
        field_ring = CycloRing(self.ring.base.field_point(), self.ring.n)
        return field_ring.elem([c.coords[zi] for c in self.coords])

    def from_field(self, x):
        """Embed a K_n/Q_p element into this ring's K_n tensor S."""
        return self.ring.elem([c.coords[0] for c in x.coords])

    def inv(self):
        """Inverse by one exact linear solve over Q_p coordinates; the
        answer honestly carries extra digits (the solve runs at a larger
        modulus), giving headroom against later worst-case losses."""
        ring = self.ring
        if not self.is_unit():
            raise DivisionByZero("cyclotomic element not a unit")
        p, prec = ring.base.p, ring.base.prec
        d, m = ring.degree, ring.base.zdim
        cols = []
        for j in range(d):
            for zi in range(m):
                basis = ring.elem(
                    [0] * j + [ring.base.elem([0] * zi + [1])])
                cols.append(_qp_coords(self * basis))
        rhs = _qp_coords(ring.one())
        sol = solve_padic_columns(cols, rhs, p, prec)
        if sol is None:
            raise DivisionByZero("no inverse at working precision")
        coords = []
        for j in range(d):
            coords.append(ring.base.elem(sol[j * m:(j + 1) * m]))
        return ring.elem(coords)

    def constant_base_part(self):
        """Coefficient of eps^0, an element of S."""
        return self.coords[0]

    def same(self, other, prec=None):
        other = self._coerce(other)
        return all(a.same(b, prec) for a, b in zip(self.coords, other.coords))

    def certified_zero_at(self, tol):
        return all(a.certified_zero_at(tol) for a in self.coords)

    def at_precision(self, prec):
        return CycloElem(self.ring, tuple(
            AlgElem(c.ring, tuple(x.at_precision(prec) for x in c.coords))
            for c in self.coords))

    def __repr__(self):
        return "Cyclo(n=%d)[%s]" % (self.ring.n,
                                    ", ".join(repr(c) for c in self.coords))

    def to_text(self):
        return "[" + " ".join(c.to_text() for c in self.coords) + "]"


def _qp_coords(x: CycloElem):
    """Flat list of PadicScalar coordinates (eps-power major, z minor)."""
    out = []
    for c in x.coords:
        out.extend(c.coords)
    return out
