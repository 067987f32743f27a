"""Exact p-adic scalars at a fixed absolute precision.

A value is stored as ``unit * p^vord`` where ``unit`` is coprime to p and
reduced modulo ``p^(prec - vord)``; ``prec`` is the absolute precision
exponent, so the value is known modulo ``p^prec``.  Zero at precision N is
stored with ``unit == 0`` and ``vord == prec``, meaning O(p^N).

Precision rules (absolute precision exponents):
  add:  min of the input precisions
  mul:  min(prec_a + v_b, prec_b + v_a)
  inv:  prec - 2*v   (dividing by p^j shifts the usable window down by j)
Any operation whose result precision would drop to <= 0 raises
PrecisionExhausted.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .errors import DivisionByZero, NonUnitArgument, PrecisionExhausted


def vp_int(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of integer zero")
    v = 0
    n = abs(n)
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_fraction(x, p: int):
    """p-adic valuation of a rational; math.inf for zero."""
    x = Fraction(x)
    if x == 0:
        return math.inf
    return vp_int(x.numerator, p) - vp_int(x.denominator, p)


class PadicScalar:
    __slots__ = ("p", "unit", "vord", "prec")

    def __init__(self, p, unit, vord, prec):
        if prec <= 0:
            raise PrecisionExhausted("absolute precision %d <= 0" % prec)
        self.p = p
        self.prec = prec
        if unit == 0:
            self.unit = 0
            self.vord = prec
            return
        v0 = vp_int(unit, p)
        if v0:
            unit //= p ** v0
            vord += v0
        if vord >= prec:
            self.unit = 0
            self.vord = prec
        else:
            self.unit = unit % p ** (prec - vord)
            self.vord = vord
            if self.unit == 0:  # cannot happen for unit coprime to p
                self.vord = prec

    # -- constructors -------------------------------------------------

    @classmethod
    def from_fraction(cls, x, p, prec):
        x = Fraction(x)
        if x == 0:
            return cls(p, 0, prec, prec)
        vn = vp_int(x.numerator, p)
        vd = vp_int(x.denominator, p)
        num = x.numerator // p ** vn
        den = x.denominator // p ** vd
        v = vn - vd
        mod = p ** max(1, prec - v)
        return cls(p, num * pow(den, -1, mod) % mod, v, prec)

    @classmethod
    def zero(cls, p, prec):
        return cls(p, 0, prec, prec)

    @classmethod
    def one(cls, p, prec):
        return cls(p, 1, 0, prec)

    # -- queries ------------------------------------------------------

    def is_zero(self):
        return self.unit == 0

    def valuation(self):
        """v_p of the value; math.inf when zero at precision."""
        return math.inf if self.unit == 0 else self.vord

    def val_bound(self):
        """Known lower bound for the valuation."""
        return self.prec if self.unit == 0 else self.vord

    def lift(self) -> Fraction:
        """A rational representative of the residue class."""
        if self.unit == 0:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.p) ** self.vord

    def at_precision(self, prec):
        """Forget digits beyond p^prec (prec <= self.prec)."""
        if prec >= self.prec:
            return self
        return PadicScalar(self.p, self.unit if self.vord < prec else 0,
                           min(self.vord, prec), prec)

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, (int, Fraction)):
            return PadicScalar.from_fraction(other, self.p, self.prec)
        if self.p != other.p:
            raise ValueError("mixed primes %d and %d" % (self.p, other.p))
        return other

    def __add__(self, other):
        other = self._coerce(other)
        prec = min(self.prec, other.prec)
        if self.unit == 0 and other.unit == 0:
            return PadicScalar(self.p, 0, prec, prec)
        v = min(self.vord, other.vord, prec)
        mod = self.p ** max(1, prec - v)
        m = (self.unit * self.p ** (self.vord - v)
             + other.unit * self.p ** (other.vord - v)) % mod
        return PadicScalar(self.p, m, v, prec)

    __radd__ = __add__

    def __neg__(self):
        if self.unit == 0:
            return self
        mod = self.p ** (self.prec - self.vord)
        return PadicScalar(self.p, (-self.unit) % mod, self.vord, self.prec)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        prec = min(self.prec + other.vord, other.prec + self.vord)
        if self.unit == 0 or other.unit == 0:
            return PadicScalar(self.p, 0, prec, prec)
        v = self.vord + other.vord
        mod = self.p ** max(1, prec - v)
        return PadicScalar(self.p, self.unit * other.unit % mod, v, prec)

    __rmul__ = __mul__

    def inv(self):
        if self.unit == 0:
            raise DivisionByZero("inverse of zero at O(p^%d)" % self.prec)
        prec = self.prec - 2 * self.vord
        if prec <= 0:
            raise PrecisionExhausted(
                "inverse would have absolute precision %d" % prec)
        mod = self.p ** (prec + self.vord)
        return PadicScalar(self.p, pow(self.unit, -1, mod), -self.vord, prec)

    def __truediv__(self, other):
        return self * self._coerce(other).inv()

    def __pow__(self, e):
        if e == 0:
            return PadicScalar.one(self.p, self.prec)
        base = self if e > 0 else self.inv()
        out, k = None, abs(e)
        while k:
            if k & 1:
                out = base if out is None else out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # -- comparison helpers --------------------------------------------

    def same(self, other, prec=None):
        """Equality at the smaller (or the given) absolute precision."""
        d = self - self._coerce(other)
        if prec is None:
            return d.unit == 0
        return d.unit == 0 or d.vord >= prec

    def certified_zero_at(self, tol):
        """Known to tol digits and zero modulo p^tol.  Unlike same(0),
        a low-precision zero does not pass."""
        return self.prec >= tol and self.val_bound() >= tol

    def __repr__(self):
        return "<%s>" % self.to_text()

    # -- serialization: m*p^v!N ----------------------------------------

    def to_text(self):
        if self.unit == 0:
            return "0*%d^%d!%d" % (self.p, self.prec, self.prec)
        return "%d*%d^%d!%d" % (self.unit, self.p, self.vord, self.prec)

    @classmethod
    def parse(cls, text, p=None):
        body, bang, ptxt = text.partition("!")
        mant, star, ptail = body.partition("*")
        if not (bang and star) or "^" not in ptail:
            raise ValueError("expected m*p^v!N, got %r" % text)
        base, _, vtxt = ptail.partition("^")
        pp = int(base)
        if p is not None and p != pp:
            raise ValueError("prime mismatch in %r" % text)
        return cls(pp, int(mant), int(vtxt), int(ptxt))


# -- distinguished units of Z_p ----------------------------------------

def teichmuller(a, p, prec):
    """Teichmuller lift of a mod p (odd p)."""
    if a % p == 0:
        raise NonUnitArgument("no Teichmuller lift for %d mod %d" % (a, p))
    mod = p ** prec
    x = a % mod
    for _ in range(prec + 1):
        x = pow(x, p, mod)
    return PadicScalar(p, x, 0, prec)


def smallest_primitive_root(p):
    for g in range(2, p):
        seen, x = set(), 1
        for _ in range(p - 1):
            x = x * g % p
            seen.add(x)
        if len(seen) == p - 1:
            return g
    raise ValueError("no primitive root mod %d" % p)


class UnitValue:
    """An exactly-known unit of Z_p, reconstructible at any precision.

    Two kinds cover everything the character layer needs: exact rationals
    (e.g. powers of 1+p) and Teichmuller roots of unity.
    """

    def __init__(self, p, rat=None, teich_res=1):
        self.p = p
        self.rat = Fraction(rat if rat is not None else 1)
        self.teich_res = teich_res % p
        if self.rat == 0 or self.teich_res == 0:
            raise NonUnitArgument("UnitValue must be a unit")

    def at_precision(self, prec) -> PadicScalar:
        out = PadicScalar.from_fraction(self.rat, self.p, prec)
        if self.teich_res != 1:
            out = out * teichmuller(self.teich_res, self.p, prec)
        return out

    def mod_int(self, modulus) -> int:
        """Value as an integer modulo p^n (modulus = p^n)."""
        prec = 1
        while self.p ** prec < modulus:
            prec += 1
        x = self.at_precision(prec + 1)
        num = x.lift()
        return int(num.numerator * pow(num.denominator, -1, modulus)) % modulus

    def __mul__(self, other):
        if isinstance(other, UnitValue):
            return UnitValue(self.p, self.rat * other.rat,
                             self.teich_res * other.teich_res)
        return UnitValue(self.p, self.rat * Fraction(other), self.teich_res)

    def __pow__(self, e):
        if e >= 0:
            return UnitValue(self.p, self.rat ** e,
                             pow(self.teich_res, e, self.p))
        inv_res = pow(self.teich_res, -1, self.p)
        return UnitValue(self.p, self.rat ** e, pow(inv_res, -e, self.p))

    def is_one(self):
        return self.rat == 1 and self.teich_res == 1

    def __repr__(self):
        return "UnitValue(%d, %s, teich=%d)" % (self.p, self.rat,
                                                self.teich_res)


def chi_gamma0(p):
    """chi of the fixed pro-p generator gamma_0: 1 + p."""
    return UnitValue(p, Fraction(1 + p))


def chi_omega(p):
    """chi of the fixed torsion generator: the Teichmuller lift of the
    smallest primitive root mod p."""
    return UnitValue(p, 1, smallest_primitive_root(p))


def padic_log(u: PadicScalar) -> PadicScalar:
    """log of a principal unit (u = 1 mod p, odd p)."""
    p, prec = u.p, u.prec
    x = u - 1
    if x.is_zero():
        return PadicScalar.zero(p, prec)
    if x.vord <= 0:
        raise NonUnitArgument("padic_log needs u = 1 mod p")
    out = PadicScalar.zero(p, prec)
    xpow = PadicScalar.one(p, prec + x.vord)  # headroom for /m losses
    m = 0
    while True:
        m += 1
        xpow = xpow * x
        out = out + xpow * Fraction((-1) ** (m + 1), m)
        if m * x.vord - int(math.log(m, p)) - 1 >= prec:
            return out
