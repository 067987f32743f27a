"""Base coefficient algebras S = Q_p or Q_p[z]/(z^m), and continuous
characters of Q_p^x with values in S.

Elements are coordinate vectors in the basis 1, z, ..., z^(m-1) with
PadicScalar entries.  The Gauss norm is the max of coordinate norms, i.e.
the valuation is the min of coordinate valuations.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .errors import DivisionByZero, NonUnitArgument
from .padics import (PadicScalar, UnitValue, chi_gamma0, chi_omega,
                     padic_log, vp_fraction)


class BaseAlgebra:
    """Descriptor for S = Q_p[z]/(z^m); m = 1 gives Q_p itself.

    ``prec`` is the working absolute precision; exact data entered from
    rationals is encoded with ``headroom`` extra digits so that the
    worst-case per-operation precision rules do not eat into the working
    window when denominators pile up.  Every value still carries its own
    honest precision."""

    headroom = 48

    def __init__(self, p, prec, zdim=1):
        if p == 2 or p < 2:
            raise ValueError("odd primes only")
        self.p = p
        self.prec = prec
        self.zdim = zdim

    def __eq__(self, other):
        return (isinstance(other, BaseAlgebra) and self.p == other.p
                and self.prec == other.prec and self.zdim == other.zdim)

    def __hash__(self):
        return hash((self.p, self.prec, self.zdim))

    def __repr__(self):
        if self.zdim == 1:
            return "Q_%d (prec %d)" % (self.p, self.prec)
        return "Q_%d[z]/(z^%d) (prec %d)" % (self.p, self.zdim, self.prec)

    # -- element factories ----------------------------------------------

    def elem(self, coords, headroom=None):
        """Element from a list of rationals/PadicScalars (z-coefficients);
        rational inputs get the default digit headroom."""
        out = []
        prec = self.prec + (self.headroom if headroom is None else headroom)
        for c in list(coords)[: self.zdim]:
            if not isinstance(c, PadicScalar):
                c = PadicScalar.from_fraction(c, self.p, prec)
            out.append(c)
        while len(out) < self.zdim:
            out.append(PadicScalar.zero(self.p, prec))
        return AlgElem(self, tuple(out))

    def scalar(self, x):
        return self.elem([x])

    def zero(self):
        return self.elem([0])

    def one(self):
        return self.elem([1])

    def z(self):
        if self.zdim < 2:
            raise ValueError("no nilpotent z in Q_p")
        return self.elem([0, 1])

    def field_point(self):
        """The residue field Q_p of S (specialization z -> 0)."""
        return BaseAlgebra(self.p, self.prec, 1)


class AlgElem:
    __slots__ = ("ring", "coords")

    def __init__(self, ring, coords):
        self.ring = ring
        self.coords = coords

    def _coerce(self, other):
        if isinstance(other, AlgElem):
            # precision is carried by the values; rings only need the
            # same structure (prime and nilpotency degree)
            if other.ring.p != self.ring.p or \
                    other.ring.zdim != self.ring.zdim:
                raise ValueError("mixed base algebras")
            return other
        return self.ring.elem([other])

    def __add__(self, other):
        other = self._coerce(other)
        return AlgElem(self.ring, tuple(a + b for a, b in
                                        zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return AlgElem(self.ring, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, PadicScalar)):
            return AlgElem(self.ring, tuple(a * other for a in self.coords))
        other = self._coerce(other)
        m = self.ring.zdim
        out = [None] * m
        for i, a in enumerate(self.coords):
            for j, b in enumerate(other.coords):
                if i + j < m:
                    t = a * b
                    cur = out[i + j]
                    out[i + j] = t if cur is None else cur + t
        zero = PadicScalar.zero(self.ring.p, self.ring.prec)
        return AlgElem(self.ring, tuple(zero if c is None else c
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

    # -- structure -------------------------------------------------------

    def is_zero(self):
        return all(c.is_zero() for c in self.coords)

    def gauss_val(self):
        """min of coordinate valuations; math.inf if zero at precision."""
        return min((c.valuation() for c in self.coords), default=math.inf)

    def val_bound(self):
        return min((c.val_bound() for c in self.coords), default=math.inf)

    def is_unit(self):
        return not self.coords[0].is_zero()

    def constant(self):
        return self.coords[0]

    def nilpotent_order(self):
        """Smallest a with self in z^a * S^x, or None if zero at precision."""
        for a, c in enumerate(self.coords):
            if not c.is_zero():
                return a
        return None

    def inv(self):
        """Inverse by exact rational synthetic division on the coordinate
        lifts, re-encoded with headroom for the valuation drop (stored
        coordinates represent their residue classes exactly)."""
        if not self.is_unit():
            raise DivisionByZero("constant term is zero at precision")
        m = self.ring.zdim
        lifts = [x.lift() for x in self.coords]
        out = [Fraction(0)] * m
        out[0] = 1 / lifts[0]
        for k in range(1, m):
            acc = Fraction(0)
            for i in range(1, k + 1):
                acc += lifts[i] * out[k - i]
            out[k] = -acc * out[0]
        from .padics import vp_fraction
        vmin = min((vp_fraction(c, self.ring.p) for c in out if c),
                   default=0)
        prec = self.ring.prec + 2 * max(0, -vmin) + 4
        return AlgElem(self.ring, tuple(
            PadicScalar.from_fraction(c, self.ring.p, prec) for c in out))

    def __truediv__(self, other):
        return self * self._coerce(other).inv()

    def exp_nilpotent(self):
        """exp of a nilpotent element (finite sum)."""
        if self.is_unit():
            raise NonUnitArgument("exp only for nilpotent arguments")
        out = self.ring.one()
        term = self.ring.one()
        for j in range(1, self.ring.zdim):
            term = term * self * Fraction(1, j)
            out = out + term
        return out

    def log_principal(self):
        """log of 1 + (nilpotent + p-small) elements, termwise finite in z."""
        one = self.ring.one()
        x = self - one
        c0 = x.coords[0]
        if not c0.is_zero() and c0.vord <= 0:
            raise NonUnitArgument("log needs 1 + (small)")
        # constant direction converges p-adically, z-directions terminate
        out = self.ring.zero()
        term = one
        bound = self.ring.prec * max(1, self.ring.zdim)
        for m in range(1, 2 * bound + 2):
            term = term * x
            out = out + term * Fraction((-1) ** (m + 1), m)
            cv = term.val_bound()
            if cv != math.inf and cv - int(math.log(m, self.ring.p)) - 1 \
                    >= self.ring.prec:
                break
            if cv == math.inf:
                break
        return out

    def at_field_point(self):
        """Image under S -> Q_p, z -> 0."""
        return AlgElem(self.ring.field_point(), (self.coords[0],))

    def with_headroom(self):
        """Re-encode the exact coordinate lifts with enough digits that
        multiplying by p^(-v)-sized partners keeps full base precision."""
        from .padics import vp_fraction
        lifts = [x.lift() for x in self.coords]
        vmin = min((vp_fraction(c, self.ring.p) for c in lifts if c),
                   default=0)
        prec = self.ring.prec + 2 * max(0, -vmin) + 4
        return AlgElem(self.ring, tuple(
            PadicScalar.from_fraction(c, self.ring.p, prec)
            for c in lifts))

    def same(self, other, prec=None):
        other = self._coerce(other)
        return all(a.same(b, prec) for a, b in zip(self.coords, other.coords))

    def certified_zero_at(self, tol):
        return all(a.certified_zero_at(tol) for a in self.coords)

    def __repr__(self):
        return "AlgElem[%s]" % ", ".join(c.to_text() for c in self.coords)

    # -- serialization: z-coefficient list --------------------------------

    def to_text(self):
        return "[" + " ".join(c.to_text() for c in self.coords) + "]"


class Character:
    """Continuous character of Q_p^x with values in S^x.

    Determined by delta(p) (a unit of S), an integer weight k with
    delta(u) = u^k on Z_p^x, and optionally a nilpotent deviation s in S
    acting through the principal-unit direction:
    delta(u) = tau(u)^k <u>^k exp(s log<u>).  Integer-weight characters
    have s = 0; the deviation exists so artinian families can bend the
    weight infinitesimally.
    """

    def __init__(self, ring: BaseAlgebra, p_value: AlgElem, weight: int,
                 weight_dev: AlgElem | None = None):
        if not isinstance(p_value, AlgElem):
            p_value = ring.elem([p_value])
        if not p_value.is_unit():
            raise NonUnitArgument("delta(p) must be a unit of S")
        self.ring = ring
        # character data is exact; keep digits ahead of valuation drops
        self.p_value = p_value.with_headroom()
        self.weight = weight
        self.weight_dev = weight_dev if weight_dev is not None \
            else ring.zero()
        if self.weight_dev.is_unit():
            raise NonUnitArgument("weight deviation must be nilpotent")

    @classmethod
    def trivial(cls, ring):
        return cls(ring, ring.one(), 0)

    def slope(self):
        """v_p of delta(p) under the Gauss norm (= -log_p |delta(p)|)."""
        return self.p_value.gauss_val()

    def __mul__(self, other):
        if self.ring != other.ring:
            raise ValueError("mixed base algebras")
        return Character(self.ring, self.p_value * other.p_value,
                         self.weight + other.weight,
                         self.weight_dev + other.weight_dev)

    def inv(self):
        return Character(self.ring, self.p_value.inv(), -self.weight,
                         -self.weight_dev)

    def __truediv__(self, other):
        return self * other.inv()

    def is_trivial(self):
        return (self.weight == 0 and self.weight_dev.is_zero()
                and (self.p_value - 1).is_zero())

    def same(self, other):
        return (self.weight == other.weight
                and (self.p_value - other.p_value).is_zero()
                and (self.weight_dev - other.weight_dev).is_zero())

    # -- evaluation --------------------------------------------------------

    def eval_unit(self, u: UnitValue) -> AlgElem:
        """delta(u) for an exactly-known unit u of Z_p, carried with the
        exact-data digit headroom."""
        p = self.ring.p
        prec = self.ring.prec + self.ring.headroom
        principal = UnitValue(p, u.rat, 1)
        tau_part = pow(u.teich_res, self.weight % (p - 1), p)
        out = self.ring.scalar(principal.at_precision(prec) ** self.weight)
        if tau_part != 1:
            from .padics import teichmuller
            out = out * teichmuller(tau_part, p, prec)
        if not self.weight_dev.is_zero():
            lp = padic_log(principal.at_precision(prec + self.ring.zdim))
            out = out * (self.weight_dev * lp).exp_nilpotent()
        return out

    def eval(self, u: UnitValue, e: int) -> AlgElem:
        """delta(u * p^e); u must be a unit of Z_p."""
        return self.p_value ** e * self.eval_unit(u)

    def gamma0_value(self) -> AlgElem:
        return self.eval_unit(chi_gamma0(self.ring.p))

    def omega_value(self) -> AlgElem:
        return self.eval_unit(chi_omega(self.ring.p))

    def __repr__(self):
        dev = "" if self.weight_dev.is_zero() else " + dev"
        return "Character(p -> %r, weight %d%s)" % (self.p_value,
                                                    self.weight, dev)


def t_power_character(ring, j):
    """The character of the rank-1 module generated by t^j:
    p -> p^j, weight j."""
    return Character(ring, ring.scalar(Fraction(ring.p) ** j), j)
