"""Truncated Laurent series on closed annuli: the working model of the
Robba ring.

An element stores finitely many terms a_i T^i (integer i inside a window),
an annulus [r_lo, r_hi] of radius parameters s, and a guarantee E: all
discarded terms t satisfy w_s(t) >= E at both endpoints (hence, by
linearity of v + s*i in s, everywhere on the annulus).  Every operation
propagates E pessimistically, so "zero within guarantee" is a sound
statement about the true analytic object.

Conventions: w_s(f) = min_i (v(a_i) + s*i); the Frobenius phi sends T to
(1+T)^p - 1 and maps the annulus [r_lo, r_hi] to [r_lo/p, r_hi/p]; the
group Gamma acts by T -> (1+T)^c - 1 for units c of Z_p, preserving the
annulus.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .base import AlgElem, BaseAlgebra
from .errors import NotInvertible, OutOfAnnulus, WindowTooSmall
from .padics import PadicScalar, UnitValue, vp_int

INF = math.inf


class RobbaRing:
    """Laurent model of the Robba ring sections over an annulus."""

    def __init__(self, base: BaseAlgebra, r_lo, r_hi, cap_lo=-64, cap_hi=256):
        r_lo, r_hi = Fraction(r_lo), Fraction(r_hi)
        if not (0 < r_lo <= r_hi):
            raise ValueError("need 0 < r_lo <= r_hi")
        self.base = base
        self.r_lo = r_lo
        self.r_hi = r_hi
        self.cap_lo = cap_lo
        self.cap_hi = cap_hi

    def key(self):
        return (self.base, self.r_lo, self.r_hi, self.cap_lo, self.cap_hi)

    def __eq__(self, other):
        return isinstance(other, RobbaRing) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "RobbaRing(%s, [%s, %s], window [%d, %d])" % (
            self.base, self.r_lo, self.r_hi, self.cap_lo, self.cap_hi)

    def phi_target(self):
        return RobbaRing(self.base, self.r_lo / self.base.p,
                         self.r_hi / self.base.p, self.cap_lo, self.cap_hi)

    def restricted(self, r_lo, r_hi):
        r_lo, r_hi = Fraction(r_lo), Fraction(r_hi)
        if not (self.r_lo <= r_lo <= r_hi <= self.r_hi):
            raise OutOfAnnulus("[%s, %s] not inside [%s, %s]"
                               % (r_lo, r_hi, self.r_lo, self.r_hi))
        return RobbaRing(self.base, r_lo, r_hi, self.cap_lo, self.cap_hi)

    def overlap(self, other):
        lo, hi = max(self.r_lo, other.r_lo), min(self.r_hi, other.r_hi)
        if lo > hi:
            raise OutOfAnnulus("annuli do not meet")
        return RobbaRing(self.base, lo, hi, self.cap_lo, self.cap_hi)

    def contains_level(self, n):
        """Is r_n = 1/(p^(n-1)(p-1)) inside the annulus?"""
        return self.r_lo <= self.level_radius(n) <= self.r_hi

    def level_radius(self, n):
        p = self.base.p
        return Fraction(1, p ** (n - 1) * (p - 1))

    def levels(self):
        out, n = [], 1
        while self.level_radius(n) > self.r_hi:
            n += 1
        while self.level_radius(n) >= self.r_lo:
            out.append(n)
            n += 1
        return out

    # -- element factories -------------------------------------------------

    def elem(self, terms, guarantee=(INF, INF)):
        coeffs = {}
        for i, c in terms.items():
            if not isinstance(c, AlgElem):
                c = self.base.elem([c])
            if not c.is_zero():
                coeffs[i] = c
        return RobbaElement(self, coeffs, guarantee)._capped()

    def zero(self):
        return RobbaElement(self, {}, (INF, INF))

    def one(self):
        return self.elem({0: 1})

    def T(self, i=1, coef=1):
        return self.elem({i: coef})

    def scalar(self, c):
        return self.elem({0: c})

    def t_element(self, order=None, headroom=64):
        """log(1+T) truncated to the window (or the given order).

        Coefficients 1/i are exact rationals; they are encoded with
        precision headroom so that powers of t keep full base precision
        despite the denominators."""
        hi = self.cap_hi if order is None else min(order, self.cap_hi)
        if hi < 1:
            raise WindowTooSmall("window cannot hold t")
        prec = self.base.prec + headroom
        terms = {i: PadicScalar.from_fraction(
            Fraction((-1) ** (i + 1), i), self.base.p, prec)
            for i in range(1, hi + 1)}
        E = (_log_tail_bound(hi, self.base.p, (self.r_lo,)),
             _log_tail_bound(hi, self.base.p, (self.r_hi,)))
        return self.elem(terms, E)

    def q_element(self):
        """((1+T)^p - 1)/T, an exact polynomial."""
        p = self.base.p
        return self.elem({j - 1: math.comb(p, j) for j in range(1, p + 1)})

    def phi_q(self, n):
        """phi^(n-1)(q); exact polynomial, computed on the source annulus
        whose (n-1)-fold phi lands here."""
        p = self.base.p
        src = self
        for _ in range(n - 1):
            src = RobbaRing(self.base, src.r_lo * p, src.r_hi * p,
                            self.cap_lo, self.cap_hi)
        out = src.q_element()
        for _ in range(n - 1):
            out = out.phi()
        return out


def _log_tail_bound(kept_hi, p, radii):
    """min over dropped l > kept_hi and both radii of (s*l - v_p(l))."""
    best = INF
    for s in radii:
        # exact scan over a stretch, then the analytic floor takes over
        span = max(8, int(2 / (s * math.log(p))) + 4)
        for l in range(kept_hi + 1, kept_hi + span + 1):
            best = min(best, Fraction(s) * l - vp_int(l, p))
        l = kept_hi + span + 1
        best = min(best, Fraction(s) * l - math.log(l, p))
    return best


class RobbaElement:
    """guar is the pair (E at r_lo, E at r_hi): discarded terms have
    w >= E at the respective endpoint, hence (by linearity of v + s*i
    in s) at least the interpolated bound on the whole annulus."""

    __slots__ = ("ring", "coeffs", "guar")

    def __init__(self, ring, coeffs, guar=(INF, INF)):
        self.ring = ring
        self.coeffs = coeffs
        if not isinstance(guar, tuple):
            guar = (guar, guar)
        self.guar = guar

    @property
    def guarantee(self):
        return min(self.guar)

    def guarantee_at(self, s):
        """Interpolated tail bound at radius s inside the annulus."""
        lo, hi = self.ring.r_lo, self.ring.r_hi
        e_lo, e_hi = self.guar
        if e_lo is INF and e_hi is INF:
            return INF
        if e_lo is INF or e_hi is INF or hi == lo:
            return min(e_lo, e_hi)
        s = Fraction(s)
        lam = (s - lo) / (hi - lo)
        return e_lo + lam * (e_hi - e_lo)

    # -- bookkeeping --------------------------------------------------------

    def _term_w_pair(self, i, val=None):
        """(val + s*i) at the two endpoints for the stored term."""
        if val is None:
            val = self.coeffs[i].val_bound()
        if val is INF:
            return (INF, INF)
        return (Fraction(val) + self.ring.r_lo * i,
                Fraction(val) + self.ring.r_hi * i)

    def _term_w(self, i, val=None):
        return min(self._term_w_pair(i, val))

    def _capped(self):
        ring = self.ring
        drop = [i for i in self.coeffs
                if i < ring.cap_lo or i > ring.cap_hi]
        if not drop:
            return self
        e_lo, e_hi = self.guar
        for i in drop:
            w_lo, w_hi = self._term_w_pair(i)
            e_lo = min(e_lo, w_lo)
            e_hi = min(e_hi, w_hi)
            del self.coeffs[i]
        self.guar = (e_lo, e_hi)
        return self

    def w_min_pair(self):
        e_lo, e_hi = self.guar
        for i in self.coeffs:
            w_lo, w_hi = self._term_w_pair(i)
            e_lo = min(e_lo, w_lo)
            e_hi = min(e_hi, w_hi)
        return (e_lo, e_hi)

    def w_min(self):
        """Lower bound for w_s over the whole annulus, all terms included."""
        return min(self.w_min_pair())

    def w_norm(self, s):
        """min over stored terms of v(a_i) + s*i; true w_s up to the
        guarantee.  OutOfAnnulus if s is not in the annulus."""
        s = Fraction(s)
        if not (self.ring.r_lo <= s <= self.ring.r_hi):
            raise OutOfAnnulus("s = %s outside [%s, %s]"
                               % (s, self.ring.r_lo, self.ring.r_hi))
        best = INF
        for i, c in self.coeffs.items():
            v = c.val_bound()
            if v is not INF:
                best = min(best, Fraction(v) + s * i)
        return best

    def is_small(self, tol):
        """Is the true element guaranteed to satisfy w_s >= tol on the
        annulus (stored terms at coefficient precision, tail by E)?"""
        if self.guarantee < tol:
            return False
        return all(self._term_w(i) >= tol for i in self.coeffs)

    def is_small_at(self, s, tol):
        """w_s >= tol at one radius, stored terms plus interpolated tail."""
        s = Fraction(s)
        if self.guarantee_at(s) < tol:
            return False
        for i, c in self.coeffs.items():
            v = c.val_bound()
            if v is INF:
                continue
            if Fraction(v) + s * i < tol:
                return False
        return True

    def support(self):
        return sorted(self.coeffs)

    def is_zero_stored(self):
        return not self.coeffs

    def coefficient(self, i) -> AlgElem:
        return self.coeffs.get(i, self.ring.base.zero())

    # -- ring operations -----------------------------------------------------

    def _check(self, other):
        if not isinstance(other, RobbaElement):
            return self.ring.scalar(other) if not isinstance(other, dict) \
                else None
        if (other.ring.base != self.ring.base
                or other.ring.r_lo != self.ring.r_lo
                or other.ring.r_hi != self.ring.r_hi):
            raise ValueError("elements on different rings")
        return other

    def __add__(self, other):
        if isinstance(other, (int, Fraction, AlgElem, PadicScalar)):
            other = self.ring.scalar(other)
        other = self._check(other)
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            s = out.get(i)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(i, None)
            else:
                out[i] = s
        return RobbaElement(self.ring, out,
                            (min(self.guar[0], other.guar[0]),
                             min(self.guar[1], other.guar[1])))

    __radd__ = __add__

    def __neg__(self):
        return RobbaElement(self.ring, {i: -c for i, c in self.coeffs.items()},
                            self.guar)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, AlgElem, PadicScalar)):
            other = self.ring.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        """Multiply by a scalar (AlgElem / PadicScalar / Fraction / int)."""
        if isinstance(c, (int, Fraction, PadicScalar)):
            cv = c if isinstance(c, PadicScalar) else \
                PadicScalar.from_fraction(c, self.ring.base.p,
                                          self.ring.base.prec * 4)
            vshift = cv.valuation()
            if cv.is_zero():
                return self.ring.zero()
            out = {i: x * cv for i, x in self.coeffs.items()}
            E = tuple(e if e is INF else e + vshift for e in self.guar)
            return RobbaElement(self.ring, {i: x for i, x in out.items()
                                            if not x.is_zero()}, E)
        c = self.ring.base.elem([c]) if not isinstance(c, AlgElem) else c
        if c.is_zero():
            return self.ring.zero()
        vshift = c.val_bound()
        if vshift is INF:
            vshift = 0
        out = {}
        for i, x in self.coeffs.items():
            y = x * c
            if not y.is_zero():
                out[i] = y
        E = tuple(e if e is INF else e + vshift for e in self.guar)
        return RobbaElement(self.ring, out, E)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, AlgElem, PadicScalar)):
            return self.scale(other)
        other = self._check(other)
        wf, wg = self.w_min_pair(), other.w_min_pair()
        E = []
        for side in (0, 1):
            ef, eg = self.guar[side], other.guar[side]
            cands = []
            if ef is not INF:
                cands.append(ef + (wg[side] if wg[side] is not INF else 0))
            if eg is not INF:
                cands.append(eg + (wf[side] if wf[side] is not INF else 0))
            if ef is not INF and eg is not INF:
                cands.append(ef + eg)
            E.append(min(cands) if cands else INF)
        E = tuple(E)
        out = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                k = i + j
                t = a * b
                if t.is_zero():
                    continue
                s = out.get(k)
                out[k] = t if s is None else s + t
        out = {k: v for k, v in out.items() if not v.is_zero()}
        return RobbaElement(self.ring, out, E)._capped()

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            return self.inv_unit() ** (-e)
        if e == 0:
            return self.ring.one()
        out, base = None, self
        while e:
            if e & 1:
                out = base if out is None else out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def shift(self, k):
        """Multiply by T^k."""
        e_lo, e_hi = self.guar
        if e_lo is not INF:
            e_lo = e_lo + self.ring.r_lo * k
        if e_hi is not INF:
            e_hi = e_hi + self.ring.r_hi * k
        return RobbaElement(self.ring,
                            {i + k: c for i, c in self.coeffs.items()},
                            (e_lo, e_hi))._capped()

    # -- units ---------------------------------------------------------------

    def dominant_term(self):
        """(i0, margin): the unique stored term minimizing w at both
        endpoints, with the strict margin to the rest; None if no single
        term dominates within the guarantee."""
        best = {}
        for s in (self.ring.r_lo, self.ring.r_hi):
            pairs = []
            for i, c in self.coeffs.items():
                v = c.val_bound()
                if v is INF:
                    continue
                pairs.append((Fraction(v) + s * i, i))
            if not pairs:
                return None
            pairs.sort()
            best[s] = pairs
        i_lo = best[self.ring.r_lo][0][1]
        i_hi = best[self.ring.r_hi][0][1]
        if i_lo != i_hi:
            return None
        if not self.coeffs[i_lo].is_unit():
            return None
        margin = INF
        for side, (s, pairs) in enumerate(best.items()):
            w0 = pairs[0][0]
            if len(pairs) > 1:
                margin = min(margin, pairs[1][0] - w0)
            e = self.guar[side]
            if e is not INF:
                margin = min(margin, e - w0)
        if margin <= 0:
            return None
        return i_lo, margin

    def inv_unit(self, max_terms=4096):
        """Inverse of a unit c*T^i0*(1+g) with w(g) > 0 on the annulus."""
        dom = self.dominant_term()
        if dom is None:
            raise NotInvertible("no strictly dominant unit monomial")
        i0, margin = dom
        a0 = self.coeffs[i0]
        a0i = a0.inv()
        g = (self.shift(-i0)).scale(a0i) - 1
        # target: tail below scalar precision everywhere on the window
        E_stop = _stop_guarantee(self.ring)
        out = self.ring.one()
        term = self.ring.one()
        l = 0
        while True:
            l += 1
            if l > max_terms:
                raise NotInvertible("unit margin %s too small" % (margin,))
            term = term * (-g)
            out = out + term
            if (l * margin >= E_stop or term.is_zero_stored()
                    or term.w_min() >= E_stop):
                break
        out.guar = tuple(min(e, (l + 1) * margin) for e in out.guar)
        return out.shift(-i0).scale(a0i)

    # -- semilinear actions ----------------------------------------------------

    def phi(self):
        """Frobenius: T -> (1+T)^p - 1, result on [r_lo/p, r_hi/p]."""
        target = self.ring.phi_target()
        out = target.zero()
        # tails map isometrically: w_{s/p}(phi f) = w_s(f), per endpoint
        for i, c in self.coeffs.items():
            out = out + _phi_pow(self.ring, i).scale(c)
        out.guar = (min(out.guar[0], self.guar[0]),
                    min(out.guar[1], self.guar[1]))
        return out

    def gamma(self, c):
        """Gamma action T -> (1+T)^c - 1 for a unit c (int or UnitValue)."""
        if isinstance(c, int):
            c = UnitValue(self.ring.base.p, Fraction(c))
        out = self.ring.zero()
        for i, coef in self.coeffs.items():
            out = out + _gamma_pow(self.ring, c, i).scale(coef)
        out.guar = (min(out.guar[0], self.guar[0]),
                    min(out.guar[1], self.guar[1]))
        return out

    # -- misc -------------------------------------------------------------------

    def map_coeffs(self, f):
        out = {}
        for i, c in self.coeffs.items():
            y = f(c)
            if not y.is_zero():
                out[i] = y
        return RobbaElement(self.ring, out, self.guar)

    def restricted(self, ring):
        """The same element viewed on a sub-annulus ring; the tail bounds
        interpolate to the new endpoints."""
        if not (ring.r_lo >= self.ring.r_lo and ring.r_hi <= self.ring.r_hi
                and ring.base == self.ring.base):
            raise OutOfAnnulus("not a sub-annulus")
        guar = (self.guarantee_at(ring.r_lo), self.guarantee_at(ring.r_hi))
        return RobbaElement(ring, dict(self.coeffs), guar)._capped()

    def is_exact_laurent(self):
        """Finite exact data (no truncation guarantee), hence a global
        function on every annulus."""
        return self.guar[0] is INF and self.guar[1] is INF

    def retagged(self, ring):
        """View exact Laurent data on an unrelated annulus.  Only legal
        without a truncation guarantee: truncated tails are certified on
        one annulus only."""
        if not self.is_exact_laurent():
            raise OutOfAnnulus("cannot move truncated data to another "
                               "annulus")
        if ring.base != self.ring.base:
            raise ValueError("retag across base algebras")
        return RobbaElement(ring, dict(self.coeffs), (INF, INF))._capped()

    def same(self, other, tol):
        return (self - other).is_small(tol)

    def __repr__(self):
        parts = ["(%d, %r)" % (i, self.coeffs[i]) for i in self.support()[:6]]
        more = "..." if len(self.coeffs) > 6 else ""
        return "Robba[%s%s | E=%s]" % (", ".join(parts), more, (self.guar,))

    def to_text(self):
        pieces = ["(%d, %s)" % (i, self.coeffs[i].to_text())
                  for i in self.support()]
        gl = "inf" if self.guar[0] is INF else str(self.guar[0])
        gh = "inf" if self.guar[1] is INF else str(self.guar[1])
        return "annulus %s %s window %d %d guarantee %s %s terms %s" % (
            self.ring.r_lo, self.ring.r_hi, self.ring.cap_lo,
            self.ring.cap_hi, gl, gh, " ".join(pieces))


def _stop_guarantee(ring):
    """Guarantee depth that makes dropped tails invisible at scalar
    precision anywhere on the window."""
    top = max(ring.r_hi * ring.cap_hi, ring.r_lo * ring.cap_hi,
              Fraction(0))
    return Fraction(ring.base.prec) + top + 1


# -- cached expansions of phi(T^i) and gamma_c(T^i) -------------------------
# tables grow incrementally: power i is one multiplication away from i -+ 1.
# Coefficients of the positive-power tables are integral scalars, so the
# convolutions run on raw integers modulo one fixed power of p and are
# wrapped into elements once at the end.

_PHI_CACHE: dict = {}
_GAMMA_CACHE: dict = {}


class _IntTable:
    """Power table with integer-dict coefficients mod p^KT and per-power
    endpoint tail bounds."""

    def __init__(self, ring, base_terms, base_guar, KT):
        self.ring = ring
        self.p = ring.base.p
        self.KT = KT
        self.mod = ring.base.p ** KT
        self.raw = {0: ({0: 1}, (INF, INF)), 1: (base_terms, base_guar)}
        self.inv = None
        self.wrapped = {}

    def _convolve(self, a, b):
        ring, p, mod = self.ring, self.p, self.mod
        ta, ga = a
        tb, gb = b
        out = {}
        for i, x in ta.items():
            for j, y in tb.items():
                k = i + j
                v = out.get(k)
                out[k] = (x * y) % mod if v is None else (v + x * y) % mod
        e_lo, e_hi = _combine_int_guar(ring, p, ta, ga, tb, gb)
        drop = [k for k in out if k < ring.cap_lo or k > ring.cap_hi
                or out[k] == 0]
        for k in drop:
            x = out.pop(k)
            if x:
                v = vp_int(x, p)
                e_lo = min(e_lo, v + ring.r_lo * k)
                e_hi = min(e_hi, v + ring.r_hi * k)
        return out, (e_lo, e_hi)

    def _inverse_base(self):
        """(base)^(-1) when base = c T^m (1 + h) with h supported above;
        requires an integral-unit leading term (true for gamma bases)."""
        terms, guar = self.raw[1]
        m0 = min(terms)
        c0 = terms[m0]
        if c0 % self.p == 0:
            raise NotInvertible("table base has no unit leading term")
        c0i = pow(c0, -1, self.mod)
        h = {i - m0: (-x * c0i) % self.mod for i, x in terms.items()
             if i != m0}
        out = ({0: 1}, (INF, INF))
        term = ({0: 1}, (INF, INF))
        # h is supported in degrees >= 1: the series terminates at cap_hi
        for _ in range(self.ring.cap_hi - self.ring.cap_lo + 2):
            term = self._convolve(term, (h, guar))
            if not term[0]:
                break
            out = (_int_add(out[0], term[0], self.mod), (
                min(out[1][0], term[1][0]), min(out[1][1], term[1][1])))
        terms_out = {i - m0: (x * c0i) % self.mod
                     for i, x in out[0].items()}
        sh = (self.ring.r_lo * (-m0), self.ring.r_hi * (-m0))
        guar_out = (out[1][0] + sh[0] if out[1][0] is not INF else INF,
                    out[1][1] + sh[1] if out[1][1] is not INF else INF)
        return terms_out, guar_out

    def power(self, i):
        hit = self.raw.get(i)
        if hit is not None:
            return hit
        if i > 0:
            j = max(k for k in self.raw if 0 <= k < i)
            cur = self.raw[j]
            while j < i:
                j += 1
                cur = self._convolve(cur, self.raw[1])
                self.raw[j] = cur
        else:
            if self.inv is None:
                self.inv = self._inverse_base()
            j = min(k for k in self.raw)
            cur = self.raw[j]
            while j > i:
                j -= 1
                cur = self._convolve(cur, self.inv)
                self.raw[j] = cur
        return self.raw[i]

    def element(self, i) -> "RobbaElement":
        hit = self.wrapped.get(i)
        if hit is not None:
            return hit
        terms, guar = self.power(i)
        base = self.ring.base
        coeffs = {}
        for k, x in terms.items():
            if x:
                coeffs[k] = base.elem([PadicScalar(self.p, x, 0, self.KT)])
        out = RobbaElement(self.ring, coeffs, guar)
        self.wrapped[i] = out
        return out


def _int_add(a, b, mod):
    out = dict(a)
    for k, x in b.items():
        v = (out.get(k, 0) + x) % mod
        if v:
            out[k] = v
        else:
            out.pop(k, None)
    return out


def _combine_int_guar(ring, p, ta, ga, tb, gb):
    def wmin(t, g):
        lo, hi = g
        for k, x in t.items():
            if x:
                v = vp_int(x, p)
                lo = min(lo, v + ring.r_lo * k)
                hi = min(hi, v + ring.r_hi * k)
        return lo, hi
    wa, wb = wmin(ta, ga), wmin(tb, gb)
    out = []
    for side in (0, 1):
        cands = []
        if ga[side] is not INF:
            cands.append(ga[side] + (wb[side] if wb[side] is not INF else 0))
        if gb[side] is not INF:
            cands.append(gb[side] + (wa[side] if wa[side] is not INF else 0))
        if ga[side] is not INF and gb[side] is not INF:
            cands.append(ga[side] + gb[side])
        out.append(min(cands) if cands else INF)
    return tuple(out)


def _phi_pow(ring, i) -> RobbaElement:
    """phi(T^i) as an element of the phi-target ring of ``ring``."""
    key = (ring.base.p, ring.base.prec, ring.base.zdim, ring.r_lo, ring.r_hi,
           ring.cap_lo, ring.cap_hi)
    cache = _PHI_CACHE.get(key)
    if cache is None:
        target = ring.phi_target()
        p = ring.base.p
        KT = ring.base.prec + ring.base.headroom + 12
        table = _IntTable(target, {j: math.comb(p, j)
                                   for j in range(1, p + 1)},
                          (INF, INF), KT)
        # negative powers need non-integral expansions: old slow path
        base_poly = target.elem({j: math.comb(p, j)
                                 for j in range(1, p + 1)})
        cache = {"table": table, "neg": {}, "base": base_poly}
        _PHI_CACHE[key] = cache
    if i >= 0:
        return cache["table"].element(i)
    if ring.phi_target().r_hi >= Fraction(1, ring.base.p - 1):
        raise OutOfAnnulus("negative phi-powers need the image annulus "
                           "inside the q-zero circle")
    neg = cache["neg"]
    if i not in neg:
        if -1 not in neg:
            neg[-1] = cache["base"].inv_unit()
        j = min(neg)
        cur = neg[j]
        while j > i:
            j -= 1
            cur = cur * neg[-1]
            neg[j] = cur
    return neg[i]


def _gamma_pow(ring, c: UnitValue, i) -> RobbaElement:
    key = (ring.base.p, ring.base.prec, ring.base.zdim, ring.r_lo, ring.r_hi,
           ring.cap_lo, ring.cap_hi, c.rat, c.teich_res)
    table = _GAMMA_CACHE.get(key)
    if table is None:
        base = _gamma_base(ring, c)
        KT = ring.base.prec + ring.base.headroom + 12
        mod = ring.base.p ** KT
        terms = {}
        for k, a in base.coeffs.items():
            x = a.coords[0]
            if not x.is_zero():
                if x.vord < 0:
                    raise NotInvertible("gamma base not integral")
                terms[k] = x.unit * ring.base.p ** x.vord % mod
        table = _IntTable(ring, terms, base.guar, KT)
        _GAMMA_CACHE[key] = table
    return table.element(i)


def _gamma_base(ring, c: UnitValue) -> RobbaElement:
    """(1+T)^c - 1 truncated to the window."""
    p, prec = ring.base.p, ring.base.prec
    if c.teich_res == 1 and c.rat.denominator == 1 and c.rat > 0:
        n = int(c.rat)
        return ring.elem({j: math.comb(n, j)
                          for j in range(1, n + 1)})
    # p-adic binomial series; valuations of binom(c, j) are >= 0, and the
    # iteration binom(c,j+1) = binom(c,j)(c-j)/(j+1) needs precision
    # headroom v_p(cap_hi!)
    hi = ring.cap_hi
    target = prec + ring.base.headroom + 14
    boost = target + sum(hi // p ** k for k in range(1, 40)
                         if p ** k <= hi) + 2
    cval = c.at_precision(boost)
    terms = {}
    cur = PadicScalar.one(p, boost)
    for j in range(1, hi + 1):
        cur = cur * (cval - (j - 1)) * Fraction(1, j)
        if not cur.is_zero():
            terms[j] = cur.at_precision(min(cur.prec, prec + max(
                0, int(ring.r_hi * j) + 1)))
    E = (Fraction(ring.r_lo) * (hi + 1), Fraction(ring.r_hi) * (hi + 1))
    return ring.elem(terms, E)
