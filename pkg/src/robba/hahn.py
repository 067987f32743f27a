"""Finite-support rational-exponent series (the desk model of the
extended Robba ring) and the Frobenius-equation solver.

Elements are sums a_i u^i with i rational (denominators dividing p^M) and
finitely many terms; coefficients are exact rationals in
S = Q[z]/(z^m), optionally tensored with the split degree-f etale algebra
Q^f carrying the cyclic-shift Frobenius (the desk stand-in for an
unramified coefficient extension; f = 1 by default and phi then fixes
coefficients).  phi multiplies exponents by p.

The solver treats phi(b) - alpha b = a for |alpha^{-1}| < 1:
  * obstruction at a negative exponent i:
        sum_{m in Z} alpha^(-(m+1)) phi^m(a_{i p^-m})
    (a finite sum on finite support); all of them vanish iff a solution
    exists, and then
        b_i = - sum_{m >= 0} alpha^(-(m+1)) phi^m(a_{i p^-m}),
    supported on the forward orbits of supp(a), truncated once the
    coefficient valuation reaches the precision floor.
  * the norm bound w_r(b) >= w_r(a) - C(r, alpha) holds for the explicit
        C = max(C1, C2),
        C1 = max(0, max_{j>=1} ((j-1)(-v(alpha)) - r(p^j - 1))),
        C2 = max(0, max_{m>=0} (r(1 - p^-m) - (m+1) v(alpha^{-1}))),
    obtained by minimizing the two tail estimates over the shift index;
    both maxima are finite computations and independent of the support.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (DenominatorOverflow, NoSolution, SlopeViolation)
from .padics import vp_fraction, vp_int

INF = math.inf


class HahnContext:
    """Shared shape data: prime, exponent-denominator bound p^M, radius r,
    nilpotent z-dimension, Frobenius order f of the coefficient layer."""

    def __init__(self, p, M=2, radius=Fraction(1), zdim=1, frob_order=1):
        self.p = p
        self.M = M
        self.radius = Fraction(radius)
        self.zdim = zdim
        self.frob_order = frob_order

    def key(self):
        return (self.p, self.M, self.radius, self.zdim, self.frob_order)

    def __eq__(self, other):
        return isinstance(other, HahnContext) and self.key() == other.key()

    def __repr__(self):
        return "HahnContext(p=%d, M=%d, r=%s, zdim=%d, f=%d)" % self.key()

    # -- coefficients: f-tuples of z-coefficient tuples of Fractions ------

    def coeff(self, x):
        if isinstance(x, (int, Fraction)):
            one = (Fraction(x),) + (Fraction(0),) * (self.zdim - 1)
            return (one,) * self.frob_order
        if isinstance(x, (list, tuple)) and x and \
                isinstance(x[0], (int, Fraction)):
            zc = tuple(Fraction(c) for c in x)[: self.zdim]
            zc = zc + (Fraction(0),) * (self.zdim - len(zc))
            return (zc,) * self.frob_order
        return tuple(tuple(Fraction(c) for c in comp) for comp in x)

    def czero(self):
        return self.coeff(0)

    def cadd(self, a, b):
        return tuple(tuple(x + y for x, y in zip(ca, cb))
                     for ca, cb in zip(a, b))

    def cneg(self, a):
        return tuple(tuple(-x for x in ca) for ca in a)

    def cmul(self, a, b):
        out = []
        for ca, cb in zip(a, b):
            zc = [Fraction(0)] * self.zdim
            for i, x in enumerate(ca):
                if x:
                    for j, y in enumerate(cb):
                        if y and i + j < self.zdim:
                            zc[i + j] += x * y
            out.append(tuple(zc))
        return tuple(out)

    def cfrob(self, a, m=1):
        """Coefficient Frobenius: cyclic shift of the f components."""
        f = self.frob_order
        if f == 1:
            return a
        m %= f
        return tuple(a[(i - m) % f] for i in range(f))

    def cval(self, a):
        v = INF
        for comp in a:
            for x in comp:
                if x:
                    v = min(v, vp_fraction(x, self.p))
        return v

    def cinv(self, a):
        """Inverse of a unit coefficient: synthetic division 1/comp in
        Q[z]/(z^zdim), componentwise across the Frobenius layer."""
        out = []
        for comp in a:
            c0 = comp[0]
            if c0 == 0:
                raise ZeroDivisionError("not a unit of S")
            res = [Fraction(0)] * self.zdim
            res[0] = 1 / c0
            for k in range(1, self.zdim):
                acc = Fraction(0)
                for i in range(1, k + 1):
                    acc += comp[i] * res[k - i]
                res[k] = -acc / c0
            out.append(tuple(res))
        return tuple(out)

    def cis_zero(self, a):
        return all(x == 0 for comp in a for x in comp)

    def scalar_diag(self, zcoeffs):
        """An S-scalar (frobenius-invariant) coefficient."""
        zc = tuple(Fraction(c) for c in zcoeffs)[: self.zdim]
        zc = zc + (Fraction(0),) * (self.zdim - len(zc))
        return (zc,) * self.frob_order

    def elem(self, terms):
        out = {}
        for i, c in terms.items():
            i = Fraction(i)
            den = i.denominator
            if self.p ** self.M % den != 0:
                raise DenominatorOverflow(
                    "exponent %s needs denominator beyond %d^%d"
                    % (i, self.p, self.M))
            c = self.coeff(c)
            if not self.cis_zero(c):
                out[i] = c
        return HahnElement(self, out)

    def zero(self):
        return HahnElement(self, {})

    def one(self):
        return self.elem({0: 1})


class HahnElement:
    __slots__ = ("ctx", "terms")

    def __init__(self, ctx, terms):
        self.ctx = ctx
        self.terms = terms

    def _check(self, other):
        if self.ctx != other.ctx:
            raise ValueError("mixed Hahn contexts")
        return other

    def __add__(self, other):
        other = self._check(other)
        ctx = self.ctx
        out = dict(self.terms)
        for i, c in other.terms.items():
            cur = out.get(i)
            s = c if cur is None else ctx.cadd(cur, c)
            if ctx.cis_zero(s):
                out.pop(i, None)
            else:
                out[i] = s
        return HahnElement(ctx, out)

    def __neg__(self):
        return HahnElement(self.ctx, {i: self.ctx.cneg(c)
                                      for i, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        other = self._check(other)
        ctx = self.ctx
        out = {}
        for i, a in self.terms.items():
            for j, b in other.terms.items():
                k = i + j
                t = ctx.cmul(a, b)
                cur = out.get(k)
                t = t if cur is None else ctx.cadd(cur, t)
                if ctx.cis_zero(t):
                    out.pop(k, None)
                else:
                    out[k] = t
        return HahnElement(ctx, out)

    def scale(self, c):
        ctx = self.ctx
        c = ctx.coeff(c)
        out = {}
        for i, a in self.terms.items():
            t = ctx.cmul(a, c)
            if not ctx.cis_zero(t):
                out[i] = t
        return HahnElement(ctx, out)

    def phi(self, m=1):
        """u^i -> u^(i p^m), coefficients shifted by the layer Frobenius
        (identity for f = 1); m may be negative."""
        ctx = self.ctx
        out = {}
        for i, c in self.terms.items():
            j = i * Fraction(ctx.p) ** m
            den = j.denominator
            if ctx.p ** ctx.M % den != 0:
                raise DenominatorOverflow(
                    "phi^%d pushes exponent %s beyond denominators p^%d"
                    % (m, i, ctx.M))
            out[j] = ctx.cfrob(c, m)
        return HahnElement(ctx, out)

    def support(self):
        return sorted(self.terms)

    def is_zero(self):
        return not self.terms

    def w_norm(self, s):
        s = Fraction(s)
        if not (0 < s <= self.ctx.radius):
            from .errors import OutOfAnnulus
            raise OutOfAnnulus("s = %s outside (0, %s]"
                               % (s, self.ctx.radius))
        best = INF
        for i, c in self.terms.items():
            best = min(best, self.ctx.cval(c) + s * i)
        return best

    def __repr__(self):
        items = ", ".join("u^%s" % i for i in self.support()[:8])
        return "Hahn[%d terms: %s%s]" % (len(self.terms), items,
                                         "..." if len(self.terms) > 8
                                         else "")

    def to_text(self):
        parts = []
        for i in self.support():
            c = self.terms[i]
            flat = ";".join(",".join(str(x) for x in comp) for comp in c)
            parts.append("(%s, %s)" % (i, flat))
        return "p %d M %d r %s zdim %d f %d terms %s" % (
            self.ctx.p, self.ctx.M, self.ctx.radius, self.ctx.zdim,
            self.ctx.frob_order, " ".join(parts))


@dataclass
class FrobeniusCertificate:
    residual_w_r: object      # Fraction or inf: w_r of phi(b) - alpha b - a
    norm_gap: object          # w_r(a) - w_r(b)
    C_bound: Fraction         # the computed C(r, alpha)
    truncated_tail_vals: object  # min valuation among dropped tail terms
    floor: int                # the truncation floor used
    radius_out: Fraction      # b is also a series at radius p*r

    def holds(self):
        gap = self.norm_gap
        return (gap is INF or gap <= self.C_bound) and \
            (self.residual_w_r is INF or self.residual_w_r >= self.floor)


def slope_data(ctx, alpha):
    """(v(alpha), v(alpha^{-1})); SlopeViolation unless |alpha^{-1}| < 1."""
    a = ctx.coeff(alpha)
    va = ctx.cval(a)
    ai = ctx.cinv(a)
    vai = ctx.cval(ai)
    if vai <= 0:
        raise SlopeViolation("|alpha^{-1}| = p^%s >= 1" % (-vai))
    return a, ai, va, vai


def frobenius_C(ctx, alpha, r=None):
    """The explicit constant C(r, alpha) = max(C1, C2)."""
    _, _, va, vai = slope_data(ctx, alpha)
    r = Fraction(r if r is not None else ctx.radius)
    p = ctx.p
    X = -va           # >= vai > 0 in the scalar case; always > 0 here
    C1 = Fraction(0)
    j = 1
    while True:
        term = (j - 1) * X - r * (p ** j - 1)
        C1 = max(C1, term)
        if r * (p ** j - 1) > (j + 1) * max(X, 1) + C1:
            break
        j += 1
    C2 = Fraction(0)
    m = 0
    while (m + 1) * vai < r:
        C2 = max(C2, r * (1 - Fraction(1, p ** m)) - (m + 1) * vai)
        m += 1
    return max(C1, C2)


def _orbit_sum(ctx, a: HahnElement, ainv_pows, i):
    """sum over all m in Z of alpha^-(m+1) phi^m(a_{i p^-m}).

    ainv_pows(m) returns the coefficient alpha^-(m+1) (exact)."""
    total = ctx.czero()
    for j in a.terms:
        if j == 0 or (i > 0) != (j > 0):
            continue
        ratio = i / j
        # i = j * p^m  <=>  ratio is an integral power of p
        num, den = ratio.numerator, ratio.denominator
        if num > 0 and (num == 1 or den == 1):
            if den == 1:
                k = vp_int(num, ctx.p)
                if ctx.p ** k != num:
                    continue
                m = k
            else:
                k = vp_int(den, ctx.p)
                if ctx.p ** k != den:
                    continue
                m = -k
            contrib = ctx.cmul(ainv_pows(m), ctx.cfrob(a.terms[j], m))
            total = ctx.cadd(total, contrib)
    return total


def criterion_check(alpha, a: HahnElement, floor=None):
    """Obstruction map of the Frobenius equation: for each negative
    support exponent i, the two-sided orbit sum; the empty map means the
    equation is solvable.  Entries report whether a vanishing sum is an
    exact rational zero or merely zero at the precision floor."""
    ctx = a.ctx
    acoef, ainv, _, _ = slope_data(ctx, alpha)
    pows = _alpha_inverse_powers(ctx, acoef, ainv)
    obstructions = {}
    detail = {}
    for i in a.support():
        if i >= 0:
            continue
        s = _orbit_sum(ctx, a, pows, i)
        if ctx.cis_zero(s):
            detail[i] = ("rational-zero", s)
        elif floor is not None and ctx.cval(s) >= floor:
            detail[i] = ("precision-zero", s)
        else:
            obstructions[i] = s
            detail[i] = ("nonzero", s)
    return obstructions, detail


def _alpha_inverse_powers(ctx, acoef, ainv):
    cache = {0: ainv}

    def pows(m):
        """alpha^-(m+1): positive powers of ainv for m >= 0, powers of
        alpha for m <= -1."""
        got = cache.get(m)
        if got is not None:
            return got
        if m > 0:
            cur = pows(m - 1)
            cur = ctx.cmul(cur, ainv)
        else:
            cur = pows(m + 1)
            cur = ctx.cmul(cur, acoef)
        cache[m] = cur
        return cur
    return pows


def _solve_fixed_orbit(ctx, acoef, a0):
    """Exact solution of (phi_L - alpha) b = a at the exponent-0 slot.

    For f = 1 this is b = a/(1 - alpha).  For the cyclic layer the
    componentwise equations b_{i-1} - alpha b_i = a_i unroll around the
    cycle to (1 - alpha^f) b_0 = sum_{l=1..f} alpha^(l-1) a_{l mod f},
    and the rest follows by back-substitution."""
    f = ctx.frob_order
    one = ctx.coeff(1)
    if f == 1:
        return ctx.cneg(ctx.cmul(a0, ctx.cinv(
            ctx.cadd(acoef, ctx.cneg(one)))))
    m = ctx.zdim
    al = acoef[0]            # alpha is diagonal across the f components

    def smul(x, y):
        zc = [Fraction(0)] * m
        for i, xv in enumerate(x):
            if xv:
                for j, yv in enumerate(y):
                    if yv and i + j < m:
                        zc[i + j] += xv * yv
        return tuple(zc)

    def sinv(x):
        res = [Fraction(0)] * m
        res[0] = 1 / x[0]
        for k in range(1, m):
            acc = Fraction(0)
            for i in range(1, k + 1):
                acc += x[i] * res[k - i]
            res[k] = -acc / x[0]
        return tuple(res)

    s_one = (Fraction(1),) + (Fraction(0),) * (m - 1)
    al_f = s_one
    for _ in range(f):
        al_f = smul(al_f, al)
    lhs = tuple(x - y for x, y in zip(s_one, al_f))
    rhs = (Fraction(0),) * m
    apw = s_one
    for l in range(1, f + 1):
        rhs = tuple(x + y for x, y in zip(rhs, smul(apw, a0[l % f])))
        apw = smul(apw, al)
    comps = [None] * f
    comps[0] = smul(rhs, sinv(lhs))
    for i in range(f - 1, 0, -1):
        nxt = comps[(i + 1) % f]
        comps[i] = tuple(x + y for x, y in zip(
            a0[(i + 1) % f], smul(al, nxt)))
    return tuple(comps)


def solve_frobenius(alpha, a: HahnElement, floor=24):
    """Unique solution of phi(b) - alpha b = a with tail truncation at
    the valuation floor, plus its certificate.  Raises NoSolution with
    the obstruction map when the criterion fails."""
    ctx = a.ctx
    acoef, ainv, va, vai = slope_data(ctx, alpha)
    obstructions, _ = criterion_check(alpha, a, floor=None)
    if obstructions:
        raise NoSolution(obstructions)
    pows = _alpha_inverse_powers(ctx, acoef, ainv)
    out = {}
    tail_min = INF
    neg_support = [j for j in a.support() if j < 0]
    neg_floor = min(neg_support) if neg_support else None
    for j in a.support():
        if j == 0:
            # fixed orbit: the exact equation (phi_L - alpha) b_0 = a_0
            out[j] = _solve_fixed_orbit(ctx, acoef, a.terms[j])
            continue
        m = 0
        while True:
            if j > 0:
                # forward tail truncated by coefficient valuation; the
                # telescoped leftover then has valuation >= floor
                bound = m * vai + ctx.cval(a.terms[j])
                if bound >= floor:
                    tail_min = min(tail_min, bound)
                    break
            else:
                # run past the lowest support exponent: beyond it the
                # orbit sums telescope to exact zero by the criterion
                if j * ctx.p ** m < neg_floor * ctx.p:
                    break
            i = j * ctx.p ** m
            c = ctx.cmul(pows(m), ctx.cfrob(a.terms[j], m))
            cur = out.get(i, ctx.czero())
            out[i] = ctx.cadd(cur, ctx.cneg(c))
            m += 1
    b = HahnElement(ctx, {i: c for i, c in out.items()
                          if not ctx.cis_zero(c)})
    resid = b.phi() - b.scale(alpha) - a
    r = ctx.radius
    C = frobenius_C(ctx, alpha, r)
    wa, wb = a.w_norm(r), b.w_norm(r)
    cert = FrobeniusCertificate(
        residual_w_r=resid.w_norm(r) if not resid.is_zero() else INF,
        norm_gap=(wa - wb) if (wa is not INF and wb is not INF) else INF,
        C_bound=C,
        truncated_tail_vals=tail_min,
        floor=floor,
        radius_out=ctx.p * r)
    return b, cert
