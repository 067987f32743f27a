"""Localization at level n: the finite rings (K_n tensor S)[t]/(t^k) and
the ring maps iota_n from the truncated Robba model.

Internal basis: coefficients are stored against the divided powers
t^[j] = t^j / (j! p^(nj)).  This is the natural lattice of the image of
iota_n (the image of T is eps_n * sum_j t^[j] - 1, integral over O_{K_n}),
and the structure constants t^[i] t^[j] = binom(i+j, i) t^[i+j] are
integers, so ring arithmetic loses no p-adic precision.  Plain t^j
coefficients are recovered on demand via plain_t_coefficient.

iota_n is determined by T -> eps_n * exp(t/p^n) - 1; it requires
r_n = 1/(p^(n-1)(p-1)) inside the annulus, and with a finite truncation
guarantee E on the input the t^[j]-slot of the image is known modulo
p^(E - j*r_n) (the divided-power rescaling absorbs the rest).

The Gamma action is semilinear: gamma moves K_n by eps -> eps^(chi(gamma))
and scales t^[j] by chi(gamma)^j.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .base import BaseAlgebra
from .cyclo import CycloElem, CycloRing
from .errors import LevelOutOfRange, NotInvertible, WindowTooSmall
from .padics import PadicScalar, UnitValue, chi_gamma0, chi_omega
from .series import INF, RobbaElement


class DifRing:
    """(K_n tensor S)[t]/(t^k) in the divided-power presentation."""

    _cache: dict = {}

    def __new__(cls, base: BaseAlgebra, n: int, k: int):
        key = (base, n, k)
        if key not in cls._cache:
            obj = super().__new__(cls)
            obj.base = base
            obj.n = n
            obj.k = k
            obj.cyclo = CycloRing(base, n)
            cls._cache[key] = obj
        return cls._cache[key]

    def __repr__(self):
        return "DifRing(n=%d, k=%d over %s)" % (self.n, self.k, self.base)

    def elem(self, tcoeffs):
        """Element from divided-power coefficients."""
        out = list(tcoeffs)[: self.k]
        out = [c if isinstance(c, CycloElem) else self.cyclo.elem([c])
               for c in out]
        while len(out) < self.k:
            out.append(self.cyclo.zero())
        return DifElem(self, tuple(out))

    def from_plain(self, plain):
        """Element from plain t^j coefficients."""
        p, n = self.base.p, self.n
        return self.elem([
            c * Fraction(math.factorial(j) * p ** (n * j))
            if not isinstance(c, (int, Fraction))
            else Fraction(c) * math.factorial(j) * p ** (n * j)
            for j, c in enumerate(list(plain)[: self.k])])

    def zero(self):
        return self.elem([])

    def one(self):
        return self.elem([1])

    def t(self):
        """The element t (= p^n t^[1])."""
        if self.k < 2:
            return self.zero()
        return self.elem([0, self.base.p ** self.n])

    def t_power(self, j):
        """t^j as a ring element."""
        out = self.one()
        for _ in range(j):
            out = out * self.t()
        return out

    def qp_dim(self):
        return self.k * self.cyclo.qp_dim()


class DifElem:
    __slots__ = ("ring", "tcoeffs")

    def __init__(self, ring, tcoeffs):
        self.ring = ring
        self.tcoeffs = tcoeffs

    def _coerce(self, other):
        if isinstance(other, DifElem):
            r, s = self.ring, other.ring
            if (r.n != s.n or r.k != s.k or r.base.p != s.base.p
                    or r.base.zdim != s.base.zdim):
                raise ValueError("mixed dif rings")
            return other
        return self.ring.elem([other])

    def __add__(self, other):
        other = self._coerce(other)
        return DifElem(self.ring, tuple(a + b for a, b in
                                        zip(self.tcoeffs, other.tcoeffs)))

    __radd__ = __add__

    def __neg__(self):
        return DifElem(self.ring, tuple(-a for a in self.tcoeffs))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, PadicScalar)):
            return DifElem(self.ring,
                           tuple(c * other for c in self.tcoeffs))
        other = self._coerce(other)
        k = self.ring.k
        out = [None] * k
        for i, a in enumerate(self.tcoeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.tcoeffs):
                if i + j >= k:
                    break
                if not b.is_zero():
                    t = a * b * math.comb(i + j, i)
                    out[i + j] = t if out[i + j] is None else out[i + j] + t
        zero = self.ring.cyclo.zero()
        return DifElem(self.ring, tuple(zero if c is None else c
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

    def is_zero(self):
        return all(c.is_zero() for c in self.tcoeffs)

    def t_order(self):
        """Smallest j with nonzero t^[j] coefficient; None when the element
        is zero at working precision (order >= k, as far as visible)."""
        for j, c in enumerate(self.tcoeffs):
            if not c.is_zero():
                return j
        return None

    def plain_t_coefficient(self, j):
        """The coefficient of t^j in the usual basis."""
        p, n = self.ring.base.p, self.ring.n
        return self.tcoeffs[j] * Fraction(1, math.factorial(j) * p ** (n * j))

    def is_unit(self):
        return self.tcoeffs[0].is_unit()

    def inv(self):
        """Inverse by one exact linear solve over Q_p coordinates."""
        if not self.is_unit():
            raise NotInvertible("t-constant term is not a unit")
        ring = self.ring
        from .linalg import solve_padic_columns
        deg, m = ring.cyclo.degree, ring.base.zdim
        cols = []
        for tj in range(ring.k):
            for j in range(deg):
                for zi in range(m):
                    basis = ring.elem(
                        [ring.cyclo.zero()] * tj
                        + [ring.cyclo.elem(
                            [0] * j + [ring.base.elem([0] * zi + [1])])])
                    cols.append((self * basis).qp_coords())
        rhs = ring.one().qp_coords()
        sol = solve_padic_columns(cols, rhs, ring.base.p, ring.base.prec)
        if sol is None:
            raise NotInvertible("no inverse at working precision")
        step = deg * m
        out = []
        for tj in range(ring.k):
            block = sol[tj * step:(tj + 1) * step]
            out.append(ring.cyclo.elem(
                [ring.base.elem(block[j * m:(j + 1) * m])
                 for j in range(deg)]))
        return DifElem(ring, tuple(out))

    # -- Gamma ----------------------------------------------------------------

    def gamma(self, c: UnitValue):
        """Semilinear action: eps -> eps^c on K_n, t^[j] scaled by c^j."""
        ring = self.ring
        a = c.mod_int(ring.base.p ** ring.n) if ring.n > 0 else 1
        cval = c.at_precision(ring.base.prec + ring.k + 2)
        out = []
        scale = PadicScalar.one(cval.p, cval.prec)
        for j, coef in enumerate(self.tcoeffs):
            cc = coef.galois(a) if ring.n > 0 else coef
            out.append(cc * scale)
            scale = scale * cval
        return DifElem(ring, tuple(out))

    def gamma0(self):
        return self.gamma(chi_gamma0(self.ring.base.p))

    def omega(self):
        return self.gamma(chi_omega(self.ring.base.p))

    # -- structure maps ---------------------------------------------------------

    def raise_level(self, m):
        """Image in (K_m tensor S)[t]/(t^k): tower embedding on K_n and
        rescaling t^[j]_n = p^((m-n)j) t^[j]_m."""
        if m == self.ring.n:
            return self
        if m < self.ring.n:
            raise ValueError("levels only go up")
        up = DifRing(self.ring.base, m, self.ring.k)
        p = self.ring.base.p
        return DifElem(up, tuple(
            c.embed(m) * p ** ((m - self.ring.n) * j)
            for j, c in enumerate(self.tcoeffs)))

    def truncate(self, k2):
        """Reduce modulo t^k2 (k2 <= k)."""
        down = DifRing(self.ring.base, self.ring.n, k2)
        return DifElem(down, self.tcoeffs[:k2])

    def qp_coords(self):
        out = []
        for c in self.tcoeffs:
            for a in c.coords:
                out.extend(a.coords)
        return out

    def same(self, other, prec=None):
        other = self._coerce(other)
        return all(a.same(b, prec) for a, b in zip(self.tcoeffs,
                                                   other.tcoeffs))

    def certified_zero_at(self, tol):
        return all(a.certified_zero_at(tol) for a in self.tcoeffs)

    def at_precision(self, prec):
        return DifElem(self.ring,
                       tuple(c.at_precision(prec) for c in self.tcoeffs))

    def __repr__(self):
        return "Dif(n=%d,k=%d)[%s]" % (self.ring.n, self.ring.k, ", ".join(
            repr(c) for c in self.tcoeffs))

    def to_text(self):
        return "level %d k %d divided-basis %s" % (
            self.ring.n, self.ring.k,
            " ".join(c.to_text() for c in self.tcoeffs))


# -- the localization maps ----------------------------------------------------

_IOTA_CACHE: dict = {}


def _rebase_cyclo(cyclo_ring, c: CycloElem) -> CycloElem:
    """Attach a cyclotomic element to the working ring instance; values
    keep whatever (possibly boosted) precision they carry."""
    from .base import AlgElem
    return CycloElem(cyclo_ring, tuple(
        AlgElem(cyclo_ring.base, a.coords) for a in c.coords))


def _iota_T_powers(ring: DifRing, lo, hi):
    """Powers of E1 = eps * sum_j t^[j] - 1, the image of T.

    The element valuation of E1^i grows like i*r_n, so the table is built
    at a precision boosted past the largest requested power; this keeps
    the (integral, exact) entries exact at working precision even deep
    into the powers."""
    key = (ring.base, ring.n, ring.k)
    p = ring.base.p
    rn = Fraction(1, p ** (ring.n - 1) * (p - 1))
    span = max(hi, -lo, 1)
    need = ring.base.prec + math.ceil(span * rn) \
        + math.ceil(max(0, -lo) * (ring.n + 1)) + 6
    entry = _IOTA_CACHE.get(key)
    if entry is None or entry["boost"] < need:
        boosted = BaseAlgebra(p, need, ring.base.zdim)
        bring = DifRing(boosted, ring.n, ring.k)
        eps = bring.elem([bring.cyclo.eps()] * ring.k)
        e1 = eps - bring.one()
        entry = {"boost": need, "ring": bring,
                 "powers": {0: bring.one(), 1: e1}}
        _IOTA_CACHE[key] = entry
    powers = entry["powers"]
    if hi >= 1:
        j = max(kk for kk in powers if kk >= 0)
        cur = powers[j]
        while j < hi:
            j += 1
            cur = cur * powers[1]
            powers[j] = cur
    if lo <= -1:
        if -1 not in powers:
            powers[-1] = powers[1].inv()
        j = min(kk for kk in powers)
        cur = powers[j]
        while j > lo:
            j -= 1
            cur = cur * powers[-1]
            powers[j] = cur
    return powers


def iota_localize(f: RobbaElement, n: int, k: int) -> DifElem:
    """The localization map iota_n mod t^k.

    Requires r_n = 1/(p^(n-1)(p-1)) inside the annulus of f.  Exact on
    stored terms; a finite truncation guarantee E on f caps the
    t^[j]-slot precision at E - j*r_n.
    """
    ring = f.ring
    p = ring.base.p
    rn = Fraction(1, p ** (n - 1) * (p - 1))
    if not (ring.r_lo <= rn <= ring.r_hi):
        raise LevelOutOfRange("r_%d = %s outside annulus [%s, %s]"
                              % (n, rn, ring.r_lo, ring.r_hi))
    target = DifRing(ring.base, n, k)
    lo = min(f.support(), default=0)
    hi = max(f.support(), default=0)
    powers = _iota_T_powers(target, lo, hi)
    out = None
    for i, c in f.coeffs.items():
        t = powers[i] * c
        out = t if out is None else out + t
    if out is None:
        out = target.zero()
    out = DifElem(target, tuple(
        _rebase_cyclo(target.cyclo, c) for c in out.tcoeffs))
    e_at_rn = f.guarantee_at(rn)
    if e_at_rn is not INF:
        floors = [math.floor(e_at_rn - j * rn) for j in range(k)]
        if any(fl <= 0 for fl in floors):
            raise WindowTooSmall(
                "truncation guarantee %s at r_%d too weak for k=%d"
                % (e_at_rn, n, k))
        # the image is only accurate to the tail floor: cap each slot
        out = DifElem(target, tuple(
            c.at_precision(max(1, floors[j]))
            for j, c in enumerate(out.tcoeffs)))
    return out


def t_order_report(f: RobbaElement, levels, k: int):
    """Per-level t-adic orders ord_t(iota_n(f)) and the minimum.

    Orders >= k are reported as k with an 'at least' marker (the cutoff
    caveat: only divisibility below t^k is decidable at this k)."""
    per_level = {}
    for n in sorted(levels):
        img = iota_localize(f, n, k)
        o = img.t_order()
        per_level[n] = (k, False) if o is None else (o, True)
    verdict = min(o for o, _ in per_level.values()) if per_level else 0
    exact = all(ex for o, ex in per_level.values() if o == verdict)
    return {"orders": per_level, "min_order": verdict,
            "exact": exact, "cutoff": k,
            "levels": sorted(per_level)}
