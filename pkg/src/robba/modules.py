"""(phi, Gamma)-modules over the truncated Robba model.

A module of rank d is presented by a phi-matrix A and two Gamma-generator
matrices G (gamma_0) and W (omega) with entries in the Robba ring model,
in the row convention phi(e) = e.A, gamma_0(e) = e.G, omega(e) = e.W for
the basis row e.  Coordinates are column vectors x, so eigen equations
read  A.phi(x) = c x  and  G.gamma0(x) = c x.

Constructors keep a provenance tree and, for everything reachable from
rank-1 pieces, a canonical split form: the list of characters of the
diagonal pieces together with the accumulated basis-change matrix U and
its inverse (split coordinates = U . current coordinates).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .base import AlgElem, BaseAlgebra, Character, t_power_character
from .cyclo import CycloElem, CycloRing
from .dif import DifElem, DifRing, iota_localize
from .errors import (NonConvergent, NotInvertible, RankOutOfRange,
                     ZeroNotARoot)
from .linalg import howell_kernel
from .padics import (PadicScalar, chi_gamma0, chi_omega, padic_log, vp_int)
from .series import INF, RobbaElement, RobbaRing


# -- matrices over the Robba model ------------------------------------------

def mat_identity(ring, d):
    return [[ring.one() if i == j else ring.zero() for j in range(d)]
            for i in range(d)]

def mat_scalar(ring, d, c):
    return [[ring.scalar(c) if i == j else ring.zero() for j in range(d)]
            for i in range(d)]

def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]

def mat_neg(A):
    return [[-a for a in ra] for ra in A]

def mat_mul(A, B):
    n, m, l = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(l):
            acc = None
            for k in range(m):
                t = A[i][k] * B[k][j]
                acc = t if acc is None else acc + t
            row.append(acc)
        out.append(row)
    return out

def mat_vec(A, v):
    out = []
    for row in A:
        acc = None
        for a, x in zip(row, v):
            t = a * x
            acc = t if acc is None else acc + t
        out.append(acc)
    return out

def mat_map(A, f):
    return [[f(a) for a in row] for row in A]

def mat_phi(A):
    return mat_map(A, lambda a: a.phi())

def mat_gamma(A, c):
    return mat_map(A, lambda a: a.gamma(c))

def mat_restrict(A, ring):
    return mat_map(A, lambda a: a.restricted(ring))

def mat_scale(A, c):
    return mat_map(A, lambda a: a.scale(c))

def mat_det(A):
    d = len(A)
    if d == 1:
        return A[0][0]
    acc = None
    for j in range(d):
        minor = [row[:j] + row[j + 1:] for row in A[1:]]
        t = A[0][j] * mat_det(minor)
        if j % 2:
            t = -t
        acc = t if acc is None else acc + t
    return acc

def mat_minor(A, rows, cols):
    return [[A[i][j] for j in cols] for i in rows]

def mat_adjugate(A):
    d = len(A)
    if d == 1:
        return [[A[0][0].ring.one()]]
    cof = []
    for i in range(d):
        row = []
        for j in range(d):
            keep_r = [r for r in range(d) if r != i]
            keep_c = [c for c in range(d) if c != j]
            m = mat_det(mat_minor(A, keep_r, keep_c))
            if (i + j) % 2:
                m = -m
            row.append(m)
        cof.append(row)
    return [[cof[j][i] for j in range(d)] for i in range(d)]

def mat_inverse(A):
    """Inverse over the annulus: adjugate over a unit determinant."""
    det = mat_det(A)
    det_inv = det.inv_unit()
    return mat_map(mat_adjugate(A), lambda a: a * det_inv)

def mat_is_small(A, tol):
    return all(a.is_small(tol) for row in A for a in row)

def mat_sub(A, B):
    return mat_add(A, mat_neg(B))

def compound_index(d, i):
    return list(combinations(range(d), i))

def mat_compound(A, i):
    """i-th compound matrix (minors on i-subsets), same row convention."""
    idx = compound_index(len(A), i)
    return [[mat_det(mat_minor(A, rows, cols)) for cols in idx]
            for rows in idx]


# -- the module class ---------------------------------------------------------

@dataclass
class SplitForm:
    chars: list                     # characters of the diagonal pieces
    U: list                         # split coords = U . current coords
    U_inv: list

@dataclass
class PhiGammaModule:
    ring: RobbaRing
    rank: int
    A: list
    G: list
    W: list
    provenance: tuple = ("raw",)
    split: SplitForm | None = None

    @property
    def base(self):
        return self.ring.base

    # -- constructors ---------------------------------------------------

    @classmethod
    def rank1(cls, ring: RobbaRing, delta: Character):
        A = [[ring.scalar(delta.p_value)]]
        G = [[ring.scalar(delta.gamma0_value())]]
        W = [[ring.scalar(delta.omega_value())]]
        split = SplitForm([delta], mat_identity(ring, 1),
                          mat_identity(ring, 1))
        return cls(ring, 1, A, G, W, ("rank1", delta), split)

    @classmethod
    def trivial(cls, ring):
        return cls.rank1(ring, Character.trivial(ring.base))

    def direct_sum(self, other):
        _check_same_ring(self, other)
        d1, d2 = self.rank, other.rank
        ring = self.ring

        def block(M1, M2):
            out = mat_identity(ring, d1 + d2)
            for i in range(d1):
                for j in range(d1):
                    out[i][j] = M1[i][j]
            for i in range(d2):
                for j in range(d2):
                    out[d1 + i][d1 + j] = M2[i][j]
            return out

        split = None
        if self.split and other.split:
            split = SplitForm(self.split.chars + other.split.chars,
                              block(self.split.U, other.split.U),
                              block(self.split.U_inv, other.split.U_inv))
        return PhiGammaModule(ring, d1 + d2, block(self.A, other.A),
                              block(self.G, other.G),
                              block(self.W, other.W),
                              ("sum", self.provenance, other.provenance),
                              split)

    def tensor(self, other):
        _check_same_ring(self, other)
        ring = self.ring
        d1, d2 = self.rank, other.rank

        def kron(M1, M2):
            out = []
            for i1 in range(d1):
                for i2 in range(d2):
                    row = []
                    for j1 in range(d1):
                        for j2 in range(d2):
                            row.append(M1[i1][j1] * M2[i2][j2])
                    out.append(row)
            return out

        split = None
        if self.split and other.split:
            chars = [c1 * c2 for c1 in self.split.chars
                     for c2 in other.split.chars]
            split = SplitForm(chars, kron(self.split.U, other.split.U),
                              kron(self.split.U_inv, other.split.U_inv))
        return PhiGammaModule(ring, d1 * d2, kron(self.A, other.A),
                              kron(self.G, other.G),
                              kron(self.W, other.W),
                              ("tensor", self.provenance, other.provenance),
                              split)

    def wedge(self, i):
        if not (1 <= i <= self.rank):
            raise RankOutOfRange("wedge index %d outside 1..%d"
                                 % (i, self.rank))
        split = None
        if self.split:
            chars = []
            for subset in compound_index(self.rank, i):
                c = self.split.chars[subset[0]]
                for s in subset[1:]:
                    c = c * self.split.chars[s]
                chars.append(c)
            split = SplitForm(chars, mat_compound(self.split.U, i),
                              mat_compound(self.split.U_inv, i))
        return PhiGammaModule(self.ring, math.comb(self.rank, i),
                              mat_compound(self.A, i),
                              mat_compound(self.G, i),
                              mat_compound(self.W, i),
                              ("wedge", self.provenance, i), split)

    def twist_t(self, j):
        """Tensor with the rank-1 module generated by t^j (phi(t) = pt,
        gamma(t) = chi(gamma) t)."""
        ring = self.ring
        p = ring.base.p
        tchar = t_power_character(ring.base, j)
        A = mat_scale(self.A, Fraction(p) ** j)
        G = mat_scale(self.G, tchar.gamma0_value())
        W = mat_scale(self.W, tchar.omega_value())
        split = None
        if self.split:
            split = SplitForm([c * tchar for c in self.split.chars],
                              self.split.U, self.split.U_inv)
        return PhiGammaModule(ring, self.rank, A, G, W,
                              ("twist_t", self.provenance, j), split)

    def twist(self, delta: Character):
        return self.tensor(PhiGammaModule.rank1(self.ring, delta))

    def change_basis(self, U, U_inv=None):
        """New presentation in the basis e' = e.U:
        A -> U^{-1} A phi(U), G -> U^{-1} G gamma0(U), W likewise.

        U must consist of exact Laurent data (so that phi(U) and
        gamma(U) are again global, re-taggable to this annulus); this
        covers every basis change the constructors need."""
        if U_inv is None:
            U_inv = mat_inverse(U)
        ring = self.ring

        def retag(M):
            return mat_map(M, lambda a: a.retagged(ring))

        A = mat_mul(mat_mul(U_inv, self.A), retag(mat_phi(U)))
        g0 = chi_gamma0(self.base.p)
        om = chi_omega(self.base.p)
        # gamma preserves the annulus; only phi(U) needs re-tagging
        G = mat_mul(mat_mul(U_inv, self.G), mat_gamma(U, g0))
        W = mat_mul(mat_mul(U_inv, self.W), mat_gamma(U, om))
        split = None
        if self.split:
            split = SplitForm(self.split.chars, mat_mul(self.split.U, U),
                              mat_mul(U_inv, self.split.U_inv))
        return PhiGammaModule(self.ring, self.rank, A, G, W,
                              ("basis", self.provenance), split)

    # -- consistency certificates -----------------------------------------

    def commutation_defects(self):
        """w-norm floors of the three commutation relations; large values
        certify the axioms within the truncation guarantees.  The phi
        relations are read on the overlap annulus [r_lo, r_hi/p]."""
        g0 = chi_gamma0(self.base.p)
        om = chi_omega(self.base.p)
        ring = self.ring
        ov = RobbaRing(ring.base, ring.r_lo, ring.r_hi / ring.base.p,
                       ring.cap_lo, ring.cap_hi)

        def on_ov(M):
            return mat_restrict(M, ov)

        d1 = mat_sub(mat_mul(on_ov(self.A), on_ov(mat_phi(self.G))),
                     mat_mul(on_ov(self.G),
                             on_ov(mat_gamma(self.A, g0))))
        d2 = mat_sub(mat_mul(on_ov(self.A), on_ov(mat_phi(self.W))),
                     mat_mul(on_ov(self.W),
                             on_ov(mat_gamma(self.A, om))))
        d3 = mat_sub(mat_mul(self.G, mat_gamma(self.W, g0)),
                     mat_mul(self.W, mat_gamma(self.G, om)))
        return tuple(min((x.w_min() for row in D for x in row),
                         default=INF) for D in (d1, d2, d3))

    def verify(self, tol):
        return all(v >= tol for v in self.commutation_defects())

    def phi_invertibility_certificate(self):
        """Residual floor of A . A^{-1} - 1 on the annulus."""
        try:
            Ainv = mat_inverse(self.A)
        except NotInvertible as e:
            raise NotInvertible("phi-matrix: %s" % e)
        R = mat_sub(mat_mul(self.A, Ainv), mat_identity(self.ring,
                                                        self.rank))
        return min((x.w_min() for row in R for x in row), default=INF)

    # -- localization -------------------------------------------------------

    def dif_module(self, n, k):
        ring = DifRing(self.base, n, k)
        A = mat_map(self.A, lambda a: iota_localize(a, n, k))
        G = mat_map(self.G, lambda a: iota_localize(a, n, k))
        W = mat_map(self.W, lambda a: iota_localize(a, n, k))
        return DifModule(ring, self.rank, G, W, self, A)

    def __repr__(self):
        return "PhiGammaModule(rank %d over %s)" % (self.rank, self.ring)


def _check_same_ring(a, b):
    if a.ring != b.ring:
        raise ValueError("modules on different rings")


# -- localized modules ---------------------------------------------------------

@dataclass
class DifModule:
    ring: DifRing
    rank: int
    G: list                       # gamma_0 matrix, entries DifElem
    W: list                       # omega matrix
    source: PhiGammaModule | None = None
    A: list | None = None         # localized phi-matrix (level coherence)

    def gamma0_vec(self, vec):
        imgs = [x.gamma0() for x in vec]
        return [_dif_dot(row, imgs) for row in self.G]

    def omega_vec(self, vec):
        imgs = [x.omega() for x in vec]
        return [_dif_dot(row, imgs) for row in self.W]


def _dif_dot(row, vec):
    acc = None
    for a, x in zip(row, vec):
        t = a * x
        acc = t if acc is None else acc + t
    return acc


# -- Sen operator ---------------------------------------------------------------

@dataclass
class SenData:
    theta: list                   # d x d matrix over K_n tensor S
    level: int
    poly: list                    # char poly coefficients in S, ascending
    gamma_power: int              # e: Theta came from gamma_0^(p^e)
    commutation_floor: object     # residual floor of [Theta, gamma-matrices]
    projection_floor: object      # how well coefficients landed in S

    def q_factor(self):
        """Q with det(T - Theta) = T Q(T); ZeroNotARoot if 0 is not a
        root at working precision."""
        c0 = self.poly[0]
        if not c0.is_zero():
            raise ZeroNotARoot("constant coefficient %r" % c0)
        return self.poly[1:]

    def p_value(self, i):
        """P(i) = prod_{j=0..i-1} Q(-j)."""
        Q = self.q_factor()
        ring = self.poly[0].ring
        out = ring.one()
        for j in range(i):
            out = out * _poly_eval(Q, ring.scalar(-j))
        return out

    def roots_match(self, weights, prec=None):
        """Does det(T - Theta) equal prod (T - w) for the given integer
        weights, at precision?"""
        ring = self.poly[0].ring
        expect = [ring.one()]
        for w in weights:
            expect = _poly_mul(expect, [ring.scalar(-w), ring.one()])
        return all(a.same(b, prec) for a, b in zip(self.poly, expect))


def _poly_eval(coeffs, x):
    out = None
    for c in reversed(coeffs):
        out = c if out is None else out * x + c
    return out if out is not None else x.ring.zero()


def _poly_mul(a, b):
    out = [a[0].ring.zero()] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def sen_operator(D: PhiGammaModule, n: int, max_extra_powers=None) -> SenData:
    """Sen operator at level n: Theta = log(M) / log chi(gamma), where M
    is the matrix of a power gamma_0^(p^e) acting K_n-linearly on the
    t = 0 localization, with e raised until |M - 1| < 1."""
    base = D.base
    p, prec = base.p, base.prec
    dif = D.dif_module(n, 1)
    d = D.rank
    cyclo = dif.ring.cyclo
    M0 = [[x.tcoeffs[0] for x in row] for row in dif.G]

    # matrix of gamma_0^(p^(n-1)): semilinear ladder M_{k+1} = M_k gamma^k(M0)
    chi_val = 1 + p
    M = M0
    exp_so_far = 1
    for _ in range(p ** (n - 1) - 1):
        a = pow(chi_val, exp_so_far, p ** n) if n > 0 else 1
        Mg = [[x.galois(a) for x in row] for row in M0]
        M = _cyclo_mat_mul(M, Mg, cyclo)
        exp_so_far += 1
    e = n - 1

    cap = max_extra_powers if max_extra_powers is not None else prec + 2
    ident = [[cyclo.one() if i == j else cyclo.zero() for j in range(d)]
             for i in range(d)]
    for _ in range(cap + 1):
        gap = _cyclo_mat_sub(M, ident)
        c = _cyclo_mat_val(gap)
        if c is None or c > 0:
            break
        M = _cyclo_mat_mul(M, M, cyclo)   # gamma^(p^e) is K_n-linear now
        e += 1
    else:
        raise NonConvergent("no power of gamma_0 is close to 1 at level %d"
                            % n)

    # log series (gap exactly zero: the log is zero)
    gap = _cyclo_mat_sub(M, ident)
    c = _cyclo_mat_val(gap)
    L = [[cyclo.zero()] * d for _ in range(d)]
    if c is not None:
        term = ident
        m = 0
        while True:
            m += 1
            term = _cyclo_mat_mul(term, gap, cyclo)
            L = _cyclo_mat_add(L, _cyclo_mat_scale(
                term, Fraction((-1) ** (m + 1), m)))
            if m * c - math.log(m, p) - 1 >= prec:
                break
            if m > 16 * prec + 64:
                raise NonConvergent("log series does not settle at level %d"
                                    % n)

    log_chi = padic_log(PadicScalar.from_fraction(
        (1 + p), p, prec + 2 * (e + 2))) * Fraction(p) ** e
    theta = _cyclo_mat_scale(L, log_chi.inv())
    # the log series was truncated at p^prec; dividing by log(chi) of
    # valuation e+1 leaves that much honest accuracy
    theta_prec = max(2, prec - (e + 1))
    theta = [[x.at_precision(theta_prec) for x in row] for row in theta]

    # commutation with the original gamma-matrices (semilinear identity
    # Theta . M_gamma = M_gamma . gamma(Theta))
    a0 = pow(chi_val, 1, p ** n) if n > 0 else 1
    om = chi_omega(p)
    aw = om.mod_int(p ** n) if n > 0 else 1
    floors = []
    for Mgam, aexp in ((M0, a0),
                       ([[x.tcoeffs[0] for x in row] for row in dif.W], aw)):
        lhs = _cyclo_mat_mul(theta, Mgam, cyclo)
        rhs = _cyclo_mat_mul(Mgam, [[x.galois(aexp) for x in row]
                                    for row in theta], cyclo)
        dmat = _cyclo_mat_sub(lhs, rhs)
        v = _cyclo_mat_val(dmat)
        floors.append(INF if v is None else v)

    poly_k = _char_poly(theta, cyclo)
    poly, proj_floor = [], INF
    for coeff in poly_k:
        scalar = coeff.constant_base_part()
        rest = coeff - scalar
        v = rest.valuation()
        proj_floor = min(proj_floor, INF if rest.is_zero() else v)
        poly.append(scalar)
    return SenData(theta, n, poly, e, min(floors), proj_floor)


def _cyclo_mat_mul(A, B, cyclo):
    d = len(A)
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            acc = None
            for k in range(d):
                t = A[i][k] * B[k][j]
                acc = t if acc is None else acc + t
            row.append(acc if acc is not None else cyclo.zero())
        out.append(row)
    return out

def _cyclo_mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]

def _cyclo_mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]

def _cyclo_mat_scale(A, c):
    return [[a * c for a in row] for row in A]

def _cyclo_mat_val(A):
    best = None
    for row in A:
        for x in row:
            v = x.valuation()
            if v is not INF:
                best = v if best is None else min(best, v)
    return best


def _char_poly(M, cyclo):
    """det(T I - M) via Newton's identities on power traces; ascending
    coefficient order, monic of degree d."""
    d = len(M)
    powers = [M]
    for _ in range(d - 1):
        powers.append(_cyclo_mat_mul(powers[-1], M, cyclo))
    traces = []
    for P in powers:
        tr = None
        for i in range(d):
            tr = P[i][i] if tr is None else tr + P[i][i]
        traces.append(tr)
    # k c_k = -(p_k + sum_{j=1}^{k-1} c_j p_{k-j})
    cs = []
    for k in range(1, d + 1):
        s = traces[k - 1]
        for j in range(1, k):
            s = s + cs[j - 1] * traces[k - j - 1]
        cs.append(s * Fraction(-1, k))
    out = [None] * (d + 1)
    out[d] = cyclo.one()
    for k in range(1, d + 1):
        out[d - k] = cs[k - 1]
    return out


# -- Gamma-invariants of localized modules -------------------------------------

@dataclass
class InvariantModule:
    """S-module of simultaneous gamma_0/omega eigenvectors in a localized
    module, with certified generators."""
    ring: DifRing
    generators: list              # vectors of DifElem, Qp-independent
    qp_dim: int
    z_profile: list               # Qp-dims of V, zV, z^2 V, ...
    is_free: bool
    s_rank: int                   # minimal number of S-generators

    def free_rank(self):
        return self.s_rank if self.is_free else None


def _flatten_cyclo_vec(vec):
    out = []
    for c in vec:
        for a in c.coords:
            out.extend(a.coords)
    return out


def _unflatten_cyclo_vec(ring, d, flat):
    cyclo = ring.cyclo
    m = ring.base.zdim
    deg = cyclo.degree
    out = []
    pos = 0
    for _ in range(d):
        coords = []
        for _ in range(deg):
            coords.append(ring.base.elem(flat[pos:pos + m]))
            pos += m
        out.append(CycloElem(cyclo, tuple(coords)))
    return out


def _encode_int_rows(rows_of_scalars, p, Kbase):
    """Uniformly scale rows of PadicScalars into integers mod p^K;
    returns (int_rows, K).  Scaling all entries by p^shift preserves the
    kernel at level Kbase."""
    shift = 0
    for row in rows_of_scalars:
        for c in row:
            if not c.is_zero():
                shift = max(shift, -c.vord)
    K = Kbase + shift
    mod = p ** K
    out = []
    for row in rows_of_scalars:
        out.append([0 if c.is_zero() else c.unit * p ** (c.vord + shift)
                    % mod for c in row])
    return out, K


def padic_rank(vectors, p, prec):
    """Rank at working precision: pivots counted modulo p^K after uniform
    integral scaling.  Minimal-valuation pivoting keeps all eliminations
    integral."""
    if not vectors:
        return 0
    int_rows, K = _encode_int_rows(vectors, p, prec)
    mod = p ** K
    ncols = len(int_rows[0])
    rank = 0
    rows = [r for r in int_rows if any(x % mod for x in r)]
    while rows:
        best, bestv = None, K
        for i, row in enumerate(rows):
            for j in range(ncols):
                x = row[j] % mod
                if x:
                    v = vp_int(x, p)
                    if v < bestv:
                        best, bestv = (i, j), v
        if best is None:
            break
        i0, j0 = best
        rank += 1
        piv = rows.pop(i0)
        u = piv[j0] // p ** bestv
        uinv = pow(u, -1, mod)
        piv = [x * uinv % mod for x in piv]
        step = p ** bestv
        nxt = []
        for row in rows:
            if row[j0] % mod:
                f = row[j0] // step
                row = [(a - f * b) % mod for a, b in zip(row, piv)]
            if any(x % mod for x in row):
                nxt.append(row)
        rows = nxt
    return rank


def gamma_invariants(M: DifModule, eta: Character, tol=None):
    """S-basis data of { x : gamma_0 x = eta(chi(gamma_0)) x,
    omega x = eta(chi(omega)) x } inside the localized module.

    Solved degree by degree in t (the equations are triangular for the
    t-adic filtration); candidate kernels at working precision are then
    re-certified against the exact matrices.
    """
    ring = M.ring
    base = ring.base
    p, prec = base.p, base.prec
    if tol is None:
        tol = prec - 2
    d = M.rank
    cyclo = ring.cyclo
    n, k = ring.n, ring.k

    c_gamma = eta.gamma0_value()
    c_omega = eta.omega_value()
    chi0 = 1 + p
    a0 = pow(chi0, 1, p ** n) if n > 0 else 1
    om = chi_omega(p)
    aw = om.mod_int(p ** n) if n > 0 else 1
    tau = om.at_precision(prec + k + 2)

    Gslots = [[[x.tcoeffs[s] for x in row] for row in M.G]
              for s in range(k)]
    Wslots = [[[x.tcoeffs[s] for x in row] for row in M.W]
              for s in range(k)]

    def gal(vec, a):
        return [c.galois(a) if n > 0 else c for c in vec]

    def apply_slot(slots, s, vec):
        out = []
        for row in slots[s]:
            acc = None
            for g, x in zip(row, vec):
                t = g * x
                acc = t if acc is None else acc + t
            out.append(acc if acc is not None else cyclo.zero())
        return out

    def vec_sub(u, v):
        return [a - b for a, b in zip(u, v)]

    def vec_scale(u, c):
        return [a * c for a in u]

    def eq_rows(xs, j):
        """Residues at degree j of the two eigen equations for a tuple
        xs = (x_0 .. x_j) of degree slots."""
        accg = None
        accw = None
        for jp in range(j + 1):
            cg = math.comb(j, jp)
            vg = apply_slot(Gslots, j - jp,
                            gal(xs[jp], a0))
            vg = vec_scale(vg, Fraction(cg) * Fraction(chi0) ** jp)
            accg = vg if accg is None else [a + b for a, b in zip(accg, vg)]
            vw = apply_slot(Wslots, j - jp, gal(xs[jp], aw))
            vw = vec_scale(vw, (tau ** jp) * cg)
            accw = vw if accw is None else [a + b for a, b in zip(accw, vw)]
        accg = vec_sub(accg, vec_scale([c for c in xs[j]], c_gamma))
        accw = vec_sub(accw, vec_scale([c for c in xs[j]], c_omega))
        return accg, accw

    D1 = d * cyclo.degree * base.zdim
    basis_vecs = []
    for comp in range(d):
        for epow in range(cyclo.degree):
            for zi in range(base.zdim):
                vec = [cyclo.zero()] * d
                vec[comp] = cyclo.elem(
                    [0] * epow + [base.elem([0] * zi + [1])])
                basis_vecs.append(vec)

    zero_vec = [cyclo.zero()] * d
    # state generators are prefixes (x_0 .. x_{j-1}) satisfying all
    # equations up to degree j-1; start with the single empty prefix
    state = [[]]

    for j in range(k):
        cols = []
        makers = []
        # lambda-columns: contributions of existing generators extended by 0
        for g in state:
            xs = list(g) + [zero_vec] * (j + 1 - len(g))
            rg, rw = eq_rows(xs, j)
            cols.append(_flatten_cyclo_vec(rg) + _flatten_cyclo_vec(rw))
            makers.append(("gen", g))
        # x_j columns
        for b in basis_vecs:
            xs = [zero_vec] * j + [b]
            rg, rw = eq_rows(xs, j)
            cols.append(_flatten_cyclo_vec(rg) + _flatten_cyclo_vec(rw))
            makers.append(("new", b))
        nrows = len(cols[0]) if cols else 0
        rows_scalars = [[cols[c][r] for c in range(len(cols))]
                        for r in range(nrows)]
        int_rows, K = _encode_int_rows(rows_scalars, p, prec)
        kerns = howell_kernel(int_rows, len(cols), p, K)
        new_state = []
        for vec in kerns:
            mod = p ** K
            if all(x % mod == 0 for x in vec):
                continue
            # assemble the tuple (x_0 .. x_j)
            xs = [[cyclo.zero()] * d for _ in range(j + 1)]
            for coef, (kind, payload) in zip(vec, makers):
                if coef % mod == 0:
                    continue
                cval = PadicScalar(p, coef, 0, K)
                if kind == "gen":
                    for jp, slot in enumerate(payload):
                        xs[jp] = [a + x * cval for a, x in zip(xs[jp], slot)]
                else:
                    xs[j] = [a + x * cval for a, x in zip(xs[j], payload)]
            xs = _normalize_tuple_content(xs, p)
            if xs is not None:
                new_state.append(xs)
        # drop tuples that are dependent at certification tolerance
        flat = [sum((_flatten_cyclo_vec(s) for s in xs), [])
                for xs in new_state]
        keep = []
        kept_flat = []
        for xs, fv in zip(new_state, flat):
            if padic_rank(kept_flat + [fv], p, min(tol + 2, K)) > len(keep):
                keep.append(xs)
                kept_flat.append(fv)
        state = keep

    # certify and package: residual must be *known* zero to tol digits
    out_gens = []
    for xs in state:
        vec = []
        for comp in range(d):
            vec.append(DifElem(ring, tuple(xs[jp][comp]
                                           for jp in range(k))))
        rg = vec_residual_gamma(M, vec, c_gamma)
        rw = vec_residual_omega(M, vec, c_omega)
        if all(x.certified_zero_at(tol) for x in rg) and \
                all(x.certified_zero_at(tol) for x in rw):
            out_gens.append(vec)

    flat = [sum((list(x.qp_coords()) for x in vec), []) for vec in out_gens]
    qdim = padic_rank(flat, p, tol)
    profile = [qdim]
    if base.zdim > 1:
        z = base.z()
        power = out_gens
        for _ in range(1, base.zdim):
            power = [[x * _as_cyclo_scalar(ring, z) for x in vec]
                     for vec in power]
            fl = [sum((list(x.qp_coords()) for x in vec), [])
                  for vec in power]
            profile.append(padic_rank(fl, p, tol))
    srank = qdim - (profile[1] if len(profile) > 1 else 0)
    is_free = (qdim == srank * base.zdim)
    return InvariantModule(ring, out_gens, qdim, profile, is_free, srank)


def _normalize_tuple_content(xs, p):
    """Divide a tuple of cyclo-vectors by its p-content so that junk
    kernel vectors (p^large * anything) become visibly non-solutions."""
    vmin = INF
    for slot in xs:
        for c in slot:
            for a in c.coords:
                for x in a.coords:
                    v = x.val_bound()
                    if v < vmin:
                        vmin = v
    if vmin is INF:
        return None
    if vmin <= 0:
        return xs

    def shift_scalar(x):
        if x.is_zero():
            return PadicScalar.zero(p, max(1, x.prec - vmin))
        return PadicScalar(p, x.unit, x.vord - vmin, x.prec - vmin)

    def shift_cyclo(c):
        return CycloElem(c.ring, tuple(
            AlgElem(a.ring, tuple(shift_scalar(x) for x in a.coords))
            for a in c.coords))

    return [[shift_cyclo(c) for c in slot] for slot in xs]


def _as_cyclo_scalar(ring, algelem):
    return ring.cyclo.from_base(algelem)


def vec_residual_gamma(M: DifModule, vec, c_gamma):
    img = M.gamma0_vec(vec)
    return [a - x * _as_cyclo_scalar(M.ring, c_gamma)
            for a, x in zip(img, vec)]


def vec_residual_omega(M: DifModule, vec, c_omega):
    img = M.omega_vec(vec)
    return [a - x * _as_cyclo_scalar(M.ring, c_omega)
            for a, x in zip(img, vec)]
