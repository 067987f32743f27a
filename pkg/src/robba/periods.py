"""Crystalline-period solver: simultaneous (phi, Gamma)-eigenvectors with
certified dimension brackets.

For a query character delta on a module D the solver produces
  * an upper bound: the Gamma-invariants of the localization of the
    delta^{-1}-twist mod t^k, refined by the forward-consistency filter
    on the canonical split pieces (a piece delta_i can carry solutions
    only when delta/delta_i is the character of a t-power times a
    1 + (nilpotent) direction, and the nilpotent directions cut the
    annihilator submodule);
  * a lower bound: explicit residual-certified solution vectors, found
    either by transport from the split form or by a windowed linear
    solve on the presented matrices;
  * per-solution t-orders, saturation flags and level-propagation
    checks (iota_m(x) = alpha^(n-m) iota_n(x)).
certified means the two bounds meet and every certificate passed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .base import AlgElem, BaseAlgebra, Character, t_power_character
from .dif import DifElem, DifRing, iota_localize, t_order_report
from .errors import LevelOutOfRange, WindowTooSmall
from .linalg import howell_kernel
from .modules import (DifModule, InvariantModule, PhiGammaModule,
                      _encode_int_rows, gamma_invariants, mat_vec,
                      padic_rank)
from .padics import PadicScalar, chi_gamma0, chi_omega, vp_int
from .series import INF, RobbaElement, RobbaRing


@dataclass
class PieceReport:
    index: int
    character: Character
    t_power: int | None           # j with delta/delta_i ~ t^j, if any
    survives: bool
    annihilator_order: int        # 0 = free piece; m = dead
    reason: str


@dataclass
class PeriodSolution:
    vectors: list                 # coordinate vectors of RobbaElement
    residual_floor: object
    upper_bound: int              # Qp-dim, after the consistency filter
    upper_raw: int                # Qp-dim of the Gamma-invariants
    lower_bound: int              # Qp-dim of the certified span
    certified: bool
    t_orders: list
    invariants: InvariantModule
    pieces: list                  # PieceReport list (empty without split)
    level: int
    cutoff: int
    propagation_ok: bool


def slope_threshold(delta: Character, D: PhiGammaModule) -> int:
    """Minimal localization cutoff k: the weight-normalized slope bound
    (two-sided, since solutions may sit on pieces of either slope sign)
    plus, when the split form is known, the exact visibility bound from
    the weight gaps (a solution t^j e_i needs k > j to be seen mod
    t^k)."""
    norm_slope = delta.weight - delta.slope()
    k = 1 + max(0, math.floor(norm_slope))
    if D.split is not None:
        for piece in D.split.chars:
            k = max(k, 1 + max(0, delta.weight - piece.weight))
    return k


def _frac_coords(alg: AlgElem):
    return [x.lift() for x in alg.coords]


def _frac_div(a, b, m):
    """a/b in Q[z]/(z^m) on exact rational coordinates (b a unit)."""
    out = [Fraction(0)] * m
    binv0 = 1 / b[0]
    for kk in range(m):
        acc = a[kk]
        for i in range(1, kk + 1):
            acc -= b[i] * out[kk - i]
        out[kk] = acc * binv0
    return out


def piece_survival(D: PhiGammaModule, delta: Character, k: int):
    """Forward-consistency filter on the split pieces.  Character data is
    exact rational, so the ratio tests run on exact lifts."""
    from .padics import vp_fraction
    out = []
    base = D.base
    m = base.zdim
    p = base.p
    for idx, piece in enumerate(D.split.chars):
        j = delta.weight - piece.weight
        if j < 0:
            out.append(PieceReport(idx, piece, None, False, m,
                                   "weight gap %d < 0" % j))
            continue
        if j >= k:
            out.append(PieceReport(idx, piece, j, False, m,
                                   "t^%d dies mod t^%d" % (j, k)))
            continue
        # delta/piece must be t^j * (1 + nilpotent) on p and a nilpotent
        # deviation on the units
        ratio = _frac_div(_frac_coords(delta.p_value),
                          _frac_coords(piece.p_value), m)
        ratio = [c / Fraction(p) ** j for c in ratio]
        nu = [ratio[0] - 1] + ratio[1:]
        if nu[0] != 0:
            out.append(PieceReport(idx, piece, j, False, m,
                                   "p-value off by a unit"))
            continue
        mu = [a - b for a, b in zip(_frac_coords(delta.weight_dev),
                                    _frac_coords(piece.weight_dev))]
        obstruction_orders = []
        for vecs in (nu, mu):
            order = next((i for i, c in enumerate(vecs) if c != 0), None)
            if order is not None:
                obstruction_orders.append(order)
        if obstruction_orders:
            a = min(obstruction_orders)
            dim = a                    # Ann_S(z^a) = z^(m-a) S
            out.append(PieceReport(idx, piece, j, dim > 0, m - a,
                                   "nilpotent obstruction z^%d" % a))
        else:
            out.append(PieceReport(idx, piece, j, True, 0, "free"))
    return out


def _split_generators(D, delta, pieces, k):
    """Transported candidate vectors for the surviving pieces."""
    ring = D.ring
    m = D.base.zdim
    out = []
    for rep in pieces:
        if not rep.survives:
            continue
        j = rep.t_power
        tj = ring.one() if j == 0 else ring.t_element() ** j
        for b in range(rep.annihilator_order, m):
            zb = [Fraction(0)] * m
            zb[b] = Fraction(1)
            coef = D.base.elem(zb, headroom=64)
            split_vec = [ring.zero()] * D.rank
            split_vec[rep.index] = tj.scale(coef)
            vec = mat_vec(D.split.U_inv, split_vec)
            out.append(vec)
    return out


def eigen_kernel_windowed(D, delta, window, eq_tol, kmax=None):
    """Residue-certified kernel of the three eigen equations on a
    Laurent window: returns candidate coordinate vectors."""
    ring = D.ring
    base = ring.base
    p, prec = base.p, base.prec
    lo, hi = window
    m = base.zdim
    ov = RobbaRing(base, ring.r_lo, ring.r_hi / p, ring.cap_lo, ring.cap_hi)
    c_phi = delta.p_value
    c_g = delta.gamma0_value()
    c_w = delta.omega_value()
    g0 = chi_gamma0(p)
    om = chi_omega(p)

    A_ov = [[x.restricted(ov) for x in row] for row in D.A]
    unknowns = []
    images = []
    for comp in range(D.rank):
        for e in range(lo, hi + 1):
            for zi in range(m):
                coef = base.elem([0] * zi + [1])
                bvec = [ring.zero()] * D.rank
                bvec[comp] = ring.T(e, coef=coef)
                unknowns.append((comp, e, zi))
                ph = mat_vec(A_ov, [y.phi().restricted(ov) for y in bvec])
                ph = [a - b.restricted(ov).scale(c_phi)
                      for a, b in zip(ph, bvec)]
                gg = mat_vec(D.G, [y.gamma(g0) for y in bvec])
                gg = [a - b.scale(c_g) for a, b in zip(gg, bvec)]
                ww = mat_vec(D.W, [y.gamma(om) for y in bvec])
                ww = [a - b.scale(c_w) for a, b in zip(ww, bvec)]
                images.append((ph, gg, ww))

    # row addresses: (eq, component, exponent, z-output-slot), each with
    # its own modulus: v >= eq_tol - s*l certifies w >= eq_tol there
    addresses = {}
    for cols in images:
        for eqi, vec in enumerate(cols):
            for comp, elem in enumerate(vec):
                rring = elem.ring
                for l in elem.support():
                    smin = min(rring.r_lo * l, rring.r_hi * l)
                    K_l = max(1, min(prec + max(0, -math.floor(smin)),
                                     math.ceil(eq_tol - smin)))
                    for zo in range(m):
                        addresses.setdefault((eqi, comp, l, zo), K_l)
    addr_list = sorted(addresses)
    if not addr_list:
        return []
    Kmax = max(addresses.values())
    zero_scalar = PadicScalar.zero(p, prec)
    rows_scalars = []
    row_scale = []
    for key in addr_list:
        K_l = addresses[key]
        row_scale.append(Kmax - K_l)
        eqi, comp, l, zo = key
        row = []
        for cols in images:
            c = cols[eqi][comp].coefficient(l)
            row.append(c.coords[zo] if not c.is_zero() else zero_scalar)
        rows_scalars.append(row)
    int_rows, K = _encode_int_rows(rows_scalars, p, Kmax)
    mod = p ** K
    int_rows = [[x * p ** sc % mod for x in row]
                for row, sc in zip(int_rows, row_scale)]
    kerns = howell_kernel(int_rows, len(unknowns), p, K)

    out = []
    for vec in kerns:
        vals = [vp_int(x, p) for x in vec if x % mod]
        if not vals:
            continue
        shift = min(vals)
        xs = [ring.zero()] * D.rank
        for ui, (comp, e, zi) in enumerate(unknowns):
            c = (vec[ui] // p ** shift) % mod
            if c:
                coef = base.elem([0] * zi + [PadicScalar(p, c, 0,
                                                         K - shift)])
                xs[comp] = xs[comp] + ring.T(e, coef=coef)
        if any(not x.is_zero_stored() for x in xs):
            out.append(xs)
    return out


def residual_floors(D, delta, vec):
    """(phi, gamma_0, omega) certified w-floors for a candidate."""
    ring = D.ring
    p = ring.base.p
    ov = RobbaRing(ring.base, ring.r_lo, ring.r_hi / p,
                   ring.cap_lo, ring.cap_hi)
    A_ov = [[x.restricted(ov) for x in row] for row in D.A]
    ph = mat_vec(A_ov, [y.phi().restricted(ov) for y in vec])
    ph = [a - b.restricted(ov).scale(delta.p_value)
          for a, b in zip(ph, vec)]
    gg = mat_vec(D.G, [y.gamma(chi_gamma0(p)) for y in vec])
    gg = [a - b.scale(delta.gamma0_value()) for a, b in zip(gg, vec)]
    ww = mat_vec(D.W, [y.gamma(chi_omega(p)) for y in vec])
    ww = [a - b.scale(delta.omega_value()) for a, b in zip(ww, vec)]
    fl_ph = min((x.w_min() for x in ph), default=INF)
    fl_g = min((x.w_min() for x in gg), default=INF)
    fl_w = min((x.w_min() for x in ww), default=INF)
    return fl_ph, fl_g, fl_w


def _dif_image(vec, n, k):
    return [iota_localize(x, n, k) for x in vec]


def _flatten_dif_vec(vec):
    out = []
    for x in vec:
        out.extend(x.qp_coords())
    return out


def solve_period(D: PhiGammaModule, delta: Character, n: int, k: int,
                 method="auto", window=None, tol=None,
                 eq_tol=None) -> PeriodSolution:
    """Compute D^delta with certified dimension brackets at level n,
    cutoff k."""
    base = D.base
    p, prec = base.p, base.prec
    if tol is None:
        tol = max(2, prec - 8)
    kmin = slope_threshold(delta, D)
    if k < kmin:
        raise WindowTooSmall("cutoff k=%d below the slope threshold %d"
                             % (k, kmin))
    if not D.ring.contains_level(n):
        raise LevelOutOfRange("level %d not admissible" % n)

    Dtw = D.twist(delta.inv())
    W = gamma_invariants(Dtw.dif_module(n, k), Character.trivial(base))
    upper_raw = W.qp_dim

    pieces = []
    upper = upper_raw
    if D.split is not None:
        pieces = piece_survival(D, delta, k)
        m = base.zdim
        dim_split = sum(m - rep.annihilator_order for rep in pieces
                        if rep.survives)
        upper = min(upper_raw, dim_split)

    if method == "window" or (method == "auto" and D.split is None):
        win = window if window is not None else (-2, max(8, 4 * k))
        candidates = eigen_kernel_windowed(D, delta, win, eq_tol or tol)
    else:
        candidates = _split_generators(D, delta, pieces, k)

    vectors, floors, images = [], [], []
    for vec in candidates:
        fl = residual_floors(D, delta, vec)
        if min(fl) < tol:
            continue
        img = _dif_image(vec, n, k)
        flat = _flatten_dif_vec(img)
        if padic_rank([_flatten_dif_vec(i) for i in images] + [flat],
                      p, prec) <= len(images):
            continue
        vectors.append(vec)
        floors.append(min(fl))
        images.append(img)

    lower = len(images)

    # propagation across the other admissible levels: in module
    # coordinates, iota_m(c) = alpha^{-1} iota_m(A) raise(iota_{m-1}(c))
    prop_ok = True
    alpha_inv = delta.p_value.inv()
    prop_tol = max(1, tol - 4)
    for vec, img in zip(vectors, images):
        prev = img
        prev_level = n
        for mlev in D.ring.levels():
            if mlev <= n:
                continue
            if mlev != prev_level + 1:
                break
            lhs = _dif_image(vec, mlev, k)
            A_m = [[iota_localize(a, mlev, k) for a in row]
                   for row in D.A]
            raised = [x.raise_level(mlev) for x in prev]
            rhs = [x * _ascalar(alpha_inv)
                   for x in _dif_matvec(A_m, raised)]
            ok = all((a - b).is_zero() or
                     (a - b).certified_zero_at(prop_tol)
                     for a, b in zip(lhs, rhs))
            prop_ok = prop_ok and ok
            prev, prev_level = lhs, mlev

    t_orders = []
    for img in images:
        orders = [x.t_order() for x in img if x.t_order() is not None]
        t_orders.append(min(orders) if orders else None)

    certified = (lower == upper) and prop_ok
    return PeriodSolution(
        vectors=vectors,
        residual_floor=min(floors) if floors else INF,
        upper_bound=upper, upper_raw=upper_raw, lower_bound=lower,
        certified=certified, t_orders=t_orders, invariants=W,
        pieces=pieces, level=n, cutoff=k, propagation_ok=prop_ok)


def _ascalar(alg: AlgElem):
    """Use an S-element as a DifElem scalar (via the constant slot)."""
    return alg


def _dif_matvec(A, v):
    out = []
    for row in A:
        acc = None
        for a, x in zip(row, v):
            t = a * x
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


def saturation_test(D: PhiGammaModule, vec, n: int, k: int = None):
    """(saturated, t_order) of a certified eigenvector: order of the
    iota_n-image; saturated iff the order is 0.  One admissible level
    suffices for eigenvectors (images at other levels differ by units
    alpha^(n-m))."""
    if k is None:
        k = 4
    img = _dif_image(vec, n, k)
    orders = [x.t_order() for x in img]
    live = [o for o in orders if o is not None]
    order = min(live) if live else k
    return (order == 0), order


@dataclass
class FiniteSlopeVerdict:
    isomorphism: bool
    eigen_dim: int
    invariant_dim: int
    witness: object          # an unlifted invariant generator, or None
    solution: PeriodSolution


def finite_slope_test(D: PhiGammaModule, alpha: AlgElem, n: int, k: int,
                      **kw) -> FiniteSlopeVerdict:
    """Artinian finite-slope membership: is the eigenspace-to-invariants
    map an isomorphism at (n, k)?  The caller normalizes the query so
    its Gamma-part is trivial (alpha = delta(p), weight 0)."""
    base = D.base
    delta = Character(base, alpha if isinstance(alpha, AlgElem)
                      else base.elem([alpha]), 0)
    sol = solve_period(D, delta, n, k, **kw)
    W = sol.invariants
    # surjectivity: do the images of the certified solutions span W?
    img_flat = [_flatten_dif_vec(_dif_image(v, n, k)) for v in sol.vectors]
    span_rank = padic_rank(img_flat, base.p, base.prec)
    witness = None
    for gen in W.generators:
        gf = _flatten_dif_vec(gen)
        if padic_rank(img_flat + [gf], base.p, base.prec) > span_rank:
            witness = gen
            break
    iso = (witness is None and span_rank == W.qp_dim
           and sol.lower_bound == W.qp_dim)
    return FiniteSlopeVerdict(iso, sol.lower_bound, W.qp_dim, witness, sol)
