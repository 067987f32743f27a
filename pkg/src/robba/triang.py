"""Refinements, chains and triangulations.

A refinement of a crystalline point is an ordering of the Frobenius
eigenvalues together with the induced ordering (s_1, ..., s_d) of the
Hodge jumps; its triangulation parameters are
    delta_i(p) = phi_i p^(-s_i),    delta_i|units = x -> x^(-s_i).
Chains live in wedge powers: m_1, ..., m_d is a chain when m_1 is
saturated, m_1 ^ m_i = 0, and the quotients by m_1 recurse to a chain.
The chain test runs in the localized module (K_n tensor S)[t]/(t^k),
where saturation and wedge identities are finite linear algebra; reports
carry (n, k) so verdicts are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .base import AlgElem, BaseAlgebra, Character
from .dif import DifElem, DifRing
from .errors import (ChainFailed, NotEigenvector, NotSplit,
                     RepeatedEigenvalues)
from .linalg import howell_kernel
from .dif import iota_localize
from .modules import (DifModule, PhiGammaModule, _encode_int_rows,
                      mat_vec, padic_rank)
from .padics import PadicScalar, chi_gamma0, chi_omega
from .periods import residual_floors, solve_period, saturation_test
from .series import INF, RobbaRing


# -- crystalline data and refinements ----------------------------------------

@dataclass
class FilteredPhiModule:
    """D_crys at a point: Frobenius matrix over Q_p, ascending Hodge
    jumps, and a full flag (column f_i spans the new direction of
    Fil^{k_i}: Fil^{k_i} = span(f_i, ..., f_d))."""
    base: BaseAlgebra
    dim: int
    phi: list                     # d x d AlgElem matrix
    hodge_jumps: list             # k_1 < ... < k_d
    fil_basis: list               # list of d coordinate columns (AlgElem)

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.hodge_jumps,
                                      self.hodge_jumps[1:])):
            raise ValueError("hodge jumps must be strictly increasing")


@dataclass
class Refinement:
    module: FilteredPhiModule
    eigenvalues: list             # (phi_1, ..., phi_d) as AlgElem, ordered
    induced_jumps: list           # (s_1, ..., s_d), a permutation of the k_i


def _eigenvector(M, lam, base):
    """A kernel vector of (M - lam) over Q_p at working precision."""
    d = len(M)
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            x = M[i][j]
            if i == j:
                x = x - lam
            row.append(x.coords[0])
        rows.append(row)
    int_rows, K = _encode_int_rows(rows, base.p, base.prec)
    kerns = howell_kernel(int_rows, d, base.p, K)
    best = None
    for v in kerns:
        vals = [x % base.p ** K for x in v]
        if not any(vals):
            continue
        shift = min(_vp(x, base.p, K) for x in vals if x)
        vec = [(x // base.p ** shift) % base.p ** K for x in vals]
        cand = [base.elem([PadicScalar(base.p, x, 0, K - shift)
                           if x else PadicScalar.zero(base.p, K - shift)])
                for x in vec]
        res = [sum_elems([(M[i][j] - (lam if i == j else 0)) * cand[j]
                          for j in range(d)]) for i in range(d)]
        if all(r.val_bound() >= base.prec - 2 for r in res):
            best = cand
            break
    return best


def _vp(x, p, K):
    from .padics import vp_int
    return min(vp_int(x, p), K)


def sum_elems(xs):
    acc = None
    for x in xs:
        acc = x if acc is None else acc + x
    return acc


def refinement_from_ordering(M: FilteredPhiModule, eigenvalues):
    """Build the Refinement for an eigenvalue ordering, computing the
    induced jump sequence from flag intersections."""
    base = M.base
    d = M.dim
    vals = [base.elem([e]) if not isinstance(e, AlgElem) else e
            for e in eigenvalues]
    for i in range(d):
        for j in range(i + 1, d):
            if (vals[i] - vals[j]).is_zero():
                raise RepeatedEigenvalues("eigenvalues %d and %d coincide"
                                          % (i, j))
    eigvecs = []
    for lam in vals:
        v = _eigenvector(M.phi, lam, base)
        if v is None:
            raise RepeatedEigenvalues("no certified eigenvector for %r"
                                      % lam)
        eigvecs.append(v)

    def flat(vectors):
        return [[x.coords[0] for x in v] for v in vectors]

    jumps = []
    seen = []
    for i in range(1, d + 1):
        F_i = eigvecs[:i]
        S_i = []
        for idx in range(d):
            # dim(F_i  cap  Fil^{k_idx}) jumps exactly at the induced s's
            fil = M.fil_basis[idx:]
            inter = (padic_rank(flat(F_i), base.p, base.prec)
                     + padic_rank(flat(fil), base.p, base.prec)
                     - padic_rank(flat(F_i + fil), base.p, base.prec))
            fil2 = M.fil_basis[idx + 1:]
            inter2 = (padic_rank(flat(F_i), base.p, base.prec)
                      + (padic_rank(flat(fil2), base.p, base.prec)
                         if fil2 else 0)
                      - padic_rank(flat(F_i + fil2), base.p, base.prec))
            if inter > inter2:
                S_i.append(M.hodge_jumps[idx])
        new = [k for k in S_i if k not in seen]
        if len(new) != 1:
            raise ValueError("flag does not induce a single new jump")
        jumps.append(new[0])
        seen = S_i
    return Refinement(M, vals, jumps)


def classify_refinement(ref: Refinement):
    """(noncritical, regular) flags by exact linear algebra."""
    M = ref.module
    base = M.base
    d = M.dim
    eigvecs = [_eigenvector(M.phi, lam, base) for lam in ref.eigenvalues]

    def flat(vectors):
        return [[x.coords[0] for x in v] for v in vectors]

    noncritical = True
    for i in range(1, d):
        fil_next = M.fil_basis[i:]      # Fil^{k_i + 1} has dimension d - i
        span = eigvecs[:i] + fil_next
        if padic_rank(flat(span), base.p, base.prec) < d:
            noncritical = False
            break

    regular = True
    eigs = ref.eigenvalues
    for i in range(1, d + 1):
        target = None
        for j in range(i):
            target = eigs[j] if target is None else target * eigs[j]
        count = 0
        for sub in combinations(range(d), i):
            prod = None
            for j in sub:
                prod = eigs[j] if prod is None else prod * eigs[j]
            if (prod - target).is_zero():
                count += 1
        if count != 1:
            regular = False
            break
    return {"noncritical": noncritical, "regular": regular}


def refinement_parameters(ref: Refinement, ring=None):
    """The triangulation parameters delta_i(p) = phi_i p^(-s_i),
    weight -s_i."""
    base = ref.module.base
    out = []
    for lam, s in zip(ref.eigenvalues, ref.induced_jumps):
        out.append(Character(base, lam * Fraction(1, base.p) ** s, -s))
    return out


def build_trianguline(ref: Refinement, ring: RobbaRing):
    """The split module of a refinement plus its expected chain."""
    params = refinement_parameters(ref)
    D = None
    for delta in params:
        piece = PhiGammaModule.rank1(ring, delta)
        D = piece if D is None else D.direct_sum(piece)
    chain = []
    Delta = None
    d = ref.module.dim
    for i in range(1, d + 1):
        Delta = params[i - 1] if Delta is None else Delta * params[i - 1]
        idx = list(combinations(range(d), i))
        vec = [ring.zero()] * len(idx)
        vec[idx.index(tuple(range(i)))] = ring.one()
        chain.append((vec, Delta))
    return D, chain


# -- chain algebra in the localization -----------------------------------------

def _wedge1_dif(u, v, r, i):
    """(u ^ v) for u in Lambda^1, v in Lambda^i of a rank-r free module,
    coordinates over the i-subsets in lexicographic order."""
    idx_i = list(combinations(range(r), i))
    idx_o = list(combinations(range(r), i + 1))
    pos_i = {s: a for a, s in enumerate(idx_i)}
    out = []
    zero = None
    for a, sub in enumerate(idx_o):
        acc = None
        for pos, el in enumerate(sub):
            rest = sub[:pos] + sub[pos + 1:]
            t = u[el] * v[pos_i[rest]]
            if pos % 2:
                t = -t
            acc = t if acc is None else acc + t
        if acc is None:
            zero = zero if zero is not None else u[0].ring.zero()
            acc = zero
        out.append(acc)
    return out


def _contract_dif(a0, v, r, i):
    """Interior product against the a0-th dual basis vector:
    Lambda^i -> Lambda^(i-1) coordinates."""
    idx_i = list(combinations(range(r), i))
    idx_o = list(combinations(range(r), i - 1))
    pos_o = {s: a for a, s in enumerate(idx_o)}
    out = [None] * len(idx_o)
    for a, sub in enumerate(idx_i):
        if a0 not in sub:
            continue
        pos = sub.index(a0)
        rest = sub[:pos] + sub[pos + 1:]
        t = v[a]
        if pos % 2:
            t = -t
        cur = out[pos_o[rest]]
        out[pos_o[rest]] = t if cur is None else cur + t
    zero = v[0].ring.zero() if v else None
    return [x if x is not None else zero for x in out]


def _reindex_subsets(vals, r, i, removed):
    """Restrict Lambda^i coordinates to subsets avoiding ``removed`` and
    reindex over the rank-(r-1) module."""
    idx = list(combinations(range(r), i))
    keep = [a for a, s in enumerate(idx) if removed not in s]
    return [vals[a] for a in keep]


@dataclass
class ChainReport:
    is_chain: bool
    failure_stage: str
    level: int
    cutoff: int
    stage_orders: list            # per-stage t-order of the front vector
    notes: list = field(default_factory=list)


def _dif_vec_is_zero(vec, tol):
    return all(x.is_zero() or x.certified_zero_at(tol) for x in vec)


def chain_test_dif(vectors, ring: DifRing, rank, tol):
    """Pure chain recursion over R = (K_n tensor S)[t]/(t^k).

    ``vectors``[i] holds Lambda^(i+1)-coordinates (DifElem) of m_{i+1}.
    """
    orders = []
    notes = []
    r = rank
    vecs = [list(v) for v in vectors]
    stage = 0
    while vecs:
        m1 = vecs[0]
        front_orders = [x.t_order() for x in m1]
        live = [o for o in front_orders if o is not None]
        orders.append(min(live) if live else None)
        a0 = None
        for idx, x in enumerate(m1):
            if x.is_unit():
                a0 = idx
                break
        if a0 is None:
            return ChainReport(False, "saturation at stage %d" % (stage + 1),
                               ring.n, ring.k, orders, notes)
        u_inv = m1[a0].inv()
        for i, mi in enumerate(vecs[1:], start=2):
            if i + 1 > r:
                continue          # Lambda^{i+1} of a rank-r module is 0
            w = _wedge1_dif(m1, mi, r, i)
            if not _dif_vec_is_zero(w, tol):
                return ChainReport(
                    False, "wedge m_1 ^ m_%d != 0 at stage %d"
                    % (i + stage, stage + 1), ring.n, ring.k, orders, notes)
        nxt = []
        for i, mi in enumerate(vecs[1:], start=2):
            contracted = _contract_dif(a0, mi, r, i)
            scaled = [x * u_inv for x in contracted]
            nxt.append(_reindex_subsets(scaled, r, i - 1, a0))
        vecs = nxt
        r -= 1
        stage += 1
    return ChainReport(True, "", ring.n, ring.k, orders, notes)


def default_cutoff(D: PhiGammaModule, chars):
    """k default: (max weight gap) + (max slope) + 2."""
    weights = [c.weight for c in chars]
    gap = max(weights) - min(weights) if weights else 0
    slopes = [c.slope() for c in chars]
    slope = max((abs(s) for s in slopes if s is not INF), default=0)
    return int(gap + math.ceil(slope) + 2)


def chain_test(D: PhiGammaModule, chain, n, k, tol=None, check_eigen=True):
    """Full chain test: eigenvector certificates on the Robba layer, then
    the finite recursion in the localization."""
    base = D.base
    if tol is None:
        tol = max(2, base.prec - 8)
    wedge_cache = {}
    dif_vectors = []
    for i, (vec, Delta) in enumerate(chain, start=1):
        if check_eigen:
            Dw = wedge_cache.get(i)
            if Dw is None:
                Dw = D.wedge(i) if i > 1 else D
                wedge_cache[i] = Dw
            floors = residual_floors(Dw, Delta, vec)
            if min(floors) < min(tol, 3):
                raise NotEigenvector(
                    "m_%d fails its eigenvector certificate: floors %r"
                    % (i, floors))
        dif_vectors.append([iota_localize(x, n, k) for x in vec])
    ring = DifRing(base, n, k)
    return chain_test_dif(dif_vectors, ring, D.rank, tol)


def extract_triangulation(D: PhiGammaModule, chain, n, k, tol=None):
    """Parameters and filtration data of a passed chain."""
    report = chain_test(D, chain, n, k, tol=tol)
    if not report.is_chain:
        raise ChainFailed(report.failure_stage)
    params = []
    prev = None
    for vec, Delta in chain:
        params.append(Delta if prev is None else Delta / prev)
        prev = Delta
    return {"parameters": params, "report": report,
            "characters": [c for _, c in chain]}


# -- finite-sample triangulation loci -------------------------------------------

def _poly_eval_frac(coeffs, z):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * z + Fraction(c)
    return acc


def _poly_derivative(coeffs):
    return [Fraction(c) * i for i, c in enumerate(coeffs)][1:] or [Fraction(0)]


@dataclass
class RefinementFamily:
    """A z-parametrized family of refined crystalline points.

    The i-th Frobenius eigenvalue at z is p^(kappa_i(z)) F_i(z) with
    weight polynomials kappa_i (integer-valued at samples, ascending) and
    unit polynomials F_i.  ``ordering`` lists which eigenvalue the
    refinement takes first; the identity ordering is noncritical.
    """
    p: int
    prec: int
    weight_polys: list            # kappa_i as Fraction-coefficient lists
    unit_polys: list              # F_i likewise
    ordering: list                # permutation of range(d)

    @property
    def dim(self):
        return len(self.weight_polys)

    def weights_at(self, z):
        out = []
        for poly in self.weight_polys:
            w = _poly_eval_frac(poly, z)
            if w.denominator != 1:
                raise ValueError("weight %s not an integer at z=%s"
                                 % (w, z))
            out.append(int(w))
        return out

    def units_at(self, z):
        return [_poly_eval_frac(poly, z) for poly in self.unit_polys]

    def characters_at(self, z, ring, artinian=False):
        """Point characters delta_i (noncritical assignment, encoding the
        split local module) and the query characters Delta_i for the
        family ordering.  With ``artinian`` the base is S = Q_p[z]/(z^2)
        around the sample and the weight bends by its derivative."""
        base = ring.base
        weights = self.weights_at(z)
        units = self.units_at(z)
        devs = [None] * self.dim
        unit_devs = [None] * self.dim
        if artinian:
            devs = [_poly_eval_frac(_poly_derivative(poly), z)
                    for poly in self.weight_polys]
            unit_devs = [_poly_eval_frac(_poly_derivative(poly), z)
                        for poly in self.unit_polys]
        deltas = []
        for i in range(self.dim):
            pv = base.elem([units[i], unit_devs[i] or 0]
                           if base.zdim > 1 else [units[i]])
            dev = None
            if artinian and devs[i]:
                dev = base.elem([0, devs[i]])
            deltas.append(Character(base, pv, -weights[i], dev))
        queries = []
        acc = None
        for i in range(self.dim):
            src = self.ordering[i]
            pv_unit = base.elem(
                [units[src] * Fraction(self.p) ** weights[src],
                 0] if base.zdim > 1 else
                [units[src] * Fraction(self.p) ** weights[src]])
            step = Character(base, pv_unit, 0)
            acc = step if acc is None else acc * step
            # Gamma part: the i smallest weights (eta_i), negated to meet
            # the canonical-basis convention used by the deltas
            wsum = sum(weights[:i + 1])
            queries.append(Character(base, acc.p_value *
                                     Fraction(1, self.p) ** wsum, -wsum))
        return deltas, queries

    def sen_roots_at(self, z, artinian=False):
        """Effective Sen roots of the pieces: -kappa_i (plus the first
        order bend on the artinian fiber)."""
        weights = self.weights_at(z)
        if not artinian:
            return [Fraction(-w) for w in weights]
        roots = []
        for w, poly in zip(weights, self.weight_polys):
            roots.append((Fraction(-w),
                          -_poly_eval_frac(_poly_derivative(poly), z)))
        return roots


def good_criterion_values(family: RefinementFamily, z, base):
    """P_i(k_i) for i < d, with k_i = max(floor(v_p(alpha_i)), 0) + 1:
    the sufficient saturation criterion values (as S-elements)."""
    from .padics import vp_fraction
    d = family.dim
    weights = family.weights_at(z)
    units = family.units_at(z)
    order = family.ordering
    out = []
    for i in range(1, d):
        # wedge^i twisted to smallest weight 0: Sen roots kappa_J - eta_i
        alpha_v = sum(weights[order[j]] for j in range(i)) + \
            sum(vp_fraction(units[order[j]], family.p) for j in range(i)) \
            - sum(weights[:i])
        k_i = max(0, math.floor(alpha_v)) + 1
        top = sum(weights[:i])
        val = base.one()
        for sub in combinations(range(d), i):
            if sub == tuple(range(i)):
                continue
            root = sum(weights[j] for j in sub) - top
            for j in range(k_i):
                val = val * base.scalar(Fraction(-j - root))
        out.append((k_i, val))
    return out


def locus_scan(family: RefinementFamily, samples, ring_factory, n=1,
               k=None, artinian=False, tol=None):
    """Per-point saturation/chain report over a finite sample of the
    base.  Errors at one point are recorded, not fatal."""
    rows = []
    for z in samples:
        row = {"z": z, "artinian": artinian}
        try:
            ring = ring_factory(artinian)
            base = ring.base
            deltas, queries = family.characters_at(z, ring, artinian)
            crit = good_criterion_values(family, z, base)
            row["criterion"] = [(ki, not val.is_zero() and val.is_unit())
                                for ki, val in crit]
            row["criterion_values"] = crit
            D = None
            for delta in deltas:
                piece = PhiGammaModule.rank1(ring, delta)
                D = piece if D is None else D.direct_sum(piece)
            kk = k if k is not None else default_cutoff(D, deltas + queries)
            per_query = []
            chain_vectors = []
            chain_ok_so_far = True
            for i, Delta in enumerate(queries, start=1):
                Dw = D.wedge(i) if i > 1 else D
                from .periods import slope_threshold
                kq = max(kk, slope_threshold(Delta, Dw))
                sol = solve_period(Dw, Delta, n, kq)
                entry = {"rank": sol.lower_bound,
                         "certified": sol.certified,
                         "t_order": sol.t_orders[0] if sol.t_orders
                         else None}
                if sol.vectors:
                    sat, order = saturation_test(Dw, sol.vectors[0], n)
                    entry["saturated"] = sat
                    chain_vectors.append((sol.vectors[0], Delta))
                else:
                    entry["saturated"] = None
                    chain_ok_so_far = False
                per_query.append(entry)
            row["queries"] = per_query
            row["saturated_point"] = all(e["saturated"] for e in per_query)
            if chain_ok_so_far and len(chain_vectors) == family.dim:
                rep = chain_test(D, chain_vectors, n,
                                 max(kk, max(e.get("t_order") or 0
                                             for e in per_query) + 1),
                                 tol=tol, check_eigen=False)
                row["chain"] = rep.is_chain
                row["chain_report"] = rep
                if rep.is_chain:
                    prev = None
                    params = []
                    for _, Delta in chain_vectors:
                        params.append(Delta if prev is None
                                      else Delta / prev)
                        prev = Delta
                    row["parameters"] = params
            else:
                row["chain"] = False
        except Exception as exc:      # per-point errors are data
            row["error"] = "%s: %s" % (type(exc).__name__, exc)
        rows.append(row)
    return rows
