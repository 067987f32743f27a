import random
from fractions import Fraction

import pytest

from robba.base import BaseAlgebra, Character
from robba.errors import ChainFailed, NotEigenvector, RepeatedEigenvalues
from robba.modules import PhiGammaModule, mat_identity, mat_mul, mat_vec
from robba.periods import solve_period
from robba.series import RobbaRing
from robba.triang import (FilteredPhiModule, RefinementFamily,
                          build_trianguline, chain_test,
                          classify_refinement, extract_triangulation,
                          good_criterion_values, locus_scan,
                          refinement_from_ordering, refinement_parameters)

P, N = 3, 12


def std_ring(p=P, prec=N, cap_hi=160, cap_lo=-24, zdim=1):
    r1 = Fraction(1, p - 1)
    r2 = Fraction(1, p * (p - 1))
    return RobbaRing(BaseAlgebra(p, prec, zdim), r2, r1, cap_lo, cap_hi)


def crystalline_point(base, eigs, jumps, fil_cols=None):
    d = len(eigs)
    phi = [[base.scalar(eigs[i] if i == j else 0) for j in range(d)]
           for i in range(d)]
    if fil_cols is None:
        fil_cols = [[1 if r == c else 0 for r in range(d)]
                    for c in range(d)]
    fil = [[base.scalar(x) for x in col] for col in fil_cols]
    return FilteredPhiModule(base, d, phi, jumps, fil)


def test_refinement_parameters_example():
    base = BaseAlgebra(P, N)
    M = crystalline_point(base, [2, 45], [0, 3],
                          fil_cols=[[1, 1], [0, 1]])
    ref = refinement_from_ordering(M, [2, 45])
    assert ref.induced_jumps == [0, 3]
    d1, d2 = refinement_parameters(ref)
    assert d1.p_value.same(base.scalar(2)) and d1.weight == 0
    assert d2.p_value.same(base.scalar(Fraction(5, 3))) and d2.weight == -3
    # product check: delta_1 delta_2 has p-value det(phi) p^{-k1-k2}
    prod = d1 * d2
    assert prod.p_value.same(base.scalar(Fraction(2 * 45, 27)))


def test_classification():
    base = BaseAlgebra(P, N)
    # phi diagonal; filtration line Fil^{k_2} spanned by e_1 + e_2:
    # transverse to both eigenlines -> noncritical either way except
    # when the eigenline equals the filtration line
    M = crystalline_point(base, [2, 5], [0, 3],
                          fil_cols=[[1, 0], [1, 1]])
    ref = refinement_from_ordering(M, [2, 5])
    out = classify_refinement(ref)
    assert out["noncritical"] and out["regular"]
    # filtration line = second eigenline: ordering (5, 2) is critical
    M2 = crystalline_point(base, [2, 5], [0, 3],
                           fil_cols=[[1, 0], [0, 1]])
    ref2 = refinement_from_ordering(M2, [5, 2])
    out2 = classify_refinement(ref2)
    assert not out2["noncritical"]
    assert out2["regular"]
    with pytest.raises(RepeatedEigenvalues):
        refinement_from_ordering(crystalline_point(base, [2, 2], [0, 1]),
                                 [2, 2])


def test_induced_jumps_critical_ordering():
    base = BaseAlgebra(P, N)
    M = crystalline_point(base, [2, 5], [0, 3],
                          fil_cols=[[1, 0], [0, 1]])
    # Fil^{k_2} = e_2-line; ordering (5, 2) has F_1 = e_2-line, so the
    # induced jump sequence starts with k_2 = 3
    ref = refinement_from_ordering(M, [5, 2])
    assert ref.induced_jumps == [3, 0]


def test_build_and_roundtrip():
    base = BaseAlgebra(P, N)
    R = std_ring()
    M = crystalline_point(base, [2, 45], [0, 3],
                          fil_cols=[[1, 1], [0, 1]])
    ref = refinement_from_ordering(M, [2, 45])
    D, chain = build_trianguline(ref, R)
    assert D.rank == 2
    assert D.A[0][0].coefficient(0).same(2)
    assert D.A[1][1].coefficient(0).same(Fraction(5, 3))
    rep = chain_test(D, chain, 1, 5)
    assert rep.is_chain
    out = extract_triangulation(D, chain, 1, 5)
    got = out["parameters"]
    expect = refinement_parameters(ref)
    for a, b in zip(got, expect):
        assert a.same(b)


def test_chain_fails_on_critical_vector():
    R = std_ring()
    base = R.base
    d1 = Character(base, base.one(), 0)
    d2 = Character(base, base.scalar(Fraction(5, 9)), -2)
    D = PhiGammaModule.rank1(R, d1).direct_sum(PhiGammaModule.rank1(R, d2))
    # the critical generator t^2 e_2 is an eigenvector but not saturated
    sol = solve_period(D, Character(base, base.scalar(5), 0), 1, 3)
    chain = [(sol.vectors[0], Character(base, base.scalar(5), 0))]
    rep = chain_test(D, chain, 1, 4)
    assert not rep.is_chain
    assert "saturation" in rep.failure_stage
    with pytest.raises(ChainFailed):
        extract_triangulation(D, chain, 1, 4)


def test_chain_invariance_under_basis_change():
    R = std_ring()
    base = R.base
    M = crystalline_point(base, [2, 5], [0, 2],
                          fil_cols=[[1, 1], [0, 1]])
    ref = refinement_from_ordering(M, [2, 5])
    D, chain = build_trianguline(ref, R)
    U = mat_identity(R, 2)
    U[0][1] = R.T(1, coef=2)
    Ui = mat_identity(R, 2)
    Ui[0][1] = R.T(1, coef=-2)
    Ds = D.change_basis(U, Ui)
    # transport the chain: coordinates move by U^{-1} (and its wedge)
    m1 = mat_vec(Ui, chain[0][0])
    m2 = chain[1][0]                       # top wedge is 1-dim: det(Ui)=1
    rep = chain_test(Ds, [(m1, chain[0][1]), (m2, chain[1][1])], 1, 5)
    assert rep.is_chain


def test_rank3_chain():
    base = BaseAlgebra(P, N)
    R = std_ring()
    M = crystalline_point(base, [1, 2, 25], [0, 1, 3],
                          fil_cols=[[1, 1, 1], [0, 1, 1], [0, 0, 1]])
    ref = refinement_from_ordering(M, [1, 2, 25])
    D, chain = build_trianguline(ref, R)
    rep = chain_test(D, chain, 1, 6)
    assert rep.is_chain
    out = extract_triangulation(D, chain, 1, 6)
    expect = refinement_parameters(ref)
    for a, b in zip(out["parameters"], expect):
        assert a.same(b)


def test_locus_scan_weight_crossing():
    # rank-2 family: weights (0, w(z)) with w(z) = 1 + z, eigenvalue of
    # slope 2 first: samples below/above the slope flip saturation
    fam = RefinementFamily(
        p=P, prec=N,
        weight_polys=[[0], [1, 1]],        # kappa_2 = 1 + z
        unit_polys=[[1], [2]],
        ordering=[1, 0])                   # big eigenvalue first
    # ordering takes eigenvalue p^{kappa_2(z)} * 2 first: its slope is
    # kappa_2(z); the first query has weight 0, so the generator is
    # t^{kappa_2(z)} e_2-like: never saturated; make the OTHER family
    # with ordering [0, 1] and slope-0 first: always saturated
    def ring_factory(artinian):
        return std_ring(zdim=2 if artinian else 1)

    rows = locus_scan(fam, [Fraction(1), Fraction(2)], ring_factory, n=1)
    for row in rows:
        assert "error" not in row, row
        assert row["queries"][0]["saturated"] is False
        assert row["queries"][0]["t_order"] == 1 + row["z"]
        assert not row["chain"]

    fam2 = RefinementFamily(P, N, [[0], [1, 1]], [[1], [2]], [0, 1])
    rows2 = locus_scan(fam2, [Fraction(1), Fraction(2)], ring_factory, n=1)
    for row in rows2:
        assert "error" not in row, row
        assert row["saturated_point"], row
        assert row["chain"], row
        # recovered parameters match the noncritical dictionary
        d1, d2 = row["parameters"]
        assert d1.weight == 0 and d2.weight == -(1 + row["z"])


def test_locus_scan_trivial_family():
    fam = RefinementFamily(P, N, [[0]], [[1]], [0])

    def ring_factory(artinian):
        return std_ring(zdim=2 if artinian else 1)

    rows = locus_scan(fam, [Fraction(0), Fraction(1)], ring_factory, n=1)
    for row in rows:
        assert "error" not in row
        assert row["saturated_point"] and row["chain"]


def test_good_criterion_values():
    base = BaseAlgebra(P, N)
    fam = RefinementFamily(P, N, [[0], [2]], [[1], [1]], [0, 1])
    crit = good_criterion_values(fam, Fraction(0), base)
    # i = 1: alpha = eigenvalue 1*p^0: v = 0, k_1 = 1; root kappa_2 = 2:
    # P_1(1) = -(0 + 2) = -2, a unit
    k1, val = crit[0]
    assert k1 == 1
    assert val.same(base.scalar(-2))
