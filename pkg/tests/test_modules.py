import math
import random
from fractions import Fraction

import pytest

from robba.base import BaseAlgebra, Character, t_power_character
from robba.errors import RankOutOfRange, ZeroNotARoot
from robba.modules import (PhiGammaModule, gamma_invariants, mat_identity,
                           mat_inverse, mat_is_small, mat_mul, mat_sub,
                           sen_operator)
from robba.series import RobbaRing

P, N = 3, 12


def std_ring(p=P, prec=N, cap_hi=64, cap_lo=-16, zdim=1):
    r1 = Fraction(1, p - 1)
    r2 = Fraction(1, p * (p - 1))
    return RobbaRing(BaseAlgebra(p, prec, zdim), r2, r1, cap_lo, cap_hi)


def char(ring, pv, w, dev=None):
    S = ring.base
    return Character(S, S.elem([pv] if not isinstance(pv, list) else pv),
                     w, S.elem(dev) if dev else None)


def scramble(D, rng, entries=2):
    """Random elementary basis change with exact inverse."""
    ring = D.ring
    d = D.rank
    U = mat_identity(ring, d)
    Ui = mat_identity(ring, d)
    for _ in range(entries):
        i, j = rng.sample(range(d), 2) if d > 1 else (0, 0)
        if i == j:
            continue
        e = rng.randint(0, 2)
        c = Fraction(rng.randint(-3, 3))
        if c == 0:
            continue
        E = mat_identity(ring, d)
        E[i][j] = ring.T(e, coef=c)
        Ei = mat_identity(ring, d)
        Ei[i][j] = ring.T(e, coef=-c)
        U = mat_mul(U, E)
        Ui = mat_mul(Ei, Ui)
    return D.change_basis(U, Ui), U, Ui


def test_rank1_matrices():
    R = std_ring()
    triv = PhiGammaModule.trivial(R)
    assert triv.A[0][0].coefficient(0).same(1)
    d2 = PhiGammaModule.rank1(R, char(R, 1, 2))
    assert d2.G[0][0].coefficient(0).same(16)     # chi(gamma_0)^2 = 16
    d3 = PhiGammaModule.rank1(R, char(R, Fraction(5, 9), -2))
    assert d3.A[0][0].coefficient(0).same(Fraction(5, 9))
    assert d3.verify(N - 2)


def test_wedge_of_sum_is_product_character():
    R = std_ring()
    d1 = PhiGammaModule.rank1(R, char(R, 2, 1))
    d2 = PhiGammaModule.rank1(R, char(R, 5, -1))
    D = d1.direct_sum(d2)
    w = D.wedge(2)
    assert w.rank == 1
    assert w.A[0][0].coefficient(0).same(10)
    assert w.G[0][0].coefficient(0).same(1)       # weights cancel
    with pytest.raises(RankOutOfRange):
        D.wedge(3)


def test_tensor_with_inverse_is_trivial():
    R = std_ring()
    d = char(R, Fraction(5, 3), 2)
    D = PhiGammaModule.rank1(R, d).tensor(PhiGammaModule.rank1(R, d.inv()))
    assert D.A[0][0].coefficient(0).same(1)
    assert D.G[0][0].coefficient(0).same(1)


def test_twist_t():
    R = std_ring()
    triv = PhiGammaModule.trivial(R)
    tw = triv.twist_t(1)
    assert tw.A[0][0].coefficient(0).same(3)
    assert tw.G[0][0].coefficient(0).same(4)
    back = tw.twist_t(-1)
    assert back.A[0][0].coefficient(0).same(1)


def test_change_basis_roundtrip_and_axioms():
    R = std_ring()
    rng = random.Random(61)
    D = PhiGammaModule.rank1(R, char(R, 2, 0)).direct_sum(
        PhiGammaModule.rank1(R, char(R, Fraction(5, 9), -2)))
    Ds, U, Ui = scramble(D, rng)
    # omega tables are truncated series: the certified floor scales with
    # the window (roughly cap * r_lo / p, less coefficient valuations)
    assert min(Ds.commutation_defects()) >= Fraction(3, 2)
    back = Ds.change_basis(Ui, U)
    assert mat_is_small(mat_sub(back.A, D.A), 6)
    assert Ds.phi_invertibility_certificate() >= 6
    wide = std_ring(cap_hi=192)
    Dw = PhiGammaModule.rank1(wide, char(wide, 2, 0)).direct_sum(
        PhiGammaModule.rank1(wide, char(wide, Fraction(5, 9), -2)))
    Dws, _, _ = scramble(Dw, random.Random(61))
    assert min(Dws.commutation_defects()) >= 8


def test_dif_module_functorial():
    R = std_ring()
    d1 = PhiGammaModule.rank1(R, char(R, 1, 1))
    d2 = PhiGammaModule.rank1(R, char(R, 5, 0))
    lhs = d1.direct_sum(d2).dif_module(1, 2)
    a = d1.dif_module(1, 2)
    b = d2.dif_module(1, 2)
    assert lhs.G[0][0].same(a.G[0][0])
    assert lhs.G[1][1].same(b.G[0][0])
    assert lhs.G[0][1].is_zero()


def test_sen_rank1_weights():
    R = std_ring()
    for j in (-3, -1, 0, 2, 5):
        D = PhiGammaModule.rank1(R, char(R, 1, j))
        sd = sen_operator(D, 1)
        assert sd.roots_match([j], prec=6), (j, sd.poly)


def test_sen_direct_sum_and_twist():
    R = std_ring()
    D = PhiGammaModule.rank1(R, char(R, 1, 0)).direct_sum(
        PhiGammaModule.rank1(R, char(R, 1, 3)))
    sd = sen_operator(D, 1)
    assert sd.roots_match([0, 3], prec=6)
    Q = sd.q_factor()
    # P(2) = Q(0) Q(-1) = (-3)(-1-3) = 12
    assert sd.p_value(2).same(R.base.scalar(12), prec=5)
    tw = D.twist_t(2)
    sd2 = sen_operator(tw, 1)
    assert sd2.roots_match([2, 5], prec=5)


def test_sen_after_basis_change():
    R = std_ring()
    rng = random.Random(67)
    D = PhiGammaModule.rank1(R, char(R, 1, 1)).direct_sum(
        PhiGammaModule.rank1(R, char(R, 1, 4)))
    Ds, _, _ = scramble(D, rng)
    sd = sen_operator(Ds, 1)
    assert sd.roots_match([1, 4], prec=4)
    assert sd.commutation_floor is math.inf or sd.commutation_floor >= 4


def test_sen_zero_not_a_root():
    R = std_ring()
    D = PhiGammaModule.rank1(R, char(R, 1, 2))
    sd = sen_operator(D, 1)
    with pytest.raises(ZeroNotARoot):
        sd.q_factor()


def test_sen_artinian_deviation():
    R = std_ring(zdim=2)
    D = PhiGammaModule.rank1(R, char(R, 1, 1, dev=[0, 1]))
    sd = sen_operator(D, 1)
    # root is 1 + z/log(1+p) to first order: poly = T - (1 + z c)
    c0 = sd.poly[0]
    assert c0.coords[0].same(-1, prec=5)
    assert not c0.coords[1].is_zero()


def test_gamma_invariants_rank1():
    R = std_ring()
    triv = Character.trivial(R.base)
    # weight -1: invariants of dif(k=2) are spanned by t * basis
    D = PhiGammaModule.rank1(R, char(R, 1, -1))
    M = D.dif_module(1, 2)
    inv = gamma_invariants(M, triv)
    assert inv.qp_dim == 1 and inv.s_rank == 1
    gen = inv.generators[0][0]
    assert gen.t_order() == 1
    # weight +1: nothing
    D2 = PhiGammaModule.rank1(R, char(R, 1, 1))
    inv2 = gamma_invariants(D2.dif_module(1, 2), triv)
    assert inv2.qp_dim == 0
    # eta = chi^j against weight j at k=1: rank 1 spanned by the basis
    D3 = PhiGammaModule.rank1(R, char(R, 1, 2))
    inv3 = gamma_invariants(D3.dif_module(1, 1), char(R, 1, 2))
    assert inv3.qp_dim == 1
    assert inv3.generators[0][0].t_order() == 0


def test_gamma_invariants_stability_and_basis_change():
    R = std_ring()
    rng = random.Random(71)
    D = PhiGammaModule.rank1(R, char(R, 1, 0)).direct_sum(
        PhiGammaModule.rank1(R, char(R, 1, -2)))
    triv = Character.trivial(R.base)
    ranks = []
    for n in (1, 2):
        inv = gamma_invariants(D.dif_module(n, 3), triv)
        ranks.append(inv.qp_dim)
    assert ranks[0] == ranks[1] == 2      # constants + t^2 e_2
    Ds, _, _ = scramble(D, rng)
    inv_s = gamma_invariants(Ds.dif_module(1, 3), triv)
    assert inv_s.qp_dim == 2


def test_gamma_invariants_artinian():
    R = std_ring(zdim=2)
    triv = Character.trivial(R.base)
    D = PhiGammaModule.rank1(R, char(R, 1, 0))
    inv = gamma_invariants(D.dif_module(1, 2), triv)
    assert inv.qp_dim == 2 and inv.is_free and inv.s_rank == 1
    # deformed weight kills the free part: gamma x = (1 + z c) x has
    # only the z-torsion line
    Ddev = PhiGammaModule.rank1(R, char(R, 1, 0, dev=[0, 1]))
    invd = gamma_invariants(Ddev.dif_module(1, 1), triv)
    assert invd.qp_dim == 1 and not invd.is_free
