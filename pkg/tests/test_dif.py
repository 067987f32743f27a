import random
from fractions import Fraction

import pytest

from robba.base import BaseAlgebra
from robba.dif import DifRing, iota_localize, t_order_report
from robba.errors import LevelOutOfRange
from robba.padics import chi_omega
from robba.series import RobbaRing

P, N = 3, 12


def std_ring(p=P, prec=N, cap_hi=140, cap_lo=-24, zdim=1):
    r1 = Fraction(1, p - 1)
    r2 = Fraction(1, p * (p - 1))
    return RobbaRing(BaseAlgebra(p, prec, zdim), r2, r1, cap_lo, cap_hi)


def rand_poly(ring, rng, hi=8):
    return ring.elem({rng.randint(0, hi):
                      Fraction(rng.randint(-9, 9), rng.choice([1, 3]))
                      for _ in range(5)})


def test_iota_of_T_level1():
    R = std_ring()
    img = iota_localize(R.T(), 1, 2)
    K1 = img.ring.cyclo
    # (eps_1 - 1) + (eps_1/3) t
    assert img.plain_t_coefficient(0).same(K1.eps() - 1)
    assert img.plain_t_coefficient(1).same(K1.eps() * Fraction(1, 3))


def test_iota_of_q_is_exactly_t_order_one():
    R = std_ring()
    q = R.q_element()
    img = iota_localize(q, 1, 2)
    K1 = img.ring.cyclo
    assert img.tcoeffs[0].is_zero()                      # exact zero
    expect = K1.eps() * (K1.eps() * 2 + 1) * Fraction(1, 3)
    assert img.plain_t_coefficient(1).same(expect)
    assert img.t_order() == 1


def test_iota_ring_hom():
    R = std_ring()
    rng = random.Random(31)
    for _ in range(20):
        f, g = rand_poly(R, rng), rand_poly(R, rng)
        lhs = iota_localize(f * g, 2, 4)
        rhs = iota_localize(f, 2, 4) * iota_localize(g, 2, 4)
        assert lhs.same(rhs, prec=N - 2)


def test_iota_phi_compatibility():
    # iota_{n+1} o phi = iota_n (after raising iota_n to level n+1)
    R = std_ring()
    rng = random.Random(37)
    for _ in range(15):
        f = rand_poly(R, rng)
        lhs = iota_localize(f.phi(), 2, 3)
        rhs = iota_localize(f, 1, 3).raise_level(2)
        assert lhs.same(rhs, prec=N - 2)


def test_iota_of_t_element():
    R = std_ring(cap_hi=160)
    t = R.t_element()
    for n in (1, 2):
        img = iota_localize(t, n, 3)
        expect = img.ring.t() * Fraction(1, P ** n)
        d = img - expect
        assert all(c.is_zero() for c in d.tcoeffs), (n, d)


def test_iota_negative_power():
    R = std_ring()
    f = R.T(-1)
    img = iota_localize(f, 1, 3)
    assert (img * iota_localize(R.T(), 1, 3)).same(img.ring.one(), prec=8)


def test_level_out_of_range():
    R = std_ring()
    with pytest.raises(LevelOutOfRange):
        iota_localize(R.T(), 3, 2)      # r_3 = 1/18 < r_lo = 1/6


def test_t_orders():
    R = std_ring(cap_hi=160)
    t = R.t_element()
    rep = t_order_report(t * t, [1, 2], 4)
    assert rep["orders"][1][0] == 2 and rep["orders"][2][0] == 2
    assert rep["min_order"] == 2
    rep_q = t_order_report(R.q_element(), [1, 2], 3)
    assert rep_q["orders"][1][0] == 1
    assert rep_q["orders"][2][0] == 0
    rep_one = t_order_report(R.one(), [1, 2], 3)
    assert rep_one["min_order"] == 0


def test_gamma_on_dif():
    R = std_ring()
    D = DifRing(BaseAlgebra(P, N), 1, 3)
    # gamma scales t by chi(gamma) and moves eps
    x = D.t()
    g = x.gamma0()
    assert g.plain_t_coefficient(1).same(D.cyclo.one() * 4)
    w = x.omega()
    assert w.plain_t_coefficient(1).same(D.cyclo.one() * -1, prec=8)
    eps = D.elem([D.cyclo.eps()])
    assert eps.gamma0().tcoeffs[0].same(D.cyclo.eps_power(4))
    # compatibility with the Robba-level action: iota(gamma f) = gamma(iota f)
    rng = random.Random(41)
    for _ in range(8):
        f = rand_poly(R, rng)
        lhs = iota_localize(f.gamma(4), 1, 3)
        rhs = iota_localize(f, 1, 3).gamma0()
        assert lhs.same(rhs, prec=N - 3)
    f = R.T() + R.T(3)
    lhs = iota_localize(f.gamma(chi_omega(P)), 1, 3)
    rhs = iota_localize(f, 1, 3).omega()
    assert lhs.same(rhs, prec=7)


def test_dif_inverse():
    D = DifRing(BaseAlgebra(P, N, 2), 1, 3)
    x = D.elem([D.cyclo.eps() - 1, D.cyclo.one(), D.cyclo.eps()])
    y = x.inv()
    assert (x * y).same(D.one(), prec=7)


def test_divided_power_structure():
    D = DifRing(BaseAlgebra(P, N), 2, 5)
    t = D.t()
    t2 = t * t
    assert t2.t_order() == 2
    # t^[1] * t^[1] = 2 t^[2]
    e1 = D.elem([0, 1])
    assert (e1 * e1).tcoeffs[2].same(D.cyclo.one() * 2)
    # raise_level of t is still t
    up = t.raise_level(3)
    assert up.same(DifRing(D.base, 3, 5).t())
