import math
import random
from fractions import Fraction

import pytest

from robba.base import BaseAlgebra, Character
from robba.errors import WindowTooSmall
from robba.modules import PhiGammaModule, mat_identity, mat_mul, mat_vec
from robba.periods import (finite_slope_test, saturation_test,
                           slope_threshold, solve_period)
from robba.series import RobbaRing

P, N = 3, 12


def std_ring(p=P, prec=N, cap_hi=160, cap_lo=-24, zdim=1):
    r1 = Fraction(1, p - 1)
    r2 = Fraction(1, p * (p - 1))
    return RobbaRing(BaseAlgebra(p, prec, zdim), r2, r1, cap_lo, cap_hi)


def char(ring, pv, w, dev=None):
    S = ring.base
    return Character(S, S.elem(pv if isinstance(pv, list) else [pv]), w,
                     S.elem(dev) if dev else None)


def eigencurve_module(R):
    d1 = char(R, 1, 0)
    d2 = char(R, Fraction(5, 9), -2)
    return (PhiGammaModule.rank1(R, d1)
            .direct_sum(PhiGammaModule.rank1(R, d2)), d1, d2)


def test_slope_threshold_examples():
    R = std_ring()
    D, d1, d2 = eigencurve_module(R)
    single = PhiGammaModule.rank1(R, char(R, 5, 0))
    assert slope_threshold(char(R, 5, 0), single) == 1
    assert slope_threshold(char(R, Fraction(5, 9), 0), single) == 3
    assert slope_threshold(char(R, Fraction(1, 3), -1), single) == 1
    # eigencurve: the weight gap forces k = 3
    assert slope_threshold(char(R, 5, 0), D) == 3


def test_solve_rank1_self_query():
    R = std_ring()
    d = char(R, Fraction(5, 3), 1)
    D = PhiGammaModule.rank1(R, d)
    # threshold is 3: the weight-normalized p-value 5/9 has slope -2
    sol = solve_period(D, d, 1, 3)
    assert sol.certified and sol.lower_bound == 1 == sol.upper_bound
    assert sol.t_orders == [0]
    sat, order = saturation_test(D, sol.vectors[0], 1)
    assert sat and order == 0


def test_eigencurve_pattern():
    R = std_ring()
    D, d1, d2 = eigencurve_module(R)
    query = char(R, 5, 0)
    sol = solve_period(D, query, 1, 3)
    assert sol.upper_raw == 2            # the Gamma-invariants see a ghost
    assert sol.upper_bound == 1          # the consistency filter removes it
    assert sol.lower_bound == 1 and sol.certified
    assert sol.t_orders == [2]
    sat, order = saturation_test(D, sol.vectors[0], 1)
    assert not sat and order == 2
    # the generator sits on the second piece
    v = sol.vectors[0]
    assert v[0].is_zero_stored() or v[0].w_min() > 6
    # noncritical ordering: query the other character
    sol1 = solve_period(D, d1, 1, 3)
    assert sol1.certified and sol1.lower_bound == 1
    assert sol1.t_orders == [0]


def test_query_matching_nothing():
    R = std_ring()
    D, _, _ = eigencurve_module(R)
    sol = solve_period(D, char(R, 7, -3), 1, 3)
    assert sol.upper_raw == 0 and sol.certified and sol.lower_bound == 0
    sol2 = solve_period(D, char(R, 7, 0), 1, 3)
    assert sol2.upper_bound == 0 and sol2.certified


def test_solve_after_basis_change():
    R = std_ring()
    rng = random.Random(81)
    D, d1, d2 = eigencurve_module(R)
    U = mat_identity(R, 2)
    U[0][1] = R.T(1, coef=2)
    Ui = mat_identity(R, 2)
    Ui[0][1] = R.T(1, coef=-2)
    Ds = D.change_basis(U, Ui)
    sol = solve_period(Ds, char(R, 5, 0), 1, 3)
    assert sol.certified and sol.lower_bound == 1
    assert sol.t_orders == [2]
    sat, order = saturation_test(Ds, sol.vectors[0], 1)
    assert not sat and order == 2


def test_windowed_solver_agrees():
    R = std_ring(cap_hi=96)
    d = char(R, 5, 1)
    D = PhiGammaModule.rank1(R, d).direct_sum(
        PhiGammaModule.rank1(R, char(R, 7, 0)))
    sol_t = solve_period(D, d, 1, 2)
    sol_w = solve_period(D, d, 1, 2, method="window", window=(-2, 12),
                         tol=4)
    assert sol_t.lower_bound == sol_w.lower_bound == 1
    assert sol_w.certified
    # windowed solution proportional to e_1: second coordinate small
    v = sol_w.vectors[0]
    assert v[1].is_zero_stored() or v[1].w_min() >= 4


def test_window_too_small():
    R = std_ring()
    D, _, _ = eigencurve_module(R)
    with pytest.raises(WindowTooSmall):
        solve_period(D, char(R, 5, 0), 1, 2)   # below threshold 3


def test_twist_compatibility():
    R = std_ring()
    D, d1, d2 = eigencurve_module(R)
    d0 = char(R, Fraction(2, 3), 1)
    sol = solve_period(D, char(R, 5, 0), 1, 3)
    solt = solve_period(D.twist(d0), char(R, 5, 0) * d0, 1, 3)
    assert sol.lower_bound == solt.lower_bound == 1
    assert sol.t_orders == solt.t_orders


def test_finite_slope_artinian_pass_and_fail():
    R = std_ring(zdim=2)
    S = R.base
    # delta(p) = 1 + z, weight 0; alpha = 1 + z: isomorphism
    d = char(R, [1, 1], 0)
    D = PhiGammaModule.rank1(R, d)
    v1 = finite_slope_test(D, S.elem([1, 1]), 1, 2)
    assert v1.isomorphism
    assert v1.eigen_dim == v1.invariant_dim == 2   # free rank 1 over S
    # alpha = 2: eigenspace 0 but invariants rank 1
    v2 = finite_slope_test(D, S.elem([2]), 1, 2)
    assert not v2.isomorphism
    assert v2.eigen_dim == 0 and v2.invariant_dim == 2
    assert v2.witness is not None
    # trivial module, alpha = 1
    Dt = PhiGammaModule.trivial(R)
    v3 = finite_slope_test(Dt, S.one(), 1, 2)
    assert v3.isomorphism


def test_propagation_flag():
    R = std_ring()
    D, d1, d2 = eigencurve_module(R)
    sol = solve_period(D, char(R, 5, 0), 1, 3)
    assert sol.propagation_ok
