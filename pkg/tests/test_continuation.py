import cmath
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autodirichlet.automaton import (
    PeriodicSeq,
    constant,
    digit_sum_zeta,
    kernel_closure,
    periodic_product,
    thue_morse,
)
from autodirichlet.continuation import (
    Controls,
    SeriesQuery,
    abscissa,
    binom_neg,
    continue_eval,
    direct_sum,
    functional_matrix,
    functional_residual,
    pole_lattice,
    simple_pole_certificate,
    extremal_split_eval,
)
from autodirichlet.errors import (
    AbscissaViolation,
    DepthExceeded,
    NearPole,
    NotCoercive,
    TruncationBudgetExceeded,
    ZeroDenominator,
)
from autodirichlet.polynomial import parse_poly

from conftest import brute_1d, brute_2d, quadrant_epstein, thue_morse_values, zeta_em

X = parse_poly("x")
R2 = parse_poly("x^2+y^2", 2)


@pytest.fixture(scope="module")
def tm():
    return kernel_closure(thue_morse())


@pytest.fixture(scope="module")
def one():
    return kernel_closure(constant(2))


@pytest.fixture(scope="module")
def one2():
    return kernel_closure(constant(2, 2))


def run(kernel, p, s, mu=None, **ctl):
    return continue_eval(SeriesQuery(kernel, p, s, mu, Controls(**ctl)))


class TestDirectSum:
    def test_zeta_two(self, one):
        res = direct_sum(SeriesQuery(one, X, 2, controls=Controls(box=10**6)))
        assert abs(res.value - math.pi**2 / 6) <= res.err_estimate
        assert res.err_estimate < 2e-6

    def test_thue_morse_three(self, tm):
        res = direct_sum(SeriesQuery(tm, X, 3, controls=Controls(box=10**6)))
        ref = brute_1d(thue_morse_values, lambda x: x, 3, 10**6)
        assert abs(res.value - ref) < 1e-10

    def test_two_index_against_brute(self, one2):
        res = direct_sum(SeriesQuery(one2, R2, 3, controls=Controls(box=2000)))
        ref = brute_2d(lambda x, y: np.ones(len(x)), lambda x, y: x * x + y * y, 3, 2000)
        assert abs(res.value - ref) < 1e-12
        assert abs(res.value - quadrant_epstein(3)) <= res.err_estimate

    def test_threaded_blocks_bit_identical(self, tm):
        a = direct_sum(SeriesQuery(tm, X, 2.5, controls=Controls(box=300_000, block=4096)))
        b = direct_sum(SeriesQuery(tm, X, 2.5, controls=Controls(box=300_000, block=4096,
                                                                 workers=4)))
        assert a.value == b.value

    def test_abscissa_violation(self, one):
        with pytest.raises(AbscissaViolation):
            direct_sum(SeriesQuery(one, X, 1.0))

    def test_zero_denominator(self, tm):
        with pytest.raises(ZeroDenominator):
            direct_sum(SeriesQuery(tm, parse_poly("x-3"), 2))

    def test_abscissa_formula(self):
        assert abscissa(X) == 1
        assert abscissa(R2) == 1
        assert abscissa(R2, (1, 0)) == 1.5
        assert abscissa(parse_poly("5*x^2-x-1")) == 0.5


class TestFunctionalMatrix:
    def test_constant(self, one):
        np.testing.assert_allclose(functional_matrix(one, 2, 1, (0,), 2), [[0.5]])

    def test_thue_morse_singular_at_one(self, tm):
        m = functional_matrix(tm, 2, 1, (0,), 1)
        np.testing.assert_allclose(m, [[0.5, -0.5], [-0.5, 0.5]])
        assert abs(np.linalg.det(m)) < 1e-15

    def test_far_right_is_identity(self, tm):
        np.testing.assert_allclose(functional_matrix(tm, 2, 1, (0,), 60), np.eye(2), atol=1e-15)


class TestContinuation:
    @pytest.mark.parametrize("s", [0, -1, -2, -3.5 + 2j, 0.5, 0.5 + 14.134725j, 0.3 - 4j])
    def test_riemann_zeta(self, one, s):
        res = run(one, X, s)
        assert abs(res.value - zeta_em(s)) < 1e-9

    def test_zeta_special_values_tight(self, one):
        assert abs(run(one, X, 0).value + 0.5) < 1e-12
        assert abs(run(one, X, -1).value + 1 / 12) < 1e-12

    def test_pole_at_one(self, one):
        with pytest.raises(NearPole):
            run(one, X, 1 + 1e-9)

    def test_monomial_weight_shifts_argument(self, one):
        # sum x^1 / x^s = zeta(s - 1)
        res = run(one, X, 0.5, mu=(1,))
        assert abs(res.value - zeta_em(-0.5)) < 1e-9

    @pytest.mark.parametrize("s", [3, 0.7, 0.3, -0.5 + 2j, -1])
    def test_two_index_epstein(self, one2, s):
        res = run(one2, R2, s)
        assert abs(res.value - quadrant_epstein(s)) < 1e-9

    def test_epstein_pole(self, one2):
        with pytest.raises(NearPole):
            run(one2, R2, 0.5)

    @pytest.mark.parametrize("s", [2.0, 2 + 3j, 2.5 - 1j])
    def test_overlap_with_direct_sum(self, tm, s):
        cont = run(tm, X, s)
        dirs = direct_sum(SeriesQuery(tm, X, s, controls=Controls(box=10**6)))
        assert abs(cont.value - dirs.value) <= cont.err_estimate + dirs.err_estimate

    def test_thue_morse_entire_values(self, tm):
        assert abs(run(tm, X, 0).value + 1) < 1e-12
        assert abs(run(tm, X, -1).value) < 1e-10

    def test_depth_exceeded(self, one):
        with pytest.raises(DepthExceeded):
            run(one, X, -10, depth=8)

    def test_truncation_budget(self, one):
        with pytest.raises(TruncationBudgetExceeded):
            run(one, X, -1.5, K=2)

    def test_scaled_sequence_scales_value(self):
        k3 = kernel_closure(constant(2, 1, 3.0))
        assert abs(run(k3, X, -0.5).value - 3 * zeta_em(-0.5)) < 1e-9


class TestExtremalSplit:
    def test_quadratic_with_lower_terms(self, tm):
        p = parse_poly("5*x^2-x-1")
        res = extremal_split_eval(tm, p, None, 2)
        ref = brute_1d(thue_morse_values, lambda x: 5 * x * x - x - 1, 2, 10**6)
        assert abs(res.value - ref) < 1e-6
        assert res.method == "extremal-split"

    def test_two_index_non_homogeneous(self, one2):
        p = parse_poly("x^2+y^2+x", 2)
        res = extremal_split_eval(one2, p, None, 3)
        ref = brute_2d(lambda x, y: np.ones(len(x)), lambda x, y: x * x + y * y + x, 3, 3000)
        assert abs(res.value - ref) < 1e-5

    def test_homogeneous_matches_direct_route(self, one):
        a = extremal_split_eval(one, X, None, -0.5)
        assert abs(a.value - zeta_em(-0.5)) < 1e-9

    def test_shifted_matches_hurwitz(self, one):
        # sum_{x>=1} (x+1)^-s = zeta(s) - 1
        res = extremal_split_eval(one, parse_poly("x+1"), None, -1.5 + 1j)
        assert abs(res.value - (zeta_em(-1.5 + 1j) - 1)) < 1e-7

    def test_negative_polynomial(self, tm):
        res = extremal_split_eval(tm, parse_poly("-x"), None, 2.5)
        ref = brute_1d(thue_morse_values, lambda x: x, 2.5, 10**6)
        assert abs(res.value - cmath.exp(-1j * math.pi * 2.5) * ref) < 1e-9

    def test_not_coercive(self, one2):
        with pytest.raises(NotCoercive):
            extremal_split_eval(one2, parse_poly("x^2-y^2+x+y+1", 2), None, 3)
        with pytest.raises(NotCoercive):
            extremal_split_eval(one2, parse_poly("x*y+1", 2), None, 3)

    def test_product_automaton(self):
        spec = periodic_product(thue_morse(2), PeriodicSeq(3, 2, np.arange(9).reshape(3, 3) % 2))
        k = kernel_closure(spec)
        cont = run(k, R2, 2.5)
        dirs = direct_sum(SeriesQuery(k, R2, 2.5, controls=Controls(box=2000)))
        assert abs(cont.value - dirs.value) <= cont.err_estimate + dirs.err_estimate


class TestPoles:
    def test_constant_lattice_contains_one(self, one):
        lat = pole_lattice(one, 2, 1)
        assert lat.eigenvalues == (2,)
        assert lat.distance(1) < 1e-12
        assert lat.distance(1 + 2j * math.pi / math.log(2)) < 1e-12

    def test_thue_morse_skips_zero_eigenvalue(self, tm):
        lat = pole_lattice(tm, 2, 1)
        assert len(lat.eigenvalues) == 1 and abs(lat.eigenvalues[0] - 2) < 1e-12

    def test_radix_three(self):
        lat = pole_lattice(kernel_closure(constant(3)), 3, 1)
        assert lat.distance(1 - 2 + 2j * math.pi / math.log(3)) < 1e-12

    def test_scaling_invariance(self):
        a = pole_lattice(kernel_closure(digit_sum_zeta(3, 3)), 3, 1).lattice
        b = pole_lattice(kernel_closure(periodic_product(digit_sum_zeta(3, 3),
                                                         PeriodicSeq.from_list([5]))), 3, 1).lattice
        assert a == b

    def test_certificates(self, one, tm):
        c = simple_pole_certificate(one)
        assert c.minpoly == (-1, 1) and c.simple and c.factorization_exact
        t = simple_pole_certificate(tm)
        assert t.charpoly == (0, -1, 1) and t.minpoly == (0, -1, 1) and t.delta == (1,)
        assert t.simple and t.first_real_pole == 1

    @pytest.mark.parametrize("spec", [digit_sum_zeta(3, 3), digit_sum_zeta(4, 2, 1, 2),
                                      periodic_product(thue_morse(), PeriodicSeq.from_list([1, 2, 3]))])
    def test_certificate_general(self, spec):
        c = simple_pole_certificate(kernel_closure(spec))
        assert c.factorization_exact and c.multiplicity_of_one == 1
        # reassemble p_B = sign * pi_B * Delta
        from autodirichlet import _exact
        prod = _exact.poly_mul(list(c.minpoly), list(c.delta))
        assert [c.sign * v for v in prod] == list(c.charpoly)


class TestBinomialAndResidual:
    @settings(max_examples=40, deadline=None)
    @given(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
    def test_binom_neg_matches_mpmath(self, s):
        vals = binom_neg(s, 12)
        for k in range(13):
            ref = complex(mpmath.binomial(-s, k))
            assert abs(vals[k] - ref) <= 1e-10 * max(1.0, abs(ref))

    @pytest.mark.parametrize("s", [0.3 + 1j, 0.8 - 5j])
    def test_residual_thue_morse(self, tm, s):
        res, bound = functional_residual(tm, X, s)
        assert res <= bound

    def test_residual_two_index_weighted(self, one2):
        res, bound = functional_residual(one2, R2, 0.9 + 0.5j, mu=(1, 0))
        assert res <= bound

    def test_residual_rejects_non_homogeneous(self, tm):
        with pytest.raises(NotCoercive):
            functional_residual(tm, parse_poly("x+1"), 0.5)


def test_interface_alias():
    from autodirichlet.continuation import theorem2_eval
    assert theorem2_eval is extremal_split_eval
