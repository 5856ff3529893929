import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from autodirichlet.errors import ParseError
from autodirichlet.polynomial import (
    MultiPoly,
    coercive_check,
    extremal_monomials,
    homogenize,
    parse_poly,
    shell_points,
    shift_remainder,
    split_extremal,
    support,
)


@st.composite
def polys(draw, n=None, max_deg=4, max_terms=6, homogeneous=False, positive=False):
    n = draw(st.integers(1, 3)) if n is None else n
    k = draw(st.integers(1, max_terms))
    d = draw(st.integers(1, max_deg))
    terms = {}
    for _ in range(k):
        if homogeneous:
            cuts = sorted(draw(st.integers(0, d)) for _ in range(n - 1))
            alpha = tuple(b - a for a, b in zip([0] + cuts, cuts + [d]))
        else:
            alpha = tuple(draw(st.integers(0, max_deg)) for _ in range(n))
        lo = 1 if positive else -5
        c = Fraction(draw(st.integers(lo, 5)), draw(st.integers(1, 3)))
        if c:
            terms[alpha] = terms.get(alpha, 0) + c
    terms = {a: c for a, c in terms.items() if c}
    if not terms:
        terms = {(d,) + (0,) * (n - 1): Fraction(1)}
    return MultiPoly(n, terms)


def sympy_poly(p: MultiPoly):
    xs = sympy.symbols(f"x0:{p.n}")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * sympy.prod(x**e for x, e in zip(xs, a))
               for a, c in p.terms.items())
    return expr, xs


def dominated_scipy(alpha, others):
    """alpha in conv(others) - R_+^n, decided by a floating LP."""
    if not others:
        return False
    k, n = len(others), len(alpha)
    a_eq = np.zeros((n + 1, k + n))
    for j, b in enumerate(others):
        a_eq[:n, j] = b
    a_eq[:n, k:] = -np.eye(n)
    a_eq[n, :k] = 1
    b_eq = np.array(list(alpha) + [1.0])
    res = linprog(np.zeros(k + n), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * (k + n),
                  method="highs")
    return res.status == 0


def extremal_scipy(p: MultiPoly):
    supp = sorted(p.terms)
    out = set()
    for alpha in supp:
        zeros = [i for i in range(p.n) if alpha[i] == 0]
        for size in range(len(zeros) + 1):
            hit = False
            for z in itertools.combinations(zeros, size):
                if len(z) == p.n:
                    continue
                face = [b for b in supp if b != alpha and all(b[i] == 0 for i in z)]
                if not dominated_scipy(alpha, face):
                    hit = True
                    break
            if hit:
                out.add(alpha)
                break
    return out


class TestParse:
    def test_letters_and_indices(self):
        assert parse_poly("x^2 + y^2", 2) == parse_poly("x1**2+x2**2", 2)

    def test_rational_coefficients(self):
        p = parse_poly("3/2*x^2 - 1/2*x + 1/4")
        assert p.coefficient((2,)) == Fraction(3, 2)
        assert p.coefficient((1,)) == Fraction(-1, 2)
        assert p.coefficient((0,)) == Fraction(1, 4)

    def test_quadratic_support(self):
        p = parse_poly("5*x^2-1*x-1")
        assert support(p) == {(2,), (1,), (0,)}

    @pytest.mark.parametrize("bad", ["x^", "2**", "x + + ", "q(x)", "x^-1", ""])
    def test_errors(self, bad):
        with pytest.raises(ParseError):
            parse_poly(bad)

    def test_too_many_variables(self):
        with pytest.raises(ParseError):
            parse_poly("x*y", 1)

    @settings(max_examples=50, deadline=None)
    @given(polys())
    def test_str_round_trip(self, p):
        assert parse_poly(str(p), p.n) == p


class TestArithmetic:
    def test_support_examples(self):
        assert support(parse_poly("x^2+x*y", 2)) == {(2, 0), (1, 1)}
        assert support(MultiPoly(2)) == set()

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_ring_operations_match_sympy(self, data):
        n = data.draw(st.integers(1, 3))
        p, q = data.draw(polys(n=n)), data.draw(polys(n=n))
        ep, xs = sympy_poly(p)
        eq, _ = sympy_poly(q)
        for ours, theirs in [(p + q, ep + eq), (p - q, ep - eq), (p * q, ep * eq), (p**2, ep**2)]:
            mine, _ = sympy_poly(ours) if not ours.is_zero() else (0, None)
            assert sympy.expand(mine - theirs) == 0

    @settings(max_examples=50, deadline=None)
    @given(polys(), st.data())
    def test_eval_int_matches_exact(self, p, data):
        pts = np.array([[data.draw(st.integers(0, 10**5)) for _ in range(p.n)] for _ in range(5)])
        exact = [p(*row) for row in pts]
        np.testing.assert_allclose(p.eval_int(pts).astype(float), [float(v) for v in exact],
                                   rtol=1e-12)

    def test_eval_int_large_values_do_not_overflow(self):
        p = parse_poly("x^5")
        assert float(p.eval_int(np.array([[10**5]]))[0]) == pytest.approx(1e25)


class TestExtremal:
    def test_examples(self):
        assert extremal_monomials(parse_poly("x^2+y^2+x*y", 2)).extremal == {(2, 0), (0, 2)}
        assert extremal_monomials(parse_poly("x^2*y+x+y", 2)).extremal == {(2, 1), (1, 0), (0, 1)}
        assert extremal_monomials(parse_poly("x^3", 3)).extremal == {(3, 0, 0)}

    def test_split_examples(self):
        p0, res = split_extremal(parse_poly("x^2+y^2+x*y", 2))
        assert p0 == parse_poly("x^2+y^2", 2) and res == parse_poly("x*y", 2)
        p0, res = split_extremal(parse_poly("5*x^2-x-1"))
        assert p0 == parse_poly("5*x^2") and res == parse_poly("-x-1")
        p0, res = split_extremal(parse_poly("x^4"))
        assert res.is_zero()

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            extremal_monomials(MultiPoly(2))

    @settings(max_examples=40, deadline=None)
    @given(polys(max_terms=8))
    def test_matches_floating_lp(self, p):
        assert extremal_monomials(p).extremal == extremal_scipy(p)

    @settings(max_examples=40, deadline=None)
    @given(polys(max_terms=8))
    def test_split_reassembles(self, p):
        p0, res = split_extremal(p)
        assert p0 + res == p
        assert set(p0.terms) == extremal_monomials(p).extremal

    @settings(max_examples=30, deadline=None)
    @given(polys(max_terms=8))
    def test_every_support_point_is_dominated_by_extremals(self, p):
        ext = extremal_monomials(p).extremal
        for alpha in p.terms:
            if alpha not in ext:
                assert dominated_scipy(alpha, sorted(ext))


class TestHomogenize:
    def test_examples(self):
        assert homogenize(parse_poly("5*x^2-x-1")) == parse_poly("5*x^2-x*y-y^2", 2)
        assert homogenize(parse_poly("x^2*y+x", 2)) == parse_poly("x^2*y+x*z^2", 3)
        assert homogenize(parse_poly("x^2+y^2", 2)) == parse_poly("x^2+y^2", 3)

    @settings(max_examples=50, deadline=None)
    @given(polys())
    def test_specialise_recovers(self, p):
        h = homogenize(p)
        assert h.is_homogeneous()
        assert h.specialize_last(1) == p


class TestShiftRemainder:
    def test_examples(self):
        assert shift_remainder(parse_poly("x^2"), (1,), 2) == parse_poly("x+1/4")
        assert shift_remainder(parse_poly("x^2"), (0,), 2).is_zero()
        assert shift_remainder(parse_poly("x^2+y^2", 2), (1, 0), 2) == parse_poly("x+1/4", 2)

    def test_rejects_inhomogeneous(self):
        with pytest.raises(ValueError):
            shift_remainder(parse_poly("x^2+x"), (1,), 2)

    @settings(max_examples=40, deadline=None)
    @given(polys(homogeneous=True), st.integers(2, 4), st.data())
    def test_identity_exact(self, p, q, data):
        beta = tuple(data.draw(st.integers(0, q - 1)) for _ in range(p.n))
        pb = shift_remainder(p, beta, q)
        assert pb.is_zero() or pb.degree <= p.degree - 1
        for _ in range(5):
            x = [data.draw(st.integers(0, 50)) for _ in range(p.n)]
            lhs = p(*[q * a + b for a, b in zip(x, beta)])
            assert lhs == q**p.degree * (p(*x) + pb(*x))

    @pytest.mark.parametrize("text,n", [("x^2+y^2", 2), ("x^3+2*x*y^2+y^3", 2), ("x+y+z", 3)])
    def test_ratio_decays(self, text, n, rng):
        p = parse_poly(text, n)
        worst = []
        for radius in (10**3, 10**4):
            pts = shell_points(n, radius, 400, rng)
            pv = p.eval_float(pts)
            worst.append(max(np.max(np.abs(shift_remainder(p, beta, 2).eval_float(pts) / pv))
                             for beta in itertools.product(range(2), repeat=n)))
        assert worst[1] <= worst[0] < 0.5


class TestCoercive:
    def test_positive_definite(self):
        assert coercive_check(parse_poly("x^2+y^2", 2))

    def test_difference_fails_on_diagonal(self):
        p = parse_poly("x-y", 2)
        rep = coercive_check(p)
        assert not rep
        assert rep.witness[0] == rep.witness[1]

    def test_quadratic_minimum_at_origin(self):
        rep = coercive_check(parse_poly("5*x^2-x-1"))
        assert rep and rep.argmin == (0,)

    def test_product_with_axis_zeros(self):
        assert not coercive_check(parse_poly("x*y+1", 2))
