"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import time

import numpy as np
from hypothesis import given, settings

from autodirichlet.automaton import (
    PeriodicSeq,
    constant,
    digit_sum_zeta,
    digit_sums,
    kernel_closure,
    periodic_product,
    thue_morse,
)
from autodirichlet.continuation import (
    Controls,
    SeriesQuery,
    abscissa,
    continue_eval,
    direct_sum,
    functional_residual,
    simple_pole_certificate,
    extremal_split_eval,
)
from autodirichlet.polynomial import parse_poly
from autodirichlet.products import (
    ProductConfig,
    phi_psi_partial,
    phi_value,
    product_ABCD,
    x_indicator,
    xj_machinery,
)
from autodirichlet import _exact

from conftest import brute_1d, brute_2d, record_acceptance, thue_morse_values, zeta_em
from test_automaton import automata

EXAMPLE = ProductConfig(2, 2, "5*x^2-x-1")
X = parse_poly("x")
R2 = parse_poly("x^2+y^2", 2)


def check(number, name, ok, detail):
    record_acceptance(number, name, bool(ok), detail)
    assert ok, detail


def test_criterion_1_worked_example():
    t0 = time.perf_counter()
    rep = product_ABCD(EXAMPLE, 10**5, 60)
    elapsed = time.perf_counter() - t0
    A, B, C = rep.A.real, rep.B.real, rep.C.real
    ok = (abs(A - 0.73) <= 0.01 and abs(B - 1.80) <= 0.01 and abs(C - 0.87) <= 0.01
          and rep.abs_D_minus_1 < 1e-2 and elapsed < 60)
    check(1, "worked example products", ok,
          f"A={A:.6f} B={B:.6f} C={C:.6f} |D-1|={rep.abs_D_minus_1:.2e} time={elapsed:.1f}s")


def test_criterion_2_phi_psi_identity():
    rng = np.random.default_rng(2)
    s_values = [complex(re, im) for re, im in
                zip([2, 2, 2, 3, 3, 3, 4, 4, 4, 4], rng.uniform(-20, 20, 10))]
    ph, ps = phi_psi_partial(EXAMPLE, s_values, 10**7)
    worst = 0.0
    for s, a, b in zip(s_values, ph, ps):
        qs = 2.0**s
        worst = max(worst, abs(b * (qs - 1) - a * (EXAMPLE.zeta * qs - 1)))
    check(2, "psi/phi identity", worst < 1e-8, f"max residual {worst:.2e} over 10 points")


def test_criterion_3_zeta_oracle():
    one = kernel_closure(constant(2))
    errs = {}
    for s in [0, -1, -2, 0.5 + 14.1347j]:
        res = continue_eval(SeriesQuery(one, X, s))
        errs[s] = abs(res.value - complex(zeta_em(s)))
    z0 = continue_eval(SeriesQuery(one, X, 0)).value
    zm1 = continue_eval(SeriesQuery(one, X, -1)).value
    tight = max(abs(z0 + 0.5), abs(zm1 + 1 / 12))
    ok = max(errs.values()) < 1e-6 and tight < 1e-8
    check(3, "continuation vs zeta oracle", ok,
          f"max oracle error {max(errs.values()):.2e}, zeta(0), zeta(-1) error {tight:.2e}")


def _overlap_points(sigma, rng):
    return [complex(sigma + 1.5, t) for t in rng.uniform(-15, 15, 10)]


def test_criterion_4_overlap():
    rng = np.random.default_rng(4)
    product = periodic_product(thue_morse(2), PeriodicSeq(3, 2, np.arange(9).reshape(3, 3) % 2))
    configs = [
        ("thue-morse/x", kernel_closure(thue_morse()), X, 10**6),
        ("constant/x^2+y^2", kernel_closure(constant(2, 2)), R2, 1000),
        ("product/x^2+y^2", kernel_closure(product), R2, 1000),
        ("digit-sum-mod-3/x", kernel_closure(digit_sum_zeta(3, 3)), X, 10**6),
    ]
    failures, worst = [], 0.0
    for name, kernel, p, box in configs:
        for s in _overlap_points(abscissa(p), rng):
            cont = continue_eval(SeriesQuery(kernel, p, s))
            dirs = direct_sum(SeriesQuery(kernel, p, s, controls=Controls(box=box)))
            gap = abs(cont.value - dirs.value)
            worst = max(worst, gap / (cont.err_estimate + dirs.err_estimate))
            if gap > cont.err_estimate + dirs.err_estimate:
                failures.append((name, s))
    # shifted denominator: phi(s) is 1 + sum_{x>=1} t(x) (x+1)^-s
    tm = kernel_closure(thue_morse())
    for s in _overlap_points(1, rng):
        cont, cerr = phi_value(EXAMPLE, s, method="continue")
        dirs = direct_sum(SeriesQuery(tm, parse_poly("x+1"), s, controls=Controls(box=10**6)))
        gap = abs(cont - (1 + dirs.value))
        worst = max(worst, gap / (cerr + dirs.err_estimate))
        if gap > cerr + dirs.err_estimate:
            failures.append(("thue-morse/x+1", s))
    check(4, "overlap consistency", not failures,
          f"5 configurations x 10 points, worst gap/bound {worst:.3f}, failures {failures}")


def test_criterion_5_functional_residual():
    rng = np.random.default_rng(5)
    points = rng.uniform(0.02, 0.98, 20) + 1j * rng.uniform(-20, 20, 20)
    worst, failures = 0.0, 0
    for kernel in (kernel_closure(thue_morse()), kernel_closure(constant(2))):
        for s in points:
            res, bound = functional_residual(kernel, X, s)
            worst = max(worst, res / bound)
            failures += res > bound
    check(5, "functional-equation residual", failures == 0,
          f"40 evaluations, worst residual/bound {worst:.3f}")


BUILTINS = [thue_morse(), thue_morse(2), constant(2), constant(3), constant(2, 2),
            digit_sum_zeta(2, 2), digit_sum_zeta(3, 3), digit_sum_zeta(3, 3, 2),
            digit_sum_zeta(4, 2), digit_sum_zeta(4, 4, 1, 2)]


def _kernel_properties(spec, points):
    k = kernel_closure(spec)
    q, n = spec.q, spec.n
    for m in k.matrices.values():
        if not (set(np.unique(m)) <= {0, 1} and (m.sum(axis=1) == 1).all()):
            return False
    stoch = k.sum_matrix() / q**n
    if not (np.all(stoch >= 0) and np.allclose(stoch.sum(axis=1), 1.0)):
        return False
    base = k.kernel_vectors(points)
    for y, m in k.matrices.items():
        shifted = k.kernel_vectors(q * points + np.array(y))
        if not np.array_equal(shifted, base @ m.T):
            return False
    return True


@settings(max_examples=100, deadline=None)
@given(automata())
def _random_automata_property(spec):
    rng = np.random.default_rng(0)
    assert _kernel_properties(spec, rng.integers(0, 10**4, size=(200, spec.n)))


def test_criterion_6_kernel_properties():
    rng = np.random.default_rng(6)
    bad = []
    for spec in BUILTINS:
        points = rng.integers(0, 10**8, size=(10**4, spec.n))
        if not _kernel_properties(spec, points):
            bad.append(spec)
    try:
        _random_automata_property()
        prop = "passed"
    except AssertionError:
        prop = "failed"
    check(6, "kernel and matrix properties", not bad and prop == "passed",
          f"{len(BUILTINS)} built-ins x 1e4 points, {len(bad)} failing; random automata {prop}")


def _coeffs(values):
    return "[" + ", ".join(str(v) for v in values) + "]"


def test_criterion_7_certificates():
    details, ok = [], True
    for name, spec in [("constant", constant(2)), ("thue-morse", thue_morse())]:
        c = simple_pole_certificate(kernel_closure(spec))
        prod = [c.sign * v for v in _exact.poly_mul(list(c.minpoly), list(c.delta))]
        this = prod == list(c.charpoly) and c.multiplicity_of_one == 1 and c.factorization_exact
        ok &= this
        details.append(f"{name} charpoly={_coeffs(c.charpoly)} minpoly={_coeffs(c.minpoly)} "
                       f"mult={c.multiplicity_of_one}")
    check(7, "simple-pole certificate", ok, "; ".join(details))


def test_criterion_8_extremal_split():
    tm = kernel_closure(thue_morse())
    a = extremal_split_eval(tm, parse_poly("5*x^2-x-1"), None, 2)
    ref_a = brute_1d(thue_morse_values, lambda x: 5 * x * x - x - 1, 2, 10**6)
    one2 = kernel_closure(constant(2, 2))
    b = extremal_split_eval(one2, parse_poly("x^2+y^2+x", 2), None, 3)
    ref_b = brute_2d(lambda x, y: np.ones(len(x)), lambda x, y: x * x + y * y + x, 3, 3000)
    ea, eb = abs(a.value - ref_a), abs(b.value - ref_b)
    check(8, "non-homogeneous polynomials", ea < 1e-6 and eb < 1e-5,
          f"5x^2-x-1 error {ea:.2e}, x^2+y^2+x error {eb:.2e}")


def test_criterion_9_xj():
    m = np.arange(1001)
    worst17 = worst18 = 0.0
    for q, r in [(2, 2), (4, 2), (3, 3), (6, 3)]:
        xs = np.array([x_indicator(q, r, j, m) for j in range(r)])
        worst17 = max(worst17, np.abs(xs.sum(axis=0)).max())
        ds = digit_sums(q, m)
        for a in range(1, r):
            zeta = np.exp(2j * np.pi * a / r)
            lhs = sum(xs[j] * zeta**j for j in range(r))
            worst18 = max(worst18, np.abs(lhs - zeta**ds).max())
    mats = max(xj_machinery(ProductConfig(q, r, "x^2+x+1"), 10).mat_identity_residual
               for q, r in [(2, 2), (3, 3)])
    shift = xj_machinery(EXAMPLE, 10**5, 60).shift_residuals.max()
    ok = worst17 < 1e-12 and worst18 < 1e-12 and mats < 1e-12 and shift < 1e-3
    check(9, "x_j machinery", ok,
          f"sum identity {worst17:.1e}, zeta identity {worst18:.1e}, Mat1-Mat2 Mat3 {mats:.1e}, "
          f"max |lambda(i)-beta(i-1)| {shift:.2e}")
