"""
Digit-sum Dirichlet series and the infinite products built from them.

For a radix q, an r-th root of unity zeta != 1 with r | q, and a polynomial
P(x) = a_d x^d (1 - Pt(1/x)) with Pt(u) = -sum_{i<d} c_i u^(d-i),
c_i = a_i / a_d:

    phi(s) = sum_{n>=0} zeta^s_q(n) / (n+1)^s
    psi(s) = sum_{n>=1} zeta^s_q(n) / n^s
    f(s)   = sum_{n>=0} zeta^s_q(n) / P(n+1)^s

The partial sums of zeta^s_q(n) are bounded (full digit blocks cancel),
which gives summation-by-parts tail bounds for phi and psi whenever
Re(s) > 0.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import _exact
from .automaton import digit_sum_zeta, digit_sums, kernel_closure
from .continuation import Controls, EvalResult, SeriesQuery, continue_eval, extremal_split_eval
from .errors import HypothesisViolated
from .polynomial import MultiPoly, parse_poly

__all__ = [
    "ProductConfig",
    "ProductReport",
    "XjReport",
    "phi",
    "psi",
    "partial_sum_tail",
    "phi_psi_partial",
    "phi_value",
    "psi_value",
    "m_coeffs",
    "f_via_phi",
    "f_partial",
    "f_prime_zero",
    "product_ABCD",
    "x_indicator",
    "xj_machinery",
]

_CHUNK = 1 << 20


def _rational_roots(coeffs: Sequence[Fraction]) -> list[Fraction]:
    """Rational zeros of a polynomial given low-to-high, by the rational root test."""
    coeffs = _exact.trim(coeffs)
    roots = []
    while coeffs and coeffs[0] == 0:
        roots.append(Fraction(0))
        coeffs = coeffs[1:]
    if len(coeffs) <= 1:
        return roots
    den = math.lcm(*(c.denominator for c in coeffs))
    ints = [int(c * den) for c in coeffs]
    g = math.gcd(*ints)
    ints = [v // g for v in ints]

    def divisors(v):
        v = abs(v)
        out = set()
        for i in range(1, math.isqrt(v) + 1):
            if v % i == 0:
                out.update((i, v // i))
        return out

    for a in divisors(ints[0]):
        for b in divisors(ints[-1]):
            for cand in (Fraction(a, b), Fraction(-a, b)):
                if sum(c * cand**i for i, c in enumerate(ints)) == 0 and cand not in roots:
                    roots.append(cand)
    return roots


@dataclass(frozen=True)
class ProductConfig:
    """Radix, root of unity and polynomial for the digit-sum products.

    ``j`` selects zeta = exp(2 pi i j / r). ``P`` is a one-variable
    polynomial (a MultiPoly or a literal such as "5*x^2-x-1").
    """

    q: int
    r: int
    P: MultiPoly
    j: int = 1

    def __post_init__(self):
        if isinstance(self.P, str):
            object.__setattr__(self, "P", parse_poly(self.P, 1))
        if self.P.n != 1:
            raise ValueError("P must be a polynomial in one variable")
        if self.q < 2:
            raise ValueError("radix must be at least 2")
        if not 2 <= self.r <= self.q or self.q % self.r:
            raise ValueError("r must satisfy 2 <= r <= q and divide q")
        if self.j % self.r == 0:
            raise ValueError("zeta must differ from 1")
        if self.P.degree < 1:
            raise ValueError("P must have positive degree")
        roots = _rational_roots(self.coefficients)
        if roots:
            raise ValueError(f"P has rational zeros {roots}")

    @property
    def zeta(self) -> complex:
        return cmath.exp(2j * math.pi * self.j / self.r)

    @cached_property
    def zeta_powers(self) -> np.ndarray:
        """zeta^e for e = 0..r-1, with exact values where they are real or imaginary."""
        out = np.array([cmath.exp(2j * math.pi * self.j * e / self.r) for e in range(self.r)])
        out.real[np.abs(out.real) < 1e-15] = 0.0
        out.imag[np.abs(out.imag) < 1e-15] = 0.0
        return out

    @property
    def d(self) -> int:
        return self.P.degree

    @property
    def coefficients(self) -> list[Fraction]:
        """a_0, ..., a_d."""
        return [self.P.coefficient((i,)) for i in range(self.d + 1)]

    @property
    def a_d(self) -> Fraction:
        return self.coefficients[-1]

    @property
    def c(self) -> list[Fraction]:
        """c_i = a_i / a_d for i = 0..d-1."""
        a = self.coefficients
        return [ai / a[-1] for ai in a[:-1]]

    @property
    def ptilde(self) -> list[Fraction]:
        """Coefficients of Pt(u), lowest degree first: the u^(d-i) coefficient is -c_i."""
        d = self.d
        out = [Fraction(0)] * (d + 1)
        for i, ci in enumerate(self.c):
            out[d - i] = -ci
        return _exact.trim(out)

    def ptilde_eval(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        total = np.zeros_like(u)
        for coef in reversed(self.ptilde):
            total = total * u + float(coef)
        return total

    def log_factor(self, x: np.ndarray) -> np.ndarray:
        """log(1 - Pt(1/x)), evaluated with log1p."""
        return np.log1p(-self.ptilde_eval(1.0 / np.asarray(x, dtype=float)))

    @property
    def holomorphy_margin(self) -> float:
        """1/d - max |c_i|; positive when the series expansion of f converges."""
        return 1.0 / self.d - float(max((abs(ci) for ci in self.c), default=0))

    def sequence(self):
        return digit_sum_zeta(self.q, self.r, self.j, 1)

    def require_positive(self) -> None:
        """Raise HypothesisViolated unless P(x) / a_d > 0 at every integer x >= 1.

        That keeps every product factor 1 - Pt(1/x) positive, so the real
        logarithms are defined. Every real zero lies below the Cauchy bound
        1 + max |c_i|, so only finitely many integers need an exact check.
        """
        bound = 1 + max((abs(ci) for ci in self.c), default=0)
        for x in range(1, math.floor(bound) + 2):
            if self.P(x) / self.a_d <= 0:
                raise HypothesisViolated(f"P({x}) / a_d = {self.P(x) / self.a_d} is not positive")


def _chunks(lo: int, hi: int):
    for start in range(lo, hi + 1, _CHUNK):
        yield np.arange(start, min(start + _CHUNK, hi + 1), dtype=np.int64)


def phi_psi_partial(config: ProductConfig, s_values: Sequence[complex], N: int) -> tuple[np.ndarray, np.ndarray]:
    """Partial sums of phi (n = 0..N) and psi (n = 1..N) at several s, in one pass."""
    s_arr = np.asarray(s_values, dtype=complex)
    ph = np.zeros(len(s_arr), dtype=complex)
    ps = np.zeros(len(s_arr), dtype=complex)
    zp = config.zeta_powers
    for n in _chunks(0, N):
        a = zp[digit_sums(config.q, n) % config.r]
        log1 = np.log(n + 1.0)
        with np.errstate(divide="ignore"):
            log0 = np.log(n.astype(float))
        pos = n > 0
        for i, s in enumerate(s_arr):
            ph[i] += np.sum(a * np.exp(-s * log1))
            ps[i] += np.sum(a[pos] * np.exp(-s * log0[pos]))
    return ph, ps


def phi(config: ProductConfig, s: complex, N: int) -> complex:
    """sum_{n=0}^{N} zeta^s_q(n) (n+1)^-s."""
    return complex(phi_psi_partial(config, [s], N)[0][0])


def psi(config: ProductConfig, s: complex, N: int) -> complex:
    """sum_{n=1}^{N} zeta^s_q(n) n^-s."""
    return complex(phi_psi_partial(config, [s], N)[1][0])


def _block_bound(config: ProductConfig) -> float:
    """max_a |sum_{b<a} zeta^b|, the bound on all partial sums of zeta^s_q(n)."""
    zp = np.array([config.zeta ** b for b in range(config.q)])
    return float(max(abs(zp[:a].sum()) for a in range(config.q + 1)))


def partial_sum_tail(config: ProductConfig, s: complex, N: int) -> float:
    """Summation-by-parts bound on the part of phi or psi beyond n = N (needs Re s > 0)."""
    s = complex(s)
    if s.real <= 0:
        return math.inf
    return _block_bound(config) * (N + 1) ** (-s.real) * (1 + abs(s) / s.real)


@lru_cache(maxsize=4096)
def _phi_cont(q: int, r: int, j: int, s: complex, tol: float) -> tuple[complex, float]:
    spec = digit_sum_zeta(q, r, j, 1)
    kernel = kernel_closure(spec)
    res = extremal_split_eval(kernel, parse_poly("x+1"), None, s, Controls(tol=tol))
    return 1 + res.value, res.err_estimate


@lru_cache(maxsize=4096)
def _psi_cont(q: int, r: int, j: int, s: complex, tol: float) -> tuple[complex, float]:
    kernel = kernel_closure(digit_sum_zeta(q, r, j, 1))
    res = continue_eval(SeriesQuery(kernel, parse_poly("x"), s, controls=Controls(tol=tol)))
    return res.value, res.err_estimate


def _direct_cutoff(config: ProductConfig, s: complex, tol: float, cap: int = 10**6) -> int | None:
    """Smallest N whose tail bound is below tol, or None if that needs more than cap terms."""
    s = complex(s)
    if s.real < 1.5:
        return None
    scale = _block_bound(config) * (1 + abs(s) / s.real)
    n = math.ceil((scale / tol) ** (1 / s.real))
    return n if n <= cap else None


def _pick(config: ProductConfig, s: complex, tol: float, method: str, partial, cont):
    if method not in ("auto", "direct", "continue"):
        raise ValueError(f"unknown method {method!r}")
    if method != "continue":
        n = _direct_cutoff(config, s, tol * 1e-3)
        if n is not None:
            return partial(config, s, n), partial_sum_tail(config, s, n)
        if method == "direct":
            raise ValueError(f"no partial sum up to 10^6 terms reaches {tol} at s = {s}")
    return cont(config.q, config.r, config.j % config.r, s, tol)


def phi_value(config: ProductConfig, s: complex, tol: float = 1e-6,
              method: str = "auto") -> tuple[complex, float]:
    """phi(s) anywhere in the plane: value and error estimate.

    Far enough into the half-plane of convergence a short partial sum with
    its summation-by-parts bound is both cheaper and more accurate than
    the continuation, whose binomial expansion degrades as Re s grows.
    ``method`` forces one route ("direct" or "continue"); "auto" prefers
    the partial sum when it is cheap.
    """
    return _pick(config, complex(s), tol, method, phi, _phi_cont)


def psi_value(config: ProductConfig, s: complex, tol: float = 1e-6,
              method: str = "auto") -> tuple[complex, float]:
    """psi(s) anywhere in the plane: value and error estimate."""
    return _pick(config, complex(s), tol, method, psi, _psi_cont)


def m_coeffs(config: ProductConfig, k: int) -> dict[int, Fraction]:
    """Coefficient of u^l in Pt(u)^k for l in [k, d k], exactly."""
    if k < 1:
        raise ValueError("k must be at least 1")
    power = [Fraction(1)]
    for _ in range(k):
        power = _exact.poly_mul(power, config.ptilde)
    return {l: power[l] if l < len(power) else Fraction(0) for l in range(k, config.d * k + 1)}


def _binom_rising(s: complex, kmax: int) -> np.ndarray:
    """C(s+k-1, k) for k = 0..kmax, the coefficients of (1-u)^-s."""
    out = np.empty(kmax + 1, dtype=complex)
    out[0] = 1.0
    for k in range(1, kmax + 1):
        out[k] = out[k - 1] * (s + k - 1) / k
    return out


def f_via_phi(config: ProductConfig, s: complex, Kmax: int = 40,
              tol: float = 1e-6) -> tuple[complex, float]:
    """f(s) = a_d^-s sum_k C(s+k-1, k) sum_l m_{k,l} phi(d s + l), with an error estimate."""
    m = max((abs(float(ci)) for ci in config.c), default=0.0)
    if config.holomorphy_margin <= 0:
        raise HypothesisViolated(f"max |c_i| = {m} is not below 1/d = {1 / config.d}")
    s = complex(s)
    d = config.d
    rising = _binom_rising(s, Kmax + 200)
    total = 0j
    err = 0.0
    phis = {}

    def ph(l):
        if l not in phis:
            phis[l] = phi_value(config, d * s + l, tol)
        return phis[l]

    val0, e0 = ph(0)
    total += val0
    err += e0
    pmax = abs(val0)
    for k in range(1, Kmax + 1):
        for l, mk in m_coeffs(config, k).items():
            if mk == 0:
                continue
            v, e = ph(l)
            total += rising[k] * float(mk) * v
            err += abs(rising[k] * float(mk)) * e
            pmax = max(pmax, abs(v))
    # remainder: |sum_l m_{k,l}| <= (m d)^k and |phi| stays near its largest computed value
    ratio = m * d
    tail = sum(abs(rising[k]) * ratio**k for k in range(Kmax + 1, Kmax + 201)) * pmax
    scale = complex(config.a_d) ** (-s)
    return complex(scale * total), float(abs(scale) * (err + tail))


def f_partial(config: ProductConfig, s: complex, N: int) -> complex:
    """sum_{n=0}^{N} zeta^s_q(n) P(n+1)^-s by direct summation."""
    s = complex(s)
    zp = config.zeta_powers
    coefs = [float(c) for c in config.coefficients]
    total = 0j
    for n in _chunks(0, N):
        x = n + 1.0
        val = np.polyval(coefs[::-1], x)
        total += np.sum(zp[digit_sums(config.q, n) % config.r] * np.exp(-s * np.log(val.astype(complex))))
    return complex(total)


def _weighted_log_sums(config: ProductConfig, N: int, R: int, checkpoints: Sequence[int] = ()):
    """Running log sums behind A, B, C and the x_j quantities.

    Returns, for n up to N, the arrays needed for the three products, plus
    their values at each checkpoint.
    """
    config.require_positive()
    q, r = config.q, config.r
    zp = config.zeta_powers
    zeta = config.zeta
    pts = sorted(set(int(c) for c in checkpoints if 0 < c <= N) | {N})
    logA = logB = logC = 0j
    trace = {}
    nxt = 0
    inv_z = np.array([zeta ** (-rr) for rr in range(1, R + 1)])
    for n in _chunks(0, N):
        e = digit_sums(q, n) % r
        a = zp[e]
        la = a * config.log_factor(n + 1.0)
        pos = n > 0
        npos = n[pos].astype(float)
        lb = -a[pos] * (1 / zeta) * config.log_factor(npos)
        lc = np.zeros(npos.shape[0], dtype=complex)
        for rr in range(1, R + 1):
            lc += inv_z[rr - 1] * config.log_factor(npos * float(q) ** rr)
        lc = a[pos] * lc
        # cumulative sums so checkpoints inside this chunk can be read off
        ca = np.cumsum(la) + logA
        cb = np.concatenate([[0j] * int((~pos).sum()), np.cumsum(lb)]) + logB
        cc = np.concatenate([[0j] * int((~pos).sum()), np.cumsum(lc)]) + logC
        lo = int(n[0])
        while nxt < len(pts) and pts[nxt] <= int(n[-1]):
            i = pts[nxt] - lo
            trace[pts[nxt]] = (ca[i], cb[i], cc[i])
            nxt += 1
        logA, logB, logC = ca[-1], cb[-1], cc[-1]
    return logA, logB, logC, trace


@dataclass
class ProductReport:
    A: complex
    B: complex
    C: complex
    D: complex
    N: int
    R: int
    trace: list = field(default_factory=list)  # rows (N, A, B, C, D, |D-1|)

    @property
    def abs_D_minus_1(self) -> float:
        return abs(self.D - 1)

    def rows(self) -> list[tuple]:
        return [(n, self.R, a, b, c, d, abs(d - 1)) for n, a, b, c, d, _ in self.trace]


def product_ABCD(config: ProductConfig, N: int, R: int = 60,
                 checkpoints: Sequence[int] = ()) -> ProductReport:
    """Partial products A(N), B(N), C(R, N) and D = A B C^(1 - 1/zeta), accumulated in log space.

    A(N) = prod_{n=0}^{N} (1 - Pt(1/(n+1)))^(zeta^s_q(n))
    B(N) = prod_{n=1}^{N} (1 - Pt(1/n))^(-zeta^(s_q(n)-1))
    C(R, N) = prod_{r=1}^{R} prod_{n=1}^{N} (1 - Pt(1/(n q^r)))^(zeta^(s_q(n)-r))
    """
    if N < 1 or R < 1:
        raise ValueError("N and R must be positive")
    expo = 1 - 1 / config.zeta
    _, _, _, trace = _weighted_log_sums(config, N, R, checkpoints)
    rows = []
    for n in sorted(trace):
        la, lb, lc = trace[n]
        A, B, C = cmath.exp(la), cmath.exp(lb), cmath.exp(lc)
        D = cmath.exp(la + lb + expo * lc)
        rows.append((n, A, B, C, D, abs(D - 1)))
    n, A, B, C, D, _ = rows[-1]
    return ProductReport(A, B, C, D, N, R, rows)


def f_prime_zero(config: ProductConfig, Kmax: int = 40, N: int = 10**6, R: int = 60,
                 tol: float = 1e-6) -> dict:
    """f'(0) three ways.

    series: -d log q/(zeta-1) + sum_k (1/k) sum_l m_{k,l} phi(l)
    phi:    -d log q/(zeta-1) - sum_{n>=0} zeta^s_q(n) log(1 - Pt(1/(n+1)))
    psi:    -d log q/(zeta-1) - [zeta^-1 sum_{n>=1} zeta^s_q(n) log(1 - Pt(1/n))
             + (zeta^-1 - 1) sum_r sum_{n>=1} zeta^(s_q(n)-r) log(1 - Pt(1/(n q^r)))]

    The phi and psi routes differ only by the rearrangement that turns
    psi into phi, so their agreement is the log form of the product identity.
    """
    if config.holomorphy_margin <= 0:
        raise HypothesisViolated("max |c_i| is not below 1/d")
    zeta, d, q = config.zeta, config.d, config.q
    const = -d * math.log(q) / (zeta - 1)
    series = 0j
    for k in range(1, Kmax + 1):
        for l, mk in m_coeffs(config, k).items():
            if mk:
                series += float(mk) / k * phi_value(config, l, tol)[0]
    logA, logB, logC, _ = _weighted_log_sums(config, N, R)
    # logA = sum zeta^s L(n+1); logB = -zeta^-1 sum zeta^s L(n); logC = sum sum zeta^(s-r) L(n q^r)
    phi_route = const - logA
    psi_route = const - (-logB + (1 / zeta - 1) * logC)
    return {"constant": complex(const), "series": complex(const + series),
            "phi": complex(phi_route), "psi": complex(psi_route)}


def x_indicator(q: int, r: int, j: int, m: np.ndarray) -> np.ndarray:
    """x_j(m) = (r-1)/r if s_q(m) = j mod r, else -1/r."""
    m = np.asarray(m, dtype=np.int64)
    hit = digit_sums(q, m) % r == j % r
    return np.where(hit, (r - 1) / r, -1.0 / r)


@dataclass
class XjReport:
    """lam and beta are built with the configuration's zeta inside the r-sums.

    Only the row of Mat1 lam = Mat2 beta belonging to that zeta is a
    consequence of the product identity; for r = 2 the remaining row is
    the trivial one, so the full system and the cyclic shift follow.
    """

    lam: np.ndarray
    beta: np.ndarray
    mat1: np.ndarray
    mat2: np.ndarray
    mat3: np.ndarray
    zeta: complex
    N: int
    R: int

    @property
    def row_identity_residual(self) -> float:
        """|sum_j zeta^j lam(j) - sum_j zeta^(j-1) beta(j)|."""
        j = np.arange(len(self.lam))
        zj = self.zeta**j
        return float(abs(np.sum(zj * self.lam) - np.sum(zj / self.zeta * self.beta)))

    @property
    def sum_residual(self) -> float:
        """max(|sum_j lam(j)|, |sum_j beta(j)|); both sums vanish since sum_j x_j = 0."""
        return float(max(abs(self.lam.sum()), abs(self.beta.sum())))

    @property
    def mat_identity_residual(self) -> float:
        return float(np.abs(self.mat1 - self.mat2 @ self.mat3).max())

    @property
    def linear_residual(self) -> float:
        """max |Mat1 lam - Mat2 beta|."""
        return float(np.abs(self.mat1 @ self.lam - self.mat2 @ self.beta).max())

    @property
    def shift_residuals(self) -> np.ndarray:
        """|lam(i) - beta(i-1 mod r)| for each i."""
        return np.abs(self.lam - np.roll(self.beta, 1))


def xj_machinery(config: ProductConfig, N: int, R: int = 60) -> XjReport:
    """Build lam(j), beta(j) and the matrices relating them.

    lam(j)  = sum_{n>=0} x_j(n) L(n+1) + sum_{n>=1} x_j(n) sum_r zeta^-r L(n q^r)
    beta(j) = sum_{n>=1} x_j(n) (L(n) + sum_r zeta^-r L(n q^r))

    with L(x) = log(1 - Pt(1/x)). The n = 0 term of the inner r-sum is
    dropped because L(0) is undefined.
    """
    config.require_positive()
    q, r, zeta = config.q, config.r, config.zeta
    lam = np.zeros(r, dtype=complex)
    beta = np.zeros(r, dtype=complex)
    inv_z = np.array([zeta ** (-rr) for rr in range(1, R + 1)])
    for n in _chunks(0, N):
        e = digit_sums(q, n) % r
        la = config.log_factor(n + 1.0)
        pos = n > 0
        npos = n[pos].astype(float)
        lr = np.zeros(npos.shape[0], dtype=complex)
        for rr in range(1, R + 1):
            lr += inv_z[rr - 1] * config.log_factor(npos * float(q) ** rr)
        lb = config.log_factor(npos)
        for jj in range(r):
            x = np.where(e == jj, (r - 1) / r, -1.0 / r)
            lam[jj] += np.sum(x * la) + np.sum(x[pos] * lr)
            beta[jj] += np.sum(x[pos] * (lb + lr))
    eta = cmath.exp(2j * math.pi / r)
    idx = np.arange(r)
    mat1 = eta ** np.outer(idx, idx)
    mat2 = eta ** (np.outer(idx, idx) - idx[:, None])
    mat3 = np.zeros((r, r))
    mat3[(idx + 1) % r, idx] = 1.0
    return XjReport(lam, beta, mat1, mat2, mat3, zeta, N, R)
