"""Shared fixtures and independent numerical oracles for the test suite."""
from __future__ import annotations

import itertools

import mpmath
import numpy as np
import pytest

from autodirichlet.automaton import digit_sums

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda t: int(t.split()[1])):
            terminalreporter.write_line(line)


def zeta_em(s: complex, N: int = 30, M: int = 40, dps: int = 40) -> complex:
    """Riemann zeta by Euler-Maclaurin summation, written out term by term.

    zeta(s) = sum_{n<N} n^-s + N^(1-s)/(s-1) + N^-s/2
              + sum_{k=1}^{M} B_2k/(2k)! s(s+1)...(s+2k-2) N^(-s-2k+1)
    """
    with mpmath.workdps(dps):
        s = mpmath.mpc(s)
        total = mpmath.fsum(mpmath.power(n, -s) for n in range(1, N))
        total += mpmath.power(N, 1 - s) / (s - 1) + mpmath.power(N, -s) / 2
        rising = s
        for k in range(1, M + 1):
            term = mpmath.bernoulli(2 * k) / mpmath.factorial(2 * k) * rising
            total += term * mpmath.power(N, -s - 2 * k + 1)
            rising *= (s + 2 * k - 1) * (s + 2 * k)
        return complex(total)


def quadrant_epstein(s: complex) -> complex:
    """sum over N^2 minus the origin of (x^2 + y^2)^-s.

    The full lattice sum is 4 zeta(s) beta(s); a quarter of it covers
    x >= 1, y >= 0, and the axis x = 0 adds zeta(2s).
    """
    with mpmath.workdps(30):
        beta = mpmath.dirichlet(s, [0, 1, 0, -1])
        return complex(mpmath.zeta(s) * beta + mpmath.zeta(2 * s))


def brute_1d(values_fn, p_fn, s: complex, N: int, start: int = 1) -> complex:
    """sum_{x=start}^{N} values_fn(x) p_fn(x)^-s in chunks (principal branch)."""
    total = 0j
    for lo in range(start, N + 1, 1 << 20):
        x = np.arange(lo, min(lo + (1 << 20), N + 1), dtype=np.int64)
        pv = p_fn(x.astype(float)).astype(complex)
        total += np.sum(values_fn(x) * np.exp(-s * np.log(pv)))
    return complex(total)


def thue_morse_values(x: np.ndarray) -> np.ndarray:
    return np.where(digit_sums(2, x) % 2 == 0, 1.0, -1.0)


def brute_2d(values_fn, p_fn, s: complex, N: int) -> complex:
    """sum over [0, N]^2 minus the origin."""
    x, y = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    x, y = x.ravel(), y.ravel()
    keep = (x > 0) | (y > 0)
    x, y = x[keep], y[keep]
    pv = p_fn(x.astype(float), y.astype(float)).astype(complex)
    return complex(np.sum(values_fn(x, y) * np.exp(-s * np.log(pv))))


def naive_sequence(spec, x) -> complex:
    """Reference evaluation that reads digits most-significant first via explicit lists."""
    q, n = spec.q, spec.n
    x = list(x)
    digits = []
    while any(x):
        col = []
        for i in range(n):
            x[i], d = divmod(x[i], q)
            col.append(d)
        digits.append(tuple(col))
    cols = list(itertools.product(range(q), repeat=n))
    state = spec.initial
    for col in digits:
        state = spec.transitions[state][cols.index(col)]
    return spec.outputs[state]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
