"""Exact univariate polynomials and matrix polynomials over the rationals.

Polynomials are lists of Fraction coefficients, lowest degree first, with
no trailing zeros (the zero polynomial is the empty list).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Poly = list[Fraction]
Matrix = list[list[Fraction]]


def trim(p: Sequence) -> Poly:
    p = [Fraction(c) for c in p]
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> Poly:
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return trim(out)


def poly_divmod(num: Sequence[Fraction], den: Sequence[Fraction]) -> tuple[Poly, Poly]:
    num, den = trim(num), trim(den)
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(num)
    quot = [Fraction(0)] * max(len(num) - len(den) + 1, 0)
    lead = den[-1]
    while len(rem) >= len(den) and rem:
        shift = len(rem) - len(den)
        f = rem[-1] / lead
        quot[shift] = f
        for i, c in enumerate(den):
            rem[shift + i] -= f * c
        rem = trim(rem)
    return trim(quot), rem


def root_multiplicity(p: Sequence[Fraction], root: Fraction) -> int:
    """Multiplicity of ``root`` as a zero of ``p`` (p must be non-zero)."""
    p = trim(p)
    if not p:
        raise ValueError("the zero polynomial vanishes to infinite order")
    lin = [-Fraction(root), Fraction(1)]
    count = 0
    while True:
        quot, rem = poly_divmod(p, lin)
        if rem:
            return count
        p = quot
        count += 1


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in cols] for row in a]


def identity(t: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(t)] for i in range(t)]


def charpoly(m: Matrix) -> Poly:
    """det(X I - M) by the Faddeev-LeVerrier recursion (exact over Q)."""
    t = len(m)
    coeffs = [Fraction(0)] * (t + 1)
    coeffs[t] = Fraction(1)
    aux = [[Fraction(0)] * t for _ in range(t)]
    for k in range(1, t + 1):
        prod = mat_mul(m, aux)
        for i in range(t):
            prod[i][i] += coeffs[t - k + 1]
        aux = prod
        am = mat_mul(m, aux)
        coeffs[t - k] = -sum(am[i][i] for i in range(t)) / k
    return trim(coeffs)


def minpoly(m: Matrix) -> Poly:
    """Monic minimal polynomial, from the first linear dependency among I, M, M^2, ..."""
    t = len(m)
    powers = [identity(t)]
    # reduced row-echelon basis of flattened powers, tracking combinations
    basis: list[tuple[list[Fraction], list[Fraction], int]] = []
    for k in range(t + 1):
        if k > 0:
            powers.append(mat_mul(powers[-1], m))
        vec = [x for row in powers[k] for x in row]
        combo = [Fraction(0)] * (t + 1)
        combo[k] = Fraction(1)
        for bvec, bcombo, piv in basis:
            if vec[piv]:
                f = vec[piv] / bvec[piv]
                vec = [a - f * b for a, b in zip(vec, bvec)]
                combo = [a - f * b for a, b in zip(combo, bcombo)]
        piv = next((i for i, v in enumerate(vec) if v), None)
        if piv is None:
            poly = trim(combo[: k + 1])
            return [c / poly[-1] for c in poly]
        basis.append((vec, combo, piv))
    raise ArithmeticError("Cayley-Hamilton violated; matrix arithmetic is inconsistent")
