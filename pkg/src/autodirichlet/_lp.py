"""Exact feasibility test for small linear programs over the rationals.

Phase I of the simplex method on a dense Fraction tableau with Bland's
pivoting rule, which cannot cycle. Sizes here are tiny (a few dozen
variables), so clarity beats speed.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def feasible(a_eq: Sequence[Sequence[Fraction]], b_eq: Sequence[Fraction]) -> bool:
    """Whether {v >= 0 : a_eq @ v == b_eq} is non-empty, decided exactly."""
    m = len(a_eq)
    if m == 0:
        return True
    nv = len(a_eq[0])
    # flip rows so the right-hand side is non-negative, then add one artificial per row
    rows = []
    for i in range(m):
        sign = -1 if b_eq[i] < 0 else 1
        row = [Fraction(sign * v) for v in a_eq[i]]
        row += [Fraction(1) if k == i else Fraction(0) for k in range(m)]
        row.append(Fraction(sign * b_eq[i]))
        rows.append(row)
    width = nv + m
    basis = [nv + i for i in range(m)]
    # objective: minimise the sum of artificials, expressed in non-basic terms
    cost = [Fraction(0)] * (width + 1)
    for row in rows:
        for k in range(width + 1):
            cost[k] -= row[k]
    for k in range(nv, width):
        cost[k] = Fraction(0)

    while True:
        entering = next((k for k in range(width) if cost[k] < 0), None)
        if entering is None:
            break
        best = None
        for i, row in enumerate(rows):
            if row[entering] > 0:
                ratio = row[-1] / row[entering]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            # unbounded direction; phase I objective is bounded below by 0, so this cannot happen
            break
        pr = best[1]
        piv = rows[pr][entering]
        rows[pr] = [v / piv for v in rows[pr]]
        for i in range(m):
            if i != pr and rows[i][entering] != 0:
                f = rows[i][entering]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[pr])]
        f = cost[entering]
        cost = [a - f * b for a, b in zip(cost, rows[pr])]
        basis[pr] = entering
    return -cost[-1] == 0
