"""Exact Gauss-Jordan elimination over ``Fraction``."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class SingularSystem(ArithmeticError):
    pass


def solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``matrix @ x = rhs`` exactly; raises ``SingularSystem`` if no unique solution."""
    n = len(rhs)
    rows = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            raise SingularSystem(f"no pivot in column {col}")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        prow = rows[col]
        inv = 1 / prow[col]
        if inv != 1:
            for k in range(col, n + 1):
                prow[k] *= inv
        for r in range(n):
            if r == col:
                continue
            factor = rows[r][col]
            if factor == 0:
                continue
            row = rows[r]
            for k in range(col, n + 1):
                if prow[k]:
                    row[k] -= factor * prow[k]
    return [rows[i][n] for i in range(n)]


def solve_sparse(unknowns: Sequence[int], coeffs: dict[int, dict[int, Fraction]],
                 constant: dict[int, Fraction]) -> dict[int, Fraction]:
    """Solve ``x_v = sum_w coeffs[v][w] * x_w + constant[v]`` for ``v`` in ``unknowns``.

    ``coeffs[v]`` may only mention unknowns.
    """
    pos = {v: i for i, v in enumerate(unknowns)}
    n = len(unknowns)
    matrix = [[Fraction(0)] * n for _ in range(n)]
    rhs = [Fraction(0)] * n
    for v, i in pos.items():
        matrix[i][i] += 1
        for w, c in coeffs.get(v, {}).items():
            matrix[i][pos[w]] -= c
        rhs[i] = constant.get(v, Fraction(0))
    values = solve(matrix, rhs)
    return {v: values[i] for v, i in pos.items()}
