"""Exact rational linear algebra, backed by sympy."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import sympy


def _to_sympy(rows: Sequence[Sequence]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(int(Fraction(x).numerator), int(Fraction(x).denominator))
                          for x in row] for row in rows])


def _to_fraction(x) -> Fraction:
    x = sympy.nsimplify(x) if not isinstance(x, sympy.Rational) else x
    return Fraction(int(x.p), int(x.q))


def nullspace(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    """Basis of the right nullspace of an exact rational matrix."""
    return [[_to_fraction(v) for v in vec] for vec in _to_sympy(rows).nullspace()]


def solve(rows: Sequence[Sequence], rhs: Sequence) -> list[Fraction]:
    """The unique solution of ``A x = b``; raises if ``A`` is singular."""
    a = _to_sympy(rows)
    if a.rank() < a.shape[1]:
        raise ValueError("linear system is singular")
    b = _to_sympy([[x] for x in rhs])
    x = a.LUsolve(b)
    return [_to_fraction(v) for v in x]
