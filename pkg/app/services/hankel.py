"""Hankel determinants H_D^d(E) and the Newton increment -H/H'.

H_D^d is the determinant of the D x D matrix with entries f_{i+j+d+1}. Its
magnitude moves across hundreds of orders of magnitude while E is varied, so
determinants are carried as ScaledValue (mantissa, decimal exponent) and the
Newton step is taken from the trace formula H'/H = tr(M^-1 M'), which never
forms H or H' at all.
"""
import math
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

from app.services.problem import ProblemSpec
from app.services.series import CoefficientTable, hankel_jmax, riccati_coefficients, riccati_coefficients_with_derivative
from app.utils.apnum import APComplex, PrecisionContext
from app.utils.errors import DomainError, MatrixSizeError
from app.utils.metrics import metrics

Matrix = List[List[Any]]

# Pivot smaller than 10**(-digits + SINGULAR_GUARD) of its row norm means "at root"
SINGULAR_GUARD = 5


@dataclass(frozen=True)
class HankelSpec:
    """Determinant dimension D = N + 1 and displacement d"""

    D: int
    d: int = 0

    def __post_init__(self):
        if self.D < 2:
            raise DomainError(f"D must be >= 2, got {self.D}")
        if self.d < 0:
            raise DomainError(f"d must be >= 0, got {self.d}")

    @property
    def jmax(self) -> int:
        return hankel_jmax(self.D, self.d)


@dataclass(frozen=True)
class ScaledValue:
    """mantissa * 10**exp10 with 1 <= |mantissa| < 10, or (0, 0)"""

    mantissa: APComplex
    exp10: int

    @classmethod
    def zero(cls, ctx: PrecisionContext) -> "ScaledValue":
        return cls(ctx.zero, 0)

    @classmethod
    def from_value(cls, value: Any, ctx: PrecisionContext) -> "ScaledValue":
        return cls(ctx.one, 0).times(ctx.mpc(value), ctx)

    @property
    def is_zero(self) -> bool:
        return self.mantissa == 0

    def times(self, factor: Any, ctx: PrecisionContext) -> "ScaledValue":
        """Multiply by ``factor`` and renormalize the mantissa"""
        m = self.mantissa * factor
        if m == 0:
            return ScaledValue.zero(ctx)
        shift = math.floor(ctx.log10_abs(m))
        m = m / ctx.pow10(shift)
        # log10 rounding can land a hair outside [1, 10)
        if abs(m) >= 10:
            m, shift = m / 10, shift + 1
        elif abs(m) < 1:
            m, shift = m * 10, shift - 1
        return ScaledValue(m, self.exp10 + shift)

    def log10_abs(self, ctx: PrecisionContext) -> float:
        if self.is_zero:
            return float("-inf")
        return ctx.log10_abs(self.mantissa) + self.exp10

    def value(self, ctx: PrecisionContext) -> APComplex:
        return self.mantissa * ctx.pow10(self.exp10)

    def conjugate(self) -> "ScaledValue":
        return ScaledValue(self.mantissa.conjugate(), self.exp10)


@dataclass
class LUFactors:
    """In-place LU with partial pivoting: P M = L U, unit-diagonal L"""

    lu: Matrix
    perm: List[int]
    sign: int
    ctx: PrecisionContext
    exact_zero: bool = False
    near_singular: bool = False
    min_relative_pivot: Optional[Any] = None

    @property
    def size(self) -> int:
        return len(self.lu)

    def determinant(self) -> ScaledValue:
        if self.exact_zero:
            return ScaledValue.zero(self.ctx)
        det = ScaledValue(self.ctx.one * self.sign, 0)
        for k in range(self.size):
            det = det.times(self.lu[k][k], self.ctx)
        return det

    def solve(self, b: Sequence[Any]) -> List[Any]:
        n = self.size
        y = [b[self.perm[i]] for i in range(n)]
        for i in range(n):
            acc = y[i]
            row = self.lu[i]
            for j in range(i):
                acc -= row[j] * y[j]
            y[i] = acc
        for i in range(n - 1, -1, -1):
            acc = y[i]
            row = self.lu[i]
            for j in range(i + 1, n):
                acc -= row[j] * y[j]
            y[i] = acc / row[i]
        return y


def hankel_entries(f: Sequence[Any], h: HankelSpec) -> Matrix:
    """M[i][j] = f[i + j + d + 1] for any coefficient sequence"""
    if len(f) - 1 < h.jmax:
        raise MatrixSizeError(f"H_{h.D}^{h.d} needs f_0..f_{h.jmax}, table stops at f_{len(f) - 1}")
    offset = h.d + 1
    return [[f[i + j + offset] for j in range(h.D)] for i in range(h.D)]


def hankel_matrix(table: CoefficientTable, h: HankelSpec) -> Matrix:
    return hankel_entries(table.f, h)


def lu_factor(M: Matrix, ctx: PrecisionContext, guard: int = SINGULAR_GUARD) -> LUFactors:
    n = len(M)
    if any(len(row) != n for row in M):
        raise MatrixSizeError("matrix must be square")
    a = [[ctx.mpc(x) for x in row] for row in M]
    row_norms = [max(abs(x) for x in row) for row in a]
    perm = list(range(n))
    factors = LUFactors(lu=a, perm=perm, sign=1, ctx=ctx)
    threshold = ctx.tolerance(guard)
    for k in range(n):
        p = max(range(k, n), key=lambda r: abs(a[r][k]))
        pivot = a[p][k]
        if pivot == 0:
            factors.exact_zero = True
            factors.near_singular = True
            factors.min_relative_pivot = ctx.mpf(0)
            return factors
        if p != k:
            a[k], a[p] = a[p], a[k]
            perm[k], perm[p] = perm[p], perm[k]
            factors.sign = -factors.sign
        relative = abs(pivot) / row_norms[perm[k]]
        if factors.min_relative_pivot is None or relative < factors.min_relative_pivot:
            factors.min_relative_pivot = relative
        if relative < threshold:
            factors.near_singular = True
        for i in range(k + 1, n):
            l = a[i][k] / pivot
            a[i][k] = l
            if l == 0:
                continue
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] -= l * row_k[j]
    return factors


def scaled_determinant(M: Matrix, ctx: PrecisionContext) -> ScaledValue:
    """det(M) by partial-pivoting LU, accumulated in scaled form"""
    metrics.determinant_evaluations.inc()
    return lu_factor(M, ctx).determinant()


def hankel_determinant(spec: ProblemSpec, E: Any, h: HankelSpec, ctx: PrecisionContext) -> ScaledValue:
    """H_D^d(E) straight from the problem"""
    table = riccati_coefficients(spec, E, h.jmax, ctx)
    return scaled_determinant(hankel_matrix(table, h), ctx)


@dataclass(frozen=True)
class NewtonStep:
    """Newton increment at one E together with H(E)"""

    delta: APComplex
    determinant: ScaledValue
    at_root: bool = False
    stationary: bool = False


def newton_increment(spec: ProblemSpec, E: Any, h: HankelSpec, ctx: PrecisionContext) -> NewtonStep:
    """Delta E = -H/H' = -1 / tr(M^-1 M')

    The trace is accumulated column by column from D solves against M' using
    the LU factors of M. A pivot below 10**(-digits+5) of its row norm is
    reported as ``at_root`` with a zero increment.
    """
    table = riccati_coefficients_with_derivative(spec, E, h.jmax, ctx)
    M = hankel_entries(table.f, h)
    dM = hankel_entries(table.df_dE, h)
    factors = lu_factor(M, ctx)
    metrics.determinant_evaluations.inc()
    det = factors.determinant()
    if factors.near_singular:
        return NewtonStep(delta=ctx.zero, determinant=det, at_root=True)
    trace = ctx.zero
    for j in range(h.D):
        column = factors.solve([dM[i][j] for i in range(h.D)])
        trace += column[j]
    if trace == 0:
        return NewtonStep(delta=ctx.zero, determinant=det, stationary=True)
    return NewtonStep(delta=-1 / trace, determinant=det)
