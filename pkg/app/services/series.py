"""Series coefficients f_j of the regularized logarithmic derivative.

Substituting f(x) = sum_j f_j x^(2j+1) into

    f'(x) - f(x)^2 + (2 alpha / x) f(x) + V(x) - E - alpha(alpha-1)/x^2 = 0

and collecting powers x^(2n) gives, with V(x) = sum_k v_k x^(2k) and the
centrifugal term cancelled by alpha(alpha-1) = V_-2,

    (2 alpha + 1) f_0           = E - v_0
    (2n + 2 alpha + 1) f_n      = sum_{i+j=n-1} f_i f_j - v_n        (n >= 1)

Differentiating in E gives the companion recursion for df_n/dE. The same
code path runs over mpmath numbers (floating mode) and Fractions (exact mode),
so the two modes cannot drift apart; the wavefunction route in
``app.services.oracle`` checks both against the wavefunction series.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, List, Optional, Sequence, Tuple

from app.services.problem import ProblemSpec
from app.utils.apnum import MIN_DIGITS, APComplex, PrecisionContext, as_fraction, parse_decimal, with_digits
from app.utils.errors import DecimalParseError, DomainError, ModeError


@dataclass(frozen=True)
class CoefficientTable:
    """f_0..f_jmax (and optionally df_j/dE) at one energy and precision"""

    energy: APComplex
    f: Tuple[APComplex, ...]
    ctx: PrecisionContext
    df_dE: Optional[Tuple[APComplex, ...]] = None

    def __post_init__(self):
        if self.df_dE is not None and len(self.df_dE) != len(self.f):
            raise ValueError("df_dE must be as long as f")

    @property
    def jmax(self) -> int:
        return len(self.f) - 1


def _cauchy_square(f: Sequence[Any], m: int) -> Any:
    """sum_{i+j=m} f_i f_j using the symmetry of the product"""
    half = (m + 1) // 2
    if half == 0:
        return f[0] * f[0]
    total = f[0] * f[m]
    for i in range(1, half):
        total += f[i] * f[m - i]
    total = 2 * total
    if m % 2 == 0:
        total += f[m // 2] * f[m // 2]
    return total


def _cauchy_cross(df: Sequence[Any], f: Sequence[Any], m: int) -> Any:
    """sum_{i+j=m} (df_i f_j + f_i df_j) = 2 sum_{i+j=m} df_i f_j"""
    total = df[0] * f[m]
    for i in range(1, m + 1):
        total += df[i] * f[m - i]
    return 2 * total


def _recurse(
    energy: Any,
    spec: ProblemSpec,
    jmax: int,
    scalar: Callable[[Fraction], Any],
    with_derivative: bool,
) -> Tuple[List[Any], Optional[List[Any]]]:
    two_alpha = 2 * spec.alpha
    f: List[Any] = []
    df: Optional[List[Any]] = [] if with_derivative else None
    for n in range(jmax + 1):
        denominator = scalar(2 * n + two_alpha + 1)
        if n == 0:
            f.append((energy - scalar(spec.v(0))) / denominator)
            if df is not None:
                df.append(scalar(Fraction(1)) / denominator)
            continue
        f.append((_cauchy_square(f, n - 1) - scalar(spec.v(n))) / denominator)
        if df is not None:
            df.append(_cauchy_cross(df, f, n - 1) / denominator)
    return f, df


def _check(spec: ProblemSpec, jmax: int) -> None:
    if jmax < 0:
        raise DomainError(f"jmax must be >= 0, got {jmax}")
    if spec.beta != 2:
        raise DomainError("only beta = 2 series are supported")


def riccati_coefficients(spec: ProblemSpec, E: Any, jmax: int, ctx: PrecisionContext) -> CoefficientTable:
    """f_0..f_jmax at energy E in working precision"""
    _check(spec, jmax)
    energy = ctx.mpc(E)
    f, _ = _recurse(energy, spec, jmax, ctx.mpf, with_derivative=False)
    return CoefficientTable(energy=energy, f=tuple(f), ctx=ctx)


def riccati_coefficients_with_derivative(
    spec: ProblemSpec, E: Any, jmax: int, ctx: PrecisionContext
) -> CoefficientTable:
    """f_j together with the analytic derivatives df_j/dE"""
    _check(spec, jmax)
    energy = ctx.mpc(E)
    f, df = _recurse(energy, spec, jmax, ctx.mpf, with_derivative=True)
    return CoefficientTable(energy=energy, f=tuple(f), ctx=ctx, df_dE=tuple(df))


def exact_energy(E: Any) -> Fraction:
    """Rational energy for exact mode; floating or complex input is a ModeError"""
    if isinstance(E, (float, complex)) or hasattr(E, "_mpf_") or hasattr(E, "_mpc_"):
        raise ModeError(f"exact mode needs a rational energy, got {type(E).__name__}")
    try:
        return as_fraction(E)
    except DecimalParseError:
        # malformed text keeps its parse error
        parse_decimal(str(E), with_digits(MIN_DIGITS))
        raise ModeError(f"exact mode needs a rational energy, got {E!r}") from None


def rational_coefficients(spec: ProblemSpec, E: Any, jmax: int) -> List[Fraction]:
    """Exact f_0..f_jmax for a rational energy; ground truth for floating mode"""
    _check(spec, jmax)
    energy = exact_energy(E)
    f, _ = _recurse(energy, spec, jmax, Fraction, with_derivative=False)
    return f


def hankel_jmax(D: int, d: int) -> int:
    """Largest coefficient index appearing in H_D^d"""
    return 2 * D + d - 1
