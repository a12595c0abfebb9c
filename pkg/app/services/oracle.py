"""Independent verification paths for the Riccati-Pade pipeline.

- the wavefunction route: solve Psi'' + (E - V) Psi = 0 as a power series and
  divide out the logarithmic derivative, which must reproduce the Riccati
  coefficients exactly in rational arithmetic;
- fraction-free (Bareiss) determinants for rational Hankel matrices;
- the ratio columns comparing Im E with the semiclassical exponential;
- a hardware-precision complex-rotation diagonalization in a harmonic
  oscillator basis.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from app.services.hankel import lu_factor
from app.services.problem import Preset, ProblemSpec
from app.services.series import exact_energy, rational_coefficients
from app.utils.apnum import APReal, PrecisionContext, agreement_digits, as_fraction, with_digits
from app.utils.errors import (
    CostGuardError,
    DomainError,
    NormalizationError,
    ResonanceNotFoundError,
    UndefinedRatioError,
)
from app.utils.metrics import metrics

MAX_EXACT_DIMENSION = 8
MAX_ROTATION_BASIS = 400
RATIO_DIGITS = 10
RATIO_WORKING_DIGITS = 40


@dataclass(frozen=True)
class PsiSeries:
    """Psi(x) = x^alpha sum_j c_j x^(beta j)"""

    c: Tuple[Any, ...]
    alpha: Fraction
    beta: int = 2


def psi_series(spec: ProblemSpec, E: Any, jmax: int, ctx: Optional[PrecisionContext] = None) -> PsiSeries:
    """Series solution of Psi'' + (E - V) Psi = 0 with c_0 = 1

    Collecting x^(2j - 2 + alpha) gives

        2j (2j + 2 alpha - 1) c_j = sum_k v_k c_{j-1-k} - E c_{j-1}

    (the alpha(alpha-1) c_j term cancels against V_-2). Without ``ctx`` the
    computation is exact and E must be rational.
    """
    if spec.beta != 2:
        raise DomainError("only beta = 2 series are supported")
    if ctx is None:
        energy = exact_energy(E)
        scalar = Fraction
    else:
        energy = ctx.mpc(E)
        scalar = ctx.mpf
    v = [scalar(spec.v(k)) for k in range(spec.max_k + 1)]
    c: List[Any] = [scalar(Fraction(1))]
    for j in range(1, jmax + 1):
        acc = -energy * c[j - 1]
        for k, vk in enumerate(v):
            if j - 1 - k < 0:
                break
            if vk:
                acc += vk * c[j - 1 - k]
        c.append(acc / scalar(2 * j * (2 * j + 2 * spec.alpha - 1)))
    return PsiSeries(c=tuple(c), alpha=spec.alpha, beta=spec.beta)


def f_from_psi(psi: PsiSeries) -> List[Any]:
    """f_j from f = alpha/x - Psi'/Psi by formal power-series division

    With Psi = x^alpha S(x^2), f(x) = -2x S'(z)/S(z), z = x^2, hence
    sum_j f_j z^j = n(z)/S(z) with n_j = -2 (j+1) c_{j+1}. Returns
    f_0..f_{len(c)-2}.
    """
    c = psi.c
    if c[0] != 1:
        raise NormalizationError(f"psi series must have c_0 = 1, got {c[0]}")
    f: List[Any] = []
    for j in range(len(c) - 1):
        acc = -2 * (j + 1) * c[j + 1]
        for k in range(1, j + 1):
            acc -= c[k] * f[j - k]
        f.append(acc)
    return f


def remultiplication_residuals(psi: PsiSeries, f: Sequence[Any]) -> List[Any]:
    """sum_k c_k f_{j-k} + 2(j+1) c_{j+1} for each j; all zero when f S = -2 S'"""
    c = psi.c
    residuals = []
    for j in range(len(f)):
        acc = 2 * (j + 1) * c[j + 1]
        for k in range(j + 1):
            acc += c[k] * f[j - k]
        residuals.append(acc)
    return residuals


def exact_determinant(M: Sequence[Sequence[Any]]) -> Fraction:
    """Exact determinant of a rational matrix by Bareiss elimination

    Rows are first scaled to integers so the elimination stays fraction-free.
    """
    n = len(M)
    if n > MAX_EXACT_DIMENSION:
        raise CostGuardError(f"exact determinant limited to D <= {MAX_EXACT_DIMENSION}, got {n}")
    if n == 0:
        return Fraction(1)
    rows = [[as_fraction(x) for x in row] for row in M]
    if any(len(row) != n for row in rows):
        raise DomainError("matrix must be square")
    scale = Fraction(1)
    a: List[List[int]] = []
    for row in rows:
        lcm = 1
        for x in row:
            lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
        scale *= lcm
        a.append([int(x * lcm) for x in row])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return Fraction(0)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return Fraction(sign * a[n - 1][n - 1]) / scale


@dataclass(frozen=True)
class DeterminantCheck:
    exact: Fraction
    digits: int
    required: int
    passed: bool


def compare_determinants(M: Sequence[Sequence[Any]], ctx: PrecisionContext, guard: int = 5) -> DeterminantCheck:
    """Scaled floating determinant of a rational matrix against Bareiss

    Rounding the entries to working precision already moves det(M) by about
    cond(M) * 10**-digits; the smallest relative LU pivot stands in for cond.
    """
    exact = exact_determinant(M)
    factors = lu_factor(M, ctx)
    metrics.determinant_evaluations.inc()
    if exact == 0:
        digits = ctx.digits if factors.near_singular else 0
        return DeterminantCheck(exact, digits, ctx.digits - guard, factors.near_singular)
    pivot = factors.min_relative_pivot
    loss = max(0, math.ceil(-ctx.log10_abs(pivot))) if pivot else 0
    required = ctx.digits - guard - loss
    digits = agreement_digits(factors.determinant().value(ctx).real, ctx.mpf(exact), ctx)
    return DeterminantCheck(exact, digits, required, digits >= required)


def coefficient_degrees(spec: ProblemSpec, jmax: int) -> List[int]:
    """Degree in E of each f_j, j <= jmax, from exact samples

    f_j is sampled at j + 3 integer energies; the highest non-vanishing
    forward difference gives the degree.
    """
    degrees = []
    for j in range(jmax + 1):
        samples = [rational_coefficients(spec, e, j)[j] for e in range(j + 3)]
        degree = -1
        level = samples
        for order in range(len(samples)):
            if any(x != 0 for x in level):
                degree = order
            level = [b - a for a, b in zip(level, level[1:])]
        degrees.append(degree)
    return degrees


def wkb_ratio(table_id: int, g: Any, im_E: Any) -> APReal:
    """Ratio columns of the coupling sweeps

    triple well (id 2): Im E * g^2 * exp(1/(2 g^2)); double well (id 3): Im E * g * exp(1/(3 g^2)).
    Evaluated at 40 digits and rounded to 10 significant digits.
    """
    ctx = with_digits(RATIO_WORKING_DIGITS)
    gq = as_fraction(g) if not hasattr(g, "_mpf_") else g
    if gq == 0:
        raise UndefinedRatioError("ratio column is undefined at g = 0")
    if gq < 0:
        raise DomainError(f"g must be positive, got {g}")
    gm = ctx.mpf(gq)
    im = ctx.mpf(abs(ctx.mpc(im_E).imag) if hasattr(im_E, "_mpc_") else im_E)
    if table_id == 2:
        value = im * gm ** 2 * ctx.mp.exp(1 / (2 * gm ** 2))
    elif table_id == 3:
        value = im * gm * ctx.mp.exp(1 / (3 * gm ** 2))
    else:
        raise DomainError(f"ratio column exists for tables 2 and 3, got {table_id}")
    return ctx.mpf(ctx.mp.nstr(value, RATIO_DIGITS)) if value != 0 else ctx.mpf(0)


def wkb_text_estimate(g: Any) -> APReal:
    """Double-well semiclassical Im E = [4 / (2 pi g^2)] exp(-1 / (3 g^2))"""
    ctx = with_digits(RATIO_WORKING_DIGITS)
    gq = as_fraction(g)
    if gq <= 0:
        raise UndefinedRatioError("semiclassical estimate needs g > 0")
    gm = ctx.mpf(gq)
    return 4 / (2 * ctx.mp.pi * gm ** 2) * ctx.mp.exp(-1 / (3 * gm ** 2))


def ratio_table_for(spec: ProblemSpec) -> Optional[int]:
    if spec.preset == Preset.TRIPLE_WELL:
        return 2
    if spec.preset == Preset.DOUBLE_WELL:
        return 3
    return None


def wkb_im_log10_hint(spec: ProblemSpec) -> Optional[float]:
    """log10 of the expected size of Im E for the presets, None otherwise

    Kept in log form: exp(-1/(2 g^2)) underflows a double well before g = 0.03.
    """
    if spec.g is None or spec.g == 0:
        return None
    g = float(spec.g)
    if spec.preset == Preset.TRIPLE_WELL:
        return -1 / (2 * g * g) / math.log(10) - 2 * math.log10(g)
    if spec.preset == Preset.DOUBLE_WELL:
        return -1 / (3 * g * g) / math.log(10) - math.log10(g)
    return None


@dataclass(frozen=True)
class RotationResult:
    """Theta-stable eigenvalue of the complex-rotated Hamiltonian"""

    energy: complex
    theta: float
    variation: float
    basis_size: int
    omega: float


def rotated_hamiltonian(spec: ProblemSpec, theta: float, basis_size: int, omega: float = 1.0) -> np.ndarray:
    """p^2 + V(x) under x -> x e^{i theta} in a harmonic-oscillator basis

    The basis diagonalizes p^2 + omega^2 x^2, so x = (a + a^+)/sqrt(2 omega)
    and p^2 = -(omega/2)(a^+ - a)^2. Powers are formed in a padded basis and
    truncated, which keeps every retained matrix element exact.
    """
    pad = 2 * spec.max_k + 2
    n = basis_size + pad
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1)
    x = (a + a.T) / np.sqrt(2.0 * omega)
    p2 = -(omega / 2.0) * ((a.T - a) @ (a.T - a))
    h = np.exp(-2j * theta) * p2[:basis_size, :basis_size]
    x2 = x @ x
    power = np.eye(n)
    for k in range(spec.max_k + 1):
        vk = spec.v(k)
        if vk:
            h = h + float(vk) * np.exp(2j * k * theta) * power[:basis_size, :basis_size]
        power = power @ x2
    return h


def rotated_spectrum(spec: ProblemSpec, theta: float, basis_size: int, omega: float = 1.0) -> np.ndarray:
    return la.eigvals(rotated_hamiltonian(spec, theta, basis_size, omega))


def _nearest(values: np.ndarray, target: complex) -> complex:
    return complex(values[np.argmin(np.abs(values - target))])


def complex_rotation_check(
    spec: ProblemSpec,
    theta: float = 0.2,
    basis_size: int = 200,
    omega: float = 1.0,
    target: complex = 1.0,
    tolerance: float = 1e-6,
    dtheta: float = 0.05,
) -> RotationResult:
    """Rotated eigenvalue nearest ``target``, required stable under theta +- dtheta

    Resonances come out with Im E < 0; callers comparing with the positive
    imaginary parts of the Hankel route should compare magnitudes.
    """
    if not 0 < theta < math.pi / 4:
        raise DomainError(f"theta must lie in (0, pi/4), got {theta}")
    if basis_size > MAX_ROTATION_BASIS:
        raise CostGuardError(f"basis_size limited to {MAX_ROTATION_BASIS}, got {basis_size}")
    if spec.is_central_field:
        raise DomainError("complex rotation check covers one-dimensional problems only")
    centre = _nearest(rotated_spectrum(spec, theta, basis_size, omega), target)
    variation = 0.0
    for t in (theta - dtheta, theta + dtheta):
        if 0 < t < math.pi / 4:
            neighbour = _nearest(rotated_spectrum(spec, t, basis_size, omega), centre)
            variation = max(variation, abs(neighbour - centre))
    if variation > tolerance * max(1.0, abs(centre)):
        raise ResonanceNotFoundError(
            f"eigenvalue {centre} near {target} moves by {variation:.3e} under theta +- {dtheta}"
        )
    return RotationResult(energy=centre, theta=theta, variation=variation, basis_size=basis_size, omega=omega)
