"""Eigenproblem model: even polynomial potential, parity and series exponents.

A ProblemSpec is the input of every downstream computation. Coefficients are
kept as exact fractions so the same spec drives both the floating pipeline and
the exact-rational oracle.
"""
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.utils.apnum import as_fraction
from app.utils.errors import ConsistencyError, DecimalParseError, DomainError, UnsupportedPotentialError

CENTRAL_FIELD_FLAG = "central-field: unvalidated against published data"

RationalLike = Union[Fraction, int, str, float]


class Preset(str, Enum):
    """Built-in potentials"""
    TRIPLE_WELL = "triple-well"
    DOUBLE_WELL = "double-well"
    HARMONIC = "harmonic"


class ProblemSpec(BaseModel):
    """Potential V(x) = sum_k v_k x^(2k) with its parity class

    ``potential_coeffs`` maps the power 2k to v_k.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    potential_coeffs: Dict[int, Fraction] = Field(description="power 2k -> coefficient v_k")
    alpha: Fraction = Field(default=Fraction(0), description="regularization exponent")
    beta: int = Field(default=2, description="series step in x")
    centrifugal: Fraction = Field(default=Fraction(0), description="V_-2, strength of the 1/x^2 term")
    g: Optional[Fraction] = Field(default=None, description="coupling parameter of the presets")
    preset: Optional[Preset] = None
    flags: Tuple[str, ...] = ()

    @field_validator("potential_coeffs", mode="before")
    @classmethod
    def coerce_coeffs(cls, v: Mapping[Any, RationalLike]) -> Dict[int, Fraction]:
        coeffs: Dict[int, Fraction] = {}
        for power, value in dict(v).items():
            p = int(str(power).lstrip("kKx^"))
            c = as_fraction(value)
            if c != 0:
                coeffs[p] = coeffs.get(p, Fraction(0)) + c
        return dict(sorted(coeffs.items()))

    @field_validator("alpha", "centrifugal", mode="before")
    @classmethod
    def coerce_rational(cls, v: RationalLike) -> Fraction:
        return as_fraction(v)

    @field_validator("g", mode="before")
    @classmethod
    def coerce_g(cls, v: Optional[RationalLike]) -> Optional[Fraction]:
        return None if v is None else as_fraction(v)

    @model_validator(mode="after")
    def check_invariants(self) -> "ProblemSpec":
        if self.beta != 2:
            raise UnsupportedPotentialError(f"beta must be 2, got {self.beta}")
        for power in self.potential_coeffs:
            if power < 0:
                raise UnsupportedPotentialError(f"negative power x^{power}; use centrifugal for x^-2")
            if power % 2:
                raise UnsupportedPotentialError(f"odd power x^{power} present; beta = 2 requires an even potential")
        if not any(p >= 2 for p in self.potential_coeffs):
            raise UnsupportedPotentialError("potential needs a nonzero coefficient of x^2k with k >= 1")
        if self.alpha < 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha}")
        if self.alpha * (self.alpha - 1) != self.centrifugal:
            raise ConsistencyError(
                f"alpha(alpha-1) = {self.alpha * (self.alpha - 1)} does not match V_-2 = {self.centrifugal}"
            )
        if self.g is not None and self.g < 0:
            raise DomainError(f"g must be >= 0, got {self.g}")
        return self

    def v(self, k: int) -> Fraction:
        """Coefficient of x^(2k), zero when absent"""
        return self.potential_coeffs.get(2 * k, Fraction(0))

    @property
    def max_k(self) -> int:
        return max(self.potential_coeffs) // 2

    @property
    def is_central_field(self) -> bool:
        return self.centrifugal != 0

    def label(self) -> str:
        if self.preset is not None:
            return self.preset.value
        return "custom"

    def describe(self) -> Dict[str, Any]:
        """Echo of the problem for reports; rationals as strings"""
        return {
            "preset": self.label(),
            "g": None if self.g is None else _fraction_text(self.g),
            "alpha": _fraction_text(self.alpha),
            "centrifugal": _fraction_text(self.centrifugal),
            "potential": format_potential(self.potential_coeffs),
            "flags": list(self.flags),
        }


def _fraction_text(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _check_g(g: RationalLike) -> Fraction:
    value = as_fraction(g)
    if value < 0:
        raise DomainError(f"g must be >= 0, got {value}")
    return value


def preset_triple_well(g: RationalLike) -> ProblemSpec:
    """V(x) = x^2 - 2 g^2 x^4 + g^4 x^6, even states"""
    value = _check_g(g)
    return ProblemSpec(
        potential_coeffs={2: 1, 4: -2 * value ** 2, 6: value ** 4},
        g=value,
        preset=Preset.TRIPLE_WELL if value else Preset.HARMONIC,
    )


def preset_double_well(g: RationalLike) -> ProblemSpec:
    """V(x) = x^2 - 2 g^2 x^4, even states"""
    value = _check_g(g)
    return ProblemSpec(
        potential_coeffs={2: 1, 4: -2 * value ** 2},
        g=value,
        preset=Preset.DOUBLE_WELL if value else Preset.HARMONIC,
    )


PRESETS = {
    Preset.TRIPLE_WELL.value: preset_triple_well,
    Preset.DOUBLE_WELL.value: preset_double_well,
}


def custom(
    potential_coeffs: Mapping[Any, RationalLike],
    alpha: RationalLike = 0,
    centrifugal: RationalLike = 0,
) -> ProblemSpec:
    """Validated spec for a user-supplied even polynomial potential"""
    alpha_q = as_fraction(alpha)
    centrifugal_q = as_fraction(centrifugal)
    flags = (CENTRAL_FIELD_FLAG,) if centrifugal_q != 0 else ()
    return ProblemSpec(
        potential_coeffs=potential_coeffs,
        alpha=alpha_q,
        centrifugal=centrifugal_q,
        flags=flags,
    )


def with_alpha(spec: ProblemSpec, alpha: RationalLike) -> ProblemSpec:
    """Same potential in another parity class, re-validated"""
    value = as_fraction(alpha)
    if value == spec.alpha:
        return spec
    return ProblemSpec.model_validate({**spec.model_dump(), "alpha": value})


def parse_potential(text: str) -> Dict[int, Fraction]:
    """Parse the CLI form ``"k2=1,k4=-0.0392,k6=0.00038416"``"""
    coeffs: Dict[int, Fraction] = {}
    offset = 0
    for item in text.split(","):
        key, sep, value = item.partition("=")
        stripped = key.strip()
        if not sep or not stripped[:1] in ("k", "K") or not stripped[1:].isdigit():
            raise DecimalParseError(text, offset, f"expected kN=value, got {item.strip()!r}")
        try:
            coeffs[int(stripped[1:])] = as_fraction(value)
        except DecimalParseError as exc:
            raise DecimalParseError(text, offset + len(key) + 1 + exc.position, exc.reason) from None
        offset += len(item) + 1
    return coeffs


def format_potential(coeffs: Mapping[int, Fraction]) -> str:
    return ",".join(f"k{p}={_fraction_text(c)}" for p, c in sorted(coeffs.items()))
