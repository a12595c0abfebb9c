"""Configurable-precision real and complex arithmetic.

Every computation in the package runs under a PrecisionContext, a thin
immutable wrapper around a private ``mpmath`` context. Precision is stated in
decimal digits; the binary precision underneath carries 8 guard bits.
Values are plain ``mpmath`` numbers owned by the context's ``MPContext``,
which makes them immutable and safe to hand between threads.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Optional, Tuple, Union

from mpmath.ctx_mp import MPContext

from app.utils.errors import ConfigurationError, DecimalParseError

MIN_DIGITS = 20
GUARD_BITS = 8

# Annotation aliases: values are mpmath mpf/mpc instances of a context
APReal = Any
APComplex = Any

Number = Union[int, str, Fraction, float, complex, Any]


def digits_to_bits(digits: int) -> int:
    """Binary precision used for ``digits`` decimal digits"""
    return math.ceil(digits * math.log2(10)) + GUARD_BITS


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision shared by every value created through it"""

    digits: int
    mp: MPContext = field(compare=False, repr=False)

    @property
    def bits(self) -> int:
        return self.mp.prec

    @property
    def zero(self) -> APComplex:
        return self.mp.mpc(0)

    @property
    def one(self) -> APComplex:
        return self.mp.mpc(1)

    def mpf(self, value: Number) -> APReal:
        """Real value rounded to this context"""
        if isinstance(value, Fraction):
            return self.mp.mpf(value.numerator) / value.denominator
        return +self.mp.mpf(value)

    def mpc(self, value: Number, imag: Number = 0) -> APComplex:
        """Complex value rounded to this context

        Accepts ints, decimal strings, fractions, Python floats/complex and
        mpmath numbers belonging to any context.
        """
        if isinstance(value, Fraction) or isinstance(imag, Fraction) or imag != 0:
            return self.mp.mpc(self.mpf(value), self.mpf(imag))
        if isinstance(value, str):
            return parse_decimal(value, self)
        return +self.mp.mpc(value)

    def pow10(self, exponent: Union[int, float]) -> APReal:
        return self.mp.power(10, exponent)

    def tolerance(self, guard: int = 0) -> APReal:
        """10**(-digits + guard), the smallest meaningful relative difference"""
        return self.pow10(-self.digits + guard)

    def exp(self, x: Number) -> APComplex:
        return self.mp.exp(self._as_mp(x))

    def log(self, x: Number) -> APComplex:
        return self.mp.log(self._as_mp(x))

    def sqrt(self, x: Number) -> APComplex:
        return self.mp.sqrt(self._as_mp(x))

    def log10_abs(self, x: Any) -> float:
        """log10 |x| as a Python float (-inf for zero)"""
        magnitude = abs(x)
        if magnitude == 0:
            return float("-inf")
        return float(self.mp.log10(magnitude))

    def _as_mp(self, x: Number) -> Any:
        if isinstance(x, Fraction):
            return self.mpf(x)
        if hasattr(x, "_mpf_") or hasattr(x, "_mpc_"):
            return +x if getattr(x, "context", None) is self.mp else self.mpc(x)
        return self.mp.convert(x)

    def parse(self, text: str) -> APComplex:
        return parse_decimal(text, self)

    def render(self, value: Any, digits: Optional[int] = None) -> str:
        return render_decimal(value, self, digits)


@lru_cache(maxsize=64)
def with_digits(digits: int) -> PrecisionContext:
    """Precision context rounding to ``digits`` decimal digits

    Contexts are cached, so equal ``digits`` always yield the same object.
    """
    if not isinstance(digits, int) or isinstance(digits, bool):
        raise ConfigurationError(f"digits must be an integer, got {digits!r}")
    if digits < MIN_DIGITS:
        raise ConfigurationError(f"digits must be >= {MIN_DIGITS}, got {digits}")
    mp = MPContext()
    mp.prec = digits_to_bits(digits)
    return PrecisionContext(digits=digits, mp=mp)


def _scan_number(text: str, pos: int, signed: bool) -> Tuple[int, bool]:
    """Consume [sign] digits [. digits] [e [sign] digits] starting at ``pos``

    Returns the end position and whether a sign was consumed.
    """
    n = len(text)
    had_sign = False
    if pos < n and text[pos] in "+-":
        if not signed:
            raise DecimalParseError(text, pos, "unexpected sign")
        had_sign = True
        pos += 1
    start = pos
    while pos < n and text[pos].isdigit():
        pos += 1
    mantissa_digits = pos - start
    if pos < n and text[pos] == ".":
        pos += 1
        frac_start = pos
        while pos < n and text[pos].isdigit():
            pos += 1
        mantissa_digits += pos - frac_start
    if mantissa_digits == 0:
        raise DecimalParseError(text, pos, "expected a digit")
    if pos < n and text[pos] in "eE":
        pos += 1
        if pos < n and text[pos] in "+-":
            pos += 1
        exp_start = pos
        while pos < n and text[pos].isdigit():
            pos += 1
        if pos == exp_start:
            raise DecimalParseError(text, pos, "expected exponent digits")
    return pos, had_sign


def parse_decimal(text: str, ctx: PrecisionContext) -> APComplex:
    """Parse ``[sign]digits[.digits][e[sign]digits][(+|-)imag i]``

    Each component is correctly rounded to ``ctx.digits``. A lone imaginary
    part (``"2.5e-3i"``) is accepted too.
    """
    s = text.strip()
    offset = len(text) - len(text.lstrip())
    if not s:
        raise DecimalParseError(text, 0, "empty input")
    try:
        end, _ = _scan_number(s, 0, signed=True)
        if end == len(s):
            return ctx.mp.mpc(ctx.mp.mpf(s), 0)
        if s[end] in "iI" and end == len(s) - 1:
            return ctx.mp.mpc(0, ctx.mp.mpf(s[:end]))
        if s[end] not in "+-":
            raise DecimalParseError(s, end)
        im_end, _ = _scan_number(s, end, signed=True)
        if im_end >= len(s) or s[im_end] not in "iI":
            raise DecimalParseError(s, im_end, "expected 'i' after imaginary part")
        if im_end != len(s) - 1:
            raise DecimalParseError(s, im_end + 1, "trailing characters")
        return ctx.mp.mpc(ctx.mp.mpf(s[:end]), ctx.mp.mpf(s[end:im_end]))
    except DecimalParseError as exc:
        raise DecimalParseError(text, exc.position + offset, exc.reason) from None


def _render_real(x: APReal, ctx: PrecisionContext, digits: int) -> str:
    if x == 0:
        return "0"
    return ctx.mp.nstr(x, digits)


def render_decimal(value: Any, ctx: PrecisionContext, digits: Optional[int] = None) -> str:
    """Render a value in the decimal format understood by parse_decimal"""
    n = digits or ctx.digits
    z = ctx.mpc(value)
    re_text = _render_real(z.real, ctx, n)
    if z.imag == 0:
        return re_text
    im_text = _render_real(abs(z.imag), ctx, n)
    sign = "-" if z.imag < 0 else "+"
    if z.real == 0:
        return f"{'-' if sign == '-' else ''}{im_text}i"
    return f"{re_text}{sign}{im_text}i"


def truncate_decimal(value: Any, significant: int, ctx: PrecisionContext) -> str:
    """Render a real value cut (not rounded) to ``significant`` digits"""
    x = ctx.mpf(value)
    if x == 0:
        return "0"
    significant = max(1, min(significant, ctx.digits))
    full = ctx.mp.nstr(abs(x), ctx.digits, strip_zeros=False, min_fixed=0, max_fixed=0)
    mantissa, _, exponent = full.partition("e")
    digits = mantissa.replace(".", "")[:significant]
    cut = f"{digits[0]}.{digits[1:] or '0'}e{exponent or '0'}"
    return ("-" if x < 0 else "") + _render_real(ctx.mp.mpf(cut), ctx, significant)


def agreement_digits(a: APReal, b: APReal, ctx: PrecisionContext) -> int:
    """Number of significant decimal digits on which two reals agree

    Uses -log10(|a - b| / max(|b|, 10**-digits)), clamped to [0, digits].
    """
    a, b = ctx.mpf(a), ctx.mpf(b)
    diff = abs(a - b)
    # values from a finer context may round to the same number here
    if diff == 0:
        return ctx.digits
    ratio = diff / max(abs(b), ctx.tolerance())
    measured = int(math.floor(-float(ctx.mp.log10(ratio))))
    return max(0, min(ctx.digits, measured))


def as_fraction(value: Union[str, int, float, Fraction]) -> Fraction:
    """Exact rational from '0.14', '7/50', 3 or a float's shortest repr"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DecimalParseError(str(value), 0, "boolean is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    text = str(value).strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pos = next((i for i, c in enumerate(text) if not (c.isdigit() or c in "+-./eE")), len(text))
        raise DecimalParseError(text, pos, "not an exact rational") from None


def fraction_text(value: Fraction) -> str:
    """Exact decimal text for terminating fractions ('0.14'), 'p/q' otherwise"""
    value = as_fraction(value)
    q = value.denominator
    twos = fives = 0
    while q % 2 == 0:
        q //= 2
        twos += 1
    while q % 5 == 0:
        q //= 5
        fives += 1
    if q != 1:
        return f"{value.numerator}/{value.denominator}"
    places = max(twos, fives)
    scaled = abs(value.numerator) * 10 ** places // value.denominator
    sign = "-" if value < 0 else ""
    if places == 0:
        return f"{sign}{scaled}"
    whole, frac = divmod(scaled, 10 ** places)
    return f"{sign}{whole}.{frac:0{places}d}"
