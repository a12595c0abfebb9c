"""Hankel-sequence root finding with damped Newton and adaptive precision.

A sequence E^[D,d], D = 2 .. D_max, is followed by continuation: every root
seeds the next D. Real roots get a small imaginary kick before they seed,
because Newton on a determinant with real coefficients never leaves the real
axis on its own. A real D = 2 seed whose root wanders off is retried with the
same kick, and a continuation step that jumps far beyond the previous one is
retried from a linear predictor.
"""
import asyncio
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.services.hankel import HankelSpec, NewtonStep, newton_increment
from app.services.oracle import ratio_table_for, wkb_im_log10_hint, wkb_ratio, wkb_text_estimate
from app.services.problem import ProblemSpec
from app.utils.apnum import (
    MIN_DIGITS,
    APComplex,
    PrecisionContext,
    agreement_digits,
    as_fraction,
    fraction_text,
    parse_decimal,
    with_digits,
)
from app.utils.errors import ConfigurationError, DomainError, RPMError, SequenceFailedError
from app.utils.logging_utils import log_sequence_entry
from app.utils.metrics import metrics

logger = structlog.get_logger(__name__)

MAX_HALVINGS = 8
DIVERGENCE_FACTOR = 1000
# |Im E| below 10**(-digits + SNAP_GUARD) is reported as exactly real
SNAP_GUARD = 10
CHECK_EXTRA_DIGITS = 20
MAX_ESCALATIONS = 4
ESCALATION_FACTOR = 1.5
# Linear convergence factor 1 - 1/m is only trusted inside this window
MULTIPLICITY_WINDOW = (0.45, 0.97)
# decades of |H| a multiplicity-scaled step has to remove to stay scaled
SCALED_MIN_DROP = 1.0
# a D = 2 root this far (relative) from a real seed belongs to another branch
SEED_WINDOW = 0.5
# a continuation step longer than JUMP_FACTOR times the previous one and
# JUMP_FLOOR relative is treated as a branch jump
JUMP_FACTOR = 10
JUMP_FLOOR = 1e-3


class PrecisionPolicy(str, Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


class Verdict(str, Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not-converged"
    COLLAPSED = "collapsed-to-real"


class SolveConfig(BaseModel):
    """Knobs of one Hankel-sequence solve

    ``digits`` is only meaningful with the fixed policy; giving it without a
    policy selects fixed precision.
    """

    model_config = ConfigDict(frozen=True)

    d: int = Field(default=0, ge=0, description="Hankel displacement")
    D_max: int = Field(default=15, ge=3, description="Largest determinant dimension")
    target_digits: int = Field(default=20, ge=6, description="Significant digits to certify")
    seed: Optional[str] = Field(default=None, description="D = 2 seed as decimal text")
    state_index: int = Field(default=0, ge=0, description="Harmonic level used for the default seed")
    imag_kick: float = Field(default=1e-6, gt=0, description="Relative imaginary kick for real seeds")
    max_newton_iters: int = Field(default=60, ge=1)
    precision_policy: PrecisionPolicy = PrecisionPolicy.ADAPTIVE
    digits: Optional[int] = Field(default=None, description="Working digits for the fixed policy")

    @model_validator(mode="before")
    @classmethod
    def digits_imply_fixed(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("digits") is not None and "precision_policy" not in data:
            data = {**data, "precision_policy": PrecisionPolicy.FIXED}
        return data

    @field_validator("seed")
    @classmethod
    def seed_parses(cls, v: Optional[str]) -> Optional[str]:
        if v is not None:
            parse_decimal(v, with_digits(MIN_DIGITS))
        return v

    @model_validator(mode="after")
    def fixed_needs_digits(self) -> "SolveConfig":
        if self.precision_policy == PrecisionPolicy.FIXED:
            if self.digits is None:
                raise ConfigurationError("fixed precision policy needs digits")
            if self.digits < MIN_DIGITS:
                raise ConfigurationError(f"digits must be >= {MIN_DIGITS}, got {self.digits}")
        return self


@dataclass(frozen=True)
class RootResult:
    energy: APComplex
    iterations: int
    final_step: Any
    converged: bool
    digits_used: int
    status: str = "converged"
    multiplicity: int = 1


class SequenceEntry(NamedTuple):
    D: int
    root: RootResult


@dataclass(frozen=True)
class SequenceReport:
    """All roots of one Hankel sequence plus the convergence verdict"""

    problem: ProblemSpec
    d: int
    entries: Tuple[SequenceEntry, ...]
    stable_digits_re: int
    stable_digits_im: int
    verdict: Verdict
    digits_used: int
    target_digits: int
    check_entries: Tuple[SequenceEntry, ...] = ()
    agreement_re: Optional[int] = None
    agreement_im: Optional[int] = None
    escalations: int = 0
    failures: Dict[int, str] = field(default_factory=dict)

    @property
    def final(self) -> RootResult:
        return self.entries[-1].root

    @property
    def ctx(self) -> PrecisionContext:
        return with_digits(self.digits_used)


def initial_guess(spec: ProblemSpec, state_index: int, ctx: PrecisionContext) -> APComplex:
    """Harmonic level of the chosen parity class: w (4n + 2 alpha + 1) + v_0, w = sqrt(v_1)"""
    v1 = spec.v(1)
    w = ctx.sqrt(ctx.mpf(v1)) if v1 > 0 else ctx.mpf(1)
    level = 4 * state_index + 2 * spec.alpha + 1
    return ctx.mpc(w * ctx.mpf(Fraction(level)) + ctx.mpf(spec.v(0)))


def _canonical(energy: APComplex, threshold: Any) -> APComplex:
    """Im >= 0 representative of the conjugate pair, snapped to real below ``threshold``"""
    if energy.imag < 0:
        energy = energy.conjugate()
    if abs(energy.imag) < threshold:
        energy = energy.context.mpc(energy.real, 0)
    return energy


def _line_search(
    spec: ProblemSpec, h: HankelSpec, ctx: PrecisionContext, E: APComplex, delta: APComplex, base: float
) -> Tuple[float, APComplex, NewtonStep, bool]:
    """Halve the step until |H| decreases; after MAX_HALVINGS the last trial is kept"""
    lam = 1.0
    for halving in range(MAX_HALVINGS + 1):
        trial = E + ctx.mpf(lam) * delta
        step = newton_increment(spec, trial, h, ctx)
        if step.at_root or step.determinant.log10_abs(ctx) < base:
            return lam, trial, step, True
        if halving < MAX_HALVINGS:
            lam /= 2
    return lam, trial, step, False


def _scaled_step_holds(step: NewtonStep, lam: float, base: float, ctx: PrecisionContext) -> bool:
    if step.at_root:
        return True
    return lam == 1 and step.determinant.log10_abs(ctx) <= base - SCALED_MIN_DROP


def find_root(
    spec: ProblemSpec, h: HankelSpec, seed: Any, cfg: SolveConfig, ctx: PrecisionContext
) -> RootResult:
    """Damped complex Newton on H_D^d(E) starting from ``seed``

    The step is scaled by an estimated root multiplicity m once two
    consecutive linear-convergence ratios agree on it. A scaled step that
    needs damping or removes less than SCALED_MIN_DROP decades of |H| means
    the iterate has reached a cluster of distinct roots rather than one
    multiple root; m then drops to 1 for the rest of the iteration. Iterates
    off the real axis are never scaled.
    """
    E = ctx.mpc(seed)
    if ctx.mp.isnan(E) or ctx.mp.isinf(E):
        raise DomainError(f"seed must be finite, got {seed}")
    tol = min(ctx.pow10(-cfg.target_digits - 2), ctx.pow10(-(ctx.digits // 2)))
    limit = DIVERGENCE_FACTOR * (1 + abs(E))
    log = logger.bind(D=h.D, d=h.d, digits=ctx.digits)

    step = newton_increment(spec, E, h, ctx)
    multiplicity = 1
    candidate: Optional[int] = None
    scaling = True
    last_move = ctx.mpf(0)
    for iteration in range(1, cfg.max_newton_iters + 1):
        if step.at_root:
            log.debug("root_converged", iterations=iteration - 1, status="at-root")
            return RootResult(E, iteration - 1, ctx.mpf(0), True, ctx.digits, "at-root", multiplicity)
        if step.stationary:
            metrics.root_failures.labels(reason="stationary").inc()
            log.warning("root_failed", reason="stationary", iterations=iteration - 1)
            return RootResult(E, iteration - 1, last_move, False, ctx.digits, "stationary", multiplicity)

        raw = step.delta
        delta = raw * multiplicity
        metrics.newton_iterations.inc()
        if abs(delta) <= tol * max(abs(E), 1):
            E = E + delta
            log.debug("root_converged", iterations=iteration, multiplicity=multiplicity)
            return RootResult(E, iteration, abs(delta), True, ctx.digits, "converged", multiplicity)

        base = step.determinant.log10_abs(ctx)
        lam, trial, trial_step, accepted = _line_search(spec, h, ctx, E, delta, base)
        if multiplicity > 1 and not _scaled_step_holds(trial_step, lam, base, ctx):
            log.debug("multiplicity_dropped", multiplicity=multiplicity, iteration=iteration)
            multiplicity, candidate, scaling = 1, None, False
            lam, trial, trial_step, accepted = _line_search(spec, h, ctx, E, raw, base)
        if not accepted:
            log.debug("damping_exhausted", iteration=iteration)

        # only real iterates get a multiplicity estimate
        if scaling and trial.imag == 0 and multiplicity == 1 and lam == 1 and not (trial_step.at_root or trial_step.stationary):
            rho = float(abs(trial_step.delta) / abs(raw))
            if MULTIPLICITY_WINDOW[0] <= rho <= MULTIPLICITY_WINDOW[1]:
                estimate = round(1 / (1 - rho))
                if estimate == candidate and estimate > 1:
                    multiplicity = estimate
                    log.debug("multiplicity_estimated", multiplicity=multiplicity, iteration=iteration)
                candidate = estimate
            else:
                candidate = None

        last_move = abs(trial - E)
        E, step = trial, trial_step
        if abs(E) > limit:
            metrics.root_failures.labels(reason="diverged").inc()
            log.warning("root_failed", reason="diverged", iterations=iteration)
            return RootResult(E, iteration, last_move, False, ctx.digits, "diverged", multiplicity)

    metrics.root_failures.labels(reason="iteration-cap").inc()
    log.warning("root_failed", reason="iteration-cap", iterations=cfg.max_newton_iters, step=float(last_move))
    return RootResult(E, cfg.max_newton_iters, last_move, False, ctx.digits, "iteration-cap", multiplicity)


def stable_digits(entries: Sequence[SequenceEntry], ctx: PrecisionContext) -> Tuple[int, int]:
    """Digits on which the last two entries agree, per component"""
    if len(entries) < 2:
        return 0, 0
    prev, last = entries[-2].root.energy, entries[-1].root.energy
    return (
        agreement_digits(prev.real, last.real, ctx),
        agreement_digits(prev.imag, last.imag, ctx),
    )


def _verdict(entries: Sequence[SequenceEntry], failures: Dict[int, str]) -> Verdict:
    if failures:
        return Verdict.NOT_CONVERGED
    if entries and any(e.root.energy.imag != 0 for e in entries) and entries[-1].root.energy.imag == 0:
        return Verdict.COLLAPSED
    return Verdict.CONVERGED


def working_digits(spec: ProblemSpec, cfg: SolveConfig) -> int:
    """Starting precision P0 = 2 target + 10 D_max + ceil(-log10 |Im E| hint)"""
    if cfg.precision_policy == PrecisionPolicy.FIXED:
        return cfg.digits
    P = 2 * cfg.target_digits + 10 * cfg.D_max
    hint = wkb_im_log10_hint(spec)
    if hint is not None and hint < 0:
        P += math.ceil(-hint)
    return max(P, MIN_DIGITS)


def _kicked(E: APComplex, kick: Any, ctx: PrecisionContext) -> APComplex:
    return E + ctx.mpc(0, kick * max(abs(E), 1))


def _near_seed(root: RootResult, seed: APComplex) -> bool:
    return root.converged and abs(root.energy - seed) <= SEED_WINDOW * max(abs(seed), 1)


def _continuation_seed(
    spec: ProblemSpec, h: HankelSpec, previous: APComplex, kick: Any, ctx: PrecisionContext
) -> APComplex:
    """Previous root, kicked off the real axis unless it is still an exact root at this D"""
    if previous.imag != 0 or newton_increment(spec, previous, h, ctx).at_root:
        return previous
    return _kicked(previous, kick, ctx)


def _jumped(energy: APComplex, before: APComplex, previous: APComplex) -> bool:
    jump = abs(energy - previous)
    return jump > JUMP_FACTOR * abs(previous - before) and jump > JUMP_FLOOR * max(abs(previous), 1)


def hankel_sequence(spec: ProblemSpec, cfg: SolveConfig, ctx: Optional[PrecisionContext] = None) -> SequenceReport:
    """Roots E^[D,d] for D = 2 .. D_max by seed continuation"""
    ctx = ctx or with_digits(working_digits(spec, cfg))
    started = time.perf_counter()
    threshold = ctx.tolerance(SNAP_GUARD)
    kick = ctx.mpf(as_fraction(cfg.imag_kick))
    base_seed = ctx.parse(cfg.seed) if cfg.seed else initial_guess(spec, cfg.state_index, ctx)

    def run(h: HankelSpec, seed: APComplex) -> RootResult:
        root = find_root(spec, h, seed, cfg, ctx)
        return replace(root, energy=_canonical(root.energy, threshold))

    entries: List[SequenceEntry] = []
    failures: Dict[int, str] = {}
    # converged roots in D order; the last two drive continuation
    path: List[APComplex] = []
    for D in range(2, cfg.D_max + 1):
        h = HankelSpec(D, cfg.d)
        if not path:
            root = run(h, base_seed)
            if base_seed.imag == 0 and not _near_seed(root, base_seed):
                logger.info("seed_kicked", D=D, status=root.status, energy=ctx.render(root.energy, 12))
                root = run(h, _kicked(base_seed, kick, ctx))
        else:
            previous = path[-1]
            root = run(h, _continuation_seed(spec, h, previous, kick, ctx))
            if len(path) > 1 and root.converged and _jumped(root.energy, path[-2], previous):
                predicted = previous + (previous - path[-2])
                if predicted.imag == 0:
                    predicted = _kicked(predicted, kick, ctx)
                retry = run(h, predicted)
                logger.info("continuation_jump", D=D, retry_status=retry.status)
                if retry.converged and abs(retry.energy - previous) < abs(root.energy - previous):
                    root = retry
        entry = SequenceEntry(D, root)
        entries.append(entry)
        log_sequence_entry(entry, logger)
        if root.converged:
            path.append(root.energy)
        else:
            failures[D] = root.status

    if len(failures) == len(entries):
        last = entries[-1].root
        raise SequenceFailedError(
            f"no Hankel root converged for D = 2..{cfg.D_max}",
            {"D": entries[-1].D, "status": last.status, "energy": ctx.render(last.energy), "digits": ctx.digits},
        )

    metrics.record_sequence(ctx.digits, time.perf_counter() - started)
    re_digits, im_digits = stable_digits(entries, ctx)
    return SequenceReport(
        problem=spec,
        d=cfg.d,
        entries=tuple(entries),
        stable_digits_re=re_digits,
        stable_digits_im=im_digits,
        verdict=_verdict(entries, failures),
        digits_used=ctx.digits,
        target_digits=cfg.target_digits,
        failures=failures,
    )


def _recheck_tail(
    spec: ProblemSpec, cfg: SolveConfig, report: SequenceReport, ctx: PrecisionContext
) -> Tuple[Tuple[SequenceEntry, ...], int, int]:
    """Re-solve the last two D at +20 digits; returns entries and agreement digits"""
    low = report.ctx
    threshold = low.tolerance(SNAP_GUARD)
    hi = with_digits(ctx.digits + CHECK_EXTRA_DIGITS)
    checks = []
    agree_re = agree_im = low.digits
    for entry in report.entries[-2:]:
        root = find_root(spec, HankelSpec(entry.D, cfg.d), entry.root.energy, cfg, hi)
        root = replace(root, energy=_canonical(root.energy, threshold))
        checks.append(SequenceEntry(entry.D, root))
        if not (root.converged and entry.root.converged):
            agree_re = agree_im = 0
            continue
        agree_re = min(agree_re, agreement_digits(entry.root.energy.real, root.energy.real, low))
        agree_im = min(agree_im, agreement_digits(entry.root.energy.imag, root.energy.imag, low))
    return tuple(checks), agree_re, agree_im


def solve_adaptive(spec: ProblemSpec, cfg: SolveConfig) -> SequenceReport:
    """hankel_sequence at P0, certified against a +20-digit rerun of the tail"""
    P = working_digits(spec, cfg.model_copy(update={"precision_policy": PrecisionPolicy.ADAPTIVE}))
    escalations = 0
    while True:
        ctx = with_digits(P)
        report = hankel_sequence(spec, cfg, ctx)
        checks, agree_re, agree_im = _recheck_tail(spec, cfg, report, ctx)
        honest = min(agree_re, agree_im) >= cfg.target_digits
        report = replace(
            report, check_entries=checks, agreement_re=agree_re, agreement_im=agree_im, escalations=escalations
        )
        if honest:
            return report
        if escalations == MAX_ESCALATIONS:
            logger.warning(
                "precision_exhausted", digits=P, agreement_re=agree_re, agreement_im=agree_im, target=cfg.target_digits
            )
            return replace(report, verdict=Verdict.NOT_CONVERGED)
        escalations += 1
        metrics.precision_escalations.inc()
        new_P = math.ceil(ESCALATION_FACTOR * P)
        logger.info("precision_escalated", digits=P, new_digits=new_P, agreement_re=agree_re, agreement_im=agree_im)
        P = new_P


def solve(spec: ProblemSpec, cfg: SolveConfig) -> SequenceReport:
    if cfg.precision_policy == PrecisionPolicy.FIXED:
        return hankel_sequence(spec, cfg, with_digits(cfg.digits))
    return solve_adaptive(spec, cfg)


class SweepRow(BaseModel):
    """One coupling of a sweep; every number is decimal text"""

    model_config = ConfigDict(extra="forbid")

    g: str
    re: Optional[str] = None
    im: Optional[str] = None
    wkb_ratio: Optional[str] = None
    wkb_estimate: Optional[str] = None
    stable_digits_re: int = 0
    stable_digits_im: int = 0
    digits_used: int = 0
    verdict: Optional[Verdict] = None
    error: Optional[str] = None


def _solve_row(spec_factory: Callable[[Fraction], ProblemSpec], g: Fraction, cfg: SolveConfig) -> SweepRow:
    """Process-pool worker: picklable inputs in, decimal strings out"""
    try:
        spec = spec_factory(g)
        report = solve(spec, cfg)
        ctx = report.ctx
        energy = report.final.energy
        ratio = estimate = None
        table_id = ratio_table_for(spec)
        if table_id is not None and g != 0:
            ratio = with_digits(40).render(wkb_ratio(table_id, g, energy.imag), 10)
            if table_id == 3:
                estimate = with_digits(40).render(wkb_text_estimate(g), 10)
        return SweepRow(
            g=fraction_text(g),
            re=ctx.render(energy.real, cfg.target_digits),
            im=ctx.render(energy.imag, cfg.target_digits),
            wkb_ratio=ratio,
            wkb_estimate=estimate,
            stable_digits_re=report.stable_digits_re,
            stable_digits_im=report.stable_digits_im,
            digits_used=report.digits_used,
            verdict=report.verdict,
        )
    except RPMError as exc:
        logger.warning("sweep_row_failed", g=fraction_text(g), error=str(exc))
        return SweepRow(g=fraction_text(g), error=str(exc))


def _check_g_list(g_list: Sequence[Any]) -> List[Fraction]:
    values = [as_fraction(g) for g in g_list]
    if not values:
        raise DomainError("g-list must not be empty")
    if any(b < a for a, b in zip(values, values[1:])):
        raise DomainError("g-list must be ascending")
    return values


async def sweep_async(
    spec_factory: Callable[[Fraction], ProblemSpec], g_list: Sequence[Any], cfg: SolveConfig, jobs: int = 1
) -> List[SweepRow]:
    """Independent adaptive solves per g; rows come back in input order"""
    values = _check_g_list(g_list)
    if jobs <= 1:
        return [_solve_row(spec_factory, g, cfg) for g in values]
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        tasks = [loop.run_in_executor(pool, _solve_row, spec_factory, g, cfg) for g in values]
        return list(await asyncio.gather(*tasks))


def sweep(
    spec_factory: Callable[[Fraction], ProblemSpec], g_list: Sequence[Any], cfg: SolveConfig, jobs: int = 1
) -> List[SweepRow]:
    return asyncio.run(sweep_async(spec_factory, g_list, cfg, jobs))
