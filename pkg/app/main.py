"""
Command-line interface for the Riccati-Pade resonance solver.

Usage:
    rpm solve --preset triple-well --g 0.14 --dmax 15 --target-digits 20
    rpm sweep --preset double-well --g-list 0.08,0.10,0.12 --jobs 4
    rpm reproduce 1 --diff
    rpm oracle-check two-route determinant --g 7/50

Exit codes: 0 success, 1 usage or validation error, 2 non-convergence or
reference mismatch, 3 oracle-check failure.
"""
import functools
import json
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional

import click
import structlog
from dotenv import dotenv_values
from pydantic import ValidationError

from app import __version__
from app.config import LogLevel, Settings, get_settings
from app.services.hankel import HankelSpec, hankel_entries
from app.services.oracle import compare_determinants, complex_rotation_check, f_from_psi, psi_series
from app.services.problem import PRESETS, Preset, ProblemSpec, custom, parse_potential, with_alpha
from app.services.reference import CONVERGENCE_G, COUPLING_TABLES, TABLE_IDS
from app.services.reporting import (
    RENDERERS,
    diff_table,
    record_from_report,
    record_from_rows,
    render_diff,
    render_table,
    wkb_reference_cells,
)
from app.services.series import rational_coefficients
from app.services.solver import SolveConfig, Verdict, solve as run_solve, sweep as run_sweep
from app.utils.apnum import agreement_digits, as_fraction, fraction_text, with_digits
from app.utils.config_validator import validate_run_config
from app.utils.errors import RPMError, ResonanceNotFoundError, SequenceFailedError
from app.utils.logging_utils import setup_logging
from app.utils.metrics import metrics

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2
EXIT_ORACLE_FAILED = 3

ORACLE_CHECKS = ("two-route", "determinant", "rotation", "wkb")
DETERMINANT_DIGITS = 50
ROTATION_TOLERANCE = 1e-5
ROTATION_IM_FLOOR = 1e-10
# config-file keys whose option is stored under another parameter name
CONFIG_ALIASES = {"format": "fmt", "diff": "show_diff"}


class RPMGroup(click.Group):
    """click group whose usage errors exit with status 1"""

    def main(self, *args, standalone_mode: bool = True, **kwargs):
        if not standalone_mode:
            return super().main(*args, standalone_mode=False, **kwargs)
        try:
            super().main(*args, standalone_mode=False, **kwargs)
        except click.UsageError as exc:
            exc.show()
            sys.exit(EXIT_USAGE)
        except click.ClickException as exc:
            exc.show()
            sys.exit(exc.exit_code)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(EXIT_OK)


def _load_config_file(ctx: click.Context, param: click.Parameter, path: Optional[str]):
    """Install ``key = value`` lines as defaults of every subcommand"""
    if not path:
        return
    values = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            continue
        name = key.strip().lstrip("-").replace("-", "_")
        values[CONFIG_ALIASES.get(name, name)] = value
    ctx.default_map = {name: dict(values) for name in cli.commands}
    ctx.default_map.update({k: v for k, v in values.items() if k in ("log_level", "metrics_file")})


@click.group(cls=RPMGroup)
@click.version_option(version=__version__, prog_name="rpm")
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False), is_eager=True,
              expose_value=False, callback=_load_config_file, help='key = value file of option defaults')
@click.option('--log-level', type=click.Choice([level.value for level in LogLevel], case_sensitive=False),
              default=None, help='Log level for the stderr JSON log')
@click.option('--metrics-file', type=click.Path(dir_okay=False), default=None,
              help='Write Prometheus metrics here on exit')
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str], metrics_file: Optional[str]):
    """
    Complex eigenvalues of multiple-well oscillators from Hankel determinants.
    """
    try:
        settings = get_settings()
    except ValidationError as e:
        raise click.UsageError(f"invalid environment configuration: {e}")
    setup_logging(log_level or settings.LOG_LEVEL.value)
    ctx.obj = {"settings": settings}
    if metrics_file:
        ctx.call_on_close(functools.partial(metrics.write, metrics_file))


def solver_options(func):
    """Options shared by every command that runs a Hankel sequence"""
    options = [
        click.option('--d', 'd', type=click.IntRange(min=0), default=None, help='Hankel displacement'),
        click.option('--dmax', type=click.IntRange(min=3), default=None, help='Largest determinant dimension'),
        click.option('--target-digits', type=click.IntRange(min=6), default=None, help='Digits to certify'),
        click.option('--seed', default=None, help='D = 2 seed, e.g. 0.97 or 0.97+1e-9i'),
        click.option('--state', type=click.IntRange(min=0), default=0, help='Harmonic level used for seeding'),
        click.option('--digits', type=click.IntRange(min=20), default=None, help='Fixed working precision'),
        click.option('--format', 'fmt', type=click.Choice(sorted(RENDERERS)), default='table',
                     help='Output format'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _solve_config(settings: Settings, d, dmax, target_digits, seed, state, digits, jobs=None) -> SolveConfig:
    digits = settings.RPM_PRECISION if digits is None else digits
    effective = validate_run_config(
        settings,
        digits=digits,
        target_digits=target_digits,
        D_max=dmax,
        d=d,
        jobs=jobs,
    )
    return SolveConfig(
        d=effective["d"],
        D_max=effective["D_max"],
        target_digits=effective["target_digits"],
        seed=seed,
        state_index=state,
        imag_kick=settings.RPM_IMAG_KICK,
        max_newton_iters=settings.RPM_MAX_NEWTON_ITERS,
        digits=digits,
    )


def _build_problem(preset, potential, g, alpha, centrifugal) -> ProblemSpec:
    if preset and potential:
        raise click.UsageError("--preset and --potential are mutually exclusive")
    if not preset and not potential:
        raise click.UsageError("one of --preset or --potential is required")
    if preset:
        if g is None:
            raise click.UsageError("--g is required with --preset")
        return with_alpha(PRESETS[preset](g), alpha)
    return custom(parse_potential(potential), alpha=alpha, centrifugal=centrifugal)


def _fail_usage(error: Exception):
    click.echo(f"Error: {error}", err=True)
    sys.exit(EXIT_USAGE)


def _emit(record, fmt: str, truncate: bool = True):
    if fmt == "table":
        click.echo(render_table(record, truncate=truncate))
    else:
        click.echo(RENDERERS[fmt](record))


@cli.command()
@click.option('--preset', type=click.Choice(sorted(PRESETS)), default=None, help='Built-in potential')
@click.option('--potential', default=None, help='Custom potential, e.g. k2=1,k4=-0.0392')
@click.option('--g', 'g', default=None, help='Coupling, decimal or exact rational (7/50)')
@click.option('--alpha', default='0', help='Parity exponent: 0 even, 1 odd')
@click.option('--centrifugal', default='0', help='Strength of the 1/x^2 term (custom potentials)')
@solver_options
@click.pass_context
def solve(ctx, preset, potential, g, alpha, centrifugal, d, dmax, target_digits, seed, state, digits, fmt):
    """
    Follow one Hankel sequence E^[D,d] up to D_max.

    Examples:

        rpm solve --preset triple-well --g 0.14

        rpm solve --potential k2=1,k4=-0.18 --dmax 12 --format json
    """
    settings = ctx.obj["settings"]
    try:
        spec = _build_problem(preset, potential, g, alpha, centrifugal)
        cfg = _solve_config(settings, d, dmax, target_digits, seed, state, digits)
    except (RPMError, ValidationError) as e:
        _fail_usage(e)

    try:
        report = run_solve(spec, cfg)
    except SequenceFailedError as e:
        click.echo(f"Error: {e} {json.dumps(e.diagnostics)}", err=True)
        sys.exit(EXIT_NOT_CONVERGED)

    config = {"command": "solve", **cfg.model_dump(mode="json"), **spec.describe()}
    _emit(record_from_report(report, config), fmt)
    sys.exit(EXIT_OK if report.verdict == Verdict.CONVERGED else EXIT_NOT_CONVERGED)


def _parse_g_list(text: str) -> List[Fraction]:
    return [as_fraction(item) for item in text.split(",") if item.strip()]


@cli.command()
@click.option('--preset', type=click.Choice(sorted(PRESETS)), required=True, help='Built-in potential')
@click.option('--g-list', required=True, help='Ascending couplings, e.g. 0.08,0.10,0.12')
@click.option('--jobs', type=click.IntRange(min=1), default=None, help='Worker processes')
@solver_options
@click.pass_context
def sweep(ctx, preset, g_list, jobs, d, dmax, target_digits, seed, state, digits, fmt):
    """
    Solve a preset for every coupling in --g-list.

    Rows are independent and come back in input order whatever --jobs is.
    """
    settings = ctx.obj["settings"]
    try:
        jobs = settings.RPM_JOBS if jobs is None else jobs
        values = _parse_g_list(g_list)
        cfg = _solve_config(settings, d, dmax, target_digits, seed, state, digits, jobs)
        rows = run_sweep(PRESETS[preset], values, cfg, jobs)
    except (RPMError, ValidationError) as e:
        _fail_usage(e)

    config = {"command": "sweep", "preset": preset, "jobs": jobs, **cfg.model_dump(mode="json")}
    _emit(record_from_rows(rows, config), fmt)
    ok = all(r.error is None and r.verdict == Verdict.CONVERGED for r in rows)
    sys.exit(EXIT_OK if ok else EXIT_NOT_CONVERGED)


@cli.command()
@click.argument('table_id', type=click.IntRange(min(TABLE_IDS), max(TABLE_IDS)))
@click.option('--diff', 'show_diff', is_flag=True, help='Compare every cell with the published values')
@click.option('--jobs', type=click.IntRange(min=1), default=None, help='Worker processes')
@solver_options
@click.pass_context
def reproduce(ctx, table_id, show_diff, jobs, d, dmax, target_digits, seed, state, digits, fmt):
    """
    Recompute a published table: 1 (Hankel sequence at g = 0.14),
    2 (triple-well coupling sweep) or 3 (double-well coupling sweep).
    """
    settings = ctx.obj["settings"]
    try:
        jobs = settings.RPM_JOBS if jobs is None else jobs
        cfg = _solve_config(settings, d, dmax, target_digits, seed, state, digits, jobs)
        if table_id == 1:
            report = run_solve(PRESETS["triple-well"](CONVERGENCE_G), cfg)
            config = {"command": "reproduce", "table": 1, **cfg.model_dump(mode="json")}
            record = record_from_report(report, config)
            converged = report.verdict == Verdict.CONVERGED
        else:
            preset, reference = COUPLING_TABLES[table_id]
            rows = run_sweep(PRESETS[preset.value], [row.g for row in reference], cfg, jobs)
            config = {"command": "reproduce", "table": table_id, "jobs": jobs, **cfg.model_dump(mode="json")}
            record = record_from_rows(rows, config)
            converged = all(r.error is None and r.verdict == Verdict.CONVERGED for r in rows)
    except SequenceFailedError as e:
        click.echo(f"Error: {e} {json.dumps(e.diagnostics)}", err=True)
        sys.exit(EXIT_NOT_CONVERGED)
    except (RPMError, ValidationError) as e:
        _fail_usage(e)

    if show_diff:
        cells = diff_table(table_id, record)
        click.echo(render_diff(cells))
        sys.exit(EXIT_OK if all(c.passed for c in cells) else EXIT_NOT_CONVERGED)

    # The convergence table shows every digit to make the stabilization visible
    _emit(record, fmt, truncate=table_id != 1)
    sys.exit(EXIT_OK if converged else EXIT_NOT_CONVERGED)


def _check_two_route(spec: ProblemSpec, energy: Fraction, jmax: int) -> Dict[str, Any]:
    mismatches = []
    for alpha in (0, 1):
        problem = with_alpha(spec, alpha)
        direct = rational_coefficients(problem, energy, jmax)
        via_psi = f_from_psi(psi_series(problem, energy, jmax + 1))
        mismatches.extend(f"alpha={alpha} j={j}" for j, (a, b) in enumerate(zip(direct, via_psi)) if a != b)
    return {"passed": not mismatches, "jmax": jmax, "mismatches": mismatches}


def _check_determinant(spec: ProblemSpec, energy: Fraction, d: int) -> Dict[str, Any]:
    ctx = with_digits(DETERMINANT_DIGITS)
    results = {}
    for D in range(2, 7):
        h = HankelSpec(D, d)
        check = compare_determinants(hankel_entries(rational_coefficients(spec, energy, h.jmax), h), ctx)
        results[D] = {
            "exact": fraction_text(check.exact),
            "digits": check.digits,
            "required": check.required,
            "passed": check.passed,
        }
    return {"passed": all(r["passed"] for r in results.values()), "dimensions": results}


def _check_rotation(spec: ProblemSpec, settings: Settings, theta, basis, omega) -> Dict[str, Any]:
    reference = None
    for preset, rows in COUPLING_TABLES.values():
        if spec.preset == preset:
            reference = next((r for r in rows if as_fraction(r.g) == spec.g), None)
    target = complex(float(reference.re), 0.0) if reference else 1.0
    try:
        result = complex_rotation_check(
            spec,
            theta=settings.ROTATION_THETA if theta is None else theta,
            basis_size=settings.ROTATION_BASIS if basis is None else basis,
            omega=settings.ROTATION_OMEGA if omega is None else omega,
            target=target,
            tolerance=ROTATION_TOLERANCE,
        )
    except ResonanceNotFoundError as e:
        return {"passed": False, "error": str(e)}
    # A confining well has a real rotated spectrum; an Im part at the noise
    # level of the hardware eigensolver is not a resonance either
    resolved = abs(result.energy.imag) > max(result.variation, ROTATION_IM_FLOOR)
    compared = reference is not None and spec.preset == Preset.DOUBLE_WELL and resolved
    summary = {
        "passed": True,
        "compared": compared,
        "re": repr(result.energy.real),
        "im": repr(result.energy.imag),
        "variation": result.variation,
    }
    if compared:
        ctx = with_digits(20)
        re_digits = agreement_digits(ctx.mpf(result.energy.real), ctx.mpf(reference.re), ctx)
        im_digits = agreement_digits(ctx.mpf(abs(result.energy.imag)), ctx.mpf(reference.im), ctx)
        summary.update(re_digits=re_digits, im_digits=im_digits, passed=min(re_digits, im_digits) >= 6)
    return summary


def _check_wkb() -> Dict[str, Any]:
    cells = wkb_reference_cells()
    failed = [f"{c.row}" for c in cells if not c.passed]
    return {"passed": not failed, "cells": len(cells), "failed": failed}


@cli.command('oracle-check')
@click.argument('checks', nargs=-1, type=click.Choice(ORACLE_CHECKS))
@click.option('--preset', type=click.Choice(sorted(PRESETS)), default='triple-well', help='Built-in potential')
@click.option('--g', 'g', default=CONVERGENCE_G, help='Coupling, decimal or exact rational')
@click.option('--energy', default='1', help='Exact rational energy for the rational checks')
@click.option('--jmax', type=click.IntRange(min=1), default=30, help='Coefficients compared by two-route')
@click.option('--d', 'd', type=click.IntRange(min=0), default=0, help='Hankel displacement')
@click.option('--theta', type=float, default=None, help='Rotation angle in radians')
@click.option('--basis', type=click.IntRange(min=10), default=None, help='Oscillator basis size')
@click.option('--omega', type=float, default=None, help='Oscillator basis frequency')
@click.pass_context
def oracle_check(ctx, checks, preset, g, energy, jmax, d, theta, basis, omega):
    """
    Run independent verification paths; all of them when none is named.
    """
    settings = ctx.obj["settings"]
    selected = checks or ORACLE_CHECKS
    try:
        spec = PRESETS[preset](g)
        energy_q = as_fraction(energy)
        summary = {}
        for name in selected:
            if name == "two-route":
                summary[name] = _check_two_route(spec, energy_q, jmax)
            elif name == "determinant":
                summary[name] = _check_determinant(spec, energy_q, d)
            elif name == "rotation":
                summary[name] = _check_rotation(spec, settings, theta, basis, omega)
            elif name == "wkb":
                summary[name] = _check_wkb()
    except (RPMError, ValidationError) as e:
        _fail_usage(e)

    passed = all(result["passed"] for result in summary.values())
    click.echo(json.dumps({"passed": passed, "checks": summary}, indent=2, default=str))
    sys.exit(EXIT_OK if passed else EXIT_ORACLE_FAILED)


if __name__ == "__main__":
    cli()
