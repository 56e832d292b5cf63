"""Command-line interface.

Exit codes: 0 success, 1 solver or I/O failure, 2 invalid input or
out-of-domain parameters, 3 oracle promise violation.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .dynamics import (
    aggregate_full_to_reduced,
    class_probabilities_full,
    ground_probability,
    integrate_full,
    integrate_reduced,
    phase_distance,
)
from .errors import (
    BracketingFailure,
    DegenerateFit,
    DegenerateGround,
    DimensionTooLarge,
    DivergentRuntime,
    EndpointSingularity,
    NonPositiveGap,
    PathIllDefined,
    PromiseViolation,
    QuadratureFailure,
    ScrambledError,
    SpectrumError,
    StepSizeUnderflow,
    ToleranceNotMet,
)
from .io import RunWriter, read_csv
from .schedules import (
    constant_rate,
    constant_s,
    custom_schedule,
    dj_reference_profile,
    path_from_profile,
)
from .scenarios import (
    ScenarioReport,
    fit_scaling,
    local_adiabatic_schedule,
    rem_bound_runtime,
    run_deutsch_josza,
    run_grover,
    run_rem,
)
from .spectral import numeric_min_gap, rem_min_gap, spectral_profile
from .spectrum import (
    DJ_KINDS,
    ORACLE_MAX_N,
    SpectrumSpec,
    dj_spectrum,
    grover_spectrum,
    load_spectrum,
    rem_spectrum,
    scramble,
)

ENV_OUT = "SCRAMBLED_AQC_OUT"
DEFAULT_OUT_ROOT = "runs"

# error class -> exit code
_EXIT_CODES = (
    (PromiseViolation, 3),
    ((SpectrumError, DimensionTooLarge, DegenerateGround, DegenerateFit, NonPositiveGap,
      EndpointSingularity, PathIllDefined), 2),
    ((ToleranceNotMet, StepSizeUnderflow, QuadratureFailure, DivergentRuntime, BracketingFailure), 1),
    (ScrambledError, 1),
    (OSError, 1),
    (ValueError, 2),
)


@dataclass
class Globals:
    seed: int
    out: Path | None
    out_root: Path
    tol: float
    fixed_steps: int | None
    plot: bool
    gnuplot: bool
    config: dict

    def run_dir(self, name: str) -> Path:
        return self.out if self.out is not None else self.out_root / name


def _fail(exc: BaseException) -> None:
    for types, code in _EXIT_CODES:
        if isinstance(exc, types):
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(code)
    raise exc


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, click.exceptions.Exit, SystemExit):
            raise
        except Exception as exc:  # mapped to exit codes, anything else re-raised
            _fail(exc)

    return wrapper


def _sweep_range(text: str) -> list[int]:
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise click.BadParameter(f"expected start:stop:step, got {text!r}") from None
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise click.BadParameter(f"expected start:stop:step with stop >= start and step > 0, got {text!r}")
    return list(range(parts[0], parts[1] + 1, parts[2]))


def _params(ctx: click.Context) -> dict:
    return {k: v for k, v in ctx.params.items()}


def _writer(g: Globals, name: str, ctx: click.Context) -> RunWriter:
    config = {"command": ctx.command_path, "params": _params(ctx), "seed": g.seed, "tol": g.tol,
              "fixed_steps": g.fixed_steps}
    return RunWriter(g.run_dir(name), config, ctx.command_path, __version__)


def _figure(w: RunWriter, g: Globals, name: str, draw, csv_name: str | None = None, kind: str | None = None):
    """Optionally draw a PNG and a gnuplot script next to a CSV."""
    if g.plot:
        from . import plotting

        draw(plotting, w.path(f"{name}.png"))
        w.add_existing(f"{name}.png")
    if g.gnuplot and csv_name and kind:
        from .plotting import gnuplot_script

        w.text(f"{name}.gp", gnuplot_script(kind, csv_name, f"{name}.png"))


# ---------------------------------------------------------------------------
# shared spectrum options


def spectrum_options(fn):
    opts = [
        click.option("--family", type=click.Choice(["dj", "rem", "grover"]), default=None,
                     help="Built-in family; alternative to --spectrum-file."),
        click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Bit count."),
        click.option("--kind", type=click.Choice(DJ_KINDS), default="balanced", show_default=True,
                     help="Deutsch-Josza oracle kind."),
        click.option("--marked", type=click.IntRange(min=1), default=1, show_default=True,
                     help="Marked items for the Grover family."),
        click.option("--offset", type=float, default=0.0, show_default=True, help="Energy offset e_0."),
        click.option("--spectrum-file", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Spectrum JSON file."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _spectrum(family, n, kind, marked, offset, spectrum_file) -> SpectrumSpec:
    if spectrum_file:
        spec = load_spectrum(spectrum_file)
        return spec.with_offset(offset) if offset else spec
    if family is None or n is None:
        raise click.UsageError("give --spectrum-file, or --family together with --n")
    if family == "dj":
        spec = dj_spectrum(n, kind)
    elif family == "rem":
        spec = rem_spectrum(n)
    else:
        spec = grover_spectrum(n, marked)
    return spec.with_offset(offset) if offset else spec


# ---------------------------------------------------------------------------
# root group


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise click.BadParameter(f"config is not valid JSON: {exc}", param_hint="--config") from None
    if not isinstance(data, dict):
        raise click.BadParameter("config must be a JSON object", param_hint="--config")
    return data


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed for scrambles and readouts.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help=f"Output directory (default: ${ENV_OUT} or ./{DEFAULT_OUT_ROOT}, plus the command name).")
@click.option("--tol", type=click.FloatRange(min=0.0, min_open=True), default=1e-10, show_default=True,
              help="Relative integration tolerance.")
@click.option("--fixed-steps", type=click.IntRange(min=1), default=None,
              help="Use fixed-step RK4 with this many steps (bit-reproducible).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON config; command-line flags override it.")
@click.option("--plot", is_flag=True, help="Also render PNG figures next to the CSV files.")
@click.option("--gnuplot", is_flag=True, help="Also write gnuplot scripts for the CSV files.")
@click.version_option(__version__, prog_name="scrambled-aqc")
@click.pass_context
def main(ctx, seed, out, tol, fixed_steps, config_path, plot, gnuplot):
    """Simulate annealing algorithms on scrambled-output problems."""
    cfg = _load_config(config_path)
    values = {"seed": seed, "out": out, "tol": tol, "fixed_steps": fixed_steps, "plot": plot, "gnuplot": gnuplot}
    for name in values:
        key = name.replace("_", "-")
        for k in (name, key):
            if k in cfg and ctx.get_parameter_source(name) == click.core.ParameterSource.DEFAULT:
                values[name] = cfg[k]
    # nested objects configure subcommands, e.g. {"scan": {"points": 256}}
    ctx.default_map = {k: v for k, v in cfg.items() if isinstance(v, dict)}
    if not (values["tol"] and float(values["tol"]) > 0):
        raise click.BadParameter("tolerance must be positive", param_hint="--tol")
    root = Path(os.environ.get(ENV_OUT, DEFAULT_OUT_ROOT))
    ctx.obj = Globals(
        seed=int(values["seed"]),
        out=Path(values["out"]) if values["out"] else None,
        out_root=root,
        tol=float(values["tol"]),
        fixed_steps=int(values["fixed_steps"]) if values["fixed_steps"] else None,
        plot=bool(values["plot"]),
        gnuplot=bool(values["gnuplot"]),
        config=cfg,
    )


# ---------------------------------------------------------------------------
# spectrum


@main.group()
def spectrum():
    """Validate, generate or scramble spectra."""


@spectrum.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def spectrum_validate(path):
    """Check a spectrum JSON file."""
    spec = load_spectrum(path)
    click.echo(f"valid: n={spec.n} classes={spec.K + 1} offset={spec.offset} driver_scale={spec.driver_scale}")


@spectrum.command("generate")
@click.argument("family", type=click.Choice(["dj", "rem", "grover"]))
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--kind", type=click.Choice(DJ_KINDS), default="balanced", show_default=True)
@click.option("--marked", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--offset", type=float, default=0.0, show_default=True)
@click.pass_context
@handle_errors
def spectrum_generate(ctx, family, n, kind, marked, offset):
    """Write a built-in spectrum to spectrum.json."""
    g: Globals = ctx.obj
    spec = _spectrum(family, n, kind, marked, offset, None)
    w = _writer(g, "spectrum", ctx)
    w.json("spectrum.json", spec.to_dict())
    w.finish()
    click.echo(f"{family} n={n}: {spec.K + 1} classes -> {w.path('spectrum.json')}")


@spectrum.command("scramble")
@spectrum_options
@click.option("--max-n", type=click.IntRange(min=1), default=ORACLE_MAX_N, show_default=True,
              help="Refuse to materialize more than 2**max-n entries.")
@click.pass_context
@handle_errors
def spectrum_scramble(ctx, family, n, kind, marked, offset, spectrum_file, max_n):
    """Write one seeded scrambled diagonal to diagonal.csv."""
    g: Globals = ctx.obj
    spec = _spectrum(family, n, kind, marked, offset, spectrum_file)
    diag = scramble(spec, g.seed, max_n=max_n)
    w = _writer(g, "scramble", ctx)
    w.json("spectrum.json", spec.to_dict())
    idx = np.arange(diag.entries.size)
    w.csv("diagonal.csv", ["index", "class", "entry"], zip(idx, diag.class_of, diag.entries))
    w.finish()
    click.echo(f"scrambled 2**{spec.n} entries with seed {g.seed} -> {w.path('diagonal.csv')}")


# ---------------------------------------------------------------------------
# scan


@main.command()
@spectrum_options
@click.option("--points", type=click.IntRange(min=2), default=512, show_default=True)
@click.option("--levels", type=click.IntRange(min=2), default=3, show_default=True)
@click.option("--solver", type=click.Choice(["auto", "dense", "secular"]), default="auto", show_default=True)
@click.pass_context
@handle_errors
def scan(ctx, family, n, kind, marked, offset, spectrum_file, points, levels, solver):
    """Lowest levels, gap and V01 on a uniform s grid."""
    g: Globals = ctx.obj
    spec = _spectrum(family, n, kind, marked, offset, spectrum_file)
    s = np.linspace(0.0, 1.0, points + 1)
    prof = spectral_profile(spec, s, solver, levels)
    k = prof.energies.shape[1]
    g_min, s_min = numeric_min_gap(spec, solver)
    w = _writer(g, "scan", ctx)
    header = ["s"] + [f"E{j}" for j in range(k)] + ["gap", "v01"]
    w.csv("scan.csv", header, np.column_stack([s, prof.energies, prof.gap, prof.v01]))
    summary = {"min_gap": g_min, "s_min": s_min, "max_v01": float(np.max(prof.v01)), "classes": spec.K + 1}
    if family == "rem" and not spectrum_file:
        ref_gap, ref_s = rem_min_gap(spec.n)
        summary.update(reference_min_gap=ref_gap, reference_s_min=ref_s, v01_bound=2 * spec.n)
    w.json("summary.json", summary)
    _figure(w, g, "scan", lambda p, path: p.plot_levels(s, prof.energies, path), "scan.csv", "scan")
    w.finish()
    click.echo(f"min gap {g_min:.6g} at s={s_min:.6f} -> {w.path('scan.csv')}")


# ---------------------------------------------------------------------------
# simulate


def _schedule_for(spec, kind, T, s_fixed, epsilon, schedule_file):
    if kind == "constant_rate":
        if T is None:
            raise click.UsageError("--T is required for constant_rate")
        return constant_rate(T), None
    if kind == "constant_s":
        if T is None:
            raise click.UsageError("--T is required for constant_s")
        return constant_s(s_fixed, T), None
    if kind == "local_adiabatic":
        return local_adiabatic_schedule(spec, epsilon)[0], None
    if kind == "profile":
        profile = dj_reference_profile()
        return path_from_profile(profile)[1], profile
    if kind == "file":
        if not schedule_file:
            raise click.UsageError("--schedule-file is required for a file schedule")
        header, rows = read_csv(schedule_file)
        if header[:2] != ["t", "s"]:
            raise click.BadParameter("schedule CSV must start with columns t,s", param_hint="--schedule-file")
        return custom_schedule(rows[:, 0], rows[:, 1]), None
    raise click.UsageError(f"unknown schedule {kind!r}")


@main.command()
@spectrum_options
@click.option("--schedule", "schedule_kind",
              type=click.Choice(["constant_rate", "constant_s", "local_adiabatic", "profile", "file"]),
              default="profile", show_default=True)
@click.option("--T", "T", type=click.FloatRange(min=0.0, min_open=True), default=None, help="Total time.")
@click.option("--s-fixed", type=click.FloatRange(min=0.0, max=1.0, min_open=True, max_open=True), default=0.5,
              show_default=True, help="Held value for constant_s.")
@click.option("--epsilon", type=click.FloatRange(min=0.0, min_open=True), default=1.0, show_default=True)
@click.option("--schedule-file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--samples", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--method", type=click.Choice(["dp45", "magnus4"]), default="dp45", show_default=True)
@click.option("--cross-check", is_flag=True, help="Compare with the full-space oracle on a scrambled diagonal.")
@click.pass_context
@handle_errors
def simulate(ctx, family, n, kind, marked, offset, spectrum_file, schedule_kind, T, s_fixed, epsilon,
             schedule_file, samples, method, cross_check):
    """Integrate the reduced dynamics under one schedule."""
    g: Globals = ctx.obj
    spec = _spectrum(family, n, kind, marked, offset, spectrum_file)
    sched, profile = _schedule_for(spec, schedule_kind, T, s_fixed, epsilon, schedule_file)
    traj = integrate_reduced(spec, sched, tol=g.tol, sample_count=samples, method=method,
                             fixed_steps=g.fixed_steps)
    w = _writer(g, "simulate", ctx)
    w.csv("trajectory.csv", traj.header(), traj.rows())
    w.csv("schedule.csv", ["t", "s"], np.column_stack([sched.t, sched.s]))
    result = {
        "T": sched.total_time,
        "ground_probability": ground_probability(traj),
        "final_probabilities": traj.probabilities[-1],
        "norm_drift": traj.norm_drift,
        "schedule": sched.kind,
        "steps": traj.steps,
    }
    if cross_check:
        diag = scramble(spec, g.seed)
        full = integrate_full(diag, sched, tol=g.tol, fixed_steps=g.fixed_steps)
        agg, spread = aggregate_full_to_reduced(full, diag)
        result["cross_check"] = {
            "max_deviation": phase_distance(traj.final.amplitudes, agg.amplitudes),
            "intra_class_spread": spread,
            "full_class_probabilities": class_probabilities_full(full, diag),
            "full_norm_drift": abs(full.norm - 1.0),
        }
    w.json("result.json", result)
    _figure(w, g, "schedule", lambda p, path: p.plot_schedule(sched.t, sched.s, path), "schedule.csv", "schedule")
    ref = profile.p(traj.s) if profile is not None else None
    _figure(w, g, "trajectory",
            lambda p, path: p.plot_failure_probability(traj.s, traj.probabilities[:, 0], path, ref),
            "trajectory.csv", "trajectory")
    w.finish()
    msg = f"T={sched.total_time:.6g} p0={result['ground_probability']:.12f}"
    if cross_check:
        msg += f" cross-check deviation={result['cross_check']['max_deviation']:.3e}"
    click.echo(msg)


# ---------------------------------------------------------------------------
# scenarios


@main.group()
def scenario():
    """Case-study runs: dj, rem, grover, sweep."""


@scenario.command("dj")
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--kind", type=click.Choice(DJ_KINDS), default="balanced", show_default=True)
@click.option("--zeros", type=click.IntRange(min=0), default=None,
              help="Build the oracle with this many zero outputs instead of --kind (may break the promise).")
@click.pass_context
@handle_errors
def scenario_dj(ctx, n, kind, zeros):
    """Two-run Deutsch-Josza protocol on one scrambled oracle."""
    g: Globals = ctx.obj
    if zeros is None:
        spec = dj_spectrum(n, kind)
    else:
        N = 2**n
        if zeros > N:
            raise click.BadParameter(f"at most {N} zeros for n={n}", param_hint="--zeros")
        if zeros in (0, N):
            spec = dj_spectrum(n, "constant0" if zeros else "constant1")
        else:
            spec = SpectrumSpec(n, (0.0, 1.0), (zeros, N - zeros))
    oracle = scramble(spec, g.seed)
    w = _writer(g, "scenario_dj", ctx)
    try:
        verdict = run_deutsch_josza(oracle, seed=g.seed, tol=g.tol)
    except PromiseViolation as exc:
        w.json("dj.json", ScenarioReport("dj", _params(ctx), g.seed, extra={"error": str(exc)}).to_dict())
        w.finish()
        raise
    report = ScenarioReport("dj", _params(ctx), g.seed, T=verdict.run_time, verdict=verdict.verdict,
                            ground_probability=float(max(verdict.run1_probabilities)),
                            extra={"energies": [verdict.run1_energy, verdict.run2_energy],
                                   "deterministic": verdict.deterministic})
    w.json("dj.json", report.to_dict())
    w.finish()
    click.echo(f"readouts ({verdict.run1_energy:g}, {verdict.run2_energy:g}) -> {verdict.verdict}")


def _anneal_scenario(ctx, name, ns, runner, model_note, reference=None, **kw):
    g: Globals = ctx.obj
    results = [runner(n, **kw) for n in ns]
    w = _writer(g, f"scenario_{name}", ctx)
    header = ["n", "T", "epsilonT", "g_min", "s_min", "ground_probability", "norm_drift"]
    rows = [[r.n, r.T, r.epsilon_T, r.g_min, r.s_min,
             np.nan if r.ground_probability is None else r.ground_probability,
             np.nan if r.norm_drift is None else r.norm_drift] for r in results]
    w.csv("points.csv", header, rows)
    points = [[r.n, r.epsilon_T] for r in results]
    report = ScenarioReport(name, _params(ctx), g.seed, points=points)
    if len(results) == 1:
        r = results[0]
        report = r.report(name, _params(ctx), g.seed)
    else:
        fits = {}
        try:
            for model in ("log2_T_vs_n", "logT_vs_logN", "log2_nT_vs_n"):
                fits[model] = fit_scaling([(r.n, r.epsilon_T) for r in results], model).to_dict()
            report.slope = fits["log2_T_vs_n"]["slope"]
        except DegenerateFit as exc:
            fits["error"] = str(exc)
        report.extra = {"fits": fits, "note": model_note}
        ref = None
        if reference is not None:
            ref = (reference[0], [reference[1](r.n) for r in results])
        _figure(w, g, "scaling",
                lambda p, path: p.plot_scaling([r.n for r in results], [r.epsilon_T for r in results], path, ref),
                "points.csv", "scaling")
    w.json(f"{name}.json", report.to_dict())
    w.finish()
    for r in results:
        line = f"n={r.n} epsilonT={r.epsilon_T:.8g}"
        if r.ground_probability is not None:
            line += f" p0={r.ground_probability:.6f}"
        click.echo(line)
    if report.slope is not None:
        click.echo(f"slope log2(epsilonT) vs n: {report.slope:.4f}")
    return results


def _ns(n, sweep):
    if sweep:
        return _sweep_range(sweep)
    if n is None:
        raise click.UsageError("give --n or --sweep")
    return [n]


@scenario.command("rem")
@click.option("--n", "n", type=click.IntRange(min=4), default=None)
@click.option("--sweep", default=None, help="Range start:stop:step (inclusive), e.g. 20:40:4.")
@click.option("--epsilon", type=click.FloatRange(min=0.0, min_open=True), default=1.0, show_default=True)
@click.option("--grid", type=click.IntRange(min=64), default=1024, show_default=True)
@click.option("--dynamics", is_flag=True, help="Also integrate the reduced dynamics.")
@click.option("--bound", is_flag=True, help="Also report the constant-rate runtime from the global condition.")
@click.pass_context
@handle_errors
def scenario_rem(ctx, n, sweep, epsilon, grid, dynamics, bound):
    """Random energy model on a locally adiabatic schedule."""
    g: Globals = ctx.obj
    ns = _ns(n, sweep)
    if min(ns) < 4:
        raise click.BadParameter("REM runs need n >= 4", param_hint="--n/--sweep")
    results = _anneal_scenario(
        ctx, "rem", ns, run_rem, "epsilonT is the runtime with the epsilon prefactor removed",
        reference=("(3/(2n)) 2^(n/2)", lambda k: 1.5 / k * 2 ** (k / 2)),
        epsilon=epsilon, grid=grid, dynamics=dynamics, tol=g.tol,
    )
    if bound:
        for r in results:
            click.echo(f"n={r.n} constant-rate bound epsilonT={epsilon * rem_bound_runtime(r.n, epsilon):.8g}")


@scenario.command("grover")
@click.option("--n", "n", type=click.IntRange(min=1), default=None)
@click.option("--sweep", default=None, help="Range start:stop:step (inclusive), e.g. 8:20:2.")
@click.option("--marked", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--epsilon", type=click.FloatRange(min=0.0, min_open=True), default=1.0, show_default=True)
@click.option("--schedule", "schedule_kind", type=click.Choice(["local_adiabatic", "linear"]),
              default="local_adiabatic", show_default=True)
@click.option("--grid", type=click.IntRange(min=64), default=1024, show_default=True)
@click.option("--dynamics", is_flag=True, help="Also integrate the reduced dynamics.")
@click.pass_context
@handle_errors
def scenario_grover(ctx, n, sweep, marked, epsilon, schedule_kind, grid, dynamics):
    """Unstructured search with one or more marked items."""
    g: Globals = ctx.obj
    _anneal_scenario(
        ctx, "grover", _ns(n, sweep), run_grover, "linear means constant rate sized by the global condition",
        reference=("sqrt(N)", lambda k: 2 ** (k / 2)),
        marked=marked, epsilon=epsilon, schedule_kind=schedule_kind, grid=grid, dynamics=dynamics, tol=g.tol,
    )


@scenario.command("sweep")
@click.argument("family", type=click.Choice(["rem", "grover"]))
@click.argument("span")
@click.option("--epsilon", type=click.FloatRange(min=0.0, min_open=True), default=1.0, show_default=True)
@click.option("--schedule", "schedule_kind", type=click.Choice(["local_adiabatic", "linear"]),
              default="local_adiabatic", show_default=True)
@click.pass_context
def scenario_sweep(ctx, family, span, epsilon, schedule_kind):
    """Scaling sweep over SPAN (start:stop:step) for rem or grover."""
    if family == "rem":
        if schedule_kind != "local_adiabatic":
            raise click.BadParameter("rem sweeps use the local_adiabatic schedule", param_hint="--schedule")
        ctx.invoke(scenario_rem, sweep=span, epsilon=epsilon)
    else:
        ctx.invoke(scenario_grover, sweep=span, epsilon=epsilon, schedule_kind=schedule_kind)


if __name__ == "__main__":  # pragma: no cover
    main()
