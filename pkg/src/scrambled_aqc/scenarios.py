"""End-to-end runs: Deutsch-Josza, random energy model, Grover, scaling fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import ground_probability, integrate_reduced
from .errors import DegenerateFit, PromiseViolation
from .integrate import DEFAULT_RTOL
from .schedules import (
    DEFAULT_KNOTS,
    Schedule,
    constant_rate,
    dj_reference_profile,
    local_adiabatic_from_density,
    path_from_profile,
)
from .spectral import gap_minima, numeric_min_gap, spectral_profile
from .spectrum import (
    ScrambledDiagonal,
    SpectrumSpec,
    complement_spectrum,
    grover_spectrum,
    rem_spectrum,
)

READOUT_TOL = 1e-6
LOCAL_ADIABATIC_RTOL = 1e-9
FIT_MODELS = ("log2_T_vs_n", "logT_vs_logN", "log2_nT_vs_n")


# ---------------------------------------------------------------------------
# reports


@dataclass
class ScenarioReport:
    """Serializable summary of one scenario run."""

    scenario: str
    params: dict
    seed: int | None = None
    T: float | None = None
    epsilonT: float | None = None
    ground_probability: float | None = None
    verdict: str | None = None
    points: list | None = None
    slope: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "extra" and v is not None}
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class ScalingReport:
    points: tuple
    fitted_slope: float
    intercept: float
    fit_residual: float
    model: str

    def to_dict(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "slope": self.fitted_slope,
            "intercept": self.intercept,
            "residual": self.fit_residual,
            "model": self.model,
        }


def fit_scaling(points, model: str = "log2_T_vs_n") -> ScalingReport:
    """Least-squares line through ``(n, T)`` points on log axes.

    ``log2_T_vs_n`` fits log2(T) against n; ``logT_vs_logN`` fits ln(T)
    against ln(2**n), which has the same slope; ``log2_nT_vs_n`` fits
    log2(n T) against n, removing a 1/n prefactor.  The residual is the root
    mean square deviation from the line.
    """
    if model not in FIT_MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {FIT_MODELS}")
    pts = sorted((int(n), float(T)) for n, T in points)
    if len(pts) < 4:
        raise DegenerateFit(f"need at least 4 points, got {len(pts)}")
    n = np.array([p[0] for p in pts], dtype=float)
    T = np.array([p[1] for p in pts])
    if np.unique(n).size < 2:
        raise DegenerateFit("all points have the same n")
    if np.any(~np.isfinite(T)) or np.any(T <= 0):
        raise DegenerateFit("runtimes must be positive and finite")
    if model == "log2_T_vs_n":
        x, y = n, np.log2(T)
    elif model == "logT_vs_logN":
        x, y = n * math.log(2.0), np.log(T)
    else:
        x, y = n, np.log2(n * T)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return ScalingReport(tuple(pts), float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), model)


# ---------------------------------------------------------------------------
# Deutsch-Josza


@dataclass(frozen=True)
class DJVerdict:
    run1_energy: float
    run2_energy: float
    verdict: str
    run_time: float = float("nan")
    run1_probabilities: tuple = ()
    run2_probabilities: tuple = ()
    deterministic: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=8)
def dj_reference_schedule(grid: int = DEFAULT_KNOTS) -> Schedule:
    """Profile-driven schedule for the reference profile (cached)."""
    return path_from_profile(dj_reference_profile(), grid)[1]


# the reduced dynamics only see (values, eta) with E_0 = 1, so n and the
# scramble drop out and protocol runs are shared between oracles
_DJ_RUNS: dict = {}


def _dj_class_probabilities(spec: SpectrumSpec, grid: int, tol: float):
    key = (spec.values, tuple(spec.eta.tolist()), spec.driver_scale, grid, tol)
    if key not in _DJ_RUNS:
        traj = integrate_reduced(spec, dj_reference_schedule(grid), tol=tol)
        _DJ_RUNS[key] = (tuple(traj.probabilities[-1]), traj.norm_drift)
    return _DJ_RUNS[key]


def _check_promise(oracle: ScrambledDiagonal):
    spec = oracle.spec
    if spec.offset != 0.0 or not set(spec.values) <= {0.0, 1.0}:
        raise PromiseViolation(f"oracle values {spec.values} (offset {spec.offset}) are not a 0/1 function")
    if len(spec.values) == 2 and spec.multiplicities[0] != spec.multiplicities[1]:
        raise PromiseViolation(f"oracle is neither constant nor balanced: counts {spec.multiplicities}")


def _readout(spec: SpectrumSpec, probs, rng):
    probs = np.asarray(probs)
    j = int(np.argmax(probs))
    if probs[j] >= 1.0 - READOUT_TOL:
        return spec.offset + spec.values[j], True
    j = int(rng.choice(probs.size, p=probs / probs.sum()))
    return spec.offset + spec.values[j], False


def run_deutsch_josza(
    oracle: ScrambledDiagonal,
    seed: int | None = None,
    grid: int = DEFAULT_KNOTS,
    tol: float = DEFAULT_RTOL,
    check_promise: bool = True,
) -> DJVerdict:
    """Two-run protocol: anneal with ``F``, then with ``1 - F``, read out energies.

    Both runs use the profile-driven schedule, whose length does not depend
    on n.  Readouts are exact when a class has probability ``>= 1 - 1e-6``
    and sampled with ``seed`` otherwise.  Balanced iff both readouts are 0;
    a (1, 1) pair cannot happen for a promise-respecting oracle and raises
    :class:`PromiseViolation`.
    """
    if check_promise:
        _check_promise(oracle)
    rng = np.random.default_rng(seed)
    energies, probs, exact = [], [], []
    for spec in (oracle.spec, complement_spectrum(oracle.spec)):
        p, _ = _dj_class_probabilities(spec, grid, tol)
        e, det = _readout(spec, p, rng)
        energies.append(e)
        probs.append(p)
        exact.append(det)
    e1, e2 = energies
    zero1, zero2 = abs(e1) <= READOUT_TOL, abs(e2) <= READOUT_TOL
    if zero1 and zero2:
        verdict = "balanced"
    elif zero1 != zero2:
        verdict = "constant"
    else:
        raise PromiseViolation(f"readouts ({e1}, {e2}) are impossible for a constant or balanced oracle")
    T = dj_reference_schedule(grid).total_time
    return DJVerdict(e1, e2, verdict, T, probs[0], probs[1], all(exact))


def dj_norm_drift(oracle: ScrambledDiagonal, grid: int = DEFAULT_KNOTS, tol: float = DEFAULT_RTOL) -> float:
    """Largest weighted-norm drift over the two protocol runs."""
    out = 0.0
    for spec in (oracle.spec, complement_spectrum(oracle.spec)):
        _, drift = _dj_class_probabilities(spec, grid, tol)
        out = max(out, drift)
    return out


# ---------------------------------------------------------------------------
# locally adiabatic runs from numeric spectra


def _dip_breakpoints(spec: SpectrumSpec, solver: str = "auto", grid: int = 512):
    """Points clustered geometrically around every gap minimum."""
    g_min, s_min = numeric_min_gap(spec, solver, grid)
    # the gap rises roughly like sqrt(g_min^2 + (slope (s - s_min))^2), with
    # slope bounded by the spread of the diagonal plus the driver scale
    slope = (spec.f[-1] - spec.f[0]) + spec.driver_scale
    width = g_min / slope
    pts = [s_min]
    centres = [s_min] + [c for c in gap_minima(spec, solver, grid) if abs(c - s_min) > 2.0 / grid]
    for c in centres:
        k = 0
        while width * 2**k < 1.0:
            for x in (c - width * 2**k, c + width * 2**k):
                if 0.0 < x < 1.0:
                    pts.append(x)
            k += 1
    return np.array(pts), g_min, s_min, slope


def adiabatic_density(spec: SpectrumSpec, solver: str = "auto"):
    """``s -> V01(s) / g(s)^2`` from numeric spectra."""

    def density(s):
        prof = spectral_profile(spec, s, solver)
        return prof.v01 / prof.gap**2

    return density


def local_adiabatic_schedule(spec: SpectrumSpec, epsilon: float, grid: int = DEFAULT_KNOTS, solver: str = "secular"):
    """Locally adiabatic schedule with quadrature breakpoints at the gap minima.

    The secular solver is the default because it keeps the gap to full
    relative precision; a dense solver's absolute error becomes visible in
    ``V01/g^2`` once the gap drops below about 1e-4 of the spectral width.

    Returns ``(schedule, g_min, s_min)``.
    """
    pts, g_min, s_min, slope = _dip_breakpoints(spec, solver)
    # one ulp of s moves the gap by about slope*eps near the minimum, which
    # sets the attainable relative accuracy of V01/g^2 there
    rtol = max(LOCAL_ADIABATIC_RTOL, 4.0 * np.finfo(float).eps * slope / g_min)
    sched = local_adiabatic_from_density(adiabatic_density(spec, solver), epsilon, grid, pts, rtol=rtol)
    return sched, g_min, s_min


def bound_runtime(spec: SpectrumSpec, epsilon: float, grid: int = 2048, solver: str = "auto") -> float:
    """Constant-rate runtime ``max V01 / (epsilon g_min^2)`` from the global
    adiabatic condition."""
    g_min, _ = numeric_min_gap(spec, solver)
    s = np.linspace(0.0, 1.0, grid + 1)
    v_max = float(np.max(spectral_profile(spec, s, solver).v01))
    return v_max / (epsilon * g_min**2)


@dataclass(frozen=True, eq=False)
class AnnealResult:
    """Outcome of one annealing run on a reduced system."""

    n: int
    epsilon: float
    T: float
    schedule_kind: str
    g_min: float
    s_min: float
    ground_probability: float | None = None
    norm_drift: float | None = None
    schedule: Schedule | None = field(default=None, repr=False)
    trajectory: object = field(default=None, repr=False)

    @property
    def epsilon_T(self) -> float:
        return self.epsilon * self.T

    def report(self, scenario: str, params: dict, seed=None) -> ScenarioReport:
        extra = {"g_min": self.g_min, "s_min": self.s_min, "schedule_kind": self.schedule_kind}
        if self.norm_drift is not None:
            extra["norm_drift"] = self.norm_drift
        return ScenarioReport(
            scenario, params, seed, T=self.T, epsilonT=self.epsilon_T,
            ground_probability=self.ground_probability, extra=extra,
        )


def anneal(
    spec: SpectrumSpec,
    epsilon: float,
    schedule_kind: str = "local_adiabatic",
    grid: int = DEFAULT_KNOTS,
    dynamics: bool = True,
    tol: float = DEFAULT_RTOL,
    method: str = "magnus4",
    sample_count: int = 200,
    solver: str = "secular",
) -> AnnealResult:
    """Build a schedule for ``spec`` and optionally run the reduced dynamics.

    ``schedule_kind`` is ``local_adiabatic`` or ``constant_rate`` (alias
    ``linear``), the latter sized by :func:`bound_runtime`.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if schedule_kind == "local_adiabatic":
        sched, g_min, s_min = local_adiabatic_schedule(spec, epsilon, grid, solver)
    elif schedule_kind in ("constant_rate", "linear"):
        g_min, s_min = numeric_min_gap(spec, solver)
        sched = constant_rate(bound_runtime(spec, epsilon, solver=solver))
        schedule_kind = "constant_rate"
    else:
        raise ValueError(f"unknown schedule kind {schedule_kind!r}")
    p0 = drift = traj = None
    if dynamics:
        traj = integrate_reduced(spec, sched, tol=tol, method=method, sample_count=sample_count)
        p0 = ground_probability(traj)
        drift = traj.norm_drift
    return AnnealResult(spec.n, epsilon, sched.total_time, schedule_kind, g_min, s_min, p0, drift, sched, traj)


def run_rem(n: int, epsilon: float = 1.0, grid: int = DEFAULT_KNOTS, dynamics: bool = False, **kw) -> AnnealResult:
    """Random energy model with ``E_0 = n`` on a locally adiabatic schedule."""
    if n < 4:
        raise ValueError(f"REM runs need n >= 4, got {n}")
    return anneal(rem_spectrum(n), epsilon, "local_adiabatic", grid, dynamics, **kw)


def rem_bound_runtime(n: int, epsilon: float = 1.0) -> float:
    """Constant-rate REM runtime sized by the global condition."""
    return bound_runtime(rem_spectrum(n), epsilon)


def run_grover(
    n: int, marked: int = 1, epsilon: float = 1.0, schedule_kind: str = "local_adiabatic",
    grid: int = DEFAULT_KNOTS, dynamics: bool = True, **kw,
) -> AnnealResult:
    return anneal(grover_spectrum(n, marked), epsilon, schedule_kind, grid, dynamics, **kw)


def sweep(runner, ns, model: str = "log2_T_vs_n", use_epsilon_T: bool = True, **kw):
    """Run ``runner(n, **kw)`` over ``ns`` and fit the runtimes."""
    results = [runner(n, **kw) for n in ns]
    points = [(r.n, r.epsilon_T if use_epsilon_T else r.T) for r in results]
    return results, fit_scaling(points, model)
