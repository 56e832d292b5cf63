"""Annealing schedules s(t) and their synthesis.

A :class:`Schedule` is a set of knots ``(t_k, s_k)`` with optional exact
slopes ``ds/dt``; between knots it is a shape-preserving cubic.  Three
constructions produce knots from a density ``t'(s) = dt/ds``:

* :func:`local_adiabatic` from gap and V01 profiles, ``t' = V01 / (eps g^2)``;
* :func:`path_from_profile` from a target probability profile ``p(s)`` of a
  two-level (Deutsch-Josza) problem, giving a deterministic non-adiabatic path;
* :func:`schedule_from_tprime` for any density with integrable endpoint
  singularities, via the substitution ``s = sin^2(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

from .errors import (
    DivergentRuntime,
    EndpointSingularity,
    NonPositiveGap,
    PathIllDefined,
    QuadratureFailure,
)
from .quadrature import adaptive_simpson

KINDS = ("constant_rate", "constant_s", "local_adiabatic", "profile_driven", "custom")
DEFAULT_KNOTS = 1024
# theta is kept this far from 0 and pi/2 when a density is evaluated
_ENDPOINT_NUDGE = 1e-6
_MIN_WIDTH = 1e-7
_PROFILE_MIN_WIDTH = 64.0 * np.finfo(float).eps
_A_TOTAL_TOL = 1e-12


def _fritsch_carlson(t, s, slopes):
    """Limit slopes so the Hermite cubic stays monotone."""
    slopes = np.array(slopes, dtype=float)
    delta = np.diff(s) / np.diff(t)
    flat = delta == 0.0
    slopes[:-1][flat] = 0.0
    slopes[1:][flat] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = slopes[:-1] / delta
        beta = slopes[1:] / delta
    r2 = alpha**2 + beta**2
    over = ~flat & (r2 > 9.0)
    if np.any(over):
        tau = 3.0 / np.sqrt(r2[over])
        idx = np.flatnonzero(over)
        slopes[idx] = tau * alpha[over] * delta[over]
        slopes[idx + 1] = tau * beta[over] * delta[over]
    return slopes


@dataclass(frozen=True, eq=False)
class Schedule:
    """Monotone map t -> s on ``[0, total_time]``.

    ``slopes`` are exact ``ds/dt`` values at the knots when the construction
    knows them; otherwise a PCHIP interpolant is used.  For ``constant_s``
    the value ``hold`` applies on the whole open interval and the jumps from
    0 and to 1 at the ends are instantaneous.
    """

    t: np.ndarray
    s: np.ndarray
    kind: str = "custom"
    slopes: np.ndarray | None = field(default=None, repr=False)
    hold: float | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        s = np.asarray(self.s, dtype=float)
        if t.ndim != 1 or t.shape != s.shape or t.size < 2:
            raise ValueError("schedule needs matching 1-d knot arrays with at least two knots")
        if t[0] != 0.0:
            raise ValueError("schedule must start at t=0")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("knot times must be strictly increasing")
        if np.any((s < 0.0) | (s > 1.0)):
            raise ValueError("s must lie in [0, 1]")
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind != "constant_s" and np.any(np.diff(s) < 0.0):
            raise ValueError("s must be non-decreasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "s", s)
        if self.slopes is not None:
            slopes = _fritsch_carlson(t, s, np.asarray(self.slopes, dtype=float))
            object.__setattr__(self, "slopes", slopes)

    @property
    def total_time(self) -> float:
        return float(self.t[-1])

    @cached_property
    def _interp(self):
        if self.slopes is not None:
            return CubicHermiteSpline(self.t, self.s, self.slopes)
        return PchipInterpolator(self.t, self.s)

    def __call__(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.total_time)
        if self.kind == "constant_rate":
            return t / self.total_time
        if self.kind == "constant_s":
            return np.full_like(t, self.hold)
        out = self._interp(t)
        return np.clip(out, 0.0, 1.0)

    def rate(self, t):
        """ds/dt."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.total_time)
        if self.kind == "constant_rate":
            return np.full_like(t, 1.0 / self.total_time)
        if self.kind == "constant_s":
            return np.zeros_like(t)
        return self._interp.derivative()(t)

    def time_of(self, s) -> np.ndarray:
        """Inverse map s -> t (first time the schedule reaches s)."""
        if self.kind == "constant_s":
            raise ValueError("a constant-s schedule has no inverse")
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s)
        for i, target in enumerate(s):
            k = int(np.searchsorted(self.s, target, side="left"))
            if k < self.s.size and self.s[k] == target:
                out[i] = self.t[k]
                continue
            if k == 0 or k == self.s.size:
                raise ValueError(f"s={target} is outside the schedule range")
            a, b = self.t[k - 1], self.t[k]
            out[i] = brentq(lambda x: float(self(x)) - target, a, b, xtol=1e-15, rtol=1e-15)
        return out

    def breakpoints(self) -> np.ndarray:
        """Knot times, where the interpolant is only C^1."""
        return self.t


def constant_rate(T: float) -> Schedule:
    if not T > 0:
        raise ValueError(f"runtime must be positive, got {T}")
    return Schedule(np.array([0.0, T]), np.array([0.0, 1.0]), "constant_rate")


def constant_s(s_fixed: float, T: float) -> Schedule:
    """Hold ``H(s_fixed)`` for time ``T``; the ramps at the ends are instantaneous."""
    if not 0.0 < s_fixed < 1.0:
        raise ValueError(f"s_fixed must lie in (0, 1), got {s_fixed}")
    if not T > 0:
        raise ValueError(f"runtime must be positive, got {T}")
    return Schedule(np.array([0.0, T]), np.array([s_fixed, s_fixed]), "constant_s", hold=float(s_fixed))


def custom_schedule(t, s) -> Schedule:
    return Schedule(np.asarray(t, dtype=float), np.asarray(s, dtype=float), "custom")


def _schedule_from_quadrature(res, rate_scale: float, kind: str) -> Schedule:
    # res integrates dt/ds over s; knots are its nodes
    t = res.cumulative * rate_scale
    s = res.nodes
    with np.errstate(divide="ignore"):
        slopes = 1.0 / (res.fvals * rate_scale)
    keep = np.concatenate([[True], np.diff(t) > 0.0])
    return Schedule(t[keep], s[keep], kind, slopes=slopes[keep])


def local_adiabatic(
    gap_fn: Callable,
    v01_fn: Callable,
    epsilon: float,
    grid: int = DEFAULT_KNOTS,
    breakpoints=(),
    rtol: float = 1e-9,
    atol: float = 1e-10,
) -> Schedule:
    """Locally adiabatic schedule ``ds/dt = epsilon g(s)^2 / V01(s)``.

    ``gap_fn`` and ``v01_fn`` take arrays of s.  ``breakpoints`` are extra
    points (typically the location of the minimum gap) handed to the
    quadrature so narrow features are not stepped over.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if grid < 64:
        raise ValueError("grid must have at least 64 intervals")

    def density(s):
        g = np.asarray(gap_fn(s), dtype=float)
        if np.any(g <= 0.0):
            raise NonPositiveGap(f"gap is not positive at s={s[g <= 0.0][:3]}")
        return np.asarray(v01_fn(s), dtype=float) / g**2

    return local_adiabatic_from_density(density, epsilon, grid, breakpoints, rtol, atol)


def local_adiabatic_from_density(density, epsilon, grid=DEFAULT_KNOTS, breakpoints=(), rtol=1e-9, atol=1e-10):
    """Same as :func:`local_adiabatic` for a precomputed ``V01/g^2`` density."""
    pts = np.concatenate([np.linspace(0.0, 1.0, grid + 1), [b for b in breakpoints if 0.0 < b < 1.0]])
    # near a small gap the density is a tall narrow peak holding most of the
    # integral, so panels are judged against their own size (local_rtol)
    # rather than a width share of the total
    res = adaptive_simpson(density, pts, atol=atol, local_rtol=rtol)
    return _schedule_from_quadrature(res, 1.0 / epsilon, "local_adiabatic")


# ---------------------------------------------------------------------------
# densities with 1/sqrt endpoint singularities


def _theta_integrand(tprime):
    # t'(s) sin(2 theta) has finite limits at both ends; evaluating it there
    # would be 0 * inf, so theta is held a small distance inside
    half_pi = 0.5 * math.pi

    def g(theta):
        theta = np.clip(theta, _ENDPOINT_NUDGE, half_pi - _ENDPOINT_NUDGE)
        return np.asarray(tprime(np.sin(theta) ** 2), dtype=float) * np.sin(2.0 * theta)

    return g


def _runtime_quadrature(tprime, theta, atol):
    # within ~1e-4 of either end 1-s has lost most of its digits and the
    # integrand is noisy at the 1e-8 level; MIN_WIDTH stops refinement there
    try:
        res = adaptive_simpson(_theta_integrand(tprime), theta, atol=atol, min_width=_MIN_WIDTH)
    except QuadratureFailure as exc:
        raise DivergentRuntime(f"runtime integral failed: {exc}") from exc
    if not math.isfinite(res.value):
        raise DivergentRuntime("runtime integral is not finite")
    return res


def schedule_from_tprime(tprime, grid: int = DEFAULT_KNOTS, kind: str = "custom", atol: float = 1e-10) -> Schedule:
    """Integrate and invert ``t'(s)`` into a schedule.

    Knots are uniform in theta with ``s = sin^2(theta)``, which clusters them
    at both ends and removes ``1/sqrt(s)`` and ``1/sqrt(1-s)`` divergences.
    """
    theta = np.linspace(0.0, 0.5 * math.pi, grid + 1)
    res = _runtime_quadrature(tprime, theta, atol)
    at = res.node_index(theta)
    t = res.cumulative[at]
    s = np.sin(theta) ** 2
    s[-1] = 1.0
    slopes = np.zeros_like(s)
    interior = slice(1, -1)
    slopes[interior] = 1.0 / np.asarray(tprime(s[interior]), dtype=float)
    return Schedule(t, s, kind, slopes=slopes)


def runtime(obj, atol: float = 1e-10) -> float:
    """Total time of a schedule, or ``int_0^1 t'(s) ds`` for a density."""
    if isinstance(obj, Schedule):
        return obj.total_time
    theta = np.linspace(0.0, 0.5 * math.pi, 65)
    return _runtime_quadrature(obj, theta, atol).value


# ---------------------------------------------------------------------------
# deterministic two-level paths from a probability profile


@dataclass(frozen=True)
class ProbabilityProfile:
    """Target probability ``p(s)`` of the zero-energy class and its derivative.

    Both callables take arrays.  A usable profile has ``p(0) = 1/2`` and
    ``p(1) = 1``.
    """

    p: Callable
    dp: Callable
    name: str = "custom"

    def check_boundaries(self, tol: float = 1e-12) -> None:
        p0, p1 = (float(np.asarray(self.p(np.array([x])))[0]) for x in (0.0, 1.0))
        if abs(p0 - 0.5) > tol or abs(p1 - 1.0) > tol:
            raise PathIllDefined(f"profile must satisfy p(0)=1/2 and p(1)=1, got p(0)={p0}, p(1)={p1}")


def dj_reference_profile() -> ProbabilityProfile:
    """``p(s) = (1 + 6 s^2 - 8 s^3 + 3 s^4) / 2``."""
    return ProbabilityProfile(
        p=lambda s: 0.5 * (1.0 + 6.0 * s**2 - 8.0 * s**3 + 3.0 * s**4),
        dp=lambda s: 6.0 * s * (1.0 - s) ** 2,
        name="dj_reference",
    )


def dj_reference_tprime(s):
    """Closed-form path density generated by :func:`dj_reference_profile`."""
    s = np.asarray(s, dtype=float)
    if np.any((s <= 0.0) | (s >= 1.0)):
        raise EndpointSingularity("t'(s) diverges at s=0 and s=1")
    u = s * (1.0 - s)
    out = 6.0 * math.sqrt(2.0) / np.sqrt(u * (4.0 - 9.0 * u))
    return out if out.ndim else float(out)


def dj_adiabatic_tprime(epsilon: float):
    """Locally adiabatic density ``1/(eps (1 - 2 s (1-s)))`` of the balanced problem."""

    def tprime(s):
        s = np.asarray(s, dtype=float)
        return 1.0 / (epsilon * (1.0 - 2.0 * s * (1.0 - s)))

    return tprime


# Candidate groupings of the q(s) expression.  ``integrand`` names the
# quantity divided by (1-s')^2 under the integral; ``scaled`` says whether t'
# carries an extra 1/(1-s).
Q_GROUPINGS = {
    "dp_integrand": {"integrand": "dp", "scaled": False},
    "dp_integrand_scaled": {"integrand": "dp", "scaled": True},
    "p_integrand": {"integrand": "p", "scaled": False},
    "p_integrand_scaled": {"integrand": "p", "scaled": True},
}
RESOLVED_Q_GROUPING = "p_integrand_scaled"


def direct_tprime(profile: ProbabilityProfile, s, grouping: str = RESOLVED_Q_GROUPING):
    """t'(s) computed directly from the q(s) expression under one grouping.

    Suffers cancellation close to s=0 and s=1; use on the interior only.
    """
    rule = Q_GROUPINGS[grouping]
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any((s <= 0.0) | (s >= 1.0)):
        raise EndpointSingularity("direct t'(s) is only defined on (0, 1)")
    inner = profile.dp if rule["integrand"] == "dp" else profile.p
    res = adaptive_simpson(
        lambda x: np.asarray(inner(x), dtype=float) / (1.0 - x) ** 2,
        np.concatenate([[0.0], s]),
        atol=0.0,
        local_rtol=1e-14,
    )
    integral = res.cumulative[res.node_index(s)]
    p = np.asarray(profile.p(s), dtype=float)
    w = np.sqrt(p * (1.0 - p))
    q = (1.0 - s * (1.0 + 2.0 * p) + 2.0 * (1.0 - s) * integral) / (2.0 * (1.0 - s) * w)
    with np.errstate(invalid="ignore"):
        tp = np.asarray(profile.dp(s), dtype=float) / (w * np.sqrt(1.0 - q**2))
    if rule["scaled"]:
        tp = tp / (1.0 - s)
    return tp


def resolve_q_grouping(profile=None, reference=dj_reference_tprime, tol: float = 1e-8, s=None) -> str:
    """First grouping in :data:`Q_GROUPINGS` whose t'(s) matches ``reference``.

    Raises :class:`PathIllDefined` when none does.
    """
    profile = dj_reference_profile() if profile is None else profile
    s = np.linspace(0.05, 0.95, 91) if s is None else np.asarray(s, dtype=float)
    want = reference(s)
    for name in Q_GROUPINGS:
        got = direct_tprime(profile, s, name)
        if np.all(np.isfinite(got)) and np.max(np.abs(got - want)) <= tol:
            return name
    raise PathIllDefined("no grouping of q(s) reproduces the reference path")


class ProfilePath:
    """Path density ``t'(s)`` generated by a probability profile.

    Uses the resolved q(s) grouping, rewritten so that no step cancels:

        q = (1/2 - A(s)) / w,       A(s) = int_0^s u p'(u) / (1-u) du,
        1 - q = (A - (p - 1/2)^2 / (w + 1/2)) / w,
        t' = p' / (w (1 - s) sqrt((1 - q)(1 + q))),    w = sqrt(p (1-p)),

    with ``p - 1/2`` and ``1 - p`` taken from running integrals of ``p'`` so
    both stay accurate where they are tiny.  The ``A`` form equals the
    ``int p/(1-u)^2`` form by integration by parts.
    """

    def __init__(self, profile: ProbabilityProfile, grid: int = DEFAULT_KNOTS, local_rtol: float = 1e-13):
        profile.check_boundaries()
        self.profile = profile
        self.local_rtol = local_rtol
        self._check_end_slope()
        theta = np.linspace(0.0, 0.5 * math.pi, grid + 1)
        self._grid = np.sin(theta) ** 2
        self._grid[-1] = 1.0
        # A(1) - 1/2 must vanish for q to stay bounded as s -> 1; what is left
        # after quadrature is rounding, which w ~ (1-s) would blow up
        _, _, a_head, a_tail = self._integrals(np.array([0.5]))
        a_total = float(a_head[0] + a_tail[0])
        if abs(a_total - 0.5) > _A_TOTAL_TOL:
            raise PathIllDefined(f"int_0^1 u p'(u)/(1-u) du = {a_total:.15g}, must equal 1/2 for a finite path")
        self._a_total = 0.5

    def _dp(self, u):
        return np.asarray(self.profile.dp(u), dtype=float)

    def _check_end_slope(self):
        # a finite path needs p'(s)/(1-s) -> 0 as s -> 1; otherwise t' grows
        # at least like 1/(1-s) and the runtime diverges
        d = np.array([1e-4, 1e-6])
        r = np.abs(self._dp(1.0 - d)) / d
        if not np.all(np.isfinite(r)) or (r[1] > 1e-8 and r[1] > 0.5 * r[0]):
            raise PathIllDefined("profile slope p'(s) must vanish faster than (1-s) at s=1")

    def _weighted(self, u):
        # at u=1 the integrand's limit is 0 for any profile with a finite path
        r = 1.0 - u
        safe = np.where(r > 0.0, r, 1.0)
        return np.where(r > 0.0, u * self._dp(u) / safe, 0.0)

    def _integrals(self, s):
        pts = np.unique(np.concatenate([self._grid, s]))
        at = np.searchsorted(pts, s)
        out = []
        for fn in (self._dp, self._weighted):
            # for p' vanishing like a high power at an end, the relative error of
            # the end panel does not shrink with its width; accept panels a few
            # ulps wide, whose mass is far below anything the path uses
            res = adaptive_simpson(fn, pts, atol=0.0, local_rtol=self.local_rtol, min_width=_PROFILE_MIN_WIDTH)
            idx = res.node_index(pts)[at]
            out.append(res.cumulative[idx])
            out.append(res.reverse_cumulative()[idx])
        head, tail, a_head, a_tail = out
        return head, tail, a_head, a_tail

    def pieces(self, s):
        """``(p, 1-p, q, 1-q)`` at interior points."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        head, tail, a_head, a_tail = self._integrals(s)
        low = s <= 0.5
        p = np.where(low, 0.5 + head, 1.0 - tail)
        pc = np.where(low, 0.5 - head, tail)
        w = np.sqrt(p * pc)
        half_minus_a = np.where(low, 0.5 - a_head, (0.5 - self._a_total) + a_tail)
        q = half_minus_a / w
        one_minus_q = np.where(low, (a_head - head**2 / (w + 0.5)) / w, 1.0 - q)
        return p, pc, q, one_minus_q

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any((s_arr <= 0.0) | (s_arr >= 1.0)):
            raise EndpointSingularity("t'(s) diverges at s=0 and s=1")
        p, pc, q, one_minus_q = self.pieces(s_arr)
        one_minus_q2 = one_minus_q * (2.0 - one_minus_q)
        if np.any(one_minus_q2 <= 0.0) or np.any(~np.isfinite(one_minus_q2)):
            bad = s_arr[~(one_minus_q2 > 0.0)]
            raise PathIllDefined(f"q(s)^2 >= 1 at s={bad[:3]}")
        w = np.sqrt(p * pc)
        out = self._dp(s_arr) / (w * (1.0 - s_arr) * np.sqrt(one_minus_q2))
        return out if np.ndim(s) else float(out[0])


def path_from_profile(profile: ProbabilityProfile, grid: int = DEFAULT_KNOTS):
    """Deterministic two-level path from a probability profile.

    Returns ``(tprime, schedule)``: the density ``t'(s)`` as a callable and
    the schedule obtained by integrating and inverting it.
    """
    tprime = ProfilePath(profile, grid)
    interior = tprime._grid[1:-1]
    tprime(interior)  # raises PathIllDefined where q^2 >= 1
    schedule = schedule_from_tprime(tprime, grid, kind="profile_driven")
    return tprime, schedule
