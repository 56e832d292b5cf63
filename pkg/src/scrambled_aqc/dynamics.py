"""Reduced and full-space Schrödinger dynamics.

The reduced system evolves one amplitude ``c_j`` per output class,

    i dc_j/dt = -(1-s) E_0 sum_k eta_k c_k + s f_j c_j,

starting from ``c_j = 1``.  Internally it is integrated in the variables
``b_j = sqrt(eta_j) c_j``, where the generator is the real symmetric matrix
``s diag(f) - (1-s) E_0 v v^T`` with ``v = sqrt(eta)`` and the Euclidean norm
of ``b`` is conserved.  The offset ``e_0`` only contributes a global phase
and is left out.

The full system over a concrete :class:`ScrambledDiagonal` keeps the offset
and applies the rank-one driver matrix-free.  It exists to check the
reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionTooLarge, ToleranceNotMet
from .integrate import DEFAULT_ATOL, DEFAULT_RTOL, dp45, magnus4, rk4
from .schedules import Schedule
from .spectrum import ORACLE_MAX_N, ScrambledDiagonal, SpectrumSpec

DEFAULT_SAMPLES = 200
# norm drift allowed relative to the integration tolerance
NORM_DRIFT_FACTOR = 10.0
_TIGHTENING = (1.0, 0.1, 0.01)


@dataclass(frozen=True)
class ReducedState:
    """Class amplitudes ``c_j`` at one time; ``eta`` are the class weights."""

    amplitudes: np.ndarray
    eta: np.ndarray = field(repr=False)
    time: float = 0.0

    @property
    def probabilities(self) -> np.ndarray:
        return self.eta * np.abs(self.amplitudes) ** 2

    @property
    def weighted_norm(self) -> float:
        return float(np.sum(self.probabilities))


@dataclass(frozen=True, eq=False)
class ReducedTrajectory:
    """Samples of the reduced dynamics.

    ``amplitudes[k]`` holds ``c`` at ``times[k]``; ``s[k]`` is the schedule
    value there.
    """

    times: np.ndarray
    s: np.ndarray
    amplitudes: np.ndarray
    spec: SpectrumSpec = field(repr=False)
    schedule: Schedule = field(repr=False)
    steps: int = 0

    @property
    def eta(self) -> np.ndarray:
        return self.spec.eta

    @property
    def probabilities(self) -> np.ndarray:
        return self.eta * np.abs(self.amplitudes) ** 2

    @property
    def weighted_norm(self) -> np.ndarray:
        return np.sum(self.probabilities, axis=1)

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.weighted_norm - 1.0)))

    def state(self, k: int = -1) -> ReducedState:
        return ReducedState(self.amplitudes[k], self.eta, float(self.times[k]))

    @property
    def final(self) -> ReducedState:
        return self.state(-1)

    def rows(self):
        """``(t, s, p_0..p_K, weighted_norm)`` rows for export."""
        p = self.probabilities
        return np.column_stack([self.times, self.s, p, p.sum(axis=1)])

    def header(self):
        return ["t", "s"] + [f"p_{j}" for j in range(self.spec.K + 1)] + ["weighted_norm"]


@dataclass(frozen=True, eq=False)
class FullState:
    amplitudes: np.ndarray
    time: float = 0.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def initial_reduced(spec: SpectrumSpec) -> ReducedState:
    return ReducedState(np.ones(spec.K + 1, dtype=complex), spec.eta, 0.0)


def uniform_state(n: int) -> FullState:
    N = 1 << n
    return FullState(np.full(N, 1.0 / math.sqrt(N), dtype=complex), 0.0)


def _sample_times(T, sample_count, backward):
    if sample_count < 1:
        raise ValueError("sample_count must be positive")
    t = np.linspace(0.0, T, sample_count + 1)
    t[-1] = T
    return t[::-1] if backward else t


def _solve(rhs, hamiltonian, y0, t_eval, tol, atol, method, fixed_steps):
    if fixed_steps:
        return rk4(rhs, y0, t_eval, fixed_steps)
    if method == "dp45":
        return dp45(rhs, y0, t_eval, rtol=tol, atol=atol)
    if method == "magnus4":
        if hamiltonian is None:
            raise ValueError("magnus4 needs a dense Hamiltonian")
        return magnus4(hamiltonian, y0, t_eval, rtol=tol, atol=atol)
    if method == "rk4":
        raise ValueError("rk4 needs fixed_steps")
    raise ValueError(f"unknown method {method!r}")


def _solve_conserving(rhs, hamiltonian, y0, t_eval, tol, atol, method, fixed_steps, drift_of):
    """Integrate, tightening the step control until the norm drift is within
    ``NORM_DRIFT_FACTOR * tol``.

    Local error control does not bound the accumulated drift over long runs,
    so adaptive runs are repeated with 10x and 100x tighter internal
    tolerances before giving up.
    """
    tightenings = (1.0,) if fixed_steps else _TIGHTENING
    for k in tightenings:
        out, stats = _solve(rhs, hamiltonian, y0, t_eval, tol * k, atol * k, method, fixed_steps)
        drift = drift_of(out)
        if drift <= NORM_DRIFT_FACTOR * tol:
            break
    _check_norm(drift, tol, fixed_steps)
    return out, stats


def _check_norm(drift, tol, fixed_steps=None):
    limit = NORM_DRIFT_FACTOR * tol
    if drift > limit:
        hint = f" (fixed-step run with {fixed_steps} steps; use more)" if fixed_steps else ""
        raise ToleranceNotMet(f"norm drifted by {drift:.3e}, limit {limit:.3e}{hint}")


def integrate_reduced(
    spec: SpectrumSpec,
    schedule: Schedule,
    tol: float = DEFAULT_RTOL,
    sample_count: int = DEFAULT_SAMPLES,
    method: str = "dp45",
    atol: float = DEFAULT_ATOL,
    fixed_steps: int | None = None,
    initial: ReducedState | None = None,
    backward: bool = False,
) -> ReducedTrajectory:
    """Integrate the class amplitudes under ``schedule``.

    Samples are taken at ``sample_count`` uniform intervals of ``[0, T]``.
    With ``backward=True`` the run goes from ``T`` to 0, starting from
    ``initial`` (required), and the samples are in decreasing time.
    """
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if backward and initial is None:
        raise ValueError("a backward run needs an initial state at t=T")
    f = spec.f
    v = np.sqrt(spec.eta)
    E0 = spec.driver_scale
    start = initial_reduced(spec) if initial is None else initial
    b0 = v * np.asarray(start.amplitudes, dtype=complex)

    def rhs(t, b):
        s = float(schedule(t))
        return -1j * (s * f * b - (1.0 - s) * E0 * v * np.dot(v, b))

    outer = np.outer(v, v)

    def hamiltonian(t):
        s = float(schedule(t))
        return s * np.diag(f) - (1.0 - s) * E0 * outer

    t_eval = _sample_times(schedule.total_time, sample_count, backward)
    b, stats = _solve_conserving(
        rhs, hamiltonian, b0, t_eval, tol, atol, method, fixed_steps,
        lambda out: float(np.max(np.abs(np.sum(np.abs(out) ** 2, axis=1) - 1.0))),
    )
    c = b / v
    return ReducedTrajectory(t_eval, np.asarray(schedule(t_eval)), c, spec, schedule, stats.accepted)


def integrate_full(
    diag: ScrambledDiagonal,
    schedule: Schedule,
    E0: float | None = None,
    tol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    fixed_steps: int | None = None,
    initial: FullState | None = None,
    backward: bool = False,
    max_n: int = ORACLE_MAX_N,
) -> FullState:
    """Brute-force evolution of all ``2**n`` amplitudes from ``|phi>``.

    ``H(s) psi = s d psi - (1-s) E_0 <phi|psi> phi`` with the offset kept in
    ``d``.  ``E0`` defaults to the spectrum's driver scale.
    """
    if diag.n > max_n:
        raise DimensionTooLarge(f"n={diag.n} exceeds the oracle cap n <= {max_n}")
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if backward and initial is None:
        raise ValueError("a backward run needs an initial state at t=T")
    E0 = diag.spec.driver_scale if E0 is None else float(E0)
    d = np.asarray(diag.entries, dtype=float)
    N = d.size
    phi_val = 1.0 / math.sqrt(N)
    psi0 = uniform_state(diag.n) if initial is None else initial

    def rhs(t, psi):
        s = float(schedule(t))
        overlap = phi_val * psi.sum()
        return -1j * (s * d * psi - (1.0 - s) * E0 * phi_val * overlap)

    t_span = np.array([0.0, schedule.total_time])
    if backward:
        t_span = t_span[::-1]
    out, _ = _solve_conserving(
        rhs, None, psi0.amplitudes, t_span, tol, atol, "dp45", fixed_steps,
        lambda out: abs(float(np.linalg.norm(out[-1])) - 1.0),
    )
    return FullState(out[-1], float(t_span[-1]))


def aggregate_full_to_reduced(full: FullState, diag: ScrambledDiagonal) -> tuple[ReducedState, float]:
    """Class amplitudes of a full state, and the intra-class spread.

    ``c_j = sum_{i in j} psi_i / (sqrt(m_j/N) sqrt(m_j))``.  The spread is
    ``max_i |sqrt(N) psi_i - c_{class(i)}|``, in the same units as ``c``; it
    is zero whenever the state has the class symmetry of ``|phi>``.
    """
    spec = diag.spec
    psi = np.asarray(full.amplitudes)
    N = psi.size
    K1 = spec.K + 1
    sums = np.bincount(diag.class_of, weights=psi.real, minlength=K1) + 1j * np.bincount(
        diag.class_of, weights=psi.imag, minlength=K1
    )
    m = np.array([float(x) for x in spec.multiplicities])
    c = sums / (np.sqrt(spec.eta) * np.sqrt(m))
    spread = float(np.max(np.abs(math.sqrt(N) * psi - c[diag.class_of])))
    return ReducedState(c, spec.eta, full.time), spread


def ground_probability(traj: ReducedTrajectory) -> float:
    return float(traj.probabilities[-1, 0])


def class_probabilities_full(full: FullState, diag: ScrambledDiagonal) -> np.ndarray:
    p = np.abs(full.amplitudes) ** 2
    return np.bincount(diag.class_of, weights=p, minlength=diag.spec.K + 1)


def align_phase(reference, other):
    """``other`` times the phase that matches it to ``reference`` on the
    largest-modulus component of ``reference``."""
    reference = np.asarray(reference)
    other = np.asarray(other)
    k = int(np.argmax(np.abs(reference)))
    if other[k] == 0:
        return other
    phase = (reference[k] / abs(reference[k])) / (other[k] / abs(other[k]))
    return other * phase


def phase_distance(a, b) -> float:
    """Max modulus difference after aligning the global phase of ``b``."""
    return float(np.max(np.abs(np.asarray(a) - align_phase(a, b))))


def measure(state, diag_or_spec, seed=None, rng=None):
    """Sample a readout ``(index, energy)`` from a state.

    A :class:`FullState` gives a configuration index and needs the
    :class:`ScrambledDiagonal`; a :class:`ReducedState` or trajectory gives a
    class index and needs the :class:`SpectrumSpec`.  The energy includes the
    offset.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    if isinstance(state, FullState):
        diag = diag_or_spec
        p = np.abs(state.amplitudes) ** 2
        i = int(rng.choice(p.size, p=p / p.sum()))
        return i, float(diag.entries[i])
    if isinstance(state, ReducedTrajectory):
        state = state.final
    spec = diag_or_spec.spec if isinstance(diag_or_spec, ScrambledDiagonal) else diag_or_spec
    p = state.probabilities
    j = int(rng.choice(p.size, p=p / p.sum()))
    return j, spec.offset + spec.values[j]
