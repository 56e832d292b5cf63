"""Spectrum of the reduced interpolating Hamiltonian.

Writing ``b_j = sqrt(eta_j) c_j`` turns the reduced dynamics into a
symmetric problem with

    H(s) = s diag(f) - (1 - s) E0 v v^T,    v_j = sqrt(eta_j),

a diagonal matrix plus a negative rank-one update.  Its eigenvalues are the
roots of the secular equation

    (1 - s) E0 sum_k eta_k / (s f_k - lam) = 1,

one below ``s f_0`` and one in each interval ``(s f_{k-1}, s f_k)``.  Two
solvers are provided, a dense symmetric eigensolve and a bisection on the
secular equation; they cross-check each other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BracketingFailure, DegenerateGround
from .spectrum import SpectrumSpec

#: Largest reduced dimension for which ``solver="auto"`` uses the dense path.
DENSE_MAX_DIM = 64
#: Smallest s used when sampling profiles.  s=0 is degenerate for K >= 2, and
#: below ~1e-9 the dense solver cannot resolve the nearly degenerate excited levels.
S_FLOOR = 1e-8
MAX_BISECTION_ITERATIONS = 200
DEGENERACY_RTOL = 1e-12

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    s: float
    f: np.ndarray
    eta: np.ndarray
    driver_scale: float

    @property
    def coupling(self) -> np.ndarray:
        return np.sqrt(self.eta)

    @property
    def diag(self) -> np.ndarray:
        return self.s * self.f

    @property
    def scale(self) -> float:
        return (1.0 - self.s) * self.driver_scale

    def matrix(self) -> np.ndarray:
        v = self.coupling
        return np.diag(self.diag) - self.scale * np.outer(v, v)

    def derivative(self) -> np.ndarray:
        """dH/ds, independent of s."""
        v = self.coupling
        return np.diag(self.f) + self.driver_scale * np.outer(v, v)


@dataclass(frozen=True, eq=False)
class SpectralData:
    s: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, ascending
    gap: float
    v01: float
    degenerate: bool = False

    @property
    def ground_vector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @property
    def first_excited_vector(self) -> np.ndarray | None:
        if self.eigenvectors.shape[1] < 2:
            return None
        return self.eigenvectors[:, 1]


@dataclass(frozen=True, eq=False)
class SpectralProfile:
    """Lowest levels, gap and V01 sampled on an array of s values."""

    s: np.ndarray
    energies: np.ndarray  # (len(s), levels)
    gap: np.ndarray
    v01: np.ndarray


def build_effective(spec: SpectrumSpec, s: float) -> EffectiveHamiltonian:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    return EffectiveHamiltonian(float(s), spec.f, spec.eta, spec.driver_scale)


def _choose_solver(dim: int, solver: str) -> str:
    if solver == "auto":
        return "dense" if dim <= DENSE_MAX_DIM else "secular"
    if solver not in ("dense", "secular"):
        raise ValueError(f"unknown solver {solver!r}")
    return solver


# ---------------------------------------------------------------------------
# secular-equation bisection


def _secular_residual(f, eta, s, c, origin, delta):
    # sum_k eta_k / (s (f_k - f_o) - delta) - c, shapes (M, J)
    diffs = s[:, None, None] * (f[None, None, :] - f[origin][:, :, None]) - delta[:, :, None]
    return np.sum(eta / diffs, axis=-1) - c[:, None]


def _secular_deltas(f, eta, s, c, which):
    """Bisection for the requested roots of ``sum eta/(s f - lam) = c``.

    Root 0 lies below ``s f_0``; root j >= 1 lies in ``(s f_{j-1}, s f_j)``.
    Each root is returned as ``(origin, delta)`` with ``lam = s f[origin] + delta``
    measured from its nearest pole, which keeps tiny gaps at full relative
    precision.  ``s`` and ``c`` are 1-d arrays with ``0 < s``; ``c > 0`` is
    required when root 0 is requested.
    """
    M, J = s.size, len(which)
    origin = np.zeros((M, J), dtype=np.int64)
    lo = np.zeros((M, J))
    hi = np.zeros((M, J))
    for col, j in enumerate(which):
        if j == 0:
            rho = 1.0 / c
            lo[:, col] = -rho * (1.0 + 1e-12) - 1e-300
            hi[:, col] = 0.0
        else:
            half = 0.5 * s * (f[j] - f[j - 1])
            o = np.full(M, j - 1)
            g = _secular_residual(f, eta, s, c, o[:, None], half[:, None])[:, 0]
            left = g >= 0.0
            origin[:, col] = np.where(left, j - 1, j)
            lo[:, col] = np.where(left, 0.0, -half)
            hi[:, col] = np.where(left, half, 0.0)

    if 0 in which:
        col = list(which).index(0)
        g_lo = _secular_residual(f, eta, s, c, origin[:, col : col + 1], lo[:, col : col + 1])
        if np.any(g_lo > 0.0):
            raise BracketingFailure("lower bracket of the ground root has the wrong sign")

    for _ in range(MAX_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        width = hi - lo
        active = (width > 4.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi))) & (mid != lo) & (mid != hi)
        if not np.any(active):
            break
        g = _secular_residual(f, eta, s, c, origin, mid)
        go_left = (g > 0.0) & active
        go_right = (g <= 0.0) & active
        hi = np.where(go_left, mid, hi)
        lo = np.where(go_right, mid, lo)
    else:
        raise BracketingFailure(
            f"bisection did not converge in {MAX_BISECTION_ITERATIONS} iterations"
        )
    return origin, 0.5 * (lo + hi)


def _zero_s_limit(f, eta, E0):
    """Eigenpairs in the limit s -> 0+.

    The excited levels collapse onto 0 but their eigenvectors converge to
    ``v_k / (f_k - mu)`` with ``mu`` a root of ``sum eta_k / (f_k - mu) = 0``.
    """
    K1 = f.size
    vals = np.zeros(K1)
    vals[0] = -E0
    vecs = np.zeros((K1, K1))
    vecs[:, 0] = np.sqrt(eta)
    if K1 > 1:
        one = np.ones(1)
        origin, delta = _secular_deltas(f, eta, one, np.zeros(1), list(range(1, K1)))
        x = np.sqrt(eta)[None, :] / ((f[None, :] - f[origin[0]][:, None]) - delta[0][:, None])
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        vecs[:, 1:] = x.T
    return vals, vecs


def secular_roots(spec: SpectrumSpec, s: float) -> np.ndarray:
    """All K+1 eigenvalues at ``s`` by bisection, ascending."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    f = spec.f
    if s == 1.0:
        return f.copy()
    if s == 0.0:
        return _zero_s_limit(f, spec.eta, spec.driver_scale)[0]
    sa = np.array([float(s)])
    c = np.array([1.0 / ((1.0 - s) * spec.driver_scale)])
    origin, delta = _secular_deltas(f, spec.eta, sa, c, list(range(f.size)))
    return s * f[origin[0]] + delta[0]


def _secular_eigensystem(h: EffectiveHamiltonian):
    f, eta, s = h.f, h.eta, h.s
    if s == 1.0:
        return f.copy(), np.eye(f.size)
    if s == 0.0:
        return _zero_s_limit(f, eta, h.driver_scale)
    sa = np.array([float(s)])
    c = np.array([1.0 / ((1.0 - s) * h.driver_scale)])
    origin, delta = _secular_deltas(f, eta, sa, c, list(range(f.size)))
    o, d = origin[0], delta[0]
    vals = s * f[o] + d
    x = np.sqrt(eta)[None, :] / (s * (f[None, :] - f[o][:, None]) - d[:, None])
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return vals, x.T


def _v01(f, v, E0, x0, x1):
    return np.abs(np.sum(f * x0 * x1, axis=-1) + E0 * np.sum(v * x0, axis=-1) * np.sum(v * x1, axis=-1))


def matrix_element(h: EffectiveHamiltonian, sd: SpectralData) -> float:
    """V01 = |<ground| dH/ds |first excited>|."""
    x1 = sd.first_excited_vector
    if x1 is None:
        raise DegenerateGround("single-class spectrum has no excited level, so V01 is undefined")
    return float(_v01(h.f, h.coupling, h.driver_scale, sd.ground_vector, x1))


def eigensystem(h: EffectiveHamiltonian, solver: str = "auto") -> SpectralData:
    """Full ascending spectrum with eigenvectors, gap and V01.

    At s=0 the excited level is K-fold degenerate; both solvers then return
    the s -> 0+ limit of the eigenvectors.
    """
    dim = h.f.size
    kind = _choose_solver(dim, solver)
    if 0.0 < h.s < S_FLOOR:
        # excited levels are s-independent to O(s) here, and neither solver
        # can resolve a cluster of width s * ptp(f) next to E0
        if kind == "dense":
            vals = np.linalg.eigvalsh(h.matrix())
        else:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                vals = _secular_eigensystem(h)[0]
        vecs = _zero_s_limit(h.f, h.eta, h.driver_scale)[1]
    elif kind == "dense":
        if h.s == 0.0:
            vals, vecs = _zero_s_limit(h.f, h.eta, h.driver_scale)
        else:
            vals, vecs = np.linalg.eigh(h.matrix())
    else:
        vals, vecs = _secular_eigensystem(h)

    if dim < 2:
        return SpectralData(h.s, vals, vecs, math.nan, math.nan, degenerate=True)
    gap = float(vals[1] - vals[0])
    width = float(np.ptp(h.f)) + h.driver_scale
    degenerate = gap < DEGENERACY_RTOL * width
    if degenerate and 0.0 < h.s:
        warnings.warn(f"ground level is numerically degenerate at s={h.s} (gap={gap:.3e})", stacklevel=2)
    sd = SpectralData(h.s, vals, vecs, gap, math.nan, degenerate)
    return SpectralData(h.s, vals, vecs, gap, matrix_element(h, sd), degenerate)


def spectral_profile(spec: SpectrumSpec, s, solver: str = "auto", levels: int = 2) -> SpectralProfile:
    """Lowest ``levels`` energies, gap and V01 on an array of s.

    s is clipped to ``[S_FLOOR, 1]`` so the degenerate point s=0 is replaced
    by its right limit.
    """
    f, eta, E0 = spec.f, spec.eta, spec.driver_scale
    if f.size < 2:
        raise DegenerateGround("single-class spectrum: gap and V01 are undefined")
    levels = max(2, min(levels, f.size))
    s = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), S_FLOOR, 1.0)
    v = np.sqrt(eta)
    kind = _choose_solver(f.size, solver)

    energies = np.empty((s.size, levels))
    x0 = np.empty((s.size, f.size))
    x1 = np.empty((s.size, f.size))
    gap = np.empty(s.size)

    at_end = s == 1.0
    if np.any(at_end):
        energies[at_end] = f[:levels]
        x0[at_end] = np.eye(f.size)[0]
        x1[at_end] = np.eye(f.size)[1]
        gap[at_end] = f[1] - f[0]
    inner = ~at_end
    si = s[inner]
    if si.size:
        if kind == "dense":
            H = si[:, None, None] * np.diag(f)[None] - ((1.0 - si) * E0)[:, None, None] * np.outer(v, v)[None]
            w, V = np.linalg.eigh(H)
            energies[inner] = w[:, :levels]
            x0[inner] = V[:, :, 0]
            x1[inner] = V[:, :, 1]
            gap[inner] = w[:, 1] - w[:, 0]
        else:
            c = 1.0 / ((1.0 - si) * E0)
            origin, delta = _secular_deltas(f, eta, si, c, list(range(levels)))
            lam = si[:, None] * f[origin] + delta
            energies[inner] = lam
            # gap measured pole-to-pole plus offsets keeps relative precision
            gap[inner] = si * (f[origin[:, 1]] - f[origin[:, 0]]) + (delta[:, 1] - delta[:, 0])
            for col, out in ((0, x0), (1, x1)):
                o, d = origin[:, col], delta[:, col]
                x = v[None, :] / (si[:, None] * (f[None, :] - f[o][:, None]) - d[:, None])
                out[inner] = x / np.linalg.norm(x, axis=1, keepdims=True)
    v01 = _v01(f, v, E0, x0, x1)
    return SpectralProfile(s, energies, gap, v01)


def gap_at(spec: SpectrumSpec, s, solver: str = "auto") -> np.ndarray:
    return spectral_profile(spec, s, solver).gap


def numeric_min_gap(spec: SpectrumSpec, solver: str = "auto", grid: int = 512, xtol: float = 1e-13):
    """Global minimum of the gap over s in (0, 1): coarse scan, then golden section.

    Returns ``(gap, s_min)``.
    """
    s = np.linspace(0.0, 1.0, grid + 1)
    g = gap_at(spec, s, solver)
    i = int(np.argmin(g))
    a, b = s[max(i - 1, 0)], s[min(i + 1, grid)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0

    def gap1(x):
        return float(gap_at(spec, np.array([x]), solver)[0])

    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    g1, g2 = gap1(x1), gap1(x2)
    while b - a > xtol:
        if g1 <= g2:
            b, x2, g2 = x2, x1, g1
            x1 = b - invphi * (b - a)
            g1 = gap1(x1)
        else:
            a, x1, g1 = x1, x2, g2
            x2 = a + invphi * (b - a)
            g2 = gap1(x2)
    x = 0.5 * (a + b)
    candidates = [(gap1(x), x), (float(g[i]), float(s[i]))]
    return min(candidates)


def gap_minima(spec: SpectrumSpec, solver: str = "auto", grid: int = 512) -> list[float]:
    """Approximate locations of interior local minima of the gap on a coarse scan."""
    s = np.linspace(0.0, 1.0, grid + 1)
    g = gap_at(spec, s, solver)
    idx = np.flatnonzero((g[1:-1] <= g[:-2]) & (g[1:-1] <= g[2:])) + 1
    return [float(s[i]) for i in idx]


# ---------------------------------------------------------------------------
# large-n reference formulas for the binomial random energy model


def rem_gap_asymptotic(n: int, s: float) -> float:
    """Three-branch piecewise-linear large-n gap."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    first = 2.0 * n / (3.0 * n - 1.0)
    second = 2.0 * n / (3.0 * n - 3.0) if n > 1 else math.inf
    if s <= first:
        return n - (3.0 * n - 1.0) * s / 2.0
    if s <= second:
        return (3.0 * n - 1.0) * s / 2.0 - n
    return s


def rem_min_gap(n: int) -> tuple[float, float]:
    """Closed-form minimum gap ``(2n/3) 2**(-n/2)`` and its location ``2n/(3n-1)``.

    The location tends to 2/3 for large n.
    """
    if n < 2:
        raise ValueError("rem_min_gap needs n >= 2")
    return (2.0 * n / 3.0) * 2.0 ** (-n / 2.0), 2.0 * n / (3.0 * n - 1.0)
