"""Time steppers for ``dy/dt = -i H(t) y`` on complex vectors.

Three methods share one calling convention: integrate from ``t_eval[0]`` to
``t_eval[-1]`` (either direction) and return the state at every entry of
``t_eval``.

``dp45``
    Dormand-Prince 5(4) with error control; steps are shortened to land on
    every output time.
``rk4``
    Classical fixed-step Runge-Kutta, ``steps`` steps over the whole span.
    Bit-reproducible.
``magnus4``
    Fourth-order commutator-free Magnus method with step-doubling error
    control.  Needs ``H(t)`` as a small dense Hermitian matrix; each step is
    exactly unitary and its length is limited by how fast ``H`` changes
    rather than by its norm, which is what long adiabatic runs need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepSizeUnderflow

METHODS = ("dp45", "rk4", "magnus4")
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
MAX_STEPS = 5_000_000

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

# commutator-free Magnus, two exponentials at the Gauss points
_GAUSS = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)
_ALPHA = ((3.0 - 2.0 * math.sqrt(3.0)) / 12.0, (3.0 + 2.0 * math.sqrt(3.0)) / 12.0)


@dataclass(frozen=True)
class StepStats:
    accepted: int
    rejected: int
    evaluations: int


def _check_times(t_eval):
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or t_eval.size < 2:
        raise ValueError("need at least two output times")
    d = np.diff(t_eval)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("output times must be strictly monotone")
    return t_eval


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return math.sqrt(float(np.mean((np.abs(err) / scale) ** 2)))


def _underflow(t, h):
    return abs(h) <= 16.0 * np.spacing(max(abs(t), 1.0))


def dp45(rhs, y0, t_eval, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, first_step=None, max_steps=MAX_STEPS):
    """Adaptive Dormand-Prince integration of ``dy/dt = rhs(t, y)``."""
    t_eval = _check_times(t_eval)
    y = np.array(y0, dtype=complex)
    out = np.empty((t_eval.size, y.size), dtype=complex)
    out[0] = y
    direction = math.copysign(1.0, t_eval[-1] - t_eval[0])
    span = abs(t_eval[-1] - t_eval[0])
    h = abs(first_step) if first_step else min(span, 1e-3 * span + 1e-3)
    t = float(t_eval[0])
    k1 = rhs(t, y)
    accepted = rejected = 0
    evals = 1
    ks = [None] * 7
    for i in range(1, t_eval.size):
        target = float(t_eval[i])
        while direction * (target - t) > 0.0:
            step = min(h, abs(target - t))
            last = step == abs(target - t)
            hs = direction * step
            if _underflow(t, hs):
                raise StepSizeUnderflow(f"step size underflow at t={t}")
            ks[0] = k1
            for j in range(1, 7):
                acc = y + hs * sum(a * k for a, k in zip(_A[j], ks[:j]) if a != 0.0)
                ks[j] = rhs(t + _C[j] * hs, acc)
            evals += 6
            y_new = acc  # stage 7 is evaluated at the fifth-order solution
            err = hs * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
            en = _error_norm(err, y, y_new, rtol, atol)
            if en <= 1.0:
                t = target if last else t + hs
                y = y_new
                k1 = ks[6]
                accepted += 1
                fac = 5.0 if en == 0.0 else min(5.0, 0.9 * en ** -0.2)
                # do not let a short landing step shrink the next one
                h = max(h, step * fac) if last else step * fac
            else:
                rejected += 1
                h = step * max(0.2, 0.9 * en ** -0.2)
            if accepted + rejected > max_steps:
                raise StepSizeUnderflow(f"more than {max_steps} steps needed")
        out[i] = y
    return out, StepStats(accepted, rejected, evals)


def rk4(rhs, y0, t_eval, steps: int):
    """Fixed-step RK4 with ``steps`` steps over the span.

    Steps are spread over the output intervals in proportion to their
    length (at least one each), so every output time is hit exactly.
    """
    t_eval = _check_times(t_eval)
    if steps < 1:
        raise ValueError("steps must be positive")
    y = np.array(y0, dtype=complex)
    out = np.empty((t_eval.size, y.size), dtype=complex)
    out[0] = y
    span = t_eval[-1] - t_eval[0]
    evals = 0
    total = 0
    for i in range(1, t_eval.size):
        a, b = float(t_eval[i - 1]), float(t_eval[i])
        m = max(1, int(round(steps * (b - a) / span)))
        h = (b - a) / m
        for k in range(m):
            t = a + k * h
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        evals += 4 * m
        total += m
        out[i] = y
    return out, StepStats(total, 0, evals)


def _expm_hermitian(H, h):
    """``exp(-i h H)`` for a Hermitian matrix."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * h * w)) @ V.conj().T


def _cf4_step(hamiltonian, t, h, y):
    H1 = hamiltonian(t + _GAUSS[0] * h)
    H2 = hamiltonian(t + _GAUSS[1] * h)
    a1, a2 = _ALPHA
    y = _expm_hermitian(a2 * H1 + a1 * H2, h) @ y
    return _expm_hermitian(a1 * H1 + a2 * H2, h) @ y


def magnus4(hamiltonian, y0, t_eval, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, first_step=None, max_steps=MAX_STEPS):
    """Adaptive fourth-order commutator-free Magnus integration.

    ``hamiltonian(t)`` returns a dense Hermitian matrix.  The local error is
    estimated by comparing one step against two half steps, and the more
    accurate two-half-step result (with Richardson extrapolation omitted to
    keep the update unitary) is kept.
    """
    t_eval = _check_times(t_eval)
    y = np.array(y0, dtype=complex)
    out = np.empty((t_eval.size, y.size), dtype=complex)
    out[0] = y
    direction = math.copysign(1.0, t_eval[-1] - t_eval[0])
    span = abs(t_eval[-1] - t_eval[0])
    h = abs(first_step) if first_step else min(span, 1e-2 * span + 1e-3)
    t = float(t_eval[0])
    accepted = rejected = 0
    evals = 0
    for i in range(1, t_eval.size):
        target = float(t_eval[i])
        while direction * (target - t) > 0.0:
            step = min(h, abs(target - t))
            last = step == abs(target - t)
            hs = direction * step
            if _underflow(t, hs):
                raise StepSizeUnderflow(f"step size underflow at t={t}")
            big = _cf4_step(hamiltonian, t, hs, y)
            half = _cf4_step(hamiltonian, t, 0.5 * hs, y)
            small = _cf4_step(hamiltonian, t + 0.5 * hs, 0.5 * hs, half)
            evals += 6
            en = _error_norm((small - big) / 15.0, y, small, rtol, atol)
            if en <= 1.0:
                t = target if last else t + hs
                y = small
                accepted += 1
                fac = 4.0 if en == 0.0 else min(4.0, 0.9 * en ** -0.2)
                h = max(h, step * fac) if last else step * fac
            else:
                rejected += 1
                h = step * max(0.2, 0.9 * en ** -0.2)
            if accepted + rejected > max_steps:
                raise StepSizeUnderflow(f"more than {max_steps} steps needed")
        out[i] = y
    return out, StepStats(accepted, rejected, evals)
