import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from scrambled_aqc.errors import StepSizeUnderflow
from scrambled_aqc.integrate import dp45, magnus4, rk4


def random_hermitian(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


@given(st.floats(-20, 20), st.floats(0.1, 30))
def test_dp45_phase_rotation(omega, T):
    t = np.linspace(0, T, 7)
    y, stats = dp45(lambda t, y: -1j * omega * y, np.array([1.0 + 0j]), t, rtol=1e-11, atol=1e-13)
    assert np.allclose(y[:, 0], np.exp(-1j * omega * t), atol=1e-8)
    assert stats.accepted > 0


def test_constant_hamiltonian_against_expm(rng):
    H = random_hermitian(rng, 5)
    y0 = rng.normal(size=5) + 1j * rng.normal(size=5)
    y0 /= np.linalg.norm(y0)
    t = np.array([0.0, 0.7, 3.0])
    want = np.array([expm(-1j * H * tk) @ y0 for tk in t])
    y1, _ = dp45(lambda t, y: -1j * H @ y, y0, t, rtol=1e-12, atol=1e-14)
    y2, _ = magnus4(lambda t: H, y0, t, rtol=1e-12, atol=1e-14)
    y3, _ = rk4(lambda t, y: -1j * H @ y, y0, t, 4000)
    for y in (y1, y2, y3):
        assert np.allclose(y, want, atol=1e-9)


def test_time_dependent_commuting_family():
    # H(t) = (1 + t^2) A commutes with itself; U = exp(-i (t + t^3/3) A)
    rng = np.random.default_rng(2)
    A = random_hermitian(rng, 4)
    y0 = np.eye(4, dtype=complex)[0]
    t = np.linspace(0, 2, 5)
    want = np.array([expm(-1j * (tk + tk**3 / 3) * A) @ y0 for tk in t])
    y1, _ = dp45(lambda t, y: -1j * (1 + t * t) * (A @ y), y0, t, rtol=1e-12, atol=1e-14)
    y2, _ = magnus4(lambda t: (1 + t * t) * A, y0, t, rtol=1e-12, atol=1e-14)
    assert np.allclose(y1, want, atol=1e-9)
    assert np.allclose(y2, want, atol=1e-9)


def test_magnus_is_unitary_step_by_step(rng):
    H0, H1 = random_hermitian(rng, 6), random_hermitian(rng, 6)
    y0 = np.eye(6, dtype=complex)[2]
    y, _ = magnus4(lambda t: H0 + math.sin(t) * H1, y0, np.linspace(0, 10, 11), rtol=1e-8)
    assert np.allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-13)


def test_backward_integration_returns_to_start(rng):
    H0, H1 = random_hermitian(rng, 3), random_hermitian(rng, 3)
    rhs = lambda t, y: -1j * (H0 + t * H1) @ y  # noqa: E731
    y0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    fwd, _ = dp45(rhs, y0, np.array([0.0, 2.0]), rtol=1e-12, atol=1e-14)
    back, _ = dp45(rhs, fwd[-1], np.array([2.0, 0.0]), rtol=1e-12, atol=1e-14)
    assert np.allclose(back[-1], y0, atol=1e-9)


def test_rk4_is_fourth_order():
    rhs = lambda t, y: -1j * (1 + t) * y  # noqa: E731
    exact = np.exp(-1j * (2 + 2))
    errs = [abs(rk4(rhs, np.array([1 + 0j]), np.array([0.0, 2.0]), k)[0][-1, 0] - exact) for k in (50, 100)]
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


def test_rk4_hits_output_times_exactly():
    t = np.array([0.0, 0.1, 0.35, 1.0])
    y, stats = rk4(lambda t, y: -1j * y, np.array([1 + 0j]), t, 7)
    assert stats.accepted >= 7
    assert np.allclose(y[:, 0], np.exp(-1j * t), atol=1e-5)


def test_step_underflow_is_reported():
    # y' = y^2 from y(0)=1 blows up at t=1
    with pytest.raises(StepSizeUnderflow, match="underflow"):
        dp45(lambda t, y: y * y, np.array([1 + 0j]), np.array([0.0, 2.0]))


def test_step_budget_is_reported():
    with pytest.raises(StepSizeUnderflow, match="steps"):
        dp45(lambda t, y: -1j * 50.0 * y, np.array([1 + 0j]), np.array([0.0, 100.0]), max_steps=100)


def test_bad_time_grid_rejected():
    with pytest.raises(ValueError):
        dp45(lambda t, y: y, np.array([1 + 0j]), np.array([0.0, 1.0, 0.5]))
