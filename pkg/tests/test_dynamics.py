import math

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import full_hamiltonian
from scrambled_aqc.errors import DimensionTooLarge, ToleranceNotMet
from scrambled_aqc.dynamics import (
    FullState,
    aggregate_full_to_reduced,
    align_phase,
    class_probabilities_full,
    ground_probability,
    initial_reduced,
    integrate_full,
    integrate_reduced,
    measure,
    phase_distance,
    uniform_state,
)
from scrambled_aqc.schedules import constant_rate, constant_s, custom_schedule
from scrambled_aqc.spectrum import SpectrumSpec, dj_spectrum, grover_spectrum, rem_spectrum, scramble


def test_dj_constant_s_closed_form():
    # at s=1/2 the two-level system precesses: p_0(t) = (3 - cos(t / sqrt2)) / 4
    T = 2 * math.sqrt(2) * math.pi
    traj = integrate_reduced(dj_spectrum(6, "balanced"), constant_s(0.5, T), sample_count=64)
    want = (3 - np.cos(traj.times / math.sqrt(2))) / 4
    assert np.allclose(traj.probabilities[:, 0], want, atol=1e-9)


def test_constant_hamiltonian_full_space_against_expm():
    spec = SpectrumSpec(3, (0.0, 0.5, 2.0), (2, 3, 3), offset=0.3)
    diag = scramble(spec, 4)
    T = 2.5
    full = integrate_full(diag, constant_s(0.4, T), tol=1e-12, atol=1e-14)
    U = expm(-1j * T * full_hamiltonian(diag.entries, 0.4))
    assert np.allclose(full.amplitudes, U @ uniform_state(3).amplitudes, atol=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_reduced_matches_full_oracle(seed):
    rng = np.random.default_rng(seed)
    spec = SpectrumSpec(7, (0.0, 0.4, 1.1, 2.0), (5, 40, 60, 23), driver_scale=1.5)
    diag = scramble(spec, int(rng.integers(1 << 30)))
    sch = custom_schedule([0.0, 1.5, 4.0, 6.0], [0.0, 0.3, 0.8, 1.0])
    red = integrate_reduced(spec, sch, sample_count=10)
    full = integrate_full(diag, sch)
    agg, spread = aggregate_full_to_reduced(full, diag)
    # no offset: no global phase to remove
    assert np.max(np.abs(agg.amplitudes - red.final.amplitudes)) <= 1e-8
    assert spread <= 1e-9
    assert np.allclose(class_probabilities_full(full, diag), red.final.probabilities, atol=1e-9)


def test_offset_only_changes_global_phase():
    spec = rem_spectrum(6)
    diag = scramble(spec, 3)
    sch = constant_rate(5.0)
    base = integrate_full(diag, sch)
    for e0 in (1.0, -3.7):
        shifted = integrate_full(diag.with_offset(e0), sch)
        assert np.allclose(class_probabilities_full(shifted, diag), class_probabilities_full(base, diag), atol=1e-10)
        assert phase_distance(base.amplitudes, shifted.amplitudes) < 1e-8


def test_backward_run_recovers_initial_state():
    spec = grover_spectrum(5, 2)
    sch = custom_schedule([0.0, 2.0, 5.0], [0.0, 0.6, 1.0])
    fwd = integrate_reduced(spec, sch, tol=1e-12, atol=1e-14)
    back = integrate_reduced(spec, sch, tol=1e-12, atol=1e-14, initial=fwd.final, backward=True)
    assert np.allclose(back.final.amplitudes, initial_reduced(spec).amplitudes, atol=1e-9)
    assert back.times[0] == sch.total_time and back.times[-1] == 0.0


def test_magnus_and_dp45_agree():
    spec = rem_spectrum(8)
    sch = constant_rate(12.0)
    a = integrate_reduced(spec, sch, method="dp45")
    b = integrate_reduced(spec, sch, method="magnus4")
    assert np.max(np.abs(a.probabilities - b.probabilities)) < 1e-8


def test_fixed_steps_are_bit_reproducible():
    spec = rem_spectrum(6)
    sch = constant_rate(3.0)
    a = integrate_reduced(spec, sch, fixed_steps=3000)
    b = integrate_reduced(spec, sch, fixed_steps=3000)
    assert np.array_equal(a.amplitudes, b.amplitudes)


def test_too_coarse_fixed_steps_fail_loudly():
    with pytest.raises(ToleranceNotMet, match="fixed-step"):
        integrate_reduced(rem_spectrum(6), constant_rate(5.0), fixed_steps=20)


def test_norm_and_trajectory_shape():
    spec = rem_spectrum(5)
    traj = integrate_reduced(spec, constant_rate(4.0), sample_count=30)
    assert traj.amplitudes.shape == (31, 6)
    assert traj.norm_drift <= 1e-9
    assert traj.rows().shape == (31, len(traj.header()))
    assert traj.header()[:3] == ["t", "s", "p_0"]
    assert 0.0 <= ground_probability(traj) <= 1.0


def test_oracle_cap():
    diag = scramble(rem_spectrum(10), 0)
    with pytest.raises(DimensionTooLarge):
        integrate_full(diag, constant_rate(1.0), max_n=8)


def test_measure_is_seeded_and_consistent():
    spec = grover_spectrum(4, 1)
    diag = scramble(spec, 9)
    full = FullState(np.eye(16, dtype=complex)[int(np.flatnonzero(diag.class_of == 0)[0])])
    i, e = measure(full, diag, seed=1)
    assert diag.class_of[i] == 0 and e == 0.0
    red = initial_reduced(spec)
    draws = [measure(red, spec, seed=k)[0] for k in range(400)]
    assert draws == [measure(red, spec, seed=k)[0] for k in range(400)]
    # class 0 carries weight 1/16
    assert 0 < draws.count(0) < 80


def test_align_phase():
    a = np.array([0.6, 0.8j])
    b = a * np.exp(1.234j)
    assert np.allclose(align_phase(a, b), a)
    assert phase_distance(a, b) < 1e-15


def test_dj_trajectories_do_not_depend_on_n():
    from scrambled_aqc.scenarios import dj_reference_schedule

    sched = dj_reference_schedule()
    a = integrate_reduced(dj_spectrum(4, "balanced"), sched, sample_count=50)
    b = integrate_reduced(dj_spectrum(16, "balanced"), sched, sample_count=50)
    assert np.max(np.abs(a.amplitudes - b.amplitudes)) <= 1e-10
