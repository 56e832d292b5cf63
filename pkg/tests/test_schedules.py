import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import ellipk

from scrambled_aqc.errors import EndpointSingularity, NonPositiveGap, PathIllDefined
from scrambled_aqc.schedules import (
    RESOLVED_Q_GROUPING,
    ProbabilityProfile,
    constant_rate,
    constant_s,
    custom_schedule,
    direct_tprime,
    dj_reference_profile,
    dj_reference_tprime,
    local_adiabatic,
    path_from_profile,
    resolve_q_grouping,
    runtime,
)

# int_0^1 6 sqrt2 / sqrt(s(1-s)(4-9s(1-s))) ds; s = sin^2(theta) then phi = 2 theta
# turns it into 3 sqrt2 int_0^pi dphi / sqrt(1 - (9/16) sin^2 phi) = 6 sqrt2 K(9/16)
DJ_REFERENCE_RUNTIME = 6.0 * math.sqrt(2.0) * float(ellipk(9.0 / 16.0))


def grover_density_oracle(n):
    """V01/g^2 for M=1 computed with numpy eigh on the 2x2 reduced matrix."""
    N = 2**n
    v = np.sqrt([1 / N, 1 - 1 / N])
    f = np.array([0.0, 1.0])
    dH = np.diag(f) + np.outer(v, v)

    def density(s):
        w, X = np.linalg.eigh(s * np.diag(f) - (1 - s) * np.outer(v, v))
        return abs(X[:, 0] @ dH @ X[:, 1]) / (w[1] - w[0]) ** 2

    return density


def test_constant_rate():
    sch = constant_rate(8.0)
    t = np.linspace(0, 8, 9)
    assert np.allclose(sch(t), t / 8)
    assert np.allclose(sch.rate(t), 1 / 8)
    assert sch.time_of(0.25) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        constant_rate(0.0)


def test_constant_s():
    sch = constant_s(0.5, 3.0)
    assert np.all(sch(np.linspace(0, 3, 7)) == 0.5)
    for bad in (0.0, 1.0, 1.2):
        with pytest.raises(ValueError):
            constant_s(bad, 1.0)


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=12), st.floats(0.5, 50))
def test_custom_schedule_is_monotone_and_invertible(steps, T):
    s = np.concatenate([[0.0], np.cumsum(steps)])
    s /= s[-1]
    t = np.linspace(0, T, s.size)
    sch = custom_schedule(t, s)
    tt = np.linspace(0, T, 201)
    ss = sch(tt)
    assert np.all(np.diff(ss) >= -1e-15)
    assert ss[0] == 0.0 and ss[-1] == pytest.approx(1.0)
    probe = np.array([0.1, 0.5, 0.9])
    assert np.allclose(sch(sch.time_of(probe)), probe, atol=1e-12)


def test_schedule_validation():
    with pytest.raises(ValueError):
        custom_schedule([0, 1, 2], [0.0, 0.6, 0.4])
    with pytest.raises(ValueError):
        custom_schedule([1, 2], [0.0, 1.0])
    with pytest.raises(ValueError):
        custom_schedule([0, 1], [0.0, 1.5])


def test_reference_tprime_closed_form():
    s = np.array([0.1, 0.5, 0.9])
    want = 6 * math.sqrt(2) / np.sqrt(s * (1 - s) * (4 - 9 * s * (1 - s)))
    assert np.allclose(dj_reference_tprime(s), want, rtol=1e-15)
    with pytest.raises(EndpointSingularity):
        dj_reference_tprime(0.0)


def test_reference_runtime_matches_elliptic_integral():
    assert runtime(dj_reference_tprime) == pytest.approx(DJ_REFERENCE_RUNTIME, rel=1e-9)


def test_q_grouping_resolution():
    assert resolve_q_grouping() == RESOLVED_Q_GROUPING
    s = np.linspace(0.05, 0.95, 19)
    direct = direct_tprime(dj_reference_profile(), s)
    assert np.max(np.abs(direct - dj_reference_tprime(s))) < 1e-8
    # with p' as the integrand the reference path is not reproduced
    lit = direct_tprime(dj_reference_profile(), s, "dp_integrand")
    assert not np.allclose(lit, dj_reference_tprime(s), rtol=1e-3, equal_nan=False)


def test_profile_path_reproduces_reference():
    tprime, sch = path_from_profile(dj_reference_profile())
    s = np.linspace(0.05, 0.95, 181)
    assert np.max(np.abs(tprime(s) - dj_reference_tprime(s))) <= 1e-8
    assert sch.total_time == pytest.approx(DJ_REFERENCE_RUNTIME, rel=1e-9)
    assert sch(0.0) == 0.0 and sch(sch.total_time) == pytest.approx(1.0, abs=1e-12)


def test_profile_near_the_ends_matches_reference():
    tprime, _ = path_from_profile(dj_reference_profile())
    s = np.array([1e-6, 1e-3, 0.999, 1 - 1e-6])
    assert np.allclose(tprime(s), dj_reference_tprime(s), rtol=1e-7)


def test_bad_profiles():
    with pytest.raises(PathIllDefined):  # p(0) != 1/2
        path_from_profile(ProbabilityProfile(lambda s: 0.4 + 0.6 * s, lambda s: 0.6 + 0 * s))
    with pytest.raises(PathIllDefined):  # p' does not vanish at s=1: infinite runtime
        path_from_profile(ProbabilityProfile(lambda s: 0.5 * (1 + s), lambda s: 0.5 + 0 * s))
    quintic = ProbabilityProfile(
        lambda s: 0.5 + 0.5 * (10 * s**3 - 15 * s**4 + 6 * s**5), lambda s: 15 * s**2 * (1 - s) ** 2
    )
    with pytest.raises(PathIllDefined, match="1/2"):
        path_from_profile(quintic)


@pytest.mark.parametrize("n", [6, 10])
def test_local_adiabatic_runtime_against_quad(n):
    N = 2**n
    gap = lambda s: np.sqrt(1 - 4 * (1 - 1 / N) * s * (1 - s))  # noqa: E731
    density = grover_density_oracle(n)
    oracle, _ = quad(density, 0, 1, points=[0.5], epsabs=1e-12, epsrel=1e-12, limit=500)

    def v01(s):
        return np.array([density(x) for x in np.atleast_1d(s)]) * gap(np.atleast_1d(s)) ** 2

    eps = 0.25
    sch = local_adiabatic(gap, v01, eps, breakpoints=[0.5])
    assert sch.total_time == pytest.approx(oracle / eps, rel=1e-8)
    # ds/dt = eps g^2 / V01 at interior knots
    t = sch.t[5:-5:37]
    s = sch(t)
    want = eps * gap(s) ** 2 / v01(s)
    assert np.allclose(sch.rate(t), want, rtol=1e-6)


def test_local_adiabatic_rejects_closed_gap():
    with pytest.raises(NonPositiveGap):
        local_adiabatic(lambda s: np.abs(s - 0.5), lambda s: np.ones_like(s), 1.0, breakpoints=[0.5])
    with pytest.raises(ValueError):
        local_adiabatic(lambda s: 1 + 0 * s, lambda s: 1 + 0 * s, -1.0)


@pytest.mark.parametrize("which", ["profile", "local_adiabatic"])
def test_inversion_round_trip(which):
    if which == "profile":
        sch = path_from_profile(dj_reference_profile())[1]
    else:
        from scrambled_aqc.scenarios import local_adiabatic_schedule
        from scrambled_aqc.spectrum import rem_spectrum

        sch = local_adiabatic_schedule(rem_spectrum(12), 1.0)[0]
    s = np.linspace(0.01, 0.99, 99)
    assert np.max(np.abs(sch(sch.time_of(s)) - s)) <= 1e-9


def test_runtime_is_stable_under_grid_doubling():
    from scrambled_aqc.scenarios import local_adiabatic_schedule
    from scrambled_aqc.schedules import DEFAULT_KNOTS
    from scrambled_aqc.spectrum import rem_spectrum

    a = path_from_profile(dj_reference_profile(), DEFAULT_KNOTS)[1].total_time
    b = path_from_profile(dj_reference_profile(), 2 * DEFAULT_KNOTS)[1].total_time
    assert abs(a - b) <= 1e-8 * a
    spec = rem_spectrum(16)
    a = local_adiabatic_schedule(spec, 1.0, DEFAULT_KNOTS)[0].total_time
    b = local_adiabatic_schedule(spec, 1.0, 2 * DEFAULT_KNOTS)[0].total_time
    assert abs(a - b) <= 1e-8 * a
