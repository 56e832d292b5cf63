"""Continuous-time quantum algorithms for scrambled-output problems.

The dynamics of a problem whose output values are known but whose
assignment to inputs is scrambled reduce from ``2**n`` amplitudes to one per
distinct value.  The package simulates that reduced system, builds
annealing schedules for it (locally adiabatic ones and deterministic
non-adiabatic paths), and runs the Deutsch-Josza, random energy model and
Grover case studies, with a brute-force full-space oracle for checking.
"""

from importlib.metadata import PackageNotFoundError, version

from .dynamics import (
    FullState,
    ReducedState,
    ReducedTrajectory,
    aggregate_full_to_reduced,
    ground_probability,
    initial_reduced,
    integrate_full,
    integrate_reduced,
    measure,
)
from .schedules import (
    ProbabilityProfile,
    Schedule,
    constant_rate,
    constant_s,
    dj_reference_profile,
    dj_reference_tprime,
    local_adiabatic,
    path_from_profile,
    runtime,
)
from .scenarios import (
    DJVerdict,
    ScalingReport,
    fit_scaling,
    run_deutsch_josza,
    run_grover,
    run_rem,
)
from .spectral import (
    EffectiveHamiltonian,
    build_effective,
    eigensystem,
    matrix_element,
    numeric_min_gap,
    secular_roots,
    spectral_profile,
)
from .spectrum import (
    ScrambledDiagonal,
    SpectrumSpec,
    dj_spectrum,
    eta_ratios,
    grover_spectrum,
    rem_spectrum,
    scramble,
    validate_spectrum,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "DJVerdict",
    "EffectiveHamiltonian",
    "FullState",
    "ProbabilityProfile",
    "ReducedState",
    "ReducedTrajectory",
    "ScalingReport",
    "Schedule",
    "ScrambledDiagonal",
    "SpectrumSpec",
    "aggregate_full_to_reduced",
    "build_effective",
    "constant_rate",
    "constant_s",
    "dj_reference_profile",
    "dj_reference_tprime",
    "dj_spectrum",
    "eigensystem",
    "eta_ratios",
    "fit_scaling",
    "ground_probability",
    "grover_spectrum",
    "initial_reduced",
    "integrate_full",
    "integrate_reduced",
    "local_adiabatic",
    "matrix_element",
    "measure",
    "numeric_min_gap",
    "path_from_profile",
    "rem_spectrum",
    "run_deutsch_josza",
    "run_grover",
    "run_rem",
    "runtime",
    "scramble",
    "secular_roots",
    "spectral_profile",
    "validate_spectrum",
]
