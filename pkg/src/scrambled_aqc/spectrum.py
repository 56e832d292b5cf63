"""Scrambled-output problem instances.

A scrambled-output instance is an n-bit function whose distinct output
values ``f_0 < ... < f_K`` and their multiplicities are known, but whose
input -> output assignment is an unknown permutation, shifted by an
unknown offset ``e_0``.  :class:`SpectrumSpec` holds that data;
:func:`scramble` materializes one concrete diagonal for brute-force
simulation.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DimensionTooLarge,
    EmptySpectrum,
    MarkedCountOutOfRange,
    MultiplicitySumMismatch,
    NonMonotoneValues,
    SpectrumError,
)

#: Largest bit count :func:`scramble` will materialize by default (2**24 amplitudes).
ORACLE_MAX_N = 24

DJ_KINDS = ("balanced", "constant0", "constant1")


def _as_exact_int(m) -> int:
    if isinstance(m, bool):
        raise SpectrumError(f"multiplicity must be an integer, got {m!r}")
    if isinstance(m, str):
        m = m.strip()
        if not m.lstrip("+-").isdigit():
            raise SpectrumError(f"multiplicity {m!r} is not a decimal integer")
        return int(m)
    if isinstance(m, numbers.Integral):
        return int(m)
    if isinstance(m, numbers.Real) and float(m).is_integer():
        # floats above 2**53 cannot be trusted to be the intended integer
        if abs(m) > 2**53:
            raise SpectrumError(
                f"multiplicity {m!r} given as a float above 2**53; pass an int or a string"
            )
        return int(m)
    raise SpectrumError(f"multiplicity must be an integer, got {m!r}")


@dataclass(frozen=True)
class SpectrumSpec:
    """Distinct output values with exact multiplicities.

    Construction validates the instance, so every live ``SpectrumSpec`` is a
    valid one.  ``multiplicities`` are Python ints and are summed exactly.
    """

    n: int
    values: tuple[float, ...]
    multiplicities: tuple[int, ...]
    offset: float = 0.0
    driver_scale: float = 1.0

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 1:
            raise SpectrumError(f"bit count n must be a positive integer, got {n!r}")
        object.__setattr__(self, "n", int(n))
        values = tuple(float(v) for v in self.values)
        mults = tuple(_as_exact_int(m) for m in self.multiplicities)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "multiplicities", mults)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "driver_scale", float(self.driver_scale))

        if not values:
            raise EmptySpectrum("spectrum has no output values")
        if len(values) != len(mults):
            raise SpectrumError(
                f"{len(values)} values but {len(mults)} multiplicities"
            )
        if not all(math.isfinite(v) for v in values):
            raise SpectrumError("output values must be finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise NonMonotoneValues(f"values must be strictly increasing: {values}")
        if any(m < 1 for m in mults):
            raise SpectrumError(f"every multiplicity must be >= 1: {mults}")
        total = sum(mults)
        if total != 2**self.n:
            raise MultiplicitySumMismatch(
                f"multiplicities sum to {total}, expected 2**{self.n} = {2**self.n}"
            )
        if not (math.isfinite(self.offset)):
            raise SpectrumError("offset must be finite")
        if not (self.driver_scale > 0 and math.isfinite(self.driver_scale)):
            raise SpectrumError(f"driver_scale must be positive, got {self.driver_scale}")

    @property
    def K(self) -> int:
        """Index of the largest class (number of classes minus one)."""
        return len(self.values) - 1

    @property
    def size(self) -> int:
        return 2**self.n

    @cached_property
    def eta(self) -> np.ndarray:
        return eta_ratios(self)

    @property
    def f(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def with_offset(self, offset: float) -> "SpectrumSpec":
        return SpectrumSpec(self.n, self.values, self.multiplicities, offset, self.driver_scale)

    def with_driver_scale(self, driver_scale: float) -> "SpectrumSpec":
        return SpectrumSpec(self.n, self.values, self.multiplicities, self.offset, driver_scale)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "values": list(self.values),
            "multiplicities": [str(m) for m in self.multiplicities],
            "offset": self.offset,
            "driver_scale": self.driver_scale,
        }

    @classmethod
    def from_dict(cls, data) -> "SpectrumSpec":
        try:
            return cls(
                n=data["n"],
                values=data["values"],
                multiplicities=data["multiplicities"],
                offset=data.get("offset", 0.0),
                driver_scale=data.get("driver_scale", 1.0),
            )
        except KeyError as exc:
            raise SpectrumError(f"spectrum record is missing key {exc}") from None


def validate_spectrum(spec) -> SpectrumSpec:
    """Return a validated :class:`SpectrumSpec` from a spec or a mapping."""
    if isinstance(spec, SpectrumSpec):
        return spec
    return SpectrumSpec.from_dict(spec)


def eta_ratios(spec: SpectrumSpec) -> np.ndarray:
    """Class weights ``m_j / 2**n``.

    Python's int true division is correctly rounded for arbitrarily large
    operands, so no float ever holds 2**n.
    """
    N = 1 << spec.n
    eta = np.array([m / N for m in spec.multiplicities], dtype=float)
    eta.setflags(write=False)
    return eta


def dj_spectrum(n: int, kind: str) -> SpectrumSpec:
    """Deutsch-Josza oracle spectrum (offset 0, driver scale 1)."""
    N = 2**n
    if kind == "balanced":
        return SpectrumSpec(n, (0.0, 1.0), (N // 2, N // 2))
    if kind == "constant0":
        return SpectrumSpec(n, (0.0,), (N,))
    if kind == "constant1":
        return SpectrumSpec(n, (1.0,), (N,))
    raise SpectrumError(f"unknown Deutsch-Josza kind {kind!r}; expected one of {DJ_KINDS}")


def rem_spectrum(n: int, offset: float = 0.0, driver_scale: float | None = None) -> SpectrumSpec:
    """Binomial random energy model: value k with multiplicity C(n, k); E_0 = n."""
    mults = tuple(math.comb(n, k) for k in range(n + 1))
    scale = float(n) if driver_scale is None else driver_scale
    return SpectrumSpec(n, tuple(float(k) for k in range(n + 1)), mults, offset, scale)


def grover_spectrum(n: int, marked: int, offset: float = 0.0, driver_scale: float = 1.0) -> SpectrumSpec:
    N = 2**n
    if not 1 <= marked < N:
        raise MarkedCountOutOfRange(f"marked count must satisfy 1 <= M < {N}, got {marked}")
    return SpectrumSpec(n, (0.0, 1.0), (marked, N - marked), offset, driver_scale)


def complement_spectrum(spec: SpectrumSpec) -> SpectrumSpec:
    """Spectrum of ``1 - F``: values ``1 - f`` re-sorted, multiplicities reversed."""
    values = tuple(1.0 - v for v in reversed(spec.values))
    return SpectrumSpec(
        spec.n, values, tuple(reversed(spec.multiplicities)), -spec.offset, spec.driver_scale
    )


@dataclass(frozen=True, eq=False)
class ScrambledDiagonal:
    """One concrete problem Hamiltonian diagonal.

    ``entries[i] == spec.offset + spec.values[class_of[i]]``.
    """

    spec: SpectrumSpec
    entries: np.ndarray = field(repr=False)
    class_of: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.class_of, minlength=len(self.spec.values))

    def complement(self) -> "ScrambledDiagonal":
        """Same positions with values ``1 - entries``."""
        comp = complement_spectrum(self.spec)
        return _frozen_diagonal(comp, 1.0 - self.entries, self.spec.K - self.class_of)

    def with_offset(self, offset: float) -> "ScrambledDiagonal":
        spec = self.spec.with_offset(offset)
        return _frozen_diagonal(spec, spec.offset + spec.f[self.class_of], self.class_of)


def _frozen_diagonal(spec, entries, class_of) -> ScrambledDiagonal:
    entries = np.array(entries, dtype=float)
    class_of = np.array(class_of, dtype=np.int64)
    entries.setflags(write=False)
    class_of.setflags(write=False)
    return ScrambledDiagonal(spec, entries, class_of)


def scramble(spec: SpectrumSpec, seed: int, max_n: int = ORACLE_MAX_N) -> ScrambledDiagonal:
    """Place the multiset of offset-shifted values on the diagonal in a
    uniformly random (seeded) order."""
    if spec.n > max_n:
        raise DimensionTooLarge(
            f"n={spec.n} exceeds the oracle cap n <= {max_n} (2**{spec.n} amplitudes)"
        )
    rng = np.random.default_rng(seed)
    classes = np.repeat(np.arange(len(spec.values)), spec.multiplicities)
    class_of = rng.permutation(classes)
    return _frozen_diagonal(spec, spec.offset + spec.f[class_of], class_of)


def save_spectrum(spec: SpectrumSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")


def load_spectrum(path) -> SpectrumSpec:
    return SpectrumSpec.from_dict(json.loads(Path(path).read_text()))
