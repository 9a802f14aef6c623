"""Polarizer cascades in analytic (density-operator) and per-photon Monte Carlo modes.

A polarizer is a projective measurement in its axis basis: the aligned outcome
is transmitted and re-polarized along the axis, the orthogonal outcome is
absorbed. Intensity is the dimensionless fraction of source photons, so an
unpolarized source halves through a single polarizer and a crossed pair
extinguishes the beam, while inserting an intermediate diagonal axis restores
one eighth of the source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DensityOperator,
    InvalidStateError,
    MeasurementBasis,
    PROB_SNAP,
    StateVector,
    canonical_angle,
    collapse,
    ket_from_angle,
    projection_probability,
)
from .rng import RngStream, map_partitions, stream_from_seed

SOURCE_KINDS = ("natural", "linear")


@dataclass(frozen=True)
class Polarizer:
    """An ideal linear polarizer; axis is the transmission direction."""

    axis: MeasurementBasis

    @classmethod
    def at_angle(cls, theta: float) -> "Polarizer":
        return cls(MeasurementBasis(theta))


@dataclass(frozen=True)
class LightBeam:
    """A beam with a polarization density operator and a photon-fraction intensity."""

    rho: DensityOperator
    intensity: float

    def __post_init__(self):
        if not (isinstance(self.intensity, (int, float)) and math.isfinite(self.intensity)):
            raise ValueError(f"intensity must be finite, got {self.intensity!r}")
        if self.intensity < 0.0:
            raise ValueError(f"intensity must be >= 0, got {self.intensity!r}")
        object.__setattr__(self, "intensity", float(self.intensity))


@dataclass(frozen=True)
class PhotonRecord:
    """One tracked photon; collapse_history holds (axis angle, outcome) pairs."""

    state: StateVector
    alive: bool = True
    collapse_history: tuple = ()


@dataclass(frozen=True)
class CascadeResult:
    """Stagewise output of a polarizer cascade, analytic or Monte Carlo."""

    axes: tuple[float, ...]
    per_stage_intensity: tuple[float, ...] | None = None
    per_stage_counts: tuple[int, ...] | None = None
    n_source: int | None = None
    seed: int | None = None

    def fractions(self) -> tuple[float, ...]:
        """Per-stage intensity, with MC counts normalized by the source size."""
        if self.per_stage_intensity is not None:
            return self.per_stage_intensity
        return tuple(c / self.n_source for c in self.per_stage_counts)

    def final_intensity(self) -> float:
        return self.fractions()[-1]


def natural_light() -> LightBeam:
    """Unpolarized unit-intensity source: rho = identity/2."""
    return LightBeam(rho=DensityOperator.maximally_mixed(2), intensity=1.0)


def linear_light(theta: float, intensity: float = 1.0) -> LightBeam:
    """Fully polarized beam at the given angle."""
    return LightBeam(rho=DensityOperator.from_pure(ket_from_angle(theta)), intensity=intensity)


def transmit_analytic(beam: LightBeam, p: Polarizer) -> LightBeam:
    """Malus-law transmission: output intensity is input times <theta|rho|theta>.

    The transmitted beam is pure along the polarizer axis regardless of input.
    """
    t = projection_probability(beam.rho, p.axis)
    out_rho = DensityOperator.from_pure(p.axis.aligned())
    return LightBeam(rho=out_rho, intensity=beam.intensity * t)


def _validate_axes(axes) -> tuple[float, ...]:
    axes = tuple(float(a) for a in axes)
    if len(axes) == 0:
        raise ValueError("axes must be a non-empty list of angles")
    for a in axes:
        if not math.isfinite(a):
            raise ValueError(f"axis angle must be finite, got {a!r}")
    return axes


def cascade_analytic(beam: LightBeam, axes) -> CascadeResult:
    """Fold transmit_analytic over the axes, recording intensity after each stage."""
    axes = _validate_axes(axes)
    stages = []
    current = beam
    for theta in axes:
        current = transmit_analytic(current, Polarizer.at_angle(theta))
        stages.append(current.intensity)
    return CascadeResult(axes=axes, per_stage_intensity=tuple(stages))


def transmit_photon_mc(photon: PhotonRecord, p: Polarizer, rng: RngStream) -> PhotonRecord:
    """Collapse one photon in the polarizer basis; aligned passes, orthogonal is absorbed."""
    if not photon.alive:
        raise InvalidStateError("photon was already absorbed")
    record = collapse(photon.state, p.axis, rng)
    history = photon.collapse_history + ((p.axis.theta, record.outcome),)
    return PhotonRecord(state=record.post_state, alive=record.outcome == 0, collapse_history=history)


def _pass_probabilities(angles: np.ndarray, axis: float) -> np.ndarray:
    """Vectorized aligned-outcome probability cos^2(axis - angle), noise-snapped
    exactly like born_probabilities."""
    p = np.cos(axis - angles) ** 2
    p[p <= PROB_SNAP] = 0.0
    p[p >= 1.0 - PROB_SNAP] = 1.0
    return p


def cascade_mc(
    n_photons: int,
    axes,
    source: str = "natural",
    source_angle: float = 0.0,
    seed: int = 0,
    workers: int = 1,
) -> CascadeResult:
    """Thread n_photons individually through the cascade, counting survivors per stage.

    Each photon is a pure linear polarization: the natural source draws an
    independent uniform angle in [0, pi) per photon, the linear source uses
    source_angle for all. A stage samples the aligned outcome with the same
    Born weight transmit_photon_mc would use; survivors leave polarized along
    the stage axis. Worker w draws from stream_from_seed(seed, w) and stage
    counts are summed over workers, so results are reproducible for a fixed
    (seed, workers).
    """
    axes = _validate_axes(axes)
    if n_photons < 1:
        raise ValueError(f"n_photons must be >= 1, got {n_photons}")
    if source not in SOURCE_KINDS:
        raise ValueError(f"source must be one of {SOURCE_KINDS}, got {source!r}")
    start_angle = canonical_angle(source_angle) if source == "linear" else 0.0

    def run_chunk(worker: int, size: int) -> np.ndarray:
        stream = stream_from_seed(seed, worker)
        if source == "natural":
            angles = stream.random(size) * math.pi
        else:
            angles = np.full(size, start_angle)
        counts = np.zeros(len(axes), dtype=np.int64)
        for i, axis in enumerate(axes):
            p_pass = _pass_probabilities(angles, axis)
            passed = stream.random(angles.shape[0]) < p_pass
            survivors = int(passed.sum())
            angles = np.full(survivors, axis)
            counts[i] = survivors
        return counts

    totals = sum(map_partitions(n_photons, workers, run_chunk))
    return CascadeResult(
        axes=axes,
        per_stage_counts=tuple(int(c) for c in totals),
        n_source=n_photons,
        seed=seed,
    )
