import math

import numpy as np
import pytest

from photonlab.core import InvalidStateError, ket_from_angle
from photonlab.optics import (
    CascadeResult,
    LightBeam,
    PhotonRecord,
    Polarizer,
    cascade_analytic,
    cascade_mc,
    linear_light,
    natural_light,
    transmit_analytic,
    transmit_photon_mc,
)
from photonlab.rng import stream_from_seed

DEG = math.pi / 180.0


def test_polarizer_axis_is_canonical():
    p = Polarizer.at_angle(math.pi + 0.4)
    assert p.axis.theta == pytest.approx(0.4, abs=1e-12)


def test_light_beam_validation():
    with pytest.raises(ValueError):
        LightBeam(rho=natural_light().rho, intensity=-0.1)
    with pytest.raises(ValueError):
        LightBeam(rho=natural_light().rho, intensity=float("inf"))


def test_natural_light_is_maximally_mixed():
    beam = natural_light()
    np.testing.assert_allclose(beam.rho.matrix, np.eye(2) / 2)
    assert beam.intensity == 1.0


def test_single_polarizer_follows_malus_law():
    rng = stream_from_seed(41, 0)
    for _ in range(200):
        phi, theta = rng.random(2) * math.pi
        out = transmit_analytic(linear_light(phi), Polarizer.at_angle(theta))
        assert abs(out.intensity - math.cos(theta - phi) ** 2) < 1e-12
        # transmitted beam is repolarized along the axis
        expected = np.outer(
            ket_from_angle(theta).amplitudes, ket_from_angle(theta).amplitudes.conj()
        )
        np.testing.assert_allclose(out.rho.matrix, expected, atol=1e-12)


def test_natural_light_halves_through_any_polarizer():
    for theta in (0.0, 0.3, 1.0, 2.9):
        out = transmit_analytic(natural_light(), Polarizer.at_angle(theta))
        assert abs(out.intensity - 0.5) < 1e-12


def test_crossed_pair_extinguishes_exactly():
    result = cascade_analytic(natural_light(), [90 * DEG, 0.0])
    assert abs(result.per_stage_intensity[0] - 0.5) < 1e-12
    assert result.per_stage_intensity[1] == 0.0
    assert result.final_intensity() == 0.0


def test_inserting_a_diagonal_stage_restores_light():
    result = cascade_analytic(natural_light(), [90 * DEG, 45 * DEG, 0.0])
    np.testing.assert_allclose(result.fractions(), [0.5, 0.25, 0.125], atol=1e-12)


def test_cascade_intensities_never_increase():
    rng = stream_from_seed(42, 0)
    for _ in range(50):
        axes = rng.random(4) * math.pi
        fr = cascade_analytic(natural_light(), axes).fractions()
        assert all(b <= a + 1e-15 for a, b in zip(fr, fr[1:]))


def test_cascade_requires_at_least_one_axis():
    with pytest.raises(ValueError):
        cascade_analytic(natural_light(), [])
    with pytest.raises(ValueError):
        cascade_mc(100, [])
    with pytest.raises(ValueError):
        cascade_analytic(natural_light(), [float("nan")])


def test_photon_mc_transmission():
    rng = stream_from_seed(43, 0)
    photon = PhotonRecord(state=ket_from_angle(0.0))
    out = transmit_photon_mc(photon, Polarizer.at_angle(0.0), rng)
    assert out.alive
    assert out.collapse_history == ((0.0, 0),)
    blocked = transmit_photon_mc(out, Polarizer.at_angle(math.pi / 2), rng)
    assert not blocked.alive
    assert blocked.collapse_history[-1][1] == 1
    with pytest.raises(InvalidStateError):
        transmit_photon_mc(blocked, Polarizer.at_angle(0.0), rng)


def test_photon_mc_pass_rate_matches_malus():
    rng = stream_from_seed(44, 0)
    theta = math.pi / 3
    p_pass = math.cos(theta) ** 2
    n = 20_000
    alive = 0
    for _ in range(n):
        photon = PhotonRecord(state=ket_from_angle(0.0))
        alive += transmit_photon_mc(photon, Polarizer.at_angle(theta), rng).alive
    assert abs(alive / n - p_pass) < 4 * math.sqrt(p_pass * (1 - p_pass) / n)


def test_cascade_mc_is_deterministic():
    a = cascade_mc(50_000, [90 * DEG, 45 * DEG, 0.0], seed=7, workers=2)
    b = cascade_mc(50_000, [90 * DEG, 45 * DEG, 0.0], seed=7, workers=2)
    assert a.per_stage_counts == b.per_stage_counts
    c = cascade_mc(50_000, [90 * DEG, 45 * DEG, 0.0], seed=8, workers=2)
    assert a.per_stage_counts != c.per_stage_counts


def test_cascade_mc_worker_counts_stay_consistent():
    # different worker splits draw different streams but estimate the same fractions
    one = cascade_mc(200_000, [90 * DEG, 45 * DEG, 0.0], seed=3, workers=1)
    four = cascade_mc(200_000, [90 * DEG, 45 * DEG, 0.0], seed=3, workers=4)
    assert one.per_stage_counts != four.per_stage_counts
    for f1, f4, truth in zip(one.fractions(), four.fractions(), (0.5, 0.25, 0.125)):
        sigma = math.sqrt(truth * (1 - truth) / 200_000)
        assert abs(f1 - truth) < 4 * sigma
        assert abs(f4 - truth) < 4 * sigma


def test_cascade_mc_natural_source_halves():
    result = cascade_mc(100_000, [0.3], source="natural", seed=5)
    frac = result.fractions()[0]
    assert abs(frac - 0.5) < 4 * math.sqrt(0.25 / 100_000)


def test_cascade_mc_exact_extremes():
    crossed = cascade_mc(10_000, [0.0, 90 * DEG], source="linear", source_angle=0.0, seed=1)
    assert crossed.per_stage_counts[0] == 10_000
    assert crossed.per_stage_counts[1] == 0
    aligned = cascade_mc(10_000, [45 * DEG], source="linear", source_angle=45 * DEG, seed=1)
    assert aligned.per_stage_counts == (10_000,)


def test_cascade_mc_draws_are_reconstructible():
    # linear source: stage 1 consumes exactly n uniforms against cos^2(axis - angle)
    n, theta, axis, seed = 30_000, 0.2, 1.0, 9
    result = cascade_mc(n, [axis], source="linear", source_angle=theta, seed=seed)
    u = stream_from_seed(seed, 0).random(n)
    expected = int((u < math.cos(axis - theta) ** 2).sum())
    assert result.per_stage_counts[0] == expected


def test_cascade_mc_natural_source_draws_angles_first():
    n, axis, seed = 20_000, 0.6, 13
    result = cascade_mc(n, [axis], source="natural", seed=seed)
    stream = stream_from_seed(seed, 0)
    angles = stream.random(n) * math.pi
    u = stream.random(n)
    expected = int((u < np.cos(axis - angles) ** 2).sum())
    assert result.per_stage_counts[0] == expected


def test_cascade_mc_validation():
    with pytest.raises(ValueError):
        cascade_mc(0, [0.0])
    with pytest.raises(ValueError):
        cascade_mc(100, [0.0], source="laser")


def test_cascade_result_fraction_helpers():
    r = CascadeResult(axes=(0.0,), per_stage_counts=(250,), n_source=1000, seed=0)
    assert r.fractions() == (0.25,)
    assert r.final_intensity() == 0.25
