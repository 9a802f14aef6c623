"""Polarization-entangled photon pairs: the singlet state, local measurements,
joint statistics, and the no-signaling marginal check.

The shipped pair is the singlet (|01> - |10>)/sqrt(2). Its equal-basis outcomes
are perfectly anti-correlated at every angle and its correlation function is
E(a, b) = -cos 2(a - b), which drives the CHSH value to 2*sqrt(2) at the
standard settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DensityOperator,
    InvalidStateError,
    MeasurementBasis,
    OutcomeRecord,
    StateVector,
    _coerce_basis,
    snap_probability,
    trace_distance,
)
from .rng import RngStream, map_partitions, stream_from_seed

_SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / math.sqrt(2.0)

_MIN_BRANCH_PROBABILITY = 1e-12


@dataclass(frozen=True, eq=False)
class PairState:
    """A two-photon pure state on the 4-dimensional joint space."""

    joint: StateVector

    def __post_init__(self):
        if self.joint.dim != 4:
            raise ValueError(f"pair state must have dimension 4, got {self.joint.dim}")


def make_pair() -> PairState:
    """The singlet pair used throughout."""
    return PairState(StateVector(_SINGLET))


@dataclass(frozen=True)
class JointOutcome:
    """Outcomes of one joint measurement; 0 is aligned with the local basis."""

    outcome_a: int
    outcome_b: int
    basis_a: MeasurementBasis
    basis_b: MeasurementBasis


def _amplitude_matrix(pair: PairState) -> np.ndarray:
    # amplitudes indexed [a, b] in the computational product basis
    return pair.joint.amplitudes.reshape(2, 2)


def _branch(pair: PairState, basis_a, outcome: int):
    """Project photon A onto an eigenvector, returning (probability, B amplitudes)."""
    basis_a = _coerce_basis(basis_a)
    e = basis_a.eigenvector(outcome).amplitudes
    c = e.conj() @ _amplitude_matrix(pair)
    p = snap_probability(float(np.real(c.conj() @ c)))
    return p, c


def conditional_state(pair: PairState, basis_a, outcome: int) -> tuple[float, StateVector]:
    """Probability of A's outcome and the normalized state B is left in."""
    p, c = _branch(pair, basis_a, outcome)
    if p < _MIN_BRANCH_PROBABILITY:
        raise InvalidStateError(
            f"outcome {outcome} has probability {p:.3e}; no conditional state exists"
        )
    return p, StateVector.normalize(c)


def measure_A(pair: PairState, basis_a, rng: RngStream) -> tuple[OutcomeRecord, StateVector]:
    """Measure photon A with one uniform draw, returning A's record and B's
    post-measurement state (for the singlet, the eigenvector orthogonal to A's)."""
    basis_a = _coerce_basis(basis_a)
    p0, _ = _branch(pair, basis_a, 0)
    u = float(rng.random())
    outcome = 0 if u < p0 else 1
    p, b_state = conditional_state(pair, basis_a, outcome)
    record = OutcomeRecord(
        outcome=outcome,
        post_state=basis_a.eigenvector(outcome),
        basis=basis_a,
        probability=p,
    )
    return record, b_state


def joint_probabilities(pair: PairState, basis_a, basis_b) -> np.ndarray:
    """2x2 array of P(outcome_a, outcome_b) for local measurements on both photons."""
    basis_a = _coerce_basis(basis_a)
    basis_b = _coerce_basis(basis_b)
    m = _amplitude_matrix(pair)
    probs = np.empty((2, 2))
    for oa in (0, 1):
        ea = basis_a.eigenvector(oa).amplitudes
        for ob in (0, 1):
            fb = basis_b.eigenvector(ob).amplitudes
            amp = ea.conj() @ m @ fb.conj()
            probs[oa, ob] = snap_probability(float(np.real(amp * np.conj(amp))))
    return probs


def _category_edges(probs: np.ndarray) -> tuple[np.ndarray, int]:
    # Snapped probabilities can sum to slightly under 1; a uniform landing in
    # that sliver must map to a category that actually has weight, never to a
    # snapped-to-zero one, or "impossible" outcomes appear at the 1e-16 level.
    edges = np.cumsum(probs)
    last_nonzero = int(np.flatnonzero(probs > 0.0)[-1])
    return edges, last_nonzero


def measure_pair(pair: PairState, basis_a, basis_b, rng: RngStream) -> JointOutcome:
    """Sample one joint outcome from the 4-category joint distribution."""
    basis_a = _coerce_basis(basis_a)
    basis_b = _coerce_basis(basis_b)
    edges, last_nonzero = _category_edges(joint_probabilities(pair, basis_a, basis_b).ravel())
    u = float(rng.random())
    idx = min(int(np.searchsorted(edges, u, side="right")), last_nonzero)
    return JointOutcome(outcome_a=idx // 2, outcome_b=idx % 2, basis_a=basis_a, basis_b=basis_b)


@dataclass(frozen=True)
class CorrelationStats:
    """Sample correlation of +-1 outcome products with its standard error."""

    e_value: float
    n: int
    std_err: float

    @classmethod
    def from_counts(cls, n_equal: int, n: int) -> "CorrelationStats":
        e = (2 * n_equal - n) / n
        se = math.sqrt(max(0.0, 1.0 - e * e) / n)
        return cls(e_value=e, n=n, std_err=se)


def correlation(
    theta_a: float,
    theta_b: float,
    n: int,
    seed: int = 0,
    pair: PairState | None = None,
    workers: int = 1,
    stream_base: int = 0,
) -> CorrelationStats:
    """Monte Carlo estimate of E(a, b), the mean of +1 (equal outcomes) and -1
    (different outcomes) over n pairs; analytically -cos 2(a - b) for the singlet.

    Worker w samples from stream_from_seed(seed, stream_base + w).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if pair is None:
        pair = make_pair()
    edges, last_nonzero = _category_edges(joint_probabilities(pair, theta_a, theta_b).ravel())

    def run_chunk(worker: int, size: int) -> np.ndarray:
        stream = stream_from_seed(seed, stream_base + worker)
        u = stream.random(size)
        idx = np.minimum(np.searchsorted(edges, u, side="right"), last_nonzero)
        equal = (idx == 0) | (idx == 3)
        return np.array([size, int(equal.sum())], dtype=np.int64)

    totals = sum(map_partitions(n, workers, run_chunk))
    return CorrelationStats.from_counts(n_equal=int(totals[1]), n=int(totals[0]))


CHSH_SETTINGS = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


def chsh(
    settings=CHSH_SETTINGS,
    n_per_setting: int = 100_000,
    seed: int = 0,
    pair: PairState | None = None,
    workers: int = 1,
    stream_base: int = 0,
) -> float:
    """CHSH statistic S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')| from four
    independent correlation runs of n_per_setting pairs each.

    The singlet reaches 2*sqrt(2) at the default settings; product states stay
    within 2. Setting index s draws from stream indices starting at
    stream_base + s*workers, so no two settings share draws.
    """
    if n_per_setting < 1:
        raise ValueError(f"n_per_setting must be >= 1, got {n_per_setting}")
    a, a_prime, b, b_prime = (float(x) for x in settings)
    combos = ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime))
    e = [
        correlation(
            ta,
            tb,
            n_per_setting,
            seed=seed,
            pair=pair,
            workers=workers,
            stream_base=stream_base + s * workers,
        ).e_value
        for s, (ta, tb) in enumerate(combos)
    ]
    return abs(e[0] - e[1] + e[2] + e[3])


def bob_marginal_counts(
    theta_a: float,
    theta_b: float,
    n: int,
    seed: int = 0,
    pair: PairState | None = None,
    workers: int = 1,
    stream_base: int = 0,
) -> tuple[int, int]:
    """Sample n joint measurements and count Bob's aligned outcomes.

    Returns (n, count of outcome_b == 0). The count's distribution does not
    depend on theta_a; this is the empirical face of the no-signaling check.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if pair is None:
        pair = make_pair()
    edges, last_nonzero = _category_edges(joint_probabilities(pair, theta_a, theta_b).ravel())

    def run_chunk(worker: int, size: int) -> np.ndarray:
        stream = stream_from_seed(seed, stream_base + worker)
        u = stream.random(size)
        idx = np.minimum(np.searchsorted(edges, u, side="right"), last_nonzero)
        return np.array([size, int((idx % 2 == 0).sum())], dtype=np.int64)

    totals = sum(map_partitions(n, workers, run_chunk))
    return int(totals[0]), int(totals[1])


def bob_reduced_state(pair: PairState, basis_a) -> DensityOperator:
    """B's marginal after A measures in basis_a but before the outcome is known:
    the probability-weighted mixture of the conditional states."""
    basis_a = _coerce_basis(basis_a)
    rho = np.zeros((2, 2), dtype=np.complex128)
    for outcome in (0, 1):
        p, c = _branch(pair, basis_a, outcome)
        if p < _MIN_BRANCH_PROBABILITY:
            continue
        psi = StateVector.normalize(c).amplitudes
        rho += p * np.outer(psi, psi.conj())
    return DensityOperator(rho)


def no_signaling_check(bases_a, pair: PairState | None = None) -> float:
    """Maximum pairwise trace distance between B's marginals over A's basis choices.

    The marginals coincide up to numerical noise for every basis, which is why
    A's basis choice alone carries no information to B. A single basis
    trivially returns 0.0.
    """
    if pair is None:
        pair = make_pair()
    bases = [_coerce_basis(b) for b in bases_a]
    if not bases:
        raise ValueError("bases_a must be non-empty")
    marginals = [bob_reduced_state(pair, b) for b in bases]
    worst = 0.0
    for i in range(len(marginals)):
        for j in range(i + 1, len(marginals)):
            worst = max(worst, trace_distance(marginals[i], marginals[j]))
    return worst
