"""The entanglement bit-transmission scheme end to end: Alice encodes a bit in
her measurement-basis choice, Bob receives the conditionally collapsed partner
photon, and a receiver model tries to read the bit back.

Receiver models span the honest range. The standard-physics strategies
(fixed-basis maximum likelihood, repetition with majority vote) operate only on
Bob's photon states; because Bob's marginal is the maximally mixed state
whatever Alice does, their likelihoods tie on every photon and the decoded
stream carries no information. The basis-oracle strategy reads the hidden
basis tag directly, a capability no physical receiver has for a single copy;
it is included, clearly labeled, to show that the scheme works if and only if
that capability is granted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    MeasurementBasis,
    StateVector,
    born_probabilities,
    canonical_angle,
    snap_probability,
)
from .entangle import conditional_state, make_pair
from .rng import (
    ALGORITHM_ID,
    RngStream,
    map_partitions,
    partition_sizes,
    stream_from_seed,
)
from .stats import as_bit_array, mi_standard_error, permutation_null_mis, plugin_mi_bits

_TIE_ATOL = 1e-12

# stream indices per worker (stride 8 leaves room) and the shared MI stream
_ROLE_BITS = 0
_ROLE_ENCODE = 1
_ROLE_RECEIVE = 2
_MI_STREAM_INDEX = 3

BIT_SOURCES = ("iid", "balanced")


def _basis_set_distance(a: float, b: float) -> float:
    """Angle between the eigenvector sets of two bases, folded into [0, pi/4].

    A basis at theta and one at theta + pi/2 share the same eigenvector pair,
    so distinctness of encodings is distance modulo pi/2, not modulo pi.
    """
    r = (a - b) % (math.pi / 2)
    return min(r, math.pi / 2 - r)


@dataclass(frozen=True)
class EncodingRule:
    """Alice's bit-to-basis map; defaults are basis 0 for "1" and pi/4 for "0"."""

    basis_for_one: float = 0.0
    basis_for_zero: float = math.pi / 4

    def __post_init__(self):
        object.__setattr__(self, "basis_for_one", canonical_angle(self.basis_for_one))
        object.__setattr__(self, "basis_for_zero", canonical_angle(self.basis_for_zero))

    @property
    def is_degenerate(self) -> bool:
        """True when both bits select the same eigenvector set, which makes the
        two encodings identical even to the basis oracle."""
        return _basis_set_distance(self.basis_for_one, self.basis_for_zero) <= _TIE_ATOL

    def basis_for(self, bit: int) -> float:
        return self.basis_for_one if bit else self.basis_for_zero


@dataclass(frozen=True)
class SentPhoton:
    """Bob's photon for one transmitted pair.

    hidden_basis_tag records which basis Alice measured in; it is bookkeeping
    the simulation carries, not a property a receiver can extract from the
    single photon. Only the basis-oracle strategy reads it.
    """

    bob_state: StateVector
    hidden_basis_tag: float
    pair_index: int


@dataclass(frozen=True)
class FixedBasisML:
    """Measure every photon in one fixed basis, decode by maximum likelihood.

    The likelihood of either outcome is exactly 1/2 under both bit hypotheses,
    so every decode is a tie and resolves to 0; the tie count makes that
    visible in reports.
    """

    basis: MeasurementBasis

    def __init__(self, basis):
        if not isinstance(basis, MeasurementBasis):
            basis = MeasurementBasis(float(basis))
        object.__setattr__(self, "basis", basis)

    @property
    def label(self) -> str:
        return f"fixed-basis-ml:{math.degrees(self.basis.theta):g}"

    @property
    def pairs_per_bit(self) -> int:
        return 1


@dataclass(frozen=True)
class BasisOracle:
    """Counterfactual receiver that reads the hidden basis tag directly.

    Grants exactly the single-copy basis identification the transmission
    scheme requires; no quantum operation provides it.
    """

    @property
    def label(self) -> str:
        return "basis-oracle"

    @property
    def pairs_per_bit(self) -> int:
        return 1


@dataclass(frozen=True)
class Repetition:
    """Send k pairs per bit, decode each with the inner strategy, majority-vote."""

    k: int
    inner: "ReceiverStrategy"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"repetition factor must be >= 1, got {self.k}")

    @property
    def label(self) -> str:
        return f"repetition:{self.k}:{self.inner.label}"

    @property
    def pairs_per_bit(self) -> int:
        return self.k * self.inner.pairs_per_bit


ReceiverStrategy = FixedBasisML | BasisOracle | Repetition


def standard_strategies() -> list:
    """The shipped standard-physics receivers (no oracle)."""
    return [
        FixedBasisML(0.0),
        FixedBasisML(math.pi / 8),
        Repetition(11, FixedBasisML(math.pi / 8)),
    ]


def encode(bits, rule: EncodingRule, rng: RngStream, pairs_per_bit: int = 1, start_index: int = 0):
    """Measure one fresh singlet per pair in the bit's basis; collect Bob's photons.

    Each photon consumes one uniform (Alice's outcome draw). With
    pairs_per_bit = k, bit i occupies photons i*k through i*k + k - 1.
    """
    bits = as_bit_array(bits, "bits")
    if pairs_per_bit < 1:
        raise ValueError(f"pairs_per_bit must be >= 1, got {pairs_per_bit}")
    pair = make_pair()
    # per bit value: Alice's aligned-outcome probability and Bob's two
    # conditional states, shared across all photons carrying that value
    branch = {}
    for v in (0, 1):
        angle = rule.basis_for(v)
        p0, state0 = conditional_state(pair, angle, 0)
        _, state1 = conditional_state(pair, angle, 1)
        branch[v] = (p0, (state0, state1), angle)
    repeated = np.repeat(bits, pairs_per_bit)
    p0_arr = np.where(repeated == 1, branch[1][0], branch[0][0])
    outcomes = (rng.random(repeated.shape[0]) >= p0_arr).astype(np.int64)
    photons = []
    for i, (v, o) in enumerate(zip(repeated, outcomes)):
        _, states, angle = branch[int(v)]
        photons.append(
            SentPhoton(
                bob_state=states[int(o)],
                hidden_basis_tag=angle,
                pair_index=start_index + i,
            )
        )
    return photons


def _measure_photons(photons, basis: MeasurementBasis, rng: RngStream) -> np.ndarray:
    """Collapse each Bob photon in the receiver basis; one uniform per photon.

    Born weights are cached per distinct state object, so bulk streams with a
    handful of shared states stay cheap.
    """
    cache = {}
    p0 = np.empty(len(photons))
    for i, ph in enumerate(photons):
        key = id(ph.bob_state)
        v = cache.get(key)
        if v is None:
            v = born_probabilities(ph.bob_state, basis)[0]
            cache[key] = v
        p0[i] = v
    return (rng.random(len(photons)) >= p0).astype(np.int64)


def _ml_table(rule: EncodingRule, basis: MeasurementBasis) -> np.ndarray:
    """Outcome likelihoods table[bit, outcome] under the equal-mixture model.

    Given the bit, Bob's photon is an even mixture of the two eigenvectors of
    Alice's basis, so table[v, o] = (P(o|aligned) + P(o|orthogonal))/2. Both
    rows are (1/2, 1/2) for every angle pair; the general formula is kept so
    the tie is a computed fact rather than an assumption.
    """
    table = np.empty((2, 2))
    for v in (0, 1):
        b = MeasurementBasis(rule.basis_for(v))
        pa = born_probabilities(b.aligned(), basis)
        po = born_probabilities(b.orthogonal(), basis)
        table[v, 0] = snap_probability(0.5 * (pa[0] + po[0]))
        table[v, 1] = snap_probability(0.5 * (pa[1] + po[1]))
    return table


def _decode(photons, strategy, rule: EncodingRule, rng: RngStream):
    """Decode a photon stream, returning (bits, tie count)."""
    if isinstance(strategy, BasisOracle):
        tags = np.array([ph.hidden_basis_tag for ph in photons])
        d_one = np.array([_basis_set_distance(t, rule.basis_for_one) for t in tags])
        d_zero = np.array([_basis_set_distance(t, rule.basis_for_zero) for t in tags])
        ties = int((np.abs(d_one - d_zero) <= _TIE_ATOL).sum())
        bits = (d_one + _TIE_ATOL < d_zero).astype(np.int64)
        return bits, ties
    if isinstance(strategy, FixedBasisML):
        outcomes = _measure_photons(photons, strategy.basis, rng)
        table = _ml_table(rule, strategy.basis)
        like_zero = table[0, outcomes]
        like_one = table[1, outcomes]
        ties = int((np.abs(like_one - like_zero) <= _TIE_ATOL).sum())
        bits = (like_one > like_zero + _TIE_ATOL).astype(np.int64)
        return bits, ties
    if isinstance(strategy, Repetition):
        inner_bits, inner_ties = _decode(photons, strategy.inner, rule, rng)
        votes = inner_bits.reshape(-1, strategy.k)
        ones = votes.sum(axis=1)
        majority_ties = int((2 * ones == strategy.k).sum())
        bits = (2 * ones > strategy.k).astype(np.int64)
        return bits, inner_ties + majority_ties
    raise ValueError(f"unknown receiver strategy: {strategy!r}")


def receive(photons, strategy, rule: EncodingRule, rng: RngStream) -> np.ndarray:
    """Decode the photon stream into bits with the given receiver strategy."""
    if len(photons) == 0:
        raise ValueError("photons must be non-empty")
    per_bit = strategy.pairs_per_bit
    if len(photons) % per_bit != 0:
        raise ValueError(
            f"photon count {len(photons)} is not a multiple of {per_bit} "
            f"(pairs per bit for {strategy.label})"
        )
    bits, _ = _decode(photons, strategy, rule, rng)
    return bits


def mutual_information(sent, decoded, rng: RngStream | None = None, n_shuffles: int = 1000):
    """Plug-in MI of the sent/decoded channel with a 95% confidence interval.

    The half-width is the larger of the permutation-null 97.5% quantile
    (>= 1000 shuffles) and the 1.96-sigma delta-method error, clamped to
    [0, 1]. The permutation part keeps the interval honest near independence,
    where the delta method degenerates; the delta part keeps it honest away
    from independence, where the null quantile says nothing about estimator
    spread.
    """
    x = as_bit_array(sent, "sent")
    y = as_bit_array(decoded, "decoded")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if n_shuffles < 1000:
        raise ValueError(f"n_shuffles must be >= 1000, got {n_shuffles}")
    if rng is None:
        rng = stream_from_seed(0, 0)
    mi = plugin_mi_bits(x, y)
    null_q = float(np.quantile(permutation_null_mis(x, y, n_shuffles, rng), 0.975))
    half = max(null_q, 1.96 * mi_standard_error(x, y))
    lo = max(0.0, mi - half)
    hi = min(1.0, mi + half)
    return mi, (lo, hi)


@dataclass(frozen=True)
class TransmissionReport:
    """Everything one protocol run produced, sufficient to reproduce it."""

    n_bits: int
    ber: float
    mutual_info_bits: float
    mi_confidence_interval: tuple[float, float]
    seed: int
    strategy: ReceiverStrategy
    rule: EncodingRule
    decode_ties: int
    bit_source: str
    rng_algorithm: str = field(default=ALGORITHM_ID)


def run_protocol(
    n_bits: int,
    rule: EncodingRule | None = None,
    strategy: ReceiverStrategy | None = None,
    seed: int = 0,
    workers: int = 1,
    bit_source: str = "iid",
    n_shuffles: int = 1000,
) -> TransmissionReport:
    """Draw bits, encode, receive, and score one full transmission.

    Worker w uses stream indices 8w (bit draws), 8w+1 (Alice's measurements),
    and 8w+2 (receiver measurements); the MI permutations use index 3. The
    report is bit-identical for a fixed (seed, workers).

    bit_source "iid" draws each bit uniformly; "balanced" shuffles an exactly
    half-ones block per worker chunk (chunk sizes must be even), which makes
    the identity channel's MI exactly 1 bit.
    """
    if n_bits < 1:
        raise ValueError(f"n_bits must be >= 1, got {n_bits}")
    if bit_source not in BIT_SOURCES:
        raise ValueError(f"bit_source must be one of {BIT_SOURCES}, got {bit_source!r}")
    if rule is None:
        rule = EncodingRule()
    if strategy is None:
        strategy = FixedBasisML(0.0)
    per_bit = strategy.pairs_per_bit
    offsets = np.concatenate([[0], np.cumsum(partition_sizes(n_bits, workers))])
    if bit_source == "balanced":
        for size in partition_sizes(n_bits, workers):
            if size % 2 != 0:
                raise ValueError(
                    "balanced bit source needs an even chunk per worker; "
                    f"got a chunk of {size} (n_bits={n_bits}, workers={workers})"
                )

    def run_chunk(worker: int, size: int):
        bit_stream = stream_from_seed(seed, 8 * worker + _ROLE_BITS)
        if bit_source == "iid":
            bits = bit_stream.integers(0, 2, size)
        else:
            bits = np.zeros(size, dtype=np.int64)
            bits[: size // 2] = 1
            bit_stream.shuffle(bits)
        photons = encode(
            bits,
            rule,
            stream_from_seed(seed, 8 * worker + _ROLE_ENCODE),
            pairs_per_bit=per_bit,
            start_index=int(offsets[worker]) * per_bit,
        )
        decoded, ties = _decode(
            photons, strategy, rule, stream_from_seed(seed, 8 * worker + _ROLE_RECEIVE)
        )
        return bits, decoded, ties

    chunks = map_partitions(n_bits, workers, run_chunk)
    sent = np.concatenate([c[0] for c in chunks])
    decoded = np.concatenate([c[1] for c in chunks])
    ties = int(sum(c[2] for c in chunks))
    ber = float(np.mean(sent != decoded))
    mi, ci = mutual_information(
        sent, decoded, rng=stream_from_seed(seed, _MI_STREAM_INDEX), n_shuffles=n_shuffles
    )
    return TransmissionReport(
        n_bits=int(n_bits),
        ber=ber,
        mutual_info_bits=mi,
        mi_confidence_interval=ci,
        seed=int(seed),
        strategy=strategy,
        rule=rule,
        decode_ties=ties,
        bit_source=bit_source,
    )
