"""Channel interposition: the analyzed eavesdropping strategies.

The adversary acts only on particles while they are in flight and only on
information she can physically obtain: her own measurement outcomes and her
own random draws. She never reads the sender's secret preparation choices.
Everything she learns is recorded in :class:`EveState`, so a run can be
scored afterwards without giving the attack code oracle access.

Strategies:

* ``none``            - identity channel.
* ``measure-resend``  - Z-measure every passing particle of the first
                        sequence and forward the collapsed particle. The
                        pair state collapses to a product state, which the
                        first check cannot see but the second check exposes
                        with a 50% error rate.
* ``fake-epr``        - keep the genuine first sequence, hand the receiver
                        one half of a freshly prepared pair instead, then
                        capture the second sequence and Bell-measure the
                        completed genuine pairs. Reads the whole key, at the
                        price of a 50% mismatch rate in the first check.
* ``opaque``          - destroy each passing particle with a fixed
                        probability and forward the survivors untouched.
                        Starves the receiver rather than reading anything;
                        countered by aborting on missing particles.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .analysis import JointDistribution
from .errors import ConfigurationError
from .ledger import DESTROYED, Disposition, PairLedger
from .quantum import (
    BELL_LABELS,
    BellState,
    make_bell_state,
    measure_bell_basis,
    measure_qubit_z,
)
from .rng import RandomSource


class AttackKind(Enum):
    NONE = "none"
    MEASURE_RESEND = "measure-resend"
    FAKE_EPR = "fake-epr"
    OPAQUE = "opaque"


@dataclass(frozen=True)
class AttackStrategy:
    """Attack selection plus the parameters meaningful for that kind.

    ``fake_label`` is the pair state planted by the fake-EPR attack; None
    draws a fresh uniform label per pair. The first-check detection
    statistic is the same either way. ``measure_second_sequence`` is a
    measure-resend extension: Eve also measures the second sequence, which
    leaks the pairing parity (one bit per pair) while destroying the run.
    """

    kind: AttackKind = AttackKind.NONE
    fake_label: BellState | None = BellState.PSI1
    destroy_probability: float = 0.0
    measure_second_sequence: bool = False

    def __post_init__(self):
        if not 0.0 <= self.destroy_probability <= 1.0:
            raise ConfigurationError(
                f"destroy_probability must be in [0, 1], got {self.destroy_probability}"
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "fake_label": self.fake_label.name.lower() if self.fake_label else "uniform",
            "destroy_probability": self.destroy_probability,
            "measure_second_sequence": self.measure_second_sequence,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackStrategy":
        fake = data.get("fake_label", "psi1")
        return cls(
            kind=AttackKind(data.get("kind", "none")),
            fake_label=None if fake == "uniform" else BellState[fake.upper()],
            destroy_probability=data.get("destroy_probability", 0.0),
            measure_second_sequence=data.get("measure_second_sequence", False),
        )


@dataclass
class EveMeasurement:
    pair_index: int
    basis: str  # "z" or "bell"
    half: int | None  # 1, 2, or None for a joint measurement
    outcome: str  # "0"/"1" for z, a 2-bit code for bell


@dataclass
class EveState:
    """Everything the adversary holds or has learned."""

    captured_halves: list[tuple[int, int]] = field(default_factory=list)
    measurement_log: list[EveMeasurement] = field(default_factory=list)
    inferred_key: dict[int, BellState] = field(default_factory=dict)

    def z_outcomes(self) -> dict[int, dict[int, int]]:
        """Z measurement bits grouped as {pair index: {half: bit}}."""
        grouped: dict[int, dict[int, int]] = {}
        for m in self.measurement_log:
            if m.basis == "z":
                grouped.setdefault(m.pair_index, {})[m.half] = int(m.outcome)
        return grouped


def interpose(
    strategy: AttackStrategy,
    transmission: int,
    ledger: PairLedger,
    eve: EveState,
    rng: RandomSource,
) -> dict | None:
    """Apply the strategy to the particles currently in flight.

    Mutates the ledger (carriers, custody, dispositions) and the adversary
    state in place. Returns a transcript payload describing what was done,
    or None for the identity channel.
    """
    if transmission not in (1, 2):
        raise ConfigurationError(f"transmission must be 1 or 2, got {transmission}")
    in_flight = (
        Disposition.IN_FLIGHT_1 if transmission == 1 else Disposition.IN_FLIGHT_2
    )
    records = [r for r in ledger.records if r.disposition is in_flight]

    if strategy.kind is AttackKind.NONE:
        return None

    if strategy.kind is AttackKind.MEASURE_RESEND:
        if transmission == 2 and not strategy.measure_second_sequence:
            return None
        half = 2 if transmission == 1 else 1
        which = "second" if transmission == 1 else "first"
        bits = []
        for rec in records:
            bit, post = measure_qubit_z(rec.carrier, which, rng)
            rec.carrier = post
            eve.measurement_log.append(
                EveMeasurement(rec.index, "z", half, str(bit))
            )
            bits.append(str(bit))
        return {
            "strategy": strategy.kind.value,
            "sequence": transmission,
            "measured": len(records),
            "outcomes": "".join(bits),
        }

    if strategy.kind is AttackKind.FAKE_EPR:
        if transmission == 1:
            planted = []
            for rec in records:
                label = strategy.fake_label
                if label is None:
                    label = BELL_LABELS[rng.uniform_index(4)]
                rec.fake_carrier = make_bell_state(label)
                rec.fake_custody = ("eve", ledger.receiver)
                rec.custody = (rec.custody[0], "eve")
                eve.captured_halves.append((rec.index, 2))
                planted.append(label.code)
            return {
                "strategy": strategy.kind.value,
                "sequence": 1,
                "captured": len(records),
                "planted": len(records),
                "fake_codes": "".join(planted),
            }
        inferred = []
        for rec in records:
            eve.captured_halves.append((rec.index, 1))
            rec.custody = ("eve", "eve")
            label, post = measure_bell_basis(rec.carrier, rng)
            rec.carrier = post
            eve.measurement_log.append(EveMeasurement(rec.index, "bell", None, label.code))
            eve.inferred_key[rec.index] = label
            inferred.append(label.code)
            if rec.fake_custody is not None:
                rec.fake_custody = (ledger.receiver, rec.fake_custody[1])
        return {
            "strategy": strategy.kind.value,
            "sequence": 2,
            "captured": len(records),
            "inferred_codes": "".join(inferred),
        }

    # Opaque: destroy with probability p, forward the rest untouched.
    destroyed = []
    for rec in records:
        if rng.bernoulli(strategy.destroy_probability):
            if transmission == 1:
                rec.custody = (rec.custody[0], DESTROYED)
            else:
                rec.custody = (DESTROYED, rec.custody[1])
            rec.disposition = Disposition.DROPPED
            destroyed.append(rec.index)
    return {
        "strategy": strategy.kind.value,
        "sequence": transmission,
        "destroyed": len(destroyed),
        "forwarded": len(records) - len(destroyed),
        "destroyed_indices": destroyed,
    }


class AdversaryChannel:
    """A channel with a fixed strategy, adversary state, and random stream."""

    def __init__(self, strategy: AttackStrategy, rng: RandomSource):
        self.strategy = strategy
        self.eve = EveState()
        self.rng = rng

    def interpose(self, transmission: int, ledger: PairLedger) -> dict | None:
        return interpose(self.strategy, transmission, ledger, self.eve, self.rng)


def eve_guess_counts(eve: EveState, ledger: PairLedger) -> dict[str, dict[str, int]]:
    """Joint counts {sender's code: {Eve's guess: n}} over pairs Eve scored.

    The guess alphabet depends on what the attack produced: full 2-bit codes
    for fake-EPR Bell measurements, the concatenated Z bits otherwise. The
    ledger supplies only the true codes being guessed at.
    """
    counts: dict[str, dict[str, int]] = {}

    def bump(truth: str, guess: str):
        counts.setdefault(truth, {})
        counts[truth][guess] = counts[truth].get(guess, 0) + 1

    if eve.inferred_key:
        for index, label in sorted(eve.inferred_key.items()):
            bump(ledger.records[index].prepared.code, label.code)
        return counts

    outcomes = eve.z_outcomes()
    complete = {i: h for i, h in outcomes.items() if 1 in h and 2 in h}
    if complete:
        # Pairs measured on both halves are her real guesses; partially
        # measured ones carry strictly less and are not scored alongside.
        for index, halves in sorted(complete.items()):
            bump(ledger.records[index].prepared.code, f"{halves[1]}{halves[2]}")
        return counts
    for index, halves in sorted(outcomes.items()):
        bump(ledger.records[index].prepared.code, str(halves.get(2, halves.get(1))))
    return counts


def eve_information(eve: EveState, ledger: PairLedger) -> JointDistribution:
    """Empirical joint distribution of (sender's code, Eve's guess).

    The truth column is used only for scoring; the attack never saw it.
    When Eve recorded nothing (identity or opaque channel) the joint is the
    exact independent uniform one, whose mutual information is zero.
    """
    counts = eve_guess_counts(eve, ledger)
    codes = tuple(label.code for label in BELL_LABELS)
    if not counts:
        uniform = {x: {y: 1 for y in codes} for x in codes}
        return JointDistribution.from_counts(uniform)
    return JointDistribution.from_counts(counts)
