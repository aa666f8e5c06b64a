"""Acceptance suite: one test per release criterion, at fixed tolerances.

Each test prints a single [criterion NN] PASS/FAIL line (visible with
``pytest -s`` or ``pytest -v -s``) in addition to the usual pytest verdict.
Statistical criteria run at fixed seeds, so the whole suite is
deterministic.
"""
import math
import time
from contextlib import contextmanager

from eprqkd.adversary import AttackKind, AttackStrategy
from eprqkd.analysis import (
    BB84_ACCOUNTING,
    EPR_ACCOUNTING,
    TWO_STEP_ACCOUNTING,
    efficiency,
    reference_bb84,
)
from eprqkd.config import RunConfig
from eprqkd.quantum import (
    BELL_LABELS,
    BellState,
    basis_state,
    bell_overlap_probabilities,
    make_bell_state,
    measure_bell_basis,
    measure_qubit_z,
    qubit_z_probabilities,
)
from eprqkd.report import render_structured, render_tabular
from eprqkd.rng import RandomSource, three_sigma
from eprqkd.protocol import run_protocol
from eprqkd.runner import run


@contextmanager
def criterion(number: int, label: str):
    try:
        yield
    except BaseException:
        print(f"[criterion {number:02d}] FAIL {label}")
        raise
    print(f"[criterion {number:02d}] PASS {label}")


def test_criterion_01_clean_run_correctness():
    with criterion(1, "clean runs: zero error rates, full agreement, <10s"):
        started = time.perf_counter()
        report = run(RunConfig(pairs=10_000, trials=20, seed=101))
        elapsed = time.perf_counter() - started
        agg = report.aggregate
        assert agg["completed"] == 20
        assert agg["check1"]["error_rate"] == 0.0
        assert agg["check2"]["error_rate"] == 0.0
        assert agg["key_agreement_rate"] == 1.0
        for row in report.rows:
            assert row["check1"]["error_rate"] == 0.0
            assert row["check2"]["error_rate"] == 0.0
            assert row["keys_agree"] is True
            surviving = 10_000 - row["check1"]["sample_size"] - row["check2"]["sample_size"]
            assert row["key_length"] == 2 * surviving
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_criterion_02_direct_measurement_attack():
    with criterion(2, "measure-resend: check1 clean, check2 at 50%, parity confined"):
        config = RunConfig(
            pairs=60_000,
            seed=102,
            attack=AttackStrategy(kind=AttackKind.MEASURE_RESEND),
        )
        outcome = run_protocol(config, RandomSource(config.seed))
        assert outcome.check1.error_rate == 0.0
        assert outcome.check2.sample_size >= 10_000
        assert abs(outcome.check2.error_rate - 0.50) <= 0.02
        for rec in outcome.ledger.records:
            if rec.outcome is not None:
                assert rec.outcome.correlated == rec.prepared.correlated


def test_criterion_03_fake_epr_attack():
    with criterion(3, "fake-EPR: check1 at 50%, detection rate 1 - 2^-16"):
        big = run_protocol(
            RunConfig(pairs=40_000, seed=103, attack=AttackStrategy(kind=AttackKind.FAKE_EPR)),
            RandomSource(103),
        )
        assert big.check1.sample_size >= 10_000
        assert abs(big.check1.error_rate - 0.50) <= 0.02

        trials = 10_000
        report = run(
            RunConfig(
                pairs=64,  # 0.25 * 64 = 16 check pairs per trial
                trials=trials,
                seed=104,
                attack=AttackStrategy(kind=AttackKind.FAKE_EPR),
            )
        )
        assert all(row["check1"]["sample_size"] == 16 for row in report.rows)
        expected = 1.0 - 2.0**-16
        tolerance = three_sigma(expected, trials)
        assert abs(report.aggregate["detection_rate"] - expected) <= tolerance


def test_criterion_04_mutual_information_headlines():
    with criterion(4, "mutual information: clean 2 bits; attacked 0 and Eve 2"):
        clean = run(RunConfig(pairs=20_000, trials=1, seed=105))
        assert abs(clean.aggregate["mutual_information_ab"] - 2.00) <= 0.02

        attacked = run(
            RunConfig(
                pairs=20_000,
                trials=1,
                seed=106,
                attack=AttackStrategy(kind=AttackKind.FAKE_EPR),
                continuation_mode=True,
            )
        )
        assert abs(attacked.aggregate["mutual_information_ab"] - 0.00) <= 0.02
        assert abs(attacked.aggregate["mutual_information_ae"] - 2.00) <= 0.02


def test_criterion_05_bb84_reference_constants():
    with criterion(5, "BB84 reference constants 0.046 and 0.189"):
        ref = reference_bb84()
        assert round(ref.i_ab_attacked, 3) == 0.046
        assert round(ref.i_ae, 3) == 0.189
        assert round(ref.i_ab_clean, 3) == 0.189


def test_criterion_06_efficiency_values():
    with criterion(6, "efficiency 0.25 / 0.50 / 1.00 under the three accountings"):
        assert efficiency(BB84_ACCOUNTING) == 0.25
        assert efficiency(EPR_ACCOUNTING) == 0.50
        assert efficiency(TWO_STEP_ACCOUNTING) == 1.00


def test_criterion_07_opaque_attack():
    with criterion(7, "opaque: always stalls at zero tolerance; 70% receipt"):
        strict = run(
            RunConfig(
                pairs=1000,
                trials=100,
                seed=107,
                attack=AttackStrategy(kind=AttackKind.OPAQUE, destroy_probability=0.3),
                loss_tolerance=0.0,
            )
        )
        assert strict.aggregate["abort_rate"] == 1.0

        tolerant = run(
            RunConfig(
                pairs=10_000,
                trials=1,
                seed=108,
                attack=AttackStrategy(kind=AttackKind.OPAQUE, destroy_probability=0.3),
                loss_tolerance=0.5,
            )
        )
        receipt = tolerant.aggregate["mean_receipt_fraction_1"]
        assert abs(receipt - 0.70) <= three_sigma(0.7, 10_000)


def test_criterion_08_measurement_oracle_equivalence():
    with criterion(8, "sampled measurements match exact distributions at 1e5"):
        samples = 100_000
        states = {label.name: make_bell_state(label) for label in BELL_LABELS}
        states.update({bits: basis_state(bits) for bits in ("00", "01", "10", "11")})

        exact_00 = bell_overlap_probabilities(basis_state("00"))
        assert abs(exact_00[BellState.PSI1] - 0.5) < 1e-12
        assert abs(exact_00[BellState.PSI2] - 0.5) < 1e-12
        assert exact_00[BellState.PSI3] == 0.0
        assert exact_00[BellState.PSI4] == 0.0

        for name, state in states.items():
            exact = bell_overlap_probabilities(state)
            rng = RandomSource(109, f"bell/{name}")
            counts = {label: 0 for label in BELL_LABELS}
            for _ in range(samples):
                outcome, _ = measure_bell_basis(state, rng)
                counts[outcome] += 1
            for label in BELL_LABELS:
                assert abs(counts[label] / samples - exact[label]) <= 0.01, (name, label)

            for which in ("first", "second"):
                p0, _ = qubit_z_probabilities(state, which)
                rng = RandomSource(110, f"z/{name}/{which}")
                zeros = sum(
                    1
                    for _ in range(samples)
                    if measure_qubit_z(state, which, rng)[0] == 0
                )
                assert abs(zeros / samples - p0) <= 0.01, (name, which)


def test_criterion_09_multiparty_common_key():
    with criterion(9, "three-party chain: identical common keys every trial"):
        report = run(RunConfig(pairs=1000, trials=20, seed=111, parties=3))
        agg = report.aggregate
        assert agg["completed"] == 20
        assert agg["key_agreement_rate"] == 1.0
        assert all(row["keys_agree"] is True for row in report.rows)


def test_criterion_10_determinism():
    with criterion(10, "same config and seed give byte-identical outputs"):
        configs = [
            RunConfig(
                pairs=400,
                trials=3,
                seed=112,
                attack=AttackStrategy(kind=AttackKind.MEASURE_RESEND),
            ),
            RunConfig(pairs=300, trials=2, seed=113, parties=3),
        ]
        for config in configs:
            first = run(config, collect_transcripts=True)
            second = run(config, collect_transcripts=True)
            assert render_structured(first) == render_structured(second)
            assert render_tabular(first) == render_tabular(second)
            assert first.transcripts == second.transcripts
