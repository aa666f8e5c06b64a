#!/usr/bin/env python3
"""Side-by-side comparison of the channel attacks.

Runs each strategy over the same trial budget and tabulates the detection
statistics and information rates. The fake-EPR row is measured twice: in
production mode (where the run aborts at the first check, which is the
detection story) and in continuation mode (where the doomed run is observed
to the end, which is where the mutual-information story shows up).

Usage: python scripts/attack_comparison.py [--pairs N] [--trials T] [--seed S]
"""
import argparse

from eprqkd.adversary import AttackKind, AttackStrategy
from eprqkd.config import RunConfig
from eprqkd.runner import run


def summarize(attack: AttackStrategy, pairs: int, trials: int, seed: int, **kwargs):
    config = RunConfig(pairs=pairs, trials=trials, seed=seed, attack=attack, **kwargs)
    return run(config).aggregate


def fmt(value, digits=3):
    return "-" if value is None else f"{value:.{digits}f}"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=4000)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rows = []

    clean = summarize(AttackStrategy(), args.pairs, args.trials, args.seed)
    rows.append(("none", clean, clean))

    resend = summarize(
        AttackStrategy(kind=AttackKind.MEASURE_RESEND), args.pairs, args.trials, args.seed
    )
    rows.append(("measure-resend", resend, resend))

    fake = summarize(
        AttackStrategy(kind=AttackKind.FAKE_EPR), args.pairs, args.trials, args.seed
    )
    fake_cont = summarize(
        AttackStrategy(kind=AttackKind.FAKE_EPR),
        args.pairs,
        args.trials,
        args.seed,
        continuation_mode=True,
    )
    rows.append(("fake-epr", fake, fake_cont))

    opaque = summarize(
        AttackStrategy(kind=AttackKind.OPAQUE, destroy_probability=0.3),
        args.pairs,
        args.trials,
        args.seed,
    )
    rows.append(("opaque (p=0.3)", opaque, opaque))

    header = (
        f"{'attack':<16} {'detect':>7} {'abort':>6} {'qber1':>7} {'qber2':>7} "
        f"{'I(A:B)':>7} {'I(A:E)':>7} {'key/trial':>10}"
    )
    print(f"{args.trials} trials x {args.pairs} pairs, seed {args.seed}")
    print(header)
    print("-" * len(header))
    for name, prod, info in rows:
        qber1 = prod["check1"]["error_rate"] if prod["check1"] else None
        print(
            f"{name:<16} {prod['detection_rate']:>7.3f} {prod['abort_rate']:>6.3f} "
            f"{fmt(qber1):>7} "
            f"{fmt(info['check2']['error_rate'] if info['check2'] else None):>7} "
            f"{fmt(info['mutual_information_ab']):>7} "
            f"{fmt(info['mutual_information_ae']):>7} "
            f"{fmt(prod['mean_key_length'], 1):>10}"
        )


if __name__ == "__main__":
    main()
