#!/usr/bin/env python3
"""Sweep the accuracy target for the small-minibatch divergence experiment.

For each eps, runs normalized minibatch descent with b = ceil(0.2/eps) on
the adversarial two-component distribution and tabulates the empirical
nonnegative-gradient probability against its 0.2 ceiling, the observed hit
fraction, and the analytic absorb-probability ceiling.

Usage:
    python scripts/divergence_sweep.py --eps 0.1,0.05,0.02 --trials 20000
"""

from __future__ import annotations

import argparse
import json

from slqcopt import lower_bound_experiment, seeded_stream


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="0.1,0.05,0.02")
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    reports = []
    print(f"{'eps':>6} {'b':>4} {'p_hat':>8} {'hits':>6} {'hit_frac':>9} "
          f"{'analytic_ceiling':>17}")
    for i, text in enumerate(args.eps.split(",")):
        eps = float(text)
        rep = lower_bound_experiment(eps, args.trials, args.T,
                                     seeded_stream(args.seed).substream(i))
        reports.append(rep.to_dict())
        print(f"{eps:>6.3f} {rep.b:>4d} {rep.p_hat:>8.4f} {rep.hits:>6d} "
              f"{rep.hit_fraction:>9.2e} {rep.ceiling_analytic:>17.3e}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(reports, fh, indent=2)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
