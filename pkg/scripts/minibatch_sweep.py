#!/usr/bin/env python3
"""Minibatch-size sweep for normalized minibatch descent on noisy sigmoid
regression: how the reached objective improves as the batch grows.

Writes a tidy CSV (seed, b, t, minibatch_value, population_gap) and prints
the median final population gap per batch size.

Usage:
    python scripts/minibatch_sweep.py --sizes 1,10,100,646 --out sweep.csv
"""

from __future__ import annotations

import argparse
import csv
import statistics

import numpy as np

from slqcopt import SngdConfig, evaluate_iterates, make_noisy_glm, seeded_stream, sngd


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1,10,100,646")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--W", type=float, default=2.0)
    ap.add_argument("--T", type=int, default=1500)
    ap.add_argument("--eta", type=float, default=0.1)
    ap.add_argument("--seed0", type=int, default=900)
    ap.add_argument("--out", default="minibatch_sweep.csv")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rows = []
    final_gaps = {b: [] for b in sizes}
    for i in range(args.seeds):
        st = seeded_stream(args.seed0 + i)
        F = make_noisy_glm(st.substream(0), args.d, args.W)
        opt_val = F.expected.value(F.minimizer)
        for j, b in enumerate(sizes):
            tr = sngd(F, SngdConfig(T=args.T, eta=args.eta, x1=np.zeros(args.d),
                                    b=b, stream=st.substream(1 + j)))
            gaps = evaluate_iterates(tr, F.expected) - opt_val
            final_gaps[b].append(float(gaps[-1]))
            for t in range(len(tr)):
                rows.append((args.seed0 + i, b, t, tr.values[t], gaps[t]))

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "b", "t", "minibatch_value", "population_gap"])
        for row in rows:
            w.writerow(row)

    print("median final population gap by minibatch size:")
    for b in sizes:
        print(f"  b={b:>5d}: {statistics.median(final_gaps[b]):.3e}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
