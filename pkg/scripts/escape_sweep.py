"""Escape rate from the sharp well for MONA, Muon and a sign-flipped MONA.

    python scripts/escape_sweep.py --seeds 50
"""

import argparse

from mona import suite
from mona.optimizers import OptimizerConfig


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--lr", type=float, nargs="*", default=[suite.ESCAPE.learning_rate])
    args = p.parse_args()
    seeds = range(args.seeds)
    print(f"{'lr':>6} {'mona':>6} {'muon':>6} {'alpha+':>7} {'flat(mona)':>10} {'flat(muon)':>10}")
    for lr in args.lr:
        fx = suite.EscapeFixture(learning_rate=lr)
        rates = suite.escape_rates(fx, seeds)
        flipped = suite.escape_rates(fx, seeds, alpha=-OptimizerConfig().accel_alpha)
        print(f"{lr:6.3f} {rates['mona_sharp']:6.2f} {rates['muon_sharp']:6.2f} "
              f"{flipped['mona_sharp']:7.2f} {rates['mona_flat']:10.2f} {rates['muon_flat']:10.2f}")


if __name__ == "__main__":
    main()
