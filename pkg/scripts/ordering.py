"""Paired teacher-student comparison of the four optimizers.

Prints per-seed final held-out losses, the means, and which of the
ordering inequalities hold.

    python scripts/ordering.py --seeds 10
"""

import argparse

import numpy as np

from mona import suite


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--steps", type=int, default=suite.ORDERING.steps)
    args = p.parse_args()
    fx = suite.OrderingFixture(steps=args.steps)
    losses = suite.ordering_losses(fx, range(args.seeds))
    print("seed " + " ".join(f"{a:>10}" for a in suite.ORDER))
    for i in range(args.seeds):
        print(f"{i:4d} " + " ".join(f"{losses[a][i]:10.5f}" for a in suite.ORDER))
    means = {a: float(np.mean(losses[a])) for a in suite.ORDER}
    print("mean " + " ".join(f"{means[a]:10.5f}" for a in suite.ORDER))
    for a, b in zip(suite.ORDER, suite.ORDER[1:]):
        print(f"{a} <= {b}: {means[a] <= means[b]}")


if __name__ == "__main__":
    main()
