"""Step-time overhead of MONA over Muon on one square matrix.

    python scripts/bench_overhead.py --size 1024 --steps 1000
"""

import argparse

from mona import suite


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--size", type=int, default=1024)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=5)
    args = p.parse_args()
    rep = suite.bench_overhead((args.size, args.size), args.steps, args.warmup)
    for key, value in rep.__dict__.items():
        print(f"{key:>24}: {value}")


if __name__ == "__main__":
    main()
