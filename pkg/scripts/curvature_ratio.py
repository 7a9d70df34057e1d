"""Time-averaged |A| along the sharp and flat eigendirections, per seed.

    python scripts/curvature_ratio.py
"""

import argparse

import numpy as np

from mona import suite


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=10)
    args = p.parse_args()
    for algo in ("mona", "muon"):
        ratios = suite.prop1_ratios(algo, range(args.seeds))
        label = algo if algo == "mona" else "muon (shadow)"
        print(f"{label:>14}: " + " ".join(f"{r:7.1f}" for r in ratios)
              + f"   median {np.median(ratios):.1f}")


if __name__ == "__main__":
    main()
