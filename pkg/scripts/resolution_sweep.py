"""Drift of each estimator for power weights as L -> L + 2 and K -> K + 1.

    python scripts/resolution_sweep.py --K 2 --L 3
"""
import argparse

from cplab.config import ExperimentConfig
from cplab.lab import sweep
from cplab.weights import WeightSpec

ESTIMATORS = [("rh", None), ("cp", None), ("scp", None), ("best-constant", "ASM"),
              ("best-constant", "FSW"), ("best-constant", "CFW")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--L", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    print(f"{'a':>5} {'p':>4} {'estimator':<18} {'L drift':>8} {'K drift':>8}")
    for a in (-0.5, 0.0, 1.0):
        for p in (1.5, 2.0):
            for exp, kind in ESTIMATORS:
                cfg = ExperimentConfig(K=args.K, L=args.L, weight=WeightSpec.power(a), experiment=exp,
                                       kind=kind, p=p, budget=60)
                rep = sweep(cfg, jobs=args.jobs)
                for name, d in rep.drift.items():
                    print(f"{a:5.1f} {p:4.1f} {name:<18} {d['L']:8.4f} {d.get('K', float('nan')):8.4f}")


if __name__ == "__main__":
    main()
