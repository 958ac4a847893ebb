"""Search for a weight whose SC_p constant is large relative to its C_p constant.

    python scripts/run_hunt.py --K 1 --L 3 --budget 40 --seed 7
"""
import argparse
import json

from cplab.core import GridDomain
from cplab.lab import hunt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=1)
    ap.add_argument("--L", type=int, default=3)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--r", type=float, default=1.5)
    ap.add_argument("--B", type=float, default=1.5)
    ap.add_argument("--budget", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    state = hunt(args.p, args.r, args.B, GridDomain(args.K, args.L), budget=args.budget, seed=args.seed)
    print(json.dumps({
        "best_scp": state.best_scp,
        "best_cp": state.best_cp,
        "ratio": state.ratio,
        "accepted": state.accepted,
        "trajectory_hash": state.trajectory_hash,
        "weight": [round(float(v), 6) for v in state.weight().values],
    }, indent=2))


if __name__ == "__main__":
    main()
