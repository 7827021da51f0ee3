"""Randomized study of J and N monotonicity on synthetic (U, S) pairs.

Each pair refines U and shrinks S.  Violations are split by whether some cell
of the refined partition lost all of S while its parent cell had some.
"""
import argparse
from collections import Counter

import numpy as np

from sftlyap.acceptance import synthetic_j_pair
from sftlyap.zeros import compute_J


def emptied(base, refined):
    return any(r.measure == 0 and any(b.measure > 0 and b.lo <= r.lo and r.hi <= b.hi
                                      for b in base.intervals)
               for r in refined.intervals)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    tally = Counter()
    worst = 0.0
    for _ in range(args.pairs):
        sup, U, S, U2, S2 = synthetic_j_pair(rng)
        base = compute_J(U, S, sup)
        free = compute_J(U2, S2, sup)
        held = compute_J(U2, S2, sup, N_floor=base.N)
        tally["N_sub<N_super (no floor)"] += free.N < base.N
        if held.J > base.J + 1e-12:
            tally["J up, emptied cell" if emptied(base, held) else "J up, no emptied cell"] += 1
            worst = max(worst, held.J - base.J)
    print(f"pairs: {args.pairs}")
    for k, v in sorted(tally.items()):
        print(f"  {k:28s} {v:6d}  ({100 * v / args.pairs:.1f}%)")
    print(f"  largest J increase           {worst:.4g}")


if __name__ == "__main__":
    main()
