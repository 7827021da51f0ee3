"""Run every bundled embedding comparison and print the assertion table.

    python scripts/run_corpus.py [--seed 0] [--out corpus_runs]
"""
import argparse
import time
import warnings
from dataclasses import replace
from pathlib import Path

from sftlyap.acceptance import embedding_corpus
from sftlyap.cli import experiment_payload
from sftlyap.reports import dumps
from sftlyap.symbolic import PruningWarning
from sftlyap.zeros import run_monotonicity_experiment

NAMES = ("s_inclusion", "unremovable_inclusion", "s_zero_inclusion", "n_monotone", "j_monotone")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", type=Path, default=None, help="write one JSON report per config")
    args = ap.parse_args()
    warnings.simplefilter("ignore", PruningWarning)

    print(f"{'config':24s}" + "".join(f"{n:>24s}" for n in NAMES) + "   cross-check   secs")
    for name, cfg in embedding_corpus().items():
        if args.seed is not None:
            cfg.scan = replace(cfg.scan, seed=args.seed)
        t0 = time.perf_counter()
        rep = run_monotonicity_experiment(cfg.embedding(), cfg.measure_obj(), cfg.submeasure_obj(),
                                          cfg.potential_obj(), cfg.scan)
        dt = time.perf_counter() - t0
        status = {a.name: a.status for a in rep.assertions}
        cc = all(c.passed for c in rep.cross_checks.values())
        print(f"{name:24s}" + "".join(f"{status[n]:>24s}" for n in NAMES)
              + f"   {'ok' if cc else 'MISMATCH':>11s}   {dt:4.1f}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / name.replace(".yaml", ".json")).write_text(dumps(experiment_payload(rep)))


if __name__ == "__main__":
    main()
