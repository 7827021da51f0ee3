"""Command line entry point: ``sftlyap --config FILE --command NAME``.

Exit codes: 0 success, 1 failed assertion, 2 configuration or output error,
3 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import sys
import warnings
from dataclasses import asdict, replace
from pathlib import Path

from . import acceptance
from .cocycle import lyapunov_scan
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .reports import (BANDS_HEADER, SCAN_HEADER, Artifact, ReportIOError, band_rows, csv_text,
                      emit_reports, json_artifact, metadata, scan_rows)
from .spectra import union_S
from .symbolic import PruningWarning, ResourceCapError
from .zeros import (INFINITE_U_MESSAGE, ExperimentReport, SystemAnalysis, analyze_system,
                    compute_J, j_truncation_sensitivity, positivity_certificate,
                    run_monotonicity_experiment)

COMMANDS = ("scan-lyapunov", "periodic-spectra", "classify-zeros", "compute-j",
            "compare-embeddings", "positivity-certificate", "selftest")

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _meta(cfg: ExperimentConfig, kind: str, command: str, operation: str, seeded: bool = True,
          **params) -> dict:
    return metadata(kind, command, cfg.digest(), cfg.scan.seed if seeded else None,
                    cfg.scan.max_period, module="sftlyap", operation=operation,
                    parameters=params)


def _scan_params(cfg: ExperimentConfig, sup_norm: float) -> dict:
    g = cfg.scan.grid(sup_norm)
    return {"grid_lo": float(g[0]), "grid_hi": float(g[-1]), "grid_count": len(g),
            "theta": cfg.scan.theta, "n_steps": cfg.scan.n_steps, "n_samples": cfg.scan.n_samples,
            "seed": cfg.scan.seed, "max_period": cfg.scan.max_period, "tol_delta": cfg.scan.tol_delta}


def _analysis_summary(an: SystemAnalysis) -> dict:
    return {
        "candidates": an.scan.candidates,
        "finite": an.finite,
        "widest_cluster_fraction": an.scan.widest_cluster_fraction,
        "estimator_errors": an.scan.errors,
        "cross_check": an.cross_check,
        "orbits": len(an.orbits),
        "S": an.s_union.intervals.to_list(),
        "S_measure": an.s_union.measure,
        "J": an.j_report.to_dict() if an.j_report else None,
        "J_truncation_check": j_truncation_sensitivity(an),
    }


def cmd_scan(cfg: ExperimentConfig, command: str):
    V = cfg.potential_obj()
    grid = cfg.scan.grid(V.sup_norm)
    ests = lyapunov_scan(grid, V, cfg.measure_obj(), cfg.scan.n_steps, cfg.scan.n_samples,
                         cfg.scan.seed)
    csv = csv_text(SCAN_HEADER, scan_rows(ests))
    result = {"csv": "scan.csv", "csv_sha256": _sha(csv), "rows": len(ests),
              "min_L_hat": min(e.value for e in ests)}
    meta = _meta(cfg, "scan", command, "lyapunov_scan", **_scan_params(cfg, V.sup_norm))
    return EXIT_OK, [Artifact("scan.csv", csv), json_artifact("scan-lyapunov.json", meta, result)]


def cmd_spectra(cfg: ExperimentConfig, command: str):
    T, V = cfg.transition_system(), cfg.potential_obj()
    su = union_S(T, V, cfg.scan.max_period)
    csv = csv_text(BANDS_HEADER, band_rows(su, T))
    result = {"S": su.intervals.to_list(), "S_measure": su.measure, "orbits": len(su.per_orbit),
              "csv": "bands.csv", "csv_sha256": _sha(csv)}
    meta = _meta(cfg, "spectra", command, "union_S", seeded=False, max_period=cfg.scan.max_period)
    return EXIT_OK, [Artifact("bands.csv", csv), json_artifact("periodic-spectra.json", meta, result)]


def cmd_classify(cfg: ExperimentConfig, command: str):
    T, V, mu = cfg.transition_system(), cfg.potential_obj(), cfg.measure_obj()
    an = analyze_system(T, V, mu, cfg.scan)
    csv = csv_text(SCAN_HEADER, scan_rows(an.scan.estimates))
    result = _analysis_summary(an)
    result["csv"], result["csv_sha256"] = "scan.csv", _sha(csv)
    meta = _meta(cfg, "candidates", command, "scan_zero_candidates+classify_unremovable",
                 **_scan_params(cfg, V.sup_norm))
    code = EXIT_OK if an.cross_check.passed else EXIT_ASSERT
    return code, [Artifact("scan.csv", csv), json_artifact("classify-zeros.json", meta, result)]


def cmd_compute_j(cfg: ExperimentConfig, command: str):
    S = cfg.functional_S()
    if S is not None:
        sup = cfg.functional.sup_norm
        if sup is None:
            sup = cfg.potential_obj().sup_norm
        rep = compute_J(cfg.functional.U or [], S, sup)
        meta = _meta(cfg, "jreport", command, "compute_J", seeded=False, source="config",
                     U=rep.U, S=S.to_list(), sup_norm=sup)
        return EXIT_OK, [json_artifact("compute-j.json", meta, rep.to_dict())]
    T, V, mu = cfg.transition_system(), cfg.potential_obj(), cfg.measure_obj()
    an = analyze_system(T, V, mu, cfg.scan)
    meta = _meta(cfg, "jreport", command, "compute_J", source="scan",
                 **_scan_params(cfg, V.sup_norm))
    if an.j_report is None:
        diag = {"error": INFINITE_U_MESSAGE,
                "widest_cluster_fraction": an.scan.widest_cluster_fraction}
        return EXIT_ASSERT, [json_artifact("compute-j.json", meta, diag)]
    payload = an.j_report.to_dict()
    payload["truncation_check"] = j_truncation_sensitivity(an)
    return EXIT_OK, [json_artifact("compute-j.json", meta, payload)]


def experiment_payload(rep: ExperimentReport) -> dict:
    return {
        "passed": rep.passed,
        "assertions": rep.assertions,
        "super": _analysis_summary(rep.super_analysis),
        "sub": _analysis_summary(rep.sub_analysis),
    }


def cmd_compare(cfg: ExperimentConfig, command: str):
    rep = run_monotonicity_experiment(cfg.embedding(), cfg.measure_obj(), cfg.submeasure_obj(),
                                      cfg.potential_obj(), cfg.scan)
    meta = _meta(cfg, "experiment", command, "run_monotonicity_experiment",
                 **_scan_params(cfg, cfg.potential_obj().sup_norm))
    code = EXIT_OK if rep.passed else EXIT_ASSERT
    return code, [json_artifact("compare-embeddings.json", meta, experiment_payload(rep))]


def cmd_positivity(cfg: ExperimentConfig, command: str):
    cert = positivity_certificate(cfg.transition_system(), cfg.potential_obj())
    meta = _meta(cfg, "certificate", command, "positivity_certificate", seeded=False)
    return EXIT_OK, [json_artifact("positivity-certificate.json", meta, asdict(cert))]


def cmd_selftest(cfg: ExperimentConfig, command: str):
    results = acceptance.run_all(echo=print)
    ok = all(r.passed for r in results)
    meta = _meta(cfg, "selftest", command, "acceptance.run_all", seeded=False)
    payload = {"passed": ok, "criteria": results}
    return (EXIT_OK if ok else EXIT_ASSERT), [json_artifact("selftest.json", meta, payload)]


HANDLERS = {
    "scan-lyapunov": cmd_scan,
    "periodic-spectra": cmd_spectra,
    "classify-zeros": cmd_classify,
    "compute-j": cmd_compute_j,
    "compare-embeddings": cmd_compare,
    "positivity-certificate": cmd_positivity,
    "selftest": cmd_selftest,
}


def run_command(cmd: str, cfg: ExperimentConfig) -> tuple[int, list[Artifact]]:
    if cmd not in HANDLERS:
        raise ValueError(f"unknown command {cmd!r}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PruningWarning)
        return HANDLERS[cmd](cfg, cmd)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sftlyap", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="YAML experiment config (defaults apply if omitted)")
    ap.add_argument("--command", required=True, choices=COMMANDS, metavar="NAME",
                    help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("--seed", type=int, help="base seed, overrides scan.seed")
    ap.add_argument("--max-period", type=int, help="orbit truncation, overrides scan.max_period")
    ap.add_argument("--out", type=Path, help="output directory, overrides output.dir")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config("")
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("--seed", None, "seed must be an unsigned 64-bit integer")
            cfg.scan = replace(cfg.scan, seed=args.seed)
        if args.max_period is not None:
            if args.max_period < 1:
                raise ConfigError("--max-period", None, "must be >= 1")
            cfg.scan = replace(cfg.scan, max_period=args.max_period)
        code, artifacts = run_command(args.command, cfg)
        out = args.out if args.out is not None else Path(cfg.output.dir)
        for path in emit_reports(artifacts, out, cfg.output.formats):
            print(path)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except ReportIOError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    return code


if __name__ == "__main__":
    sys.exit(main())
