"""Simulate, analyze and classify two-photon statistics under random measurements.

Subcommands::

    qspeckle simulate <config>            run an ensemble and write the report bundle
    qspeckle analyze <records.csv>        features, fits and figures for existing records
    qspeckle validate-ensemble <config>   check the interferometer ensemble statistics
    qspeckle train <labeled-dir> -o <model>
    qspeckle classify <records.csv> -m <model>
    qspeckle roster <out-dir>             simulate a labeled training directory

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from qspeckle import io as qio
from qspeckle.analytics import estimate_features
from qspeckle.classifier import (
    StateClass,
    classify,
    cross_validate,
    fit_model,
    load_model,
    save_model,
)
from qspeckle.config import (
    DETECTOR_PRESETS,
    AnalysisOptions,
    ReportOptions,
    detector_preset,
    dumps_provenance,
    load_config,
    load_provenance,
    with_output,
)
from qspeckle.errors import (
    ConfigError,
    DegenerateInputError,
    InsufficientDataError,
    QSpeckleError,
    SchemaError,
    TrainingError,
    ValidationError,
)
from qspeckle.interferometer import ensemble_stats, sample_haar_unitary, sample_spectral_tm
from qspeckle.measurement import run_ensemble
from qspeckle.report import (
    append_scatter,
    format_features,
    format_gof,
    gof_rows,
    read_scatter,
    reference_densities,
    scatter_row,
)

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad user input detected by the CLI itself."""


def _analyze_into(outdir: Path, rs, analysis: AnalysisOptions, report: ReportOptions,
                  label=None, model=None) -> dict:
    """Write features.txt, gof.txt and figures for ``rs`` into ``outdir``."""
    f = estimate_features(
        rs,
        dark_subtracted=analysis.dark_subtracted,
        accidental_corrected=analysis.accidental_corrected,
        n_boot=analysis.bootstrap,
        seed=analysis.bootstrap_seed,
    )
    refs = reference_densities(rs, f)
    (outdir / "features.txt").write_text(format_features(f))
    (outdir / "gof.txt").write_text(format_gof(gof_rows(rs, refs)))
    result = {"features": f}
    if report.figures:
        from qspeckle import plotting

        plotting.record_histograms(rs, refs, outdir, report.bins, report.figure_format)
    if model is not None:
        cls, score = classify(f, model)
        (outdir / "classification.txt").write_text(f"label\tscore\n{cls.value}\t{score!r}\n")
        result["classification"] = (cls, score)
    return result


def _finish_scatter(report: ReportOptions, label, source_name, f):
    if report.scatter is None:
        return
    append_scatter(report.scatter, scatter_row(label, source_name, f))
    if report.figures:
        from qspeckle import plotting

        plotting.scatter(read_scatter(report.scatter), report.scatter.with_suffix(f".{report.figure_format}"))


def _print_features(f, out=sys.stdout):
    print(f"V_I\t{f.V_I:.6g}\td_hat\t{f.d_hat:.6g}", file=out)
    print(f"V_C\t{f.V_C:.6g}\tpurity\t{f.purity:.6g}", file=out)
    if f.has_g2:
        print(f"V_g2\t{f.V_g2:.6g}\tmean_g2\t{f.mean_g2:.6g}", file=out)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg = with_output(cfg, args.output)
    rs = run_ensemble(cfg.source, cfg.interferometer, cfg.detector, cfg.N, cfg.master_seed)
    label = cfg.label or cfg.source.kind.value
    with qio.atomic_directory(cfg.output) as stage:
        qio.write_records(rs, stage / "records.csv")
        (stage / "records.provenance.ini").write_text(dumps_provenance(rs.provenance, cfg.N, cfg.label))
        # analyze what was written so simulate and analyze agree exactly
        written = qio.read_records(stage / "records.csv", rs.provenance)
        result = _analyze_into(stage, written, cfg.analysis, cfg.report, label)
    _finish_scatter(cfg.report, label, cfg.source.kind.value, result["features"])
    print(f"wrote {cfg.N} records to {cfg.output}")
    _print_features(result["features"])
    return EXIT_OK


def _load_records(path):
    path = Path(path)
    prov = None
    side = qio.provenance_path(path)
    if side.is_file():
        try:
            prov = load_provenance(side)
        except ConfigError as exc:
            raise SchemaError(f"provenance sidecar: {exc}") from None
    return qio.read_records(path, prov)


def cmd_analyze(args) -> int:
    rs = _load_records(args.records)
    model = load_model(args.model) if args.model else None
    analysis = AnalysisOptions(args.dark_subtracted, args.accidental_corrected, args.bootstrap, args.seed)
    report = ReportOptions(args.bins, not args.no_figures, args.format,
                           Path(args.scatter) if args.scatter else None)
    outdir = Path(args.output) if args.output else Path(args.records).with_name(Path(args.records).stem + "_report")
    src = rs.provenance.source
    label = args.label or (src.kind.value if src is not None else Path(args.records).stem)
    with qio.atomic_directory(outdir) as stage:
        result = _analyze_into(stage, rs, analysis, report, label, model)
    _finish_scatter(report, label, src.kind.value if src is not None else "unknown", result["features"])
    _print_features(result["features"])
    if "classification" in result:
        cls, score = result["classification"]
        print(f"classification\t{cls.value}\t{score:.4f}")
    print(f"report written to {outdir}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    icfg = cfg.interferometer
    N = args.n or cfg.N
    tms = [sample_spectral_tm(icfg, cfg.master_seed, i).bins[0] for i in range(N)]
    rep = ensemble_stats(tms)
    print(f"ensemble\t{icfg.ensemble.value}\tm\t{icfg.m}\tp\t{icfg.p}\tn\t{icfg.n}\tsamples\t{rep.n_samples}")
    print(f"amplitude_ks\t{rep.amplitude_gof:.6g}")
    print(f"phase_ks\t{rep.phase_gof:.6g}")
    print(f"entry_correlation_max\t{rep.entry_correlation_max:.6g}")
    U = sample_haar_unitary(icfg.m, cfg.master_seed)
    resid = float(np.max(np.abs(U.conj().T @ U - np.eye(icfg.m))))
    print(f"haar_unitarity_residual\t{resid:.3g}")
    ok = rep.amplitude_gof < args.ks and rep.phase_gof < args.ks and resid < 1e-10
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_RUNTIME


def _labeled_records(root: Path):
    if not root.is_dir():
        raise InputError(f"{root}: not a directory")
    found = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        try:
            label = StateClass(sub.name)
        except ValueError:
            raise InputError(f"{sub}: directory name is not a state class") from None
        for csv_path in sorted(sub.glob("*.csv")):
            found.append((label, csv_path))
    if not found:
        raise InputError(f"{root}: no <StateClass>/*.csv record files found")
    return found


def cmd_train(args) -> int:
    labeled = [(label, estimate_features(_load_records(p), n_boot=0, min_records=args.min_records))
               for label, p in _labeled_records(Path(args.labeled_dir))]
    model = fit_model(labeled, g2_unity_band=args.band)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    save_model(model, tmp)
    tmp.replace(out)
    print(f"trained on {len(labeled)} ensembles, {len(model.centroids)} classes -> {out}")
    if args.cv:
        acc, _ = cross_validate(labeled, folds=args.cv, g2_unity_band=args.band)
        print(f"cross_validated_accuracy\t{acc:.4f}")
    return EXIT_OK


def cmd_classify(args) -> int:
    model = load_model(args.model)
    rs = _load_records(args.records)
    f = estimate_features(rs, n_boot=0, min_records=args.min_records)
    cls, score = classify(f, model)
    print(f"{cls.value}\t{score:.6f}")
    return EXIT_OK


def cmd_roster(args) -> int:
    from qspeckle.roster import interferometer_for, ensemble_seed, roster_sources

    det = detector_preset(args.preset)
    out = Path(args.output)
    with qio.atomic_directory(out) as stage:
        for ci, (label, src) in enumerate(roster_sources().items()):
            d = stage / label.value
            d.mkdir()
            icfg = interferometer_for(src)
            for e in range(args.ensembles):
                rs = run_ensemble(src, icfg, det, args.settings, ensemble_seed(args.seed, ci, e))
                path = d / f"ensemble_{e:04d}.csv"
                qio.write_records(rs, path)
                qio.provenance_path(path).write_text(dumps_provenance(rs.provenance, args.settings, label.value))
    print(f"wrote {args.ensembles} ensembles x 9 classes to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qspeckle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an ensemble from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="override [run] output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="report on an existing records.csv")
    p.add_argument("records")
    p.add_argument("-o", "--output", help="report directory (default <records>_report)")
    p.add_argument("-m", "--model", help="classifier model to apply")
    p.add_argument("--scatter", help="cumulative feature CSV to append to")
    p.add_argument("--label", help="label for the scatter row")
    p.add_argument("--dark-subtracted", action="store_true")
    p.add_argument("--accidental-corrected", action="store_true")
    p.add_argument("--bootstrap", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--format", choices=("png", "svg", "pdf"), default="svg")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate-ensemble", help="check transmission-matrix statistics")
    p.add_argument("config")
    p.add_argument("-n", type=int, help="number of draws (default [run] N)")
    p.add_argument("--ks", type=float, default=0.03, help="KS pass threshold")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="fit a classifier from <labeled-dir>/<StateClass>/*.csv")
    p.add_argument("labeled_dir")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--band", type=float, default=0.05, help="unity-g2 rule half width")
    p.add_argument("--cv", type=int, default=0, help="also report k-fold accuracy")
    p.add_argument("--min-records", type=int, default=100)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify one records.csv")
    p.add_argument("records")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("--min-records", type=int, default=100)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("roster", help="simulate a labeled training directory")
    p.add_argument("output")
    p.add_argument("--ensembles", type=int, default=200)
    p.add_argument("--settings", type=int, default=200)
    p.add_argument("--preset", choices=sorted(DETECTOR_PRESETS), default="lab")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_roster)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ConfigError, SchemaError, ValidationError, InputError, TrainingError,
            InsufficientDataError, DegenerateInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QSpeckleError, OSError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
