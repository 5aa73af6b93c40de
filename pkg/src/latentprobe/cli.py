"""Command-line surface tying the pipeline together.

Every subcommand emits a JSON report (stdout, or --out) that embeds the
resolved run configuration and a schema_version; binary containers, CSVs,
and SVGs are written through dedicated flags.  Identical configuration and
inputs give byte-identical JSON/CSV output; the SVG differs only in its
timestamp comment, which --no-svg-timestamp removes.
"""

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .featureset import FeatureSet, load_features, save_features
from .kmeans import kmeans as run_kmeans
from .kmeans import load_clustering, save_clustering
from .clustermetrics import (
    class_distance_stats,
    cluster_accuracy,
    overlap_delta,
    purity,
    singleton_fraction,
)
from .multicut import (
    DENSE_NODE_CAP,
    build_cost_graph,
    cluster_parallel,
    estimate_temperature,
    objective,
    threshold_sweep,
)
from .indicators import (
    INDICATORS,
    aggregate_corruption_accuracy,
    correlate,
    load_bundled_fixture,
    load_records,
    robustness,
)
from .spectra import components_for_ratio, pca_profile, project_2d, reduce as pca_reduce
from .synth import CorruptionSpec, MixtureSpec, corrupt, generate_mixture

SCHEMA_VERSION = 1


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("LATENTPROBE_SEED")
    return int(env) if env else 0


def _run_config(command: str, args: argparse.Namespace, **overrides) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    cfg.update(overrides)
    return {"command": command, "args": cfg}


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def emit_scatter(points, fit, csv_path, svg_path=None, svg_timestamp=True) -> None:
    """Write a scatter CSV (name,x,y) and optionally an SVG with the fit line."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("name,x,y\n")
        for x, y, name in points:
            fh.write(f"{name},{x:.10g},{y:.10g}\n")
    if svg_path:
        Path(svg_path).write_text(_render_scatter_svg(points, fit, svg_timestamp), "utf-8")


def _render_scatter_svg(points, fit, timestamp: bool) -> str:
    width, height, margin = 640, 480, 60
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    if xmax == xmin:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5

    def px(x):
        return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin)

    def py(y):
        return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    if timestamp:
        now = datetime.datetime.now(datetime.timezone.utc).isoformat()
        out.append(f"<!-- generated {now} -->")
    out.append(
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#444"/>'
    )
    for value, anchor, pos in [
        (xmin, "start", f'x="{margin}" y="{height - margin + 20}"'),
        (xmax, "end", f'x="{width - margin}" y="{height - margin + 20}"'),
        (ymin, "start", f'x="{margin - 55}" y="{height - margin}"'),
        (ymax, "start", f'x="{margin - 55}" y="{margin + 10}"'),
    ]:
        out.append(f'<text {pos} text-anchor="{anchor}" font-size="11">{value:.3g}</text>')
    if fit is not None:
        slope, intercept = fit
        x0, x1 = xmin, xmax
        out.append(
            f'<line x1="{px(x0):.2f}" y1="{py(slope * x0 + intercept):.2f}" '
            f'x2="{px(x1):.2f}" y2="{py(slope * x1 + intercept):.2f}" '
            'stroke="#c33" stroke-width="1.5"/>'
        )
    for x, y, name in points:
        out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="#226"/>')
        out.append(
            f'<text x="{px(x) + 5:.2f}" y="{py(y) - 5:.2f}" font-size="10">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _load_record_set(args) -> list:
    if getattr(args, "records", None):
        return load_records(args.records)
    if getattr(args, "fixture", None):
        return load_records(args.fixture)
    return load_bundled_fixture()


def _subset(fs: FeatureSet, size: int, seed: int) -> FeatureSet:
    if size <= 0 or size >= fs.n:
        return fs
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = np.sort(rng.permutation(fs.n)[:size])
    return FeatureSet(fs.data[idx], fs.labels[idx], fs.class_count)


# --- subcommand handlers -------------------------------------------------


def _cmd_gen_synthetic(args) -> None:
    seed = _resolve_seed(args.seed)
    severities = tuple(int(s) for s in args.severities.split(","))
    mixture = MixtureSpec(
        class_count=args.classes,
        dim=args.dim,
        per_class=args.per_class,
        separation=args.separation,
        noise_std=args.noise_std,
        seed=seed,
    )
    corruption = CorruptionSpec(
        severities=severities,
        drift_scale=args.drift_scale,
        noise_growth=args.noise_growth,
        drift_seed=args.drift_seed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    clean = generate_mixture(mixture)
    clean_path = out_dir / "clean.lpfs"
    save_features(clean, clean_path)
    files = {"clean": str(clean_path), "severities": {}}
    for s in severities:
        path = out_dir / f"severity_{s}.lpfs"
        save_features(corrupt(clean, corruption, s), path)
        files["severities"][str(s)] = str(path)
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "run_config": _run_config("gen-synthetic", args, seed=seed),
            "n": clean.n,
            "d": clean.d,
            "class_count": clean.class_count,
            "files": files,
        },
        args.out,
    )


def _cmd_kmeans(args) -> None:
    seed = _resolve_seed(args.seed)
    fs = load_features(args.features)
    result = run_kmeans(
        fs, args.k, seed=seed, max_iter=args.max_iter, tol=args.tol, restarts=args.restarts
    )
    save_clustering(result.clustering, args.clustering_out)
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "run_config": _run_config("kmeans", args, seed=seed),
            "k": args.k,
            "objective": result.objective,
            "iterations": result.iterations,
            "converged": result.converged,
            "cluster_count": result.clustering.cluster_count,
            "clustering_file": str(args.clustering_out),
        },
        args.out,
    )


def _parse_sweep(text: str) -> list:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"--sweep expects a:b:step, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"--sweep needs step > 0 and b >= a, got {text!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def _cmd_multicut(args) -> None:
    if (args.theta is None) == (args.sweep is None):
        raise ValueError("exactly one of --theta or --sweep is required")
    seed = _resolve_seed(args.seed)
    fs = _subset(load_features(args.features), args.subset_size, seed)
    temperature = (
        estimate_temperature(fs, seed=seed) if args.temperature == "auto" else float(args.temperature)
    )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "run_config": _run_config("multicut", args, seed=seed),
        "temperature": temperature,
        "subset_n": fs.n,
        "sweep": None,
    }
    if args.sweep is not None:
        theta, table = threshold_sweep(fs, _parse_sweep(args.sweep), temperature)
        doc["sweep"] = [
            {
                "threshold": r.threshold,
                "cluster_accuracy": r.cluster_accuracy,
                "purity": r.purity,
                "cluster_count": r.cluster_count,
                "singleton_count": r.singleton_count,
            }
            for r in table.rows
        ]
        if args.sweep_csv:
            with open(args.sweep_csv, "w", encoding="utf-8", newline="") as fh:
                fh.write("threshold,cluster_accuracy,purity,cluster_count,singleton_count\n")
                for r in table.rows:
                    fh.write(
                        f"{r.threshold:.10g},{r.cluster_accuracy:.10g},{r.purity:.10g},"
                        f"{r.cluster_count},{r.singleton_count}\n"
                    )
    else:
        theta = args.theta
    doc["theta"] = theta
    if args.clustering_out:
        chunks = args.chunks if args.chunks > 0 else max(1, -(-fs.n // DENSE_NODE_CAP))
        pred = cluster_parallel(
            fs,
            chunks=chunks,
            theta=theta,
            temperature=temperature,
            seed=seed,
            jobs=args.jobs,
            max_passes=args.max_passes,
        )
        save_clustering(pred, args.clustering_out)
        doc.update(
            {
                "chunks": chunks,
                "clustering_file": str(args.clustering_out),
                "cluster_count": pred.cluster_count,
                "singleton_fraction": singleton_fraction(pred),
                "cluster_accuracy": cluster_accuracy(pred, fs.labels),
                "purity": purity(pred, fs.labels),
                "objective": objective(build_cost_graph(fs, theta, temperature), pred)
                if chunks == 1
                else None,
            }
        )
    _emit(doc, args.out)


def _cmd_metrics(args) -> None:
    fs = load_features(args.features)
    pred = load_clustering(args.pred)
    if pred.n != fs.n:
        raise ValueError(f"clustering covers {pred.n} rows, features have {fs.n}")
    stats = class_distance_stats(fs, normalize=args.normalize)
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "run_config": _run_config("metrics", args),
            "acc": cluster_accuracy(pred, fs.labels),
            "purity": purity(pred, fs.labels),
            "singleton_fraction": singleton_fraction(pred),
            "cluster_count": pred.cluster_count,
            "delta": overlap_delta(stats),
            "stats": {
                "mu_intra": stats.mu_intra,
                "sigma_intra": stats.sigma_intra,
                "mu_inter": stats.mu_inter,
                "sigma_inter": stats.sigma_inter,
                "normalized": stats.normalized,
            },
        },
        args.out,
    )


def _cmd_indicators(args) -> None:
    records = _load_record_set(args)
    models = []
    for record in records:
        agg = aggregate_corruption_accuracy(record.corruption_grid)
        per_model = {
            "name": record.name,
            "clean_acc": record.clean_acc,
            "robustness_all": robustness(agg.overall, record.clean_acc),
            "indicators": {
                "kmeans-acc": record.kmeans_acc / record.clean_acc,
                "kmeans-purity": record.kmeans_purity / record.clean_acc,
                "multicut-acc": record.mc_acc / record.clean_acc,
                "multicut-purity": record.mc_purity / record.clean_acc,
                "combined-acc": (record.kmeans_acc / 100)
                * (record.mc_acc / 100)
                / (record.clean_acc / 100),
                "combined-purity": (record.kmeans_purity / 100)
                * (record.mc_purity / 100)
                / (record.clean_acc / 100),
                "delta-baseline": record.delta,
            },
        }
        models.append(per_model)
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "run_config": _run_config("indicators", args),
            "models": models,
        },
        args.out,
    )


def _cmd_correlate(args) -> None:
    records = _load_record_set(args)
    indicator = args.indicator.replace("_", "-")
    report = correlate(records, indicator, severity_filter=args.severity)
    if args.scatter or args.svg:
        points = list(zip(report.indicator_values, report.robustness_values, report.names))
        emit_scatter(
            points,
            (report.slope, report.intercept),
            args.scatter or (str(args.svg) + ".csv"),
            svg_path=args.svg,
            svg_timestamp=not args.no_svg_timestamp,
        )
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "run_config": _run_config("correlate", args),
            "indicator": report.indicator,
            "severity": report.severity,
            "models": [
                {"name": n, "indicator_value": p, "robustness": r}
                for n, p, r in zip(
                    report.names, report.indicator_values, report.robustness_values
                )
            ],
            "r_squared": report.r_squared,
            "kendall_tau": report.kendall_tau,
            "slope": report.slope,
            "intercept": report.intercept,
            "predicted_ranking": list(report.predicted_ranking),
            "actual_ranking": list(report.actual_ranking),
        },
        args.out,
    )


def _cmd_pca(args) -> None:
    fs = load_features(args.features)
    profile = pca_profile(fs)
    thresholds = [float(t) for t in args.threshold.split(",")]
    components_at = [
        {"threshold": t, "components": components_for_ratio(profile, t)} for t in thresholds
    ]
    reduced_to = None
    if args.reduce_to is not None:
        if args.reduce_to == "auto":
            reduced_to = components_for_ratio(profile, thresholds[0])
        else:
            reduced_to = int(args.reduce_to)
        if args.reduced_out:
            save_features(pca_reduce(fs, reduced_to), args.reduced_out)
    if args.project2d:
        flat = project_2d(fs)
        with open(args.project2d, "w", encoding="utf-8", newline="") as fh:
            fh.write("x,y,label\n")
            for row, label in zip(flat.data, flat.labels):
                fh.write(f"{row[0]:.10g},{row[1]:.10g},{int(label)}\n")
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "run_config": _run_config("pca", args),
            "n": fs.n,
            "d": fs.d,
            "components_at": components_at,
            "reduced_to": reduced_to,
        },
        args.out,
    )


def _cmd_report(args) -> None:
    records = _load_record_set(args)
    severities = sorted(
        next(iter(records[0].corruption_grid.values())).keys()
    )
    indicator_names = [i for i in INDICATORS if i != "delta-baseline" or records[0].delta is not None]
    r2: dict = {}
    tau: dict = {}
    for name in indicator_names:
        r2[name] = {}
        tau[name] = {}
        for key, sev in [("all", None)] + [(str(s), s) for s in severities]:
            rep = correlate(records, name, severity_filter=sev)
            r2[name][key] = rep.r_squared
            tau[name][key] = rep.kendall_tau
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write("indicator,severity,r_squared,kendall_tau\n")
            for name in indicator_names:
                for key in ["all"] + [str(s) for s in severities]:
                    fh.write(f"{name},{key},{r2[name][key]:.10g},{tau[name][key]:.10g}\n")
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "run_config": _run_config("report", args),
            "severities": [int(s) for s in severities],
            "indicators": indicator_names,
            "r_squared": r2,
            "kendall_tau": tau,
        },
        args.out,
    )


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentprobe",
        description="Clusterability-based robustness indicators for classifier feature spaces.",
    )
    parser.add_argument("--version", action="version", version=f"latentprobe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic mixture plus corrupted copies")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--severities", default="1,2,3,4,5")
    p.add_argument("--drift-scale", type=float, default=0.25)
    p.add_argument("--noise-growth", type=float, default=0.35)
    p.add_argument("--drift-seed", type=int, default=1)
    p.add_argument("--out", default=None, help="report JSON path (default stdout)")
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("kmeans", help="k-means clustering of a feature container")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--clustering-out", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_kmeans)

    p = sub.add_parser("multicut", help="minimum-cost multicut clustering")
    p.add_argument("--features", required=True)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--sweep", default=None, metavar="A:B:STEP")
    p.add_argument("--temperature", default="auto")
    p.add_argument(
        "--chunks",
        type=int,
        default=0,
        help="0 = auto: one dense solve up to the per-chunk node cap, chunked beyond it",
    )
    p.add_argument("--subset-size", type=int, default=0, help="0 = use all rows")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-passes", type=int, default=10)
    p.add_argument("--clustering-out", default=None)
    p.add_argument("--sweep-csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_multicut)

    p = sub.add_parser("metrics", help="score a clustering against the true labels")
    p.add_argument("--features", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("indicators", help="per-model indicator values")
    p.add_argument("--fixture", default=None)
    p.add_argument("--records", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_indicators)

    p = sub.add_parser("correlate", help="correlate an indicator with robustness")
    p.add_argument("--fixture", default=None)
    p.add_argument("--records", default=None)
    p.add_argument("--indicator", required=True)
    p.add_argument("--severity", type=int, default=None)
    p.add_argument("--scatter", default=None, help="scatter CSV path")
    p.add_argument("--svg", default=None, help="scatter SVG path")
    p.add_argument("--no-svg-timestamp", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("pca", help="explained-variance profile and reduction")
    p.add_argument("--features", required=True)
    p.add_argument("--threshold", "--thresholds", dest="threshold", default="0.75,0.80")
    p.add_argument("--reduce-to", default=None, help="'auto' or a component count")
    p.add_argument("--reduced-out", default=None)
    p.add_argument("--project2d", default=None, help="2-D PCA scatter CSV path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pca)

    p = sub.add_parser("report", help="R^2 / tau grid over all indicators and severities")
    p.add_argument("--fixture", default=None)
    p.add_argument("--records", default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # surface a machine-readable error
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
