"""Robustness ratios, corruption aggregation, indicators, and correlation.

A model's robustness is its corrupted-over-clean accuracy ratio; the
indicators are relative clustering scores (clustering performance over
clean accuracy) computed on clean features only.  `correlate` fits a
least-squares line of robustness on an indicator across a model zoo and
reports the coefficient of determination, the Kendall rank correlation,
and the predicted/actual robustness rankings.

Records store percentages as printed in the bundled benchmark fixture;
indicator math converts to fractions.  R^2 and tau are invariant to that
unit choice.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.stats import kendalltau as _scipy_kendalltau


class RecordError(ValueError):
    """Model record missing fields or holding out-of-range values."""


@dataclass(frozen=True)
class ModelRecord:
    """One model: clean accuracy, corruption accuracy grid, clustering scores.

    `corruption_grid` maps corruption name -> severity -> accuracy (percent);
    every corruption must cover the same contiguous 1..S severity range.
    `delta` (class-overlap baseline) and `reported_acc_star_all` (the
    aggregate as printed in the source table) are optional extras.
    """

    name: str
    clean_acc: float
    corruption_grid: dict
    kmeans_acc: float
    kmeans_purity: float
    mc_acc: float
    mc_purity: float
    delta: float | None = None
    reported_acc_star_all: float | None = None

    def __post_init__(self):
        for label, value in [
            ("clean_acc", self.clean_acc),
            ("kmeans_acc", self.kmeans_acc),
            ("kmeans_purity", self.kmeans_purity),
            ("mc_acc", self.mc_acc),
            ("mc_purity", self.mc_purity),
        ]:
            if not 0.0 <= value <= 100.0:
                raise RecordError(f"{self.name}: {label}={value} outside [0, 100]")
        if not self.corruption_grid:
            raise RecordError(f"{self.name}: empty corruption grid")
        ranges = set()
        for corruption, per_severity in self.corruption_grid.items():
            sev = tuple(sorted(int(s) for s in per_severity))
            if sev != tuple(range(1, len(sev) + 1)):
                raise RecordError(
                    f"{self.name}: corruption {corruption!r} severities {sev} "
                    "are not contiguous 1..S"
                )
            ranges.add(sev)
            for s, acc in per_severity.items():
                if not 0.0 <= acc <= 100.0:
                    raise RecordError(f"{self.name}: accuracy {acc} at ({corruption}, {s})")
        if len(ranges) > 1:
            raise RecordError(f"{self.name}: ragged severity ranges across corruptions")


@dataclass(frozen=True)
class AggregateAccuracy:
    overall: float
    per_severity: dict
    per_corruption: dict


@dataclass(frozen=True)
class CorrelationReport:
    indicator: str
    severity: int | None
    names: tuple
    indicator_values: tuple
    robustness_values: tuple
    r_squared: float
    kendall_tau: float
    slope: float
    intercept: float
    predicted_ranking: tuple  # rank 1 (most robust predicted) first
    actual_ranking: tuple

    def __post_init__(self):
        if sorted(self.predicted_ranking) != sorted(self.names) or sorted(
            self.actual_ranking
        ) != sorted(self.names):
            raise ValueError("rankings must be permutations of the record names")


def robustness(acc_corrupt: float, acc_clean: float) -> float:
    """Corrupted-over-clean accuracy ratio; 1 means perfectly robust."""
    if acc_clean <= 0:
        raise ValueError(f"clean accuracy must be > 0, got {acc_clean}")
    return acc_corrupt / acc_clean


def aggregate_corruption_accuracy(grid: dict) -> AggregateAccuracy:
    """Mean accuracy over severities per corruption, then over corruptions."""
    if not grid:
        raise ValueError("empty corruption grid")
    ranges = {tuple(sorted(int(s) for s in per_sev)) for per_sev in grid.values()}
    if len(ranges) > 1:
        raise ValueError("ragged severity ranges across corruptions")
    severities = sorted(ranges.pop())
    per_corruption = {
        c: float(np.mean([per_sev[s] for s in sorted(per_sev)])) for c, per_sev in grid.items()
    }
    per_severity = {
        s: float(np.mean([grid[c][s] for c in grid])) for s in severities
    }
    overall = float(np.mean(list(per_corruption.values())))
    return AggregateAccuracy(
        overall=overall, per_severity=per_severity, per_corruption=per_corruption
    )


def relative_performance(cluster_perf: float, model_acc: float) -> float:
    """Clustering score over clean classification accuracy (same units)."""
    if model_acc <= 0:
        raise ValueError(f"model accuracy must be > 0, got {model_acc}")
    return cluster_perf / model_acc


def combined_purity(kmeans_purity: float, mc_purity: float, model_acc: float) -> float:
    """Product of both purities over clean accuracy, all as fractions."""
    if model_acc <= 0:
        raise ValueError(f"model accuracy must be > 0, got {model_acc}")
    return (kmeans_purity / 100.0) * (mc_purity / 100.0) / (model_acc / 100.0)


def combined_accuracy(kmeans_acc: float, mc_acc: float, model_acc: float) -> float:
    """Accuracy analog of the combined purity indicator."""
    if model_acc <= 0:
        raise ValueError(f"model accuracy must be > 0, got {model_acc}")
    return (kmeans_acc / 100.0) * (mc_acc / 100.0) / (model_acc / 100.0)


def linear_fit(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept of ys on xs."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    sxx = float(((xs - xs.mean()) ** 2).sum())
    if sxx == 0:
        raise ValueError("xs are all equal; fit is degenerate")
    slope = float(((xs - xs.mean()) * (ys - ys.mean())).sum()) / sxx
    return slope, float(ys.mean() - slope * xs.mean())


def r_squared(xs, ys) -> float:
    """Coefficient of determination of the least-squares line of ys on xs.

    Constant ys give 0 by convention; constant xs are an error.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be equal-length 1-D arrays")
    if xs.shape[0] < 3:
        raise ValueError(f"need at least 3 points, got {xs.shape[0]}")
    slope, intercept = linear_fit(xs, ys)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    if ss_tot == 0:
        return 0.0
    ss_res = float(((ys - (slope * xs + intercept)) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def kendall_tau(a, b) -> float:
    """Tie-corrected (tau-b) Kendall rank correlation."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be equal-length 1-D arrays")
    if a.shape[0] < 2:
        raise ValueError(f"need at least 2 points, got {a.shape[0]}")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ValueError("all-tied input; rank correlation undefined")
    return float(_scipy_kendalltau(a, b).statistic)


def _indicator_value(record: ModelRecord, indicator: str) -> float:
    if indicator == "kmeans-acc":
        return relative_performance(record.kmeans_acc, record.clean_acc)
    if indicator == "kmeans-purity":
        return relative_performance(record.kmeans_purity, record.clean_acc)
    if indicator == "multicut-acc":
        return relative_performance(record.mc_acc, record.clean_acc)
    if indicator == "multicut-purity":
        return relative_performance(record.mc_purity, record.clean_acc)
    if indicator == "combined-acc":
        return combined_accuracy(record.kmeans_acc, record.mc_acc, record.clean_acc)
    if indicator == "combined-purity":
        return combined_purity(record.kmeans_purity, record.mc_purity, record.clean_acc)
    if indicator == "delta-baseline":
        if record.delta is None:
            raise RecordError(f"{record.name}: no delta value for the baseline indicator")
        return record.delta
    raise ValueError(f"unknown indicator {indicator!r}; choose from {sorted(INDICATORS)}")


INDICATORS = (
    "kmeans-acc",
    "kmeans-purity",
    "multicut-acc",
    "multicut-purity",
    "combined-acc",
    "combined-purity",
    "delta-baseline",
)


def correlate(records, indicator: str, severity_filter: int | None = None) -> CorrelationReport:
    """Correlate an indicator with measured robustness across a model zoo.

    Robustness uses the grid aggregate over all severities, or the single
    severity's mean over corruptions when `severity_filter` is set.  For
    the delta baseline a LOWER value predicts a MORE robust model, so its
    ranking (and tau) use the negated value; R^2 is sign-blind anyway.
    """
    records = list(records)
    if len(records) < 3:
        raise ValueError(f"need at least 3 records, got {len(records)}")
    names = [r.name for r in records]
    xs = np.array([_indicator_value(r, indicator) for r in records])
    ys = []
    for r in records:
        agg = aggregate_corruption_accuracy(r.corruption_grid)
        if severity_filter is None:
            acc = agg.overall
        else:
            if severity_filter not in agg.per_severity:
                raise ValueError(f"severity {severity_filter} not in grid for {r.name}")
            acc = agg.per_severity[severity_filter]
        ys.append(robustness(acc, r.clean_acc))
    ys = np.array(ys)
    score = -xs if indicator == "delta-baseline" else xs
    order_pred = sorted(range(len(names)), key=lambda i: (-score[i], names[i]))
    order_act = sorted(range(len(names)), key=lambda i: (-ys[i], names[i]))
    return CorrelationReport(
        indicator=indicator,
        severity=severity_filter,
        names=tuple(names),
        indicator_values=tuple(float(v) for v in xs),
        robustness_values=tuple(float(v) for v in ys),
        r_squared=r_squared(xs, ys),
        kendall_tau=kendall_tau(score, ys),
        slope=linear_fit(xs, ys)[0],
        intercept=linear_fit(xs, ys)[1],
        predicted_ranking=tuple(names[i] for i in order_pred),
        actual_ranking=tuple(names[i] for i in order_act),
    )


def records_from_dict(doc: dict) -> list[ModelRecord]:
    """Build records from the fixture JSON layout (see data/table2.json)."""
    records = []
    for entry in doc["models"]:
        grid = {
            corruption: {int(s): float(v) for s, v in per_sev.items()}
            for corruption, per_sev in entry["corruption_acc"].items()
        }
        records.append(
            ModelRecord(
                name=entry["name"],
                clean_acc=float(entry["clean_acc"]),
                corruption_grid=grid,
                kmeans_acc=float(entry["kmeans"]["acc"]),
                kmeans_purity=float(entry["kmeans"]["purity"]),
                mc_acc=float(entry["multicut"]["acc"]),
                mc_purity=float(entry["multicut"]["purity"]),
                delta=entry.get("delta"),
                reported_acc_star_all=entry.get("acc_star_all"),
            )
        )
    return records


def load_records(path) -> list[ModelRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return records_from_dict(json.load(fh))


def load_bundled_fixture() -> list[ModelRecord]:
    """The bundled 12-model ImageNet-C benchmark table."""
    text = resources.files("latentprobe").joinpath("data/table2.json").read_text("utf-8")
    return records_from_dict(json.loads(text))
