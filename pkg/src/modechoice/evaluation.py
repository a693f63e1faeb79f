"""Metrics (accuracy, weighted F1, confusion matrix) and report writing.

The report has three artifacts: a machine-readable JSON summary, a
human-readable text table, and a JSON-lines case log holding one record per
test situation (inputs, the model's prediction and reason, every benchmark
prediction, and the observed choice). All three are pure functions of the
records, so regenerating them is byte-identical.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import MODE_ORDER, ModeLabel

logger = logging.getLogger(__name__)

PARSE_FAILURE_MARKER = "PARSE_FAILURE"
FAILURE_MODES = ("exclude", "count_as_incorrect")


class EvaluationError(Exception):
    pass


class LengthMismatch(EvaluationError):
    pass


class EmptyInput(EvaluationError):
    pass


class IoFailure(EvaluationError):
    pass


def _check_lengths(pred, actual, allow_empty=False):
    if len(pred) != len(actual):
        raise LengthMismatch(f"pred has {len(pred)} items, actual has {len(actual)}")
    if not allow_empty and not actual:
        raise EmptyInput("no labels to score")


def accuracy(pred: list[ModeLabel], actual: list[ModeLabel]) -> float:
    _check_lengths(pred, actual)
    return sum(p == a for p, a in zip(pred, actual)) / len(actual)


def confusion_matrix(pred: list[ModeLabel], actual: list[ModeLabel]) -> np.ndarray:
    """3x3 counts, rows = actual, columns = predicted, in fixed mode order."""
    _check_lengths(pred, actual, allow_empty=True)
    matrix = np.zeros((len(MODE_ORDER), len(MODE_ORDER)), dtype=int)
    for p, a in zip(pred, actual):
        matrix[int(a), int(p)] += 1
    return matrix


def weighted_f1(pred: list[ModeLabel], actual: list[ModeLabel]) -> float:
    """Support-weighted mean of per-class F1; zero-support classes carry no weight."""
    _check_lengths(pred, actual)
    matrix = confusion_matrix(pred, actual)
    supports = matrix.sum(axis=1)
    predicted = matrix.sum(axis=0)
    total = 0.0
    for c in range(len(MODE_ORDER)):
        if supports[c] == 0:
            continue
        tp = matrix[c, c]
        precision = tp / predicted[c] if predicted[c] else 0.0
        recall = tp / supports[c]
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total += f1 * supports[c]
    return total / supports.sum()


def _metrics_with_failures(
    pred: list[ModeLabel | None], actual: list[ModeLabel]
) -> tuple[float, float]:
    """Accuracy and weighted F1 when failed parses count as incorrect: a None
    prediction matches no class but still occupies its slot in every support."""
    _check_lengths(pred, actual)
    acc = sum(p == a for p, a in zip(pred, actual)) / len(actual)
    total = 0.0
    for c in MODE_ORDER:
        support = sum(a == c for a in actual)
        if support == 0:
            continue
        tp = sum(p == c and a == c for p, a in zip(pred, actual))
        predicted = sum(p == c for p in pred)
        precision = tp / predicted if predicted else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total += f1 * support
    return acc, total / len(actual)


@dataclass(frozen=True)
class CaseRecord:
    """One test situation's inputs and every predictor's answer for it."""

    situation_id: str
    input_summary: str
    llm_prediction: ModeLabel | None  # None marks a parse failure
    llm_reason: str
    benchmark_predictions: dict[str, ModeLabel]
    actual: ModeLabel
    llm_raw_text: str = ""  # populated only when parsing failed

    def to_json_dict(self) -> dict:
        return {
            "situation_id": self.situation_id,
            "input": self.input_summary,
            "llm_prediction": (
                PARSE_FAILURE_MARKER if self.llm_prediction is None else self.llm_prediction.display
            ),
            "llm_reason": self.llm_reason,
            "benchmark_predictions": {
                kind: mode.display for kind, mode in sorted(self.benchmark_predictions.items())
            },
            "actual": self.actual.display,
            "llm_raw_text": self.llm_raw_text,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CaseRecord":
        raw = doc["llm_prediction"]
        return cls(
            situation_id=doc["situation_id"],
            input_summary=doc["input"],
            llm_prediction=None if raw == PARSE_FAILURE_MARKER else ModeLabel.from_name(raw),
            llm_reason=doc["llm_reason"],
            benchmark_predictions={
                kind: ModeLabel.from_name(name)
                for kind, name in doc["benchmark_predictions"].items()
            },
            actual=ModeLabel.from_name(doc["actual"]),
            llm_raw_text=doc.get("llm_raw_text", ""),
        )


@dataclass
class PredictorMetrics:
    accuracy: float
    weighted_f1: float
    n_scored: int

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "n_scored": self.n_scored,
        }


@dataclass
class EvaluationReport:
    metrics: dict[str, PredictorMetrics]
    llm_metrics_by_mode: dict[str, PredictorMetrics]  # keyed by failure-accounting mode
    confusions: dict[str, list[list[int]]]
    parse_failure_count: int
    sample_size: int
    parse_failure_mode: str
    config_digest: str = ""

    def to_json_dict(self) -> dict:
        return {
            "sample_size": self.sample_size,
            "parse_failure_count": self.parse_failure_count,
            "parse_failure_mode": self.parse_failure_mode,
            "config_digest": self.config_digest,
            "metrics": {k: m.to_json_dict() for k, m in sorted(self.metrics.items())},
            "llm_metrics_by_mode": {
                k: m.to_json_dict() for k, m in sorted(self.llm_metrics_by_mode.items())
            },
            "confusion_matrices": dict(sorted(self.confusions.items())),
        }


def _predictor_order(names) -> list[str]:
    preferred = ["llm", "mnl", "rf", "nn"]
    ordered = [n for n in preferred if n in names]
    return ordered + sorted(n for n in names if n not in preferred)


def build_report(
    records: list[CaseRecord],
    parse_failure_mode: str = "exclude",
    config_digest: str = "",
) -> EvaluationReport:
    if not records:
        raise EmptyInput("no case records to evaluate")
    if parse_failure_mode not in FAILURE_MODES:
        raise ValueError(f"parse_failure_mode must be one of {FAILURE_MODES}")

    actual = [r.actual for r in records]
    metrics: dict[str, PredictorMetrics] = {}
    confusions: dict[str, list[list[int]]] = {}

    parsed_pairs = [(r.llm_prediction, r.actual) for r in records if r.llm_prediction is not None]
    failures = len(records) - len(parsed_pairs)
    llm_by_mode: dict[str, PredictorMetrics] = {}
    if parsed_pairs:
        pred_ok = [p for p, _ in parsed_pairs]
        actual_ok = [a for _, a in parsed_pairs]
        llm_by_mode["exclude"] = PredictorMetrics(
            accuracy=accuracy(pred_ok, actual_ok),
            weighted_f1=weighted_f1(pred_ok, actual_ok),
            n_scored=len(parsed_pairs),
        )
        acc_all, f1_all = _metrics_with_failures([r.llm_prediction for r in records], actual)
        llm_by_mode["count_as_incorrect"] = PredictorMetrics(
            accuracy=acc_all, weighted_f1=f1_all, n_scored=len(records)
        )
        metrics["llm"] = llm_by_mode[parse_failure_mode]
        confusions["llm"] = confusion_matrix(pred_ok, actual_ok).tolist()

    kinds = sorted({k for r in records for k in r.benchmark_predictions})
    for kind in kinds:
        pred = [r.benchmark_predictions[kind] for r in records]
        metrics[kind] = PredictorMetrics(
            accuracy=accuracy(pred, actual),
            weighted_f1=weighted_f1(pred, actual),
            n_scored=len(records),
        )
        confusions[kind] = confusion_matrix(pred, actual).tolist()

    return EvaluationReport(
        metrics=metrics,
        llm_metrics_by_mode=llm_by_mode,
        confusions=confusions,
        parse_failure_count=failures,
        sample_size=len(records),
        parse_failure_mode=parse_failure_mode,
        config_digest=config_digest,
    )


def render_summary_text(report: EvaluationReport) -> str:
    lines = []
    lines.append(f"{'Models':<12}{'Accuracy':>10}{'F1-score':>10}{'N':>8}")
    for name in _predictor_order(report.metrics):
        m = report.metrics[name]
        label = name.upper() if name in ("llm", "mnl", "rf", "nn") else name
        lines.append(f"{label:<12}{m.accuracy:>10.3f}{m.weighted_f1:>10.3f}{m.n_scored:>8d}")
    lines.append("")
    lines.append(
        f"Test situations: {report.sample_size}; "
        f"parse failures: {report.parse_failure_count} "
        f"(accounting: {report.parse_failure_mode})"
    )
    if report.llm_metrics_by_mode:
        lines.append("LLM metrics under both failure accountings:")
        for mode in FAILURE_MODES:
            if mode in report.llm_metrics_by_mode:
                m = report.llm_metrics_by_mode[mode]
                lines.append(
                    f"  {mode:<20} accuracy={m.accuracy:.3f} "
                    f"weighted_f1={m.weighted_f1:.3f} n={m.n_scored}"
                )
    lines.append("")
    header = "".join(f"{m.display:>12}" for m in MODE_ORDER)
    for name in _predictor_order(report.confusions):
        lines.append(f"Confusion matrix ({name}, rows=actual, cols=predicted):")
        lines.append(f"{'':<12}{header}")
        for mode, row in zip(MODE_ORDER, report.confusions[name]):
            lines.append(f"{mode.display:<12}" + "".join(f"{v:>12d}" for v in row))
        lines.append("")
    return "\n".join(lines)


def _write_text(path: Path, text: str) -> bool:
    """Write only when the content differs; returns True when written."""
    if path.exists() and path.read_text(encoding="utf-8") == text:
        return False
    path.write_text(text, encoding="utf-8")
    return True


def write_report(
    records: list[CaseRecord],
    out_dir: str | Path,
    parse_failure_mode: str = "exclude",
    config_digest: str = "",
) -> EvaluationReport:
    """Write report.json, report.txt, and cases.jsonl under out_dir.

    The artifacts depend only on the records and arguments, so a repeat call
    with the same inputs leaves identical bytes in place.
    """
    report = build_report(records, parse_failure_mode, config_digest)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary_json = json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
        cases = "".join(
            json.dumps(r.to_json_dict(), sort_keys=True) + "\n" for r in records
        )
        _write_text(out / "report.json", summary_json)
        _write_text(out / "report.txt", render_summary_text(report) + "\n")
        _write_text(out / "cases.jsonl", cases)
    except OSError as exc:
        raise IoFailure(f"cannot write report under {out}: {exc}") from exc
    logger.info("report written to %s", out)
    return report
