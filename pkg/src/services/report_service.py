"""Scenario report persistence and text rendering."""
import json
import logging
import os
from typing import Dict, List, Optional, Sequence, Tuple

from src.errors import ContractError, DataError
from src.models.evaluation import (
    BEST_TEST,
    BEST_TRAIN,
    ENSEMBLE_CLASS,
    ENSEMBLE_GROUND,
    ConfusionMatrix,
    ScenarioReport,
)
from src.services.evaluation import accuracy, relative_advantage, win_counts


logger = logging.getLogger(__name__)

REPORT_FORMAT = "scenario-report"
REPORT_VERSION = 1

MARK_BEATS_TRAIN = "◇"
MARK_BEATS_TEST = "⋆"
MARK_BEATS_BOTH = "△"


def report_document(
    report: ScenarioReport,
    confusion: Optional[ConfusionMatrix] = None,
    provenance: Optional[dict] = None,
) -> dict:
    document = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "report": report.to_dict(),
        "provenance": provenance or {},
    }
    if confusion is not None:
        document["confusion_matrix"] = confusion.to_dict()
        document["accuracy"] = accuracy(confusion)
    return document


def save_report(
    report: ScenarioReport,
    path: str,
    confusion: Optional[ConfusionMatrix] = None,
    provenance: Optional[dict] = None,
) -> None:
    """Write the report (per-fold errors, medians, means, confusion matrix) as JSON."""
    text = json.dumps(report_document(report, confusion, provenance), sort_keys=True, indent=1, allow_nan=False)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    logger.info(f"Saved report for {len(report.problems)} problems to {path}")


def load_report(path: str) -> Tuple[ScenarioReport, Optional[ConfusionMatrix]]:
    """Read a report written by save_report.

    Raises:
        DataError: Missing file or not a scenario report
    """
    if not os.path.exists(path):
        raise DataError(f"Report not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as e:
        raise DataError(f"Report {path} is not valid JSON: {e}")
    if document.get("format") != REPORT_FORMAT:
        raise DataError(f"{path} is not a scenario report")
    report = ScenarioReport.from_dict(document["report"])
    confusion = None
    if "confusion_matrix" in document:
        confusion = ConfusionMatrix.from_dict(document["confusion_matrix"])
    return report, confusion


def marker(value: float, best_train: float, best_test: Optional[float]) -> str:
    """Win marker of an ensemble cell against the two global baselines."""
    beats_train = value < best_train
    beats_test = best_test is not None and value < best_test
    if beats_train and beats_test:
        return MARK_BEATS_BOTH
    if beats_train:
        return MARK_BEATS_TRAIN
    if beats_test:
        return MARK_BEATS_TEST
    return ""


def render_report_table(report: ScenarioReport, statistic: str = "median", precision: int = 4) -> str:
    """Problem x scenario table of median (or mean) absolute errors.

    Ensemble cells carry a marker: ◇ better than Best-train, ⋆ better than
    Best-test, △ better than both. A footer lists the win counts.
    """
    scenarios = report.scenarios
    cells = {s: report.cells(s, statistic) for s in scenarios}
    has_test = BEST_TEST in cells
    width = max(precision + 6, max(len(s) for s in scenarios) + 1)

    header = "problem".rjust(8) + "".join(s.rjust(width + 1) for s in scenarios)
    lines = [f"{statistic} absolute error per problem", header, "-" * len(header)]
    for pid in report.problems:
        row = str(pid).rjust(8)
        for s in scenarios:
            value = cells[s][pid]
            text = f"{value:.{precision}f}"
            if s in (ENSEMBLE_GROUND, ENSEMBLE_CLASS):
                text += marker(value, cells[BEST_TRAIN][pid], cells[BEST_TEST][pid] if has_test else None)
            else:
                text += " "
            row += text.rjust(width + 1)
        lines.append(row)

    lines.append("")
    baselines = [BEST_TRAIN, BEST_TEST] if has_test else [BEST_TRAIN]
    for challenger in (ENSEMBLE_GROUND, ENSEMBLE_CLASS):
        counts = win_counts(report, challenger, baselines, statistic)
        parts = [f"vs {b}: {counts[b]['wins']}/{counts['total']}" for b in baselines]
        lines.append(f"{challenger} wins " + ", ".join(parts))
    legend = f"{MARK_BEATS_TRAIN} better than {BEST_TRAIN}"
    if has_test:
        legend += f"  {MARK_BEATS_TEST} better than {BEST_TEST}  {MARK_BEATS_BOTH} better than both"
    lines.append(legend)
    if report.best_test:
        lines.append(f"{BEST_TEST} config: {report.best_test}")
    return "\n".join(lines) + "\n"


def render_confusion_matrix(confusion: ConfusionMatrix) -> str:
    """n x n table, rows true class, columns predicted class."""
    labels = [str(c) for c in confusion.labels]
    width = max(4, max(len(lab) for lab in labels), len(str(int(confusion.counts.max(initial=0)))) + 1)
    lines = ["true\\pred".ljust(10) + "".join(lab.rjust(width) for lab in labels)]
    for lab, row in zip(labels, confusion.counts):
        lines.append(lab.ljust(10) + "".join(str(int(c)).rjust(width) for c in row))
    lines.append(f"accuracy {confusion.trace}/{confusion.total} = {accuracy(confusion):.4f}")
    return "\n".join(lines) + "\n"


def compare_scenarios(
    report: ScenarioReport,
    scenario_a: str,
    scenario_b: str,
    statistic: str = "median",
) -> Dict[int, float]:
    """Per-problem advantage of scenario_a over scenario_b within one report."""
    for s in (scenario_a, scenario_b):
        if s not in report.scenarios:
            raise ContractError(f"Report has no {s} column")
    return relative_advantage(report.cells(scenario_a, statistic), report.cells(scenario_b, statistic))


def compare_reports(
    report_a: ScenarioReport,
    report_b: ScenarioReport,
    scenario: str,
    statistic: str = "median",
) -> Dict[int, float]:
    """Advantage of report_a's scenario over the same scenario of report_b."""
    return relative_advantage(report_a.cells(scenario, statistic), report_b.cells(scenario, statistic))


def render_advantage(advantage: Dict[int, float], label_a: str, label_b: str, precision: int = 4) -> str:
    """Plot-ready series: one `problem,advantage` line per problem."""
    lines = [f"# positive: {label_a} better than {label_b}", "problem_id,advantage"]
    lines += [f"{pid},{value:.{precision}f}" for pid, value in sorted(advantage.items())]
    positive = sum(1 for v in advantage.values() if v > 0)
    lines.append(f"# {label_a} better on {positive}/{len(advantage)} problems")
    return "\n".join(lines) + "\n"


def misclassification_lines(wrong: Sequence[Tuple[int, int, int, int]]) -> List[str]:
    return [f"fold {f}: problem {p} instance {i} predicted as {c}" for f, p, i, c in wrong]
