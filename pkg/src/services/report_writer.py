"""
Harness outputs: JSON documents, CSV summaries and a fixed-width text table.
Every document records the seed it was produced with.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from app.harness import CVReport, GridResult, KSensitivityRow, MetricSummary, SweepPoint, TTestResult
from app.metrics import LabelConfusion
from services.csv_io import write_matrix_csv
from services.model_store import write_json

logger = logging.getLogger(__name__)


def format_table(summary: Dict[str, MetricSummary], title: str = "") -> str:
    """Fixed-width metric table: name, mean, sd, n."""
    lines = [title] if title else []
    lines.append(f"{'metric':<22}{'mean':>12}{'sd':>12}{'n':>6}")
    lines.append("-" * 52)
    for name, entry in summary.items():
        mean = f"{entry.mean:.4f}" if entry.mean is not None else "n/a"
        sd = f"{entry.sd:.4f}" if entry.sd is not None else "n/a"
        lines.append(f"{name:<22}{mean:>12}{sd:>12}{entry.n:>6}")
    return "\n".join(lines)


def _summary_frame(summary: Dict[str, MetricSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"metric": name, "mean": s.mean, "sd": s.sd, "n": s.n} for name, s in summary.items()],
        columns=["metric", "mean", "sd", "n"],
    )


def _confusion_frame(confusion: Sequence[LabelConfusion]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "label": lc.label, "tp": lc.tp, "fp": lc.fp, "tn": lc.tn, "fn": lc.fn,
                "sensitivity": lc.sensitivity, "specificity": lc.specificity, "accuracy": lc.accuracy,
            }
            for lc in confusion
        ],
        columns=["label", "tp", "fp", "tn", "fn", "sensitivity", "specificity", "accuracy"],
    )


def write_cv_outputs(
    out_dir: Path,
    report: CVReport,
    baseline: Optional[CVReport] = None,
    comparison: Optional[List[TTestResult]] = None,
) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    document = {"seed": report.seed, report.model: report.model_dump(mode="json")}
    if baseline is not None:
        document[baseline.model] = baseline.model_dump(mode="json")
    if comparison is not None:
        document["paired_t_tests"] = [t.model_dump(mode="json") for t in comparison]

    summary_csv = out_dir / "cv_summary.csv"
    frame = _summary_frame(report.summary).assign(model=report.model, seed=report.seed)
    if baseline is not None:
        frame = pd.concat([frame, _summary_frame(baseline.summary).assign(model=baseline.model, seed=baseline.seed)])
    frame.to_csv(summary_csv, index=False)

    confusion_csv = out_dir / "label_confusion.csv"
    _confusion_frame(report.confusion_totals).to_csv(confusion_csv, index=False)

    written = [write_json(out_dir / "cv_report.json", document), summary_csv, confusion_csv]
    logger.info(f"✅ CV outputs written to {out_dir}")
    return written


def write_grid_outputs(out_dir: Path, result: GridResult) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_csv = out_dir / "grid.csv"
    pd.DataFrame(
        [cell.model_dump() for cell in result.cells],
        columns=["index", "alpha", "beta", "k", "hamming_loss", "error"],
    ).assign(seed=result.seed).to_csv(table_csv, index=False)
    written = [write_json(out_dir / "grid.json", result.model_dump(mode="json")), table_csv]
    logger.info(f"✅ Grid outputs written to {out_dir}")
    return written


def write_k_sensitivity(out_dir: Path, rows: Sequence[KSensitivityRow], seed: int) -> Path:
    out_dir = Path(out_dir)
    records = []
    for row in rows:
        record = {"k": row.k, "alpha": row.alpha, "beta": row.beta, "seed": seed}
        for name, entry in row.summary.items():
            record[f"{name}_mean"] = entry.mean
            record[f"{name}_sd"] = entry.sd
        records.append(record)
    path = out_dir / "k_sensitivity.csv"
    out_dir.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(records).to_csv(path, index=False)
    return path


def write_sweep_outputs(
    out_dir: Path, points: Sequence[SweepPoint], ids: Sequence[str], label_names: Sequence[str], seed: int
) -> List[Path]:
    """One predicted-label matrix per beta plus a positive-count summary."""
    out_dir = Path(out_dir)
    written = []
    for point in points:
        path = out_dir / f"labels_beta_{point.beta:g}.csv"
        write_matrix_csv(path, ids, label_names, point.labels)
        written.append(path)
    summary = out_dir / "sweep_summary.csv"
    pd.DataFrame(
        [{"beta": p.beta, "n_positive": p.n_positive, "seed": seed} for p in points],
        columns=["beta", "n_positive", "seed"],
    ).to_csv(summary, index=False)
    written.append(summary)
    return written
