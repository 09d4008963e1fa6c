"""
CSV ingestion and prediction output.

Feature and label files share one layout: a header row, the sample id in the
first column, one numeric column per feature (or label). Rows of the feature
files whose id has no entry in the label file are the unlabeled (test) rows.
"""
import logging
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.errors import DimensionMismatch, EmptyInput, MalformedCell
from core.models import LabelMatrix, ModalityMatrix

logger = logging.getLogger(__name__)


class Table:
    """Parsed numeric CSV: ids, column names and a float matrix."""

    def __init__(self, ids: List[str], columns: List[str], values: np.ndarray):
        self.ids = ids
        self.columns = columns
        self.values = values

    def take(self, rows: Sequence[int]) -> "Table":
        rows = list(rows)
        return Table([self.ids[i] for i in rows], self.columns, self.values[rows])


def read_numeric_csv(path: str) -> Table:
    """Read a CSV whose first column is the sample id and the rest are numbers.

    A cell that does not parse raises MalformedCell with its file line
    number (the header is line 1) and column name.
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise EmptyInput(f"{path}: file not found")
    except pd.errors.EmptyDataError:
        raise EmptyInput(f"{path}: file is empty (a header row is required)")
    if raw.shape[1] < 1:
        raise EmptyInput(f"{path}: no columns")

    id_column, *columns = list(raw.columns)
    values = np.empty((len(raw), len(columns)))
    for j, column in enumerate(columns):
        text = raw[column].str.strip()
        parsed = pd.to_numeric(text, errors="coerce")
        bad = parsed.isna() & ~text.str.lower().isin(["nan"])
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise MalformedCell(path, row + 2, column, raw[column].iloc[row])
        values[:, j] = parsed.to_numpy(dtype=np.float64)
    return Table(raw[id_column].astype(str).tolist(), [str(c) for c in columns], values)


class Dataset(NamedTuple):
    motor: ModalityMatrix
    nonmotor: ModalityMatrix
    labels: LabelMatrix
    sample_ids: List[str]
    feature_names: Tuple[List[str], List[str]]


def load_dataset(motor_path: str, nonmotor_path: str, labels_path: Optional[str] = None) -> Dataset:
    """Motor/non-motor feature blocks and labels, labeled rows first.

    Rows are reordered so that the samples present in the label file come
    first, in feature-file order.
    """
    motor = read_numeric_csv(motor_path)
    nonmotor = read_numeric_csv(nonmotor_path)
    if motor.ids != nonmotor.ids:
        raise DimensionMismatch("nonmotor", detail=f"{nonmotor_path}: sample ids differ from {motor_path}")

    if labels_path is None:
        # prediction-only input: no labels at all
        labels = LabelMatrix(values=np.zeros((len(motor.ids), 0)), n_train=0, n_test=len(motor.ids))
        return _dataset(motor, nonmotor, labels)

    label_table = read_numeric_csv(labels_path)
    position = {sample: i for i, sample in enumerate(motor.ids)}
    unknown = [sample for sample in label_table.ids if sample not in position]
    if unknown:
        raise DimensionMismatch("Y", detail=f"{labels_path}: sample id {unknown[0]!r} not in feature files")
    if len(set(label_table.ids)) != len(label_table.ids):
        raise DimensionMismatch("Y", detail=f"{labels_path}: duplicate sample ids")

    labeled = set(label_table.ids)
    train_rows = [i for i, sample in enumerate(motor.ids) if sample in labeled]
    test_rows = [i for i, sample in enumerate(motor.ids) if sample not in labeled]
    order = train_rows + test_rows
    motor, nonmotor = motor.take(order), nonmotor.take(order)

    label_rows = {sample: i for i, sample in enumerate(label_table.ids)}
    Y = np.zeros((len(order), len(label_table.columns)))
    for r, sample in enumerate(motor.ids[: len(train_rows)]):
        Y[r] = label_table.values[label_rows[sample]]
    labels = LabelMatrix(values=Y, n_train=len(train_rows), n_test=len(test_rows), label_names=label_table.columns)
    logger.info(f"✅ Loaded {len(train_rows)} labeled + {len(test_rows)} unlabeled samples")
    return _dataset(motor, nonmotor, labels)


def _modality(table: Table, name: str) -> ModalityMatrix:
    return ModalityMatrix(values=table.values.reshape(len(table.ids), len(table.columns)), name=name)


def _dataset(motor: Table, nonmotor: Table, labels: LabelMatrix) -> Dataset:
    return Dataset(
        motor=_modality(motor, "motor"),
        nonmotor=_modality(nonmotor, "nonmotor"),
        labels=labels,
        sample_ids=list(motor.ids),
        feature_names=(list(motor.columns), list(nonmotor.columns)),
    )


def write_matrix_csv(path: Path, ids: Sequence[str], columns: Sequence[str], values: np.ndarray) -> None:
    """One row per sample id; floats are written at full (round-trip) precision."""
    frame = pd.DataFrame(np.asarray(values).reshape(len(ids), len(columns)), columns=list(columns))
    frame.insert(0, "sample_id", list(ids))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)


def write_predictions(
    out_dir: Path, ids: Sequence[str], label_names: Sequence[str], scores: np.ndarray, labels: np.ndarray
) -> Tuple[Path, Path]:
    out_dir = Path(out_dir)
    scores_path, labels_path = out_dir / "scores.csv", out_dir / "labels.csv"
    write_matrix_csv(scores_path, ids, label_names, scores)
    write_matrix_csv(labels_path, ids, label_names, np.asarray(labels, dtype=int))
    return scores_path, labels_path
