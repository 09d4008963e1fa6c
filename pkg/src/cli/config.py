"""
Run configuration: one JSON document (``--config``) overridden by CLI flags.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError

from core.errors import InvalidConfig
from core.models import LabelMatrix, MultiModalView
from app.harness import GridSpec, Hyperparameters
from app.optim import SolverConfig
from app.synthetic import SyntheticSpec
from app.views import DEFAULT_KERNELS, KernelSpec, ScalingKind, ScalingSpec, assemble_view
from services.csv_io import Dataset, load_dataset


class DataPaths(BaseModel):
    motor: Optional[str] = None
    nonmotor: Optional[str] = None
    labels: Optional[str] = None


class RunConfig(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "data": {"motor": "data/motor.csv", "nonmotor": "data/nonmotor.csv", "labels": "data/labels.csv"},
                "out_dir": "out",
                "seed": 0,
                "hyper": {"alpha": 0.3, "beta": 0.1, "k": 50},
                "folds": 10,
                "repeats": 100,
                "kernels": [{"kind": "linear"}, {"kind": "gaussian"}, {"kind": "bhattacharyya"}, {"kind": "chi_square"}],
            }
        },
    )

    data: DataPaths = Field(default_factory=DataPaths)
    out_dir: str = "out"
    model_path: Optional[str] = None
    seed: int = 0

    hyper: Hyperparameters = Field(default_factory=Hyperparameters)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    grid: GridSpec = Field(default_factory=GridSpec)
    scaling: ScalingKind = ScalingKind.ZSCORE
    kernels: List[KernelSpec] = Field(default_factory=lambda: list(DEFAULT_KERNELS))
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)

    folds: PositiveInt = 10
    repeats: PositiveInt = 100
    holdout_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    transductive: bool = True
    compare_baseline: bool = False
    sweep: Literal["beta", "k"] = "beta"
    sweep_betas: List[float] = Field(default_factory=lambda: [1e-5, 1e-3, 1e-1])

    backend: Literal["thread", "celery"] = "thread"
    workers: Optional[PositiveInt] = None

    @property
    def model_file(self) -> Path:
        return Path(self.model_path) if self.model_path else Path(self.out_dir) / "model.json"

    def require_features(self) -> Tuple[str, str]:
        if not self.data.motor or not self.data.nonmotor:
            raise InvalidConfig("data.motor and data.nonmotor paths are required")
        return self.data.motor, self.data.nonmotor

    def load(self) -> Dataset:
        motor, nonmotor = self.require_features()
        if not self.data.labels:
            raise InvalidConfig("data.labels path is required")
        return load_dataset(motor, nonmotor, self.data.labels)

    def load_view(self) -> Tuple[MultiModalView, LabelMatrix]:
        dataset = self.load()
        view = assemble_view(
            dataset.motor,
            dataset.nonmotor,
            ScalingSpec(kind=self.scaling),
            self.kernels,
            sample_ids=dataset.sample_ids,
            feature_names=dataset.feature_names,
        )
        return view, dataset.labels


OVERRIDES = {
    "seed": ("seed",),
    "out_dir": ("out_dir",),
    "model_path": ("model_path",),
    "alpha": ("hyper", "alpha"),
    "beta": ("hyper", "beta"),
    "k": ("hyper", "k"),
    "folds": ("folds",),
    "repeats": ("repeats",),
    "backend": ("backend",),
    "workers": ("workers",),
    "motor": ("data", "motor"),
    "nonmotor": ("data", "nonmotor"),
    "labels": ("data", "labels"),
    "sweep": ("sweep",),
    "compare_baseline": ("compare_baseline",),
    "transductive": ("transductive",),
}


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read the JSON config (if any), apply non-None overrides, validate."""
    document: Dict[str, Any] = {}
    if path:
        config_path = Path(path)
        if not config_path.exists():
            raise InvalidConfig(f"{config_path}: config file not found")
        try:
            document = json.loads(config_path.read_text())
        except json.JSONDecodeError as e:
            raise InvalidConfig(f"{config_path}: invalid JSON at line {e.lineno}: {e.msg}")

    for key, value in (overrides or {}).items():
        if value is None or key not in OVERRIDES:
            continue
        *parents, leaf = OVERRIDES[key]
        target = document
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = value

    try:
        return RunConfig.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise InvalidConfig(f"config field '{where}': {first['msg']}")
