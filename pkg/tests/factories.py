"""Random problem instances shared by the tests."""
from typing import Sequence, Tuple

import numpy as np

from core.models import LabelMatrix, ModalityMatrix, ModelState, MultiModalView


def random_problem(
    seed: int,
    n_rows: int = 8,
    dims: Sequence[int] = (4, 3),
    c: int = 3,
    n_train: int = 6,
    density: float = 0.4,
) -> Tuple[MultiModalView, LabelMatrix]:
    rng = np.random.default_rng(seed)
    modalities = [
        ModalityMatrix(values=rng.standard_normal((n_rows, d)), name=f"m{i}") for i, d in enumerate(dims)
    ]
    Y = (rng.random((n_rows, c)) < density).astype(float)
    Y[n_train:] = 0.0
    view = MultiModalView(modalities=modalities, sample_ids=[f"s{i}" for i in range(n_rows)])
    return view, LabelMatrix(values=Y, n_train=n_train, n_test=n_rows - n_train)


def random_state(
    seed: int, view: MultiModalView, labels: LabelMatrix, k: int, alpha: float = 0.5, beta: float = 0.1
) -> ModelState:
    rng = np.random.default_rng(seed + 10_000)
    return ModelState(
        U=[rng.standard_normal((d, k)) for d in view.dims],
        P=rng.standard_normal((view.n_rows, k)),
        V=rng.standard_normal((k, labels.n_labels)),
        alpha=alpha,
        beta=beta,
        k=k,
    )
