#!/usr/bin/env python3
"""
Fit wall time against the number of samples on six-modality synthetic views
(two feature views + four kernels), and the log-log slope of the growth.

Usage:
    python scaling_benchmark.py
    python scaling_benchmark.py --sizes 50 100 200 400 --k 50 --max-slope 2.3
"""

import sys
import time
import argparse
from pathlib import Path

# Add parent directory to path to import modules
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from core.settings import configure_logging
from app.optim import SolverConfig
from app.solver import fit
from app.synthetic import SyntheticSpec, generate_synthetic
from app.views import DEFAULT_KERNELS, ScalingSpec, assemble_view


def time_fit(n: int, k: int, solver: SolverConfig) -> float:
    view, labels, _ = generate_synthetic(SyntheticSpec(n_samples=n, seed=n))
    motor, nonmotor = view.modalities
    full = assemble_view(motor, nonmotor, ScalingSpec(), DEFAULT_KERNELS, sample_ids=view.ids())
    start = time.perf_counter()
    fit(full, labels, 0.3, 0.1, min(k, n), solver)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description="Fit wall time versus sample count")
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    parser.add_argument("--k", type=int, default=50)
    parser.add_argument("--max-slope", type=float, default=2.3)
    parser.add_argument("--iters", type=int, default=50, help="Fixed outer iteration count per fit")
    args = parser.parse_args()

    configure_logging()
    # every fit runs exactly --iters outer iterations
    solver = SolverConfig(max_outer_iters=args.iters, outer_rel_tol=1e-300)
    times = []
    for n in args.sizes:
        elapsed = time_fit(n, args.k, solver)
        times.append(elapsed)
        print(f"n={n:5d}: {elapsed:8.3f}s")

    slope = float(np.polyfit(np.log(args.sizes), np.log(times), 1)[0])
    if slope <= args.max_slope:
        print(f"✅ log-log slope {slope:.2f} <= {args.max_slope}")
        sys.exit(0)
    print(f"❌ log-log slope {slope:.2f} > {args.max_slope}")
    sys.exit(1)


if __name__ == "__main__":
    main()
