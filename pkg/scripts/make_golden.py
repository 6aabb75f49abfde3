#!/usr/bin/env python3
"""Regenerate the golden CSVs consumed by the figure renderer's tests.

Each artifact is produced through the CLI so the files exercise the real
emission path; everything is seeded, so reruns are byte-identical.
"""

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from predcp.cli import run  # noqa: E402

GOLDEN = ROOT / "frontend" / "golden"

PLAIN_NET = ('{"kind": "network", "input_dim": 1, "hidden_dim": 6, '
             '"output_dim": 1, "depth": 2, "residual": false}')
DRAW_NET = ('{"kind": "network", "input_dim": 1, "hidden_dim": 12, '
            '"output_dim": 1, "depth": 5, "residual": true}')

JOBS = [
    ("density_exponential.csv", "density.csv",
     ["ecp-density", "--pi-kl", "exponential", "--min", "0.01", "--max", "3",
      "--points", "120"]),
    ("density_gamma.csv", "density.csv",
     ["ecp-density", "--pi-kl", "gamma", "--min", "0.01", "--max", "3",
      "--points", "120"]),
    ("density_log_cauchy.csv", "density.csv",
     ["ecp-density", "--pi-kl", "log_cauchy", "--min", "0.01", "--max", "3",
      "--points", "120"]),
    ("shrinkage_x1.csv", "shrinkage.csv",
     ["shrinkage", "--pi-kl", "log_cauchy", "--model",
      '{"kind": "linear", "x": 1.0}', "--min", "0.01", "--max", "0.99",
      "--points", "99"]),
    ("shrinkage_x3.csv", "shrinkage.csv",
     ["shrinkage", "--pi-kl", "log_cauchy", "--model",
      '{"kind": "linear", "x": 3.0}', "--min", "0.01", "--max", "0.99",
      "--points", "99"]),
    ("joint_grid_plain.csv", "joint_grid.csv",
     ["joint-grid", "--model", PLAIN_NET, "--min", "0", "--max", "2",
      "--points", "12", "--mc-samples", "8", "--n-inputs", "8"]),
    ("functions_predcp.csv", "functions.csv",
     ["sample-functions", "--model", DRAW_NET, "--prior", "predcp",
      "--draws", "5", "--points", "61", "--seed", "11"]),
    ("trend_rank.csv", "tail_prob.csv",
     ["tail-prob", "--sweep", "rank", "--max-rank", "12",
      "--pi-kl", "gamma_exp_mixture"]),
]


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for target, produced, argv in JOBS:
        with tempfile.TemporaryDirectory() as tmp:
            code = run(argv + ["--out", tmp])
            if code != 0:
                raise SystemExit(f"{argv[0]} exited {code}")
            shutil.copyfile(Path(tmp) / produced, GOLDEN / target)
        print(f"wrote {GOLDEN / target}")


if __name__ == "__main__":
    main()
