"""Shared setup for the experiment scripts."""

import argparse
from pathlib import Path

from adalopo.testbed import TargetFunction, sd_grid

CUSP = TargetFunction.cusp(1.0, 0.5, 1.0)
# noise level giving the cusp a root signal-to-noise ratio of 7 on the grid
CUSP_SIGMA = sd_grid(CUSP) / 7.0


def parser(doc, replications):
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")
    p.add_argument("--replications", type=int, default=replications, help=f"replications (default: {replications})")
    return p
