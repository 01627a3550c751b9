"""Refinement studies for the 1D configs and a coarse 2D one, with SVG plots.

    python scripts/convergence_study.py [--out DIR]
"""
import argparse
from pathlib import Path

from driftplate.config import load
from driftplate.pipeline import convergence_plot, converge

STUDIES = {
    "beam_nu0": [25, 50, 100, 200],
    "beam_nu2": [25, 50, 100, 200],
    "grim_reaper_x0_1.4": [25, 50, 100, 200],
    "unit_square_nu3": [4, 8, 16],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="convergence_reports")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, levels in STUDIES.items():
        table = converge(load(name), levels)
        (out / f"{name}_convergence.csv").write_text(table.csv())
        convergence_plot(table, out / f"{name}_convergence.svg")
        print(f"== {name}")
        print(table.table())


if __name__ == "__main__":
    main()
