"""Write plot-ready diffraction-loss tables.

Produces one CSV per built-in sweep (wide-area distance curve, local
26.4 mm distance curve, aperture curve at 100 m) in the output directory.

Run: python3 scripts/loss_curves.py [--out DIR]
"""
import argparse
from pathlib import Path

from qdrone.harness.sweeps import BUILTIN_SWEEPS, load_sweep, run_linkbudget


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="loss_curves")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in BUILTIN_SWEEPS:
        table = run_linkbudget(load_sweep(name))
        path = out / f"{name}.csv"
        path.write_text(table)
        rows = table.splitlines()[1:]
        first, last = rows[0].split(","), rows[-1].split(",")
        print(f"{path}: {len(rows)} rows, {float(first[1]):.3f} dB at {first[0]} -> "
              f"{float(last[1]):.3f} dB at {last[0]}")


if __name__ == "__main__":
    main()
