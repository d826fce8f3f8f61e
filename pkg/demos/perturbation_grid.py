"""Render a kind x level contact sheet of the perturbation catalog.

The source frame is a simulator render of a preset road, so the sheet shows
exactly what a driving agent would see under each corruption.

Usage: python demos/perturbation_grid.py [--out grid.png] [--kinds fog,snow,...]
"""

import argparse

import numpy as np

from drivebench import roadgen, simcore
from drivebench.image_ops import save_png
from drivebench.perturb import default_catalog

LEVELS = (1, 2, 3, 4, 5)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="grid.png")
    ap.add_argument("--kinds", help="comma-separated subset (default: all)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    catalog = default_catalog()
    kinds = (args.kinds.split(",") if args.kinds
             else list(catalog.kinds()))

    road = roadgen.preset_roads()[4]
    frame = simcore.render(simcore.VehicleState(x=30.0), road)
    h, w = frame.shape[:2]

    sheet = np.zeros((len(kinds) * h, (len(LEVELS) + 1) * w, 3), dtype=np.uint8)
    for row, kind in enumerate(kinds):
        sheet[row * h:(row + 1) * h, :w] = frame
        for col, level in enumerate(LEVELS, start=1):
            out = catalog.apply(kind, frame, level, args.seed)
            sheet[row * h:(row + 1) * h, col * w:(col + 1) * w] = out
        print(f"{kind:20s} levels 1..5 rendered")

    save_png(args.out, sheet)
    print(f"wrote {sheet.shape[1]}x{sheet.shape[0]} contact sheet to {args.out}")


if __name__ == "__main__":
    main()
