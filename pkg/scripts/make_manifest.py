#!/usr/bin/env python
"""Generate a synthetic PGM image set plus a study manifest CSV.

Class proportions mirror the source dataset (1676 : 2855 : 1049 : 474 across
the four appearance labels), scaled by --scale so a desk-size corpus stays
small. A fraction of studies get images_in_study > 1 so the multi-image
exclusion path has something to do.

Usage: python scripts/make_manifest.py --out data/demo [--scale 0.02] [--seed 0]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from studyforge.augment import write_pgm
from studyforge.manifest import LABELS, MANIFEST_HEADER
from studyforge.surrogate import class_template

FULL_COUNTS = (1676, 2855, 1049, 474)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--scale", type=float, default=0.02)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--side", type=int, default=32, help="image side in pixels")
    parser.add_argument(
        "--multi-every", type=int, default=25,
        help="every Nth study gets a second image (excluded by loaders)",
    )
    args = parser.parse_args()

    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    rows = []
    study_id = 0
    for class_idx, (label, full) in enumerate(zip(LABELS, FULL_COUNTS)):
        count = max(1, round(full * args.scale))
        template = class_template(class_idx, len(LABELS), args.side)
        for _ in range(count):
            study_id += 1
            images_in_study = 2 if args.multi_every and study_id % args.multi_every == 0 else 1
            img = np.clip(template + rng.normal(0.0, 0.1, template.shape), 0.0, 1.0)
            rel = f"images/study{study_id:05d}.pgm"
            write_pgm(out / rel, img)
            rows.append([f"study{study_id:05d}", rel, label, images_in_study])

    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    print(f"wrote {len(rows)} entries to {manifest}")


if __name__ == "__main__":
    main()
