"""Checks that label maps written by `vsg synth` load in nibabel with the
expected geometry, and that every object box in graph.json is the tight box
of its voxels as nibabel sees them."""

import json
import pathlib
import subprocess
import sys
import tempfile

import nibabel as nib
import numpy as np


def main(vsg: str) -> int:
    with tempfile.TemporaryDirectory() as tmp:
        root = pathlib.Path(tmp)
        cfg = root / "run.cfg"
        cfg.write_text("phantom.shape = 24,40,36\nphantom.spacing_mm = 3,1.5,1.25\n")
        subprocess.run([vsg, "synth", "--config", str(cfg), "--out", str(root / "data"), "--cases", "3", "--seed", "4"],
                       check=True, capture_output=True)
        failures = 0
        for case in sorted((root / "data" / "cases").iterdir()):
            img = nib.load(case / "labels.nii.gz")
            graph = json.loads((case / "graph.json").read_text())
            # nibabel indexes (x, y, z); the toolkit indexes (z, y, x).
            data = np.asarray(img.dataobj).transpose(2, 1, 0)
            zooms = tuple(float(z) for z in img.header.get_zooms())
            if list(data.shape) != graph["shape"] or zooms != (1.25, 1.5, 3.0):
                print(f"{case.name}: shape {data.shape} zooms {zooms}")
                failures += 1
            if not set(np.unique(data)) <= {0, 1, 2, 3}:
                print(f"{case.name}: unexpected labels {np.unique(data)}")
                failures += 1
            for cat in (2, 3):
                objs = [o for o in graph["objects"] if o["category"] == cat]
                idx = np.argwhere(data == cat)
                box = list(idx.min(0)) + list(idx.max(0) + 1)
                if len(objs) != 1 or objs[0]["box"] != [int(v) for v in box]:
                    print(f"{case.name}: category {cat} box {box} vs {objs}")
                    failures += 1
        print("ok" if failures == 0 else f"{failures} failures")
        return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
