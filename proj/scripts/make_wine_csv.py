#!/usr/bin/env python3
"""Write the UCI Wine dataset (bundled with scikit-learn) to data/wine.csv."""
import csv
import os
import sys

from sklearn.datasets import load_wine


def main() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "data", "wine.csv")
    d = load_wine()
    names = [n.replace("/", "_") for n in d.feature_names]
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + ["class"])
        for row, label in zip(d.data, d.target):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    print(f"wrote {out}: {d.data.shape[0]} rows, {d.data.shape[1]} features")
    return 0


if __name__ == "__main__":
    sys.exit(main())
