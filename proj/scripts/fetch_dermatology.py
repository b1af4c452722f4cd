#!/usr/bin/env python3
"""Fetch the UCI Dermatology dataset and write data/dermatology.csv.

Needs network access to archive.ics.uci.edu. The raw file has 8 rows with a
missing `age` value ('?'); those rows are dropped (the loader does not
impute). Output: 34 feature columns plus a `class` column.
"""
import csv
import io
import os
import sys
import urllib.request
import zipfile

URL = "https://archive.ics.uci.edu/static/public/33/dermatology.zip"


def main() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "data", "dermatology.csv")
    with urllib.request.urlopen(URL, timeout=60) as r:
        blob = r.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as z:
        raw = z.read("dermatology.data").decode("ascii")

    kept, dropped = [], 0
    for line in raw.strip().splitlines():
        cells = line.strip().split(",")
        if "?" in cells:
            dropped += 1
            continue
        kept.append(cells)

    header = [f"f{i}" for i in range(1, 35)] + ["class"]
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(kept)
    print(f"wrote {out}: {len(kept)} rows kept, {dropped} dropped (missing age)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
