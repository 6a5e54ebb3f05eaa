#!/usr/bin/env python3
# Copyright 2026 The noisygbdt Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the benchmark CSVs into data/.

breast_cancer.csv comes from the copy of WDBC shipped with scikit-learn.
adult.csv (adult.data + adult.test) comes from the copy shipped inside the
`responsibly` wheel on PyPI. Dry Bean and Covertype are fetched from UCI when
the host is reachable; otherwise drop dry_bean.csv / covertype.csv into data/
by hand (label column "Class" and "Cover_Type" respectively).
"""

import argparse
import csv
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]


def write_breast_cancer(out_dir):
    from sklearn.datasets import load_breast_cancer

    bc = load_breast_cancer()
    path = os.path.join(out_dir, "breast_cancer.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([n.replace(" ", "_") for n in bc.feature_names] + ["target"])
        for row, target in zip(bc.data, bc.target):
            # scikit-learn coding: 0 = malignant, 1 = benign.
            w.writerow([repr(float(v)) for v in row] + [int(target)])
    print("wrote", path)


def adult_rows(text):
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(ADULT_COLUMNS):
            continue
        cells[-1] = cells[-1].rstrip(".")
        yield cells


def write_adult(out_dir):
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.check_call([
            sys.executable, "-m", "pip", "download", "--no-deps", "-q",
            "responsibly==0.1.2", "-d", tmp,
        ])
        wheel = next(os.path.join(tmp, f) for f in os.listdir(tmp) if f.endswith(".whl"))
        with zipfile.ZipFile(wheel) as z:
            train = z.read("responsibly/dataset/adult/adult.data").decode()
            test = z.read("responsibly/dataset/adult/adult.test").decode()
    path = os.path.join(out_dir, "adult.csv")
    n = 0
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(ADULT_COLUMNS)
        for text in (train, test):
            for row in adult_rows(text):
                w.writerow(row)
                n += 1
    print("wrote", path, n, "rows")


COVTYPE_COLUMNS = (
    ["Elevation", "Aspect", "Slope", "Horizontal_Distance_To_Hydrology",
     "Vertical_Distance_To_Hydrology", "Horizontal_Distance_To_Roadways",
     "Hillshade_9am", "Hillshade_Noon", "Hillshade_3pm",
     "Horizontal_Distance_To_Fire_Points"]
    + [f"Wilderness_Area{i}" for i in range(1, 5)]
    + [f"Soil_Type{i}" for i in range(1, 41)]
    + ["Cover_Type"]
)


def fetch(url):
    with urllib.request.urlopen(url, timeout=60) as r:
        return r.read()


def write_covertype(out_dir):
    import gzip

    raw = gzip.decompress(fetch(
        "https://archive.ics.uci.edu/ml/machine-learning-databases/covtype/covtype.data.gz")).decode()
    path = os.path.join(out_dir, "covertype.csv")
    with open(path, "w") as f:
        f.write(",".join(COVTYPE_COLUMNS) + "\n")
        f.write(raw)
    print("wrote", path)


def write_dry_bean(out_dir):
    blob = fetch("https://archive.ics.uci.edu/static/public/602/dry+bean+dataset.zip")
    with zipfile.ZipFile(io.BytesIO(blob)) as z:
        arff = next(n for n in z.namelist() if n.endswith(".arff"))
        text = z.read(arff).decode()
    names, rows, in_data = [], [], False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if low.startswith("@attribute"):
            names.append(line.split()[1])
        elif low.startswith("@data"):
            in_data = True
        elif in_data:
            rows.append(line)
    path = os.path.join(out_dir, "dry_bean.csv")
    with open(path, "w") as f:
        f.write(",".join(names) + "\n")
        f.write("\n".join(rows) + "\n")
    print("wrote", path, len(rows), "rows")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--uci", action="store_true", help="also try UCI for Dry Bean / Covertype")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    write_breast_cancer(args.out)
    write_adult(args.out)
    if args.uci:
        for writer in (write_dry_bean, write_covertype):
            try:
                writer(args.out)
            except Exception as e:  # noqa: BLE001
                print(f"skip {writer.__name__}: {e}")


if __name__ == "__main__":
    main()
