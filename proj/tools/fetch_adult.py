#!/usr/bin/env python3
"""Build the census-income dataset in sparse labeled text form.

Reads the raw UCI Adult training file (32,561 rows), one-hot encodes it into
123 binary attributes laid out like the LIBSVM a1a..a9a family, and writes

  <out>/adult.libsvm       "<label> <idx>:1 ..." with label +1 for income >50K
  <out>/adult_groups.txt   "attribute group-id feature-index-list"

The raw file is taken from --raw when given. Otherwise it is pulled out of the
`responsibly` wheel (which bundles an unmodified copy) via `pip download`.
"""

import argparse
import hashlib
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

RAW_SHA256 = "5b00264637dbfec36bdeaab5676b0b309ff9eb788d63554ca0a249491c86603d"

CATEGORICAL = {
    "workclass": ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                  "Local-gov", "State-gov", "Without-pay", "Never-worked"],
    "education": ["Bachelors", "Some-college", "11th", "HS-grad", "Prof-school",
                  "Assoc-acdm", "Assoc-voc", "9th", "7th-8th", "12th", "Masters",
                  "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool"],
    "marital-status": ["Married-civ-spouse", "Divorced", "Never-married",
                       "Separated", "Widowed", "Married-spouse-absent",
                       "Married-AF-spouse"],
    "occupation": ["Tech-support", "Craft-repair", "Other-service", "Sales",
                   "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                   "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                   "Transport-moving", "Priv-house-serv", "Protective-serv",
                   "Armed-Forces"],
    "relationship": ["Wife", "Own-child", "Husband", "Not-in-family",
                     "Other-relative", "Unmarried"],
    "race": ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other",
             "Black"],
    "sex": ["Female", "Male"],
    "native-country": ["United-States", "Cambodia", "England", "Puerto-Rico",
                       "Canada", "Germany", "Outlying-US(Guam-USVI-etc)",
                       "India", "Japan", "Greece", "South", "China", "Cuba",
                       "Iran", "Honduras", "Philippines", "Italy", "Poland",
                       "Jamaica", "Vietnam", "Mexico", "Portugal", "Ireland",
                       "France", "Dominican-Republic", "Laos", "Ecuador",
                       "Taiwan", "Haiti", "Columbia", "Hungary", "Guatemala",
                       "Nicaragua", "Scotland", "Thailand", "Yugoslavia",
                       "El-Salvador", "Trinadad&Tobago", "Peru", "Hong",
                       "Holand-Netherlands"],
}

COLUMNS = ["age", "workclass", "fnlwgt", "education", "education-num",
           "marital-status", "occupation", "relationship", "race", "sex",
           "capital-gain", "capital-loss", "hours-per-week", "native-country"]

# (column, number of bins); 2 bins means "zero" / "positive".
CONTINUOUS = {"age": 5, "fnlwgt": 5, "education-num": 5, "capital-gain": 2,
              "capital-loss": 2, "hours-per-week": 5}


def fetch_raw():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                        "--dest", tmp, "responsibly==0.1.2"], check=True)
        wheel = next(pathlib.Path(tmp).glob("responsibly-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            return z.read("responsibly/dataset/adult/adult.data")


def quantile_edges(values, bins):
    ordered = sorted(values)
    edges = []
    for k in range(1, bins):
        edges.append(ordered[(k * len(ordered)) // bins])
    return edges


def bin_of(value, edges):
    b = 0
    while b < len(edges) and value >= edges[b]:
        b += 1
    return b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--raw", type=pathlib.Path, help="path to adult.data")
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data"))
    args = ap.parse_args()

    raw = args.raw.read_bytes() if args.raw else fetch_raw()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != RAW_SHA256:
        sys.exit(f"unexpected adult.data checksum {digest}")

    rows = []
    for line in io.StringIO(raw.decode("ascii")):
        fields = [f.strip() for f in line.strip().split(",")]
        if len(fields) != len(COLUMNS) + 1:
            continue
        rows.append(fields)

    # Feature layout: columns in file order, each expanded into its slots.
    layout = {}
    next_index = 1
    for col in COLUMNS:
        width = CONTINUOUS[col] if col in CONTINUOUS else len(CATEGORICAL[col])
        layout[col] = next_index
        next_index += width
    assert next_index - 1 == 123, next_index - 1

    edges = {}
    for col, bins in CONTINUOUS.items():
        if bins == 2:
            continue
        ci = COLUMNS.index(col)
        edges[col] = quantile_edges([int(r[ci]) for r in rows], bins)

    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "adult.libsvm", "w") as f:
        for r in rows:
            active = []
            for ci, col in enumerate(COLUMNS):
                value = r[ci]
                if col in CONTINUOUS:
                    v = int(value)
                    slot = (1 if v > 0 else 0) if CONTINUOUS[col] == 2 \
                        else bin_of(v, edges[col])
                    active.append(layout[col] + slot)
                elif value != "?":
                    active.append(layout[col] + CATEGORICAL[col].index(value))
            label = "+1" if r[-1] == ">50K" else "-1"
            f.write(label + "".join(f" {i}:1" for i in active) + "\n")

    with open(args.out / "adult_groups.txt", "w") as f:
        f.write("# attribute group-id feature-index-list\n")
        f.write("# an empty list collects instances with no feature of the "
                "attribute set (missing value)\n")
        for col in ("native-country", "education", "occupation",
                    "relationship", "race"):
            for k, name in enumerate(CATEGORICAL[col]):
                f.write(f"{col} {name} {layout[col] + k}\n")
            if col in ("native-country", "occupation"):
                f.write(f"{col} ?\n")
    print(f"wrote {len(rows)} instances to {args.out}")


if __name__ == "__main__":
    main()
