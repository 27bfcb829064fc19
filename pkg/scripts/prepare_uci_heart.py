#!/usr/bin/env python3
"""Convert a heart-disease CSV into the layout the benchmark expects.

Accepts either the raw UCI Cleveland file (``processed.cleveland.data``:
no header, ``?`` for missing, disease severity 0-4 in the last column) or
the common pre-processed variant that already has a header row and a binary
``target`` column. Writes ``heart.csv`` and ``heart.schema.json`` into
``--out-dir`` (default ``data/``), which is where the acceptance suite looks.

Usage:
    python3 scripts/prepare_uci_heart.py --raw processed.cleveland.data
    python3 scripts/prepare_uci_heart.py --raw heart.csv
"""

import argparse
import csv
import json
import os
import sys

COLUMNS = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
           "thalach", "exang", "oldpeak", "slope", "ca", "thal", "target"]
NUMERIC = {"age", "trestbps", "chol", "thalach", "oldpeak"}
CATEGORICAL = {"sex", "cp", "fbs", "restecg", "exang", "slope", "ca", "thal"}


def _clean(token: str, categorical: bool) -> str:
    token = token.strip()
    if token in ("?", ""):
        return ""
    if categorical:
        # normalize "3.0" and "3" to the same category label
        try:
            value = float(token)
            if value == int(value):
                return str(int(value))
        except ValueError:
            pass
    return token


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--raw", required=True, help="source file (UCI raw or headered CSV)")
    ap.add_argument("--out-dir", default="data")
    args = ap.parse_args()

    with open(args.raw, "r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(tok.strip() for tok in row)]
    if not rows:
        print("error: source file is empty", file=sys.stderr)
        return 1

    has_header = any(any(ch.isalpha() for ch in tok) for tok in rows[0])
    if has_header:
        header = [tok.strip() for tok in rows[0]]
        body = rows[1:]
        if "target" not in header and "num" in header:
            header[header.index("num")] = "target"
        missing = [c for c in COLUMNS if c not in header]
        if missing:
            print(f"error: source is missing columns {missing}", file=sys.stderr)
            return 1
        order = [header.index(c) for c in COLUMNS]
        body = [[row[i] for i in order] for row in body]
    else:
        if len(rows[0]) != len(COLUMNS):
            print(f"error: expected {len(COLUMNS)} columns, got {len(rows[0])}",
                  file=sys.stderr)
            return 1
        body = rows

    os.makedirs(args.out_dir, exist_ok=True)
    out_csv = os.path.join(args.out_dir, "heart.csv")
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for row in body:
            out = []
            for col, tok in zip(COLUMNS[:-1], row):
                out.append(_clean(tok, col in CATEGORICAL))
            # binarize disease severity: anything above 0 is positive
            severity = float(row[-1])
            out.append("1" if severity > 0 else "0")
            writer.writerow(out)

    schema = {c: ("numeric" if c in NUMERIC else "categorical") for c in COLUMNS[:-1]}
    schema["target"] = "target"
    out_schema = os.path.join(args.out_dir, "heart.schema.json")
    with open(out_schema, "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out_csv} ({len(body)} rows) and {out_schema}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
