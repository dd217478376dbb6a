#!/usr/bin/env python3
# aggregate_lab_csv_json.py
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from Domain.experiment import COLUMNS

# columns that identify the experiment kind of a CSV
KIND_MARKERS = {
    "convergence": "upper_bound",
    "grid-validation": "d1_exact",
    "scaling": "disc_d1",
    "ring-sweep": "asymptotic",
}

# headline quantities reported per kind
HEADLINES = {
    "convergence": ("gap", "order", "limit", "W"),
    "grid-validation": ("d1_rel_error", "perimeter_rel_error", "atoms"),
    "scaling": ("disc_exponent", "strip_exponent", "crossover"),
    "ring-sweep": ("residual", "C_fit", "slope_R", "t_opt"),
}


def _safe_float(x) -> Optional[float]:
    try:
        v = float(x)
        return None if math.isnan(v) else v
    except Exception:
        return None


def detect_kind(df: pd.DataFrame) -> Optional[str]:
    for kind, marker in KIND_MARKERS.items():
        if marker in df.columns:
            return kind
    return None


def load_result_csv(path: Path) -> Optional[pd.DataFrame]:
    try:
        df = pd.read_csv(path, keep_default_na=True)
    except Exception as e:
        print(f"[warn] failed to read {path.name}: {e}")
        return None
    kind = detect_kind(df)
    if kind is None or not set(COLUMNS[kind]).issubset(df.columns):
        print(f"[warn] {path.name}: not a lab result table, skipped")
        return None
    df.insert(0, "kind", kind)
    df.insert(0, "file", path.stem)
    return df


def collect_rows(out_root: Path) -> pd.DataFrame:
    frames: List[pd.DataFrame] = []
    for path in sorted(out_root.rglob("*.csv")):
        df = load_result_csv(path)
        if df is not None and not df.empty:
            frames.append(df)
    if not frames:
        return pd.DataFrame(columns=["file", "kind", "experiment", "error"])
    return pd.concat(frames, ignore_index=True, sort=False)


def summarize_file(sub: pd.DataFrame, kind: str) -> Dict[str, object]:
    errors = sub["error"].fillna("").astype(str)
    is_summary = sub["experiment"].astype(str).str.endswith(":summary")
    entry: Dict[str, object] = {
        "kind": kind,
        "rows": int((~is_summary).sum()),
        "errors": int((errors != "").sum()),
    }

    summary = sub[is_summary]
    if not summary.empty:
        row = summary.iloc[0]
        block = {
            col: _safe_float(row[col])
            for col in HEADLINES[kind]
            if col in row and _safe_float(row[col]) is not None
        }
        if block:
            entry["summary"] = block

    # per-column worst case over the data rows
    data = sub[~is_summary & (errors == "")]
    worst: Dict[str, float] = {}
    for col in HEADLINES[kind]:
        if col in data and data[col].notna().any():
            worst[col] = round(float(data[col].abs().max()), 12)
    if worst:
        entry["max_abs"] = worst
    return entry


def main():
    ap = argparse.ArgumentParser(
        description="Aggregate lab experiment CSVs (convergence, grid, scaling, ring) into one JSON."
    )
    ap.add_argument(
        "--out_root",
        required=True,
        type=Path,
        help="Root dir with experiment CSVs.",
    )
    ap.add_argument(
        "--out_json", required=True, type=Path, help="Path to save results JSON."
    )
    args = ap.parse_args()

    df = collect_rows(args.out_root)
    if df.empty:
        print("[ERROR] No result tables found.", file=sys.stderr)
        sys.exit(2)

    per_file: Dict[str, Dict[str, object]] = {}
    for (fname, kind), sub in df.groupby(["file", "kind"], sort=True):
        per_file[fname] = summarize_file(sub, kind)

    per_kind = (
        df.assign(failed=df["error"].fillna("").astype(str) != "")
        .groupby("kind")["failed"]
        .agg(["count", "sum"])
        .rename(columns={"count": "rows", "sum": "errors"})
        .astype(int)
        .to_dict(orient="index")
    )

    result = {
        "per_file": per_file,
        "per_kind": per_kind,
    }

    args.out_json.write_text(
        json.dumps(result, indent=2, ensure_ascii=False), encoding="utf-8"
    )
    print(f"[done] Saved results to {args.out_json}")


if __name__ == "__main__":
    main()
"""
python aggregate_lab_csv_json.py \
  --out_root results \
  --out_json results/lab_summary.json
"""
