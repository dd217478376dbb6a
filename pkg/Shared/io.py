# Shared/io.py
# Plain-text formats: PGM (P2) + JSON sidecar for fields, CSV for everything tabular.
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np
import pandas as pd


# -----------------------------
# PGM
# -----------------------------


def write_pgm(path: Path, occupancy: np.ndarray) -> Path:
    """Write a boolean image as ASCII PGM with maxval 1, top row = highest y."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.flipud(occupancy.astype(np.uint8))
    height, width = rows.shape
    lines = ["P2", f"{width} {height}", "1"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_pgm(path: Path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain PGM (P2) file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    values = np.asarray(tokens[4:], dtype=np.int64)
    if values.size != width * height:
        raise ValueError(f"{path}: expected {width * height} pixels, got {values.size}")
    if maxval != 1 or np.any((values != 0) & (values != 1)):
        raise ValueError(f"{path}: occupancy image must be binary with maxval 1")
    return np.flipud(values.reshape(height, width).astype(bool)).copy()


# -----------------------------
# JSON
# -----------------------------


def write_json(path: Path, obj: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # repr-exact floats: json emits the shortest round-tripping repr
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2), encoding="utf-8")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def sidecar_path(pgm_path: Path) -> Path:
    return Path(pgm_path).with_suffix(".json")


# -----------------------------
# CSV
# -----------------------------


def write_csv(path: Path, df: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # repr float format keeps re-runs byte-identical and lossless
    df.to_csv(path, index=False, float_format="%.17g")
    return path


def read_csv(path: Path, columns: Tuple[str, ...]) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ValueError(f"{Path(path).name}: missing columns {missing}")
    return df
