"""CSV and JSON persistence of result tables."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .config import ExperimentSpec, spec_from_dict
from .experiments import ResultTable

FLOAT_FMT = "%.12g"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return FLOAT_FMT % x


def _json_safe(x):
    if isinstance(x, float):
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(FLOAT_FMT % x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def write_outputs(table: ResultTable, out_dir) -> dict[str, Path]:
    """Write ``<name>.csv`` and ``<name>.json`` into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    name = table.name
    csv_path = out / f"{name}.csv"
    json_path = out / f"{name}.json"
    try:
        out.mkdir(parents=True, exist_ok=True)
        cols = list(table.columns)
        n = len(table.columns[cols[0]]) if cols else 0
        with csv_path.open("w", encoding="utf-8", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(cols)
            for i in range(n):
                wr.writerow([_fmt(table.columns[c][i]) for c in cols])
        summary = dict(table.metadata)
        summary["columns"] = _json_safe(table.columns)
        # the ExperimentSpec echo keeps full precision so it round-trips exactly
        summary["spec"] = table.metadata["spec"]
        with json_path.open("w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=False, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {exc.filename or out}: {exc.strerror}") from exc
    return {"csv": csv_path, "json": json_path}


def read_spec(json_path) -> ExperimentSpec:
    """Rebuild the ``ExperimentSpec`` echoed in a JSON summary."""
    with Path(json_path).open(encoding="utf-8") as fh:
        data = json.load(fh)
    return spec_from_dict(data["spec"])
