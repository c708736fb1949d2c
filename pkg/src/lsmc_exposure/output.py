"""CSV and manifest writers.

Floats are written with 17 significant digits so that files round-trip to
the same doubles and repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path

import numpy as np

PROFILE_COLUMNS = ("time", "ee", "pfe", "method")
VARIANCE_REPORT_COLUMNS = ("time_step", "total_mc_var", "total_lsmc_var", "ratio", "theoretical_ratio")
COMPARE_COLUMNS = ("time", "ee_lsmc", "ee_baseline", "ee_rel_err", "pfe_lsmc", "pfe_baseline", "pfe_rel_err")
GBM_CALL_COLUMNS = ("step", "scenario", "spot", "y_mc", "y_lsmc", "bs")
GBM_CALL_SUMMARY_COLUMNS = ("step", "basis", "rmse_mc", "rmse_lsmc")
VARIANCE_STUDY_COLUMNS = ("p", "scenario", "mc_var", "lsmc_var")
VARIANCE_SUMMARY_COLUMNS = ("p", "total_mc_var", "total_lsmc_var", "ratio", "theoretical_ratio",
                            "reduction", "pooled_sigma2")
SSE_COLUMNS = ("degree", "p", "sse_noisy", "sse_actual")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if value is None:
        return "nan"
    return str(value)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> list[dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def versions() -> dict[str, str]:
    import scipy

    from . import __version__

    return {
        "lsmc_exposure": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_manifest(path, record: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = dict(record)
    record.setdefault("versions", versions())
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=_default) + "\n")
    return path


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
