"""CSV / JSON emission with a reproducibility header, and gnuplot data files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__


def config_hash(config: dict) -> str:
    # the output location does not affect results
    config = {k: v for k, v in config.items() if k != "output"}
    blob = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def header(config: dict, tolerances: dict | None = None) -> dict:
    return {
        "config_hash": config_hash(config),
        "versions": {
            "kmslab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "tolerances": to_jsonable(tolerances or {}),
    }


def to_jsonable(x):
    """Recursively convert numpy scalars/arrays and complex numbers to JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _float(x.real), "im": _float(x.imag)}
    if isinstance(x, (float, np.floating)):
        return _float(x)
    return x


def _float(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def dumps_json(payload: dict, config: dict | None = None, tolerances: dict | None = None) -> str:
    doc = {}
    if config is not None:
        doc["header"] = header(config, tolerances)
    doc.update(to_jsonable(payload))
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path, payload, config=None, tolerances=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(payload, config, tolerances), encoding="utf-8")
    return path


def _cell(v):
    if isinstance(v, (complex, np.complexfloating)):
        return f"{float(v.real)!r}{float(v.imag):+}j"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def dumps_csv(rows, fields=None, config=None, tolerances=None) -> str:
    """RFC-4180 CSV; the header block is a run of ``#`` lines before the column names."""
    rows = list(rows)
    if fields is None:
        fields = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    if config is not None:
        hdr = header(config, tolerances)
        buf.write(f"# config_hash: {hdr['config_hash']}\r\n")
        for k, v in hdr["versions"].items():
            buf.write(f"# version {k}: {v}\r\n")
        for k, v in sorted(hdr["tolerances"].items()):
            buf.write(f"# tolerance {k}: {v}\r\n")
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(r.get(f, "")) for f in fields])
    return buf.getvalue()


def write_csv(path, rows, fields=None, config=None, tolerances=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_csv(rows, fields, config, tolerances))
    return path


def read_csv(path):
    """Parse a file written by :func:`write_csv` (skips the ``#`` header block)."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_gnuplot(directory, stem, columns: dict, script: str):
    """Whitespace-separated ``stem.dat`` plus ``stem.gp`` that plots it."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    with open(directory / f"{stem}.dat", "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for row in data:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    (directory / f"{stem}.gp").write_text(script.replace("{dat}", f"{stem}.dat"), encoding="utf-8")
    return directory / f"{stem}.dat"
