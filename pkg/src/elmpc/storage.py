"""File formats: dataset and log CSV, deterministic npz, run manifests."""

import csv
import hashlib
import json
import math

import numpy as np

from .elm import FEATURES, LABEL, Dataset
from .errors import InvalidDataError
from .npz import write_npz
from .sim import LOG_COLUMNS, SimLog

DATASET_HEADER = (*FEATURES, LABEL)


def _fmt(x):
    return repr(float(x))


def write_dataset_csv(path, data):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for feats, label in zip(data.features, data.labels):
            w.writerow([_fmt(v) for v in feats] + [_fmt(label)])


def read_dataset_csv(path):
    """Read a dataset CSV; bad rows raise :class:`InvalidDataError` with
    their 1-based line numbers."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(h.strip() for h in rows[0]) != DATASET_HEADER:
        raise InvalidDataError(f"{path}: expected header {','.join(DATASET_HEADER)}")
    values, bad = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            vals = [float(v) for v in row]
        except ValueError:
            vals = None
        if vals is None or len(vals) != len(DATASET_HEADER) or not all(math.isfinite(v) for v in vals):
            bad.append(lineno)
            continue
        values.append(vals)
    if bad:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise InvalidDataError(f"{path}: invalid rows at lines {shown}", rows=bad)
    arr = np.array(values, dtype=float).reshape(-1, len(DATASET_HEADER))
    return Dataset(arr[:, :-1].copy(), arr[:, -1].copy())


def write_log_csv(path, slog):
    cols = [slog[k] for k in LOG_COLUMNS]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for i in range(len(slog)):
            w.writerow([_fmt(c[i]) for c in cols])


def read_log_csv(path, scenario="", mode="", dt=None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != LOG_COLUMNS:
        raise InvalidDataError(f"{path}: not a simulation log (unexpected header)")
    try:
        arr = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InvalidDataError(f"{path}: {exc}") from None
    arr = arr.reshape(-1, len(LOG_COLUMNS))
    columns = {k: arr[:, i].copy() for i, k in enumerate(LOG_COLUMNS)}
    if dt is None:
        t = columns["t"]
        dt = float(t[1] - t[0]) if t.size > 1 else float("nan")
    return SimLog(scenario, mode, dt, columns)


def write_log_npz(path, slog):
    write_npz(path, {k: slog[k] for k in LOG_COLUMNS})


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_hash(obj):
    """Hash of a JSON-serialisable object, independent of key order."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
