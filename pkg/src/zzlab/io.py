"""CSV / JSON-lines / checkpoint plumbing.

Conventions:
* CSV files have a header row, '.' decimal separator, no locale, and floats
  printed with 17 significant digits so values round-trip exactly.
* Every output file is paired with a line in ``manifest.jsonl`` in the same
  directory recording the subcommand, the full resolved configuration, a
  SHA-256 hash of the canonical configuration JSON, the seed, and package /
  library versions.  Timestamps are recorded but excluded from the hash so
  identical configs hash identically.
* Checkpoints store the raw complex spectral array prefixed by a one-line
  JSON header (dimensions, time, dtype tag); the payload is little-endian
  complex128 ('<c16'), C-order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time

import numpy as np


def fmt(value) -> str:
    """Format a scalar for CSV: floats at 17 significant digits."""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (complex, np.complexfloating)):
        return f"{float(value.real):.17g}{float(value.imag):+.17g}j"
    return str(value)


def write_csv(path, header, rows):
    """Write rows (iterables of scalars) under a header, round-trip safe."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    """Read a CSV written by write_csv: (header, list of string rows)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical (sorted, compact) JSON of the config."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def append_manifest(directory, record: dict):
    """Append one JSON line to manifest.jsonl in directory."""
    rec = dict(record)
    cfg = rec.get("config", {})
    rec["config_hash"] = config_hash(cfg)
    rec["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    try:
        import scipy

        scipy_version = scipy.__version__
    except Exception:  # pragma: no cover
        scipy_version = "unknown"
    rec["versions"] = {"numpy": np.__version__, "scipy": scipy_version}
    path = f"{directory}/manifest.jsonl"
    with open(path, "a") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


CHECKPOINT_MAGIC = b"ZZCHK1\n"


def save_checkpoint(path, t: float, u_hat: np.ndarray):
    """Write a spectral checkpoint: magic, JSON header line, raw '<c16' data."""
    arr = np.ascontiguousarray(u_hat, dtype="<c16")
    header = {
        "shape": list(arr.shape),
        "t": float(t),
        "dtype": "<c16",
        "order": "C",
    }
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(arr.tobytes())


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint: (t, u_hat)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        header = json.loads(fh.readline().decode())
        data = fh.read()
    arr = np.frombuffer(data, dtype=header["dtype"]).reshape(header["shape"])
    return header["t"], arr.astype(np.complex128)
