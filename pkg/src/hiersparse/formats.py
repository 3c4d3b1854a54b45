"""On-disk formats.

Vector files hold ``(id, vector)`` records:

* binary: ``b"HCE1"``, u32 d, u32 N, then N records of u32 id followed by d
  little-endian float64 values;
* CSV: header ``node_id,v0,...,v{d-1}``, one record per row.

The format is picked from the file extension (``.csv`` means CSV).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .dictionary import HierDictionary, dictionary_from_parts
from .errors import FormatError
from .synth import EmbeddingSet

MAGIC = b"HCE1"
_HEADER = np.dtype([("magic", "S4"), ("d", "<u4"), ("n", "<u4")])


def _record_dtype(d: int) -> np.dtype:
    return np.dtype([("id", "<u4"), ("v", "<f8", (d,))])


def _is_csv(path) -> bool:
    return Path(path).suffix.lower() == ".csv"


def write_vectors(path, ids, matrix):
    ids = np.asarray(ids, dtype=np.int64)
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != len(ids):
        raise FormatError(f"matrix shape {M.shape} does not match {len(ids)} ids")
    if np.any(ids < 0) or np.any(ids > 0xFFFFFFFF):
        raise FormatError("ids must fit in an unsigned 32-bit integer")
    path = Path(path)
    n, d = M.shape
    if _is_csv(path):
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id"] + [f"v{k}" for k in range(d)])
            for i, row in zip(ids, M):
                w.writerow([int(i)] + [repr(float(v)) for v in row])
        return
    header = np.array([(MAGIC, d, n)], dtype=_HEADER)
    rec = np.empty(n, dtype=_record_dtype(d))
    rec["id"] = ids
    rec["v"] = M
    with path.open("wb") as fh:
        fh.write(header.tobytes())
        fh.write(rec.tobytes())


def read_vectors(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(ids, matrix)`` in file order."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"vector file not found: {path}")
    if _is_csv(path):
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or not rows[0] or rows[0][0] != "node_id":
            raise FormatError(f"{path}: missing 'node_id,v0,...' header")
        d = len(rows[0]) - 1
        body = [r for r in rows[1:] if r]
        if d < 1 or not body:
            raise FormatError(f"{path}: no vectors")
        try:
            ids = np.array([int(r[0]) for r in body], dtype=np.int64)
            M = np.array([[float(v) for v in r[1:]] for r in body], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: unparsable value ({exc})") from exc
        if M.shape != (len(body), d):
            raise FormatError(f"{path}: ragged rows")
    else:
        raw = path.read_bytes()
        if len(raw) < _HEADER.itemsize:
            raise FormatError(f"{path}: file too short for a header")
        head = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
        if head["magic"] != MAGIC:
            raise FormatError(f"{path}: bad magic {bytes(head['magic'])!r}, expected {MAGIC!r}")
        d, n = int(head["d"]), int(head["n"])
        if n == 0 or d == 0:
            raise FormatError(f"{path}: no vectors")
        dt = _record_dtype(d)
        body = raw[_HEADER.itemsize :]
        if len(body) != n * dt.itemsize:
            raise FormatError(f"{path}: expected {n} records of {dt.itemsize} bytes, found {len(body)} bytes")
        rec = np.frombuffer(body, dtype=dt)
        ids = rec["id"].astype(np.int64)
        M = np.array(rec["v"], dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise FormatError(f"{path}: non-finite values")
    if len(set(ids.tolist())) != len(ids):
        raise FormatError(f"{path}: duplicate ids")
    return ids, M


def save_embeddings(e: EmbeddingSet, path):
    ids = e.ids()
    write_vectors(path, ids, e.stack(ids))


def load_embeddings(path) -> EmbeddingSet:
    ids, M = read_vectors(path)
    return EmbeddingSet(M.shape[1], {int(i): M[k].copy() for k, i in enumerate(ids)})


def write_labels(path, sample_ids, leaf_ids):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "leaf_id"])
        for s, l in zip(sample_ids, leaf_ids):
            w.writerow([int(s), int(l)])


def read_labels(path) -> dict[int, int]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"labels file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"sample_id", "leaf_id"} <= set(reader.fieldnames):
            raise FormatError(f"{path}: header must be 'sample_id,leaf_id'")
        try:
            return {int(r["sample_id"]): int(r["leaf_id"]) for r in reader}
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc


def export_dictionary(D: HierDictionary, path):
    """Write atoms as a vector file (id = column) plus a ``.json`` metadata sidecar."""
    path = Path(path)
    write_vectors(path, np.arange(D.n_atoms), D.atoms.T)
    meta = {
        "root": D.root,
        "atoms": [{"col": m.col, "kind": m.kind, "node": m.node, "parent": m.parent} for m in D.meta],
    }
    sidecar(path).write_text(json.dumps(meta) + "\n")


def import_dictionary(path) -> HierDictionary:
    path = Path(path)
    ids, M = read_vectors(path)
    if not np.array_equal(ids, np.arange(len(ids))):
        raise FormatError(f"{path}: atom columns must be stored in order 0..k-1")
    try:
        meta = json.loads(sidecar(path).read_text())
    except FileNotFoundError as exc:
        raise FormatError(f"dictionary sidecar missing: {sidecar(path)}") from exc
    return dictionary_from_parts(M.T, meta["atoms"], int(meta.get("root", -1)))


def sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating,)):
        return _clean(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def write_json(path, obj):
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def write_rows_csv(path, rows: list[dict], columns: list[str] | None = None):
    columns = columns or (list(rows[0].keys()) if rows else [])
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(str(int(x)) for x in v)
    return v
