"""Matrix file I/O and run manifests.

Two on-disk formats are supported:

* CSV, comma separated, optionally starting with one header row
  (auto-detected: any non-numeric cell in the first row). Values are
  written with 17 significant digits so a write/read round trip preserves
  float64 exactly.
* raw binary: two little-endian uint64 dimensions followed by the row-major
  little-endian float64 entries.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from .exceptions import ParseError, ValidationError

_BINARY_HEADER_BYTES = 16


def _detect_format(path, fmt):
    if fmt is not None:
        if fmt not in ("csv", "binary"):
            raise ValidationError(f"format must be 'csv' or 'binary', got {fmt!r}")
        return fmt
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


def _parse_csv(path):
    text = Path(path).read_text()
    rows = []
    width = None
    header_skipped = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        try:
            values = [float(c) for c in cells]
        except ValueError as exc:
            if not rows and not header_skipped:
                header_skipped = True  # single optional header row
                continue
            bad = next(c for c in cells if not _is_float(c))
            raise ParseError(
                f"{path}: row {lineno}: non-numeric cell {bad!r}"
            ) from exc
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(
                f"{path}: row {lineno}: expected {width} columns, got {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def _is_float(cell):
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _parse_binary(path):
    raw = Path(path).read_bytes()
    if len(raw) < _BINARY_HEADER_BYTES:
        raise ParseError(
            f"{path}: truncated header, {len(raw)} bytes < {_BINARY_HEADER_BYTES}"
        )
    dims = np.frombuffer(raw[:_BINARY_HEADER_BYTES], dtype="<u8")
    rows, cols = int(dims[0]), int(dims[1])
    expected = _BINARY_HEADER_BYTES + rows * cols * 8
    if len(raw) != expected:
        raise ParseError(
            f"{path}: expected {expected} bytes for {rows}x{cols}, got {len(raw)} "
            f"(truncated at offset {len(raw)})"
        )
    data = np.frombuffer(raw[_BINARY_HEADER_BYTES:], dtype="<f8")
    return data.reshape(rows, cols).astype(np.float64)


def load_matrix(path, fmt=None):
    """Read a matrix from ``path``; format inferred from the suffix.

    ``.csv`` is parsed as CSV, anything else as raw binary; pass
    ``fmt="csv"``/``"binary"`` to override. Entries must be finite.
    """
    fmt = _detect_format(path, fmt)
    x = _parse_csv(path) if fmt == "csv" else _parse_binary(path)
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{path}: matrix contains non-finite entries")
    return x


def save_matrix(path, x, fmt=None):
    """Write a matrix to ``path`` in CSV or raw binary format."""
    fmt = _detect_format(path, fmt)
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [",".join(f"{v:.17g}" for v in row) for row in x]
        path.write_text("\n".join(lines) + "\n")
    else:
        header = np.asarray(x.shape, dtype="<u8").tobytes()
        path.write_bytes(header + x.astype("<f8").tobytes())


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, manifest):
    """Serialize a run manifest as stable (sorted-key) JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path):
    return json.loads(Path(path).read_text())
