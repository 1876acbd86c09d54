"""Single-file array container: JSON header line + raw little-endian float32 payloads.

Used for the body-model fixture, network checkpoints, and Gaussian-set
export. The header is one UTF-8 JSON line describing array names, shapes
and byte offsets (relative to the end of the header line); the payload is
the concatenation of all arrays in header order, each stored as
little-endian float32 in C order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_TAG = "ihk-arrays/1"


def save_arrays(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named arrays to `path`. Arrays are cast to float32."""
    entries = []
    payloads = []
    offset = 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(np.asarray(arr), dtype="<f4")
        entries.append(
            {
                "name": name,
                "shape": list(data.shape),
                "dtype": "float32",
                "offset": offset,
                "nbytes": data.nbytes,
            }
        )
        payloads.append(data.tobytes())
        offset += data.nbytes
    header = {"format": FORMAT_TAG, "meta": meta or {}, "arrays": entries}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in payloads:
            fh.write(blob)


def load_arrays(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a container written by `save_arrays`. Returns (arrays, meta)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: not an array container ({exc})") from exc
        if header.get("format") != FORMAT_TAG:
            raise ValueError(f"{path}: unsupported container format {header.get('format')!r}")
        body = fh.read()
    arrays = {}
    for entry in header["arrays"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        if start + nbytes > len(body):
            raise ValueError(f"{path}: truncated payload for array {entry['name']!r}")
        flat = np.frombuffer(body[start : start + nbytes], dtype="<f4")
        arrays[entry["name"]] = flat.reshape(entry["shape"]).copy()
    return arrays, header.get("meta", {})
