"""Checkpoint files: named float64 arrays plus a JSON metadata blob,
stored together in one uncompressed .npz so round-trips are bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..exceptions import MissingInputError

FORMAT_VERSION = 1
_META_KEY = "__meta__"


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Write arrays + metadata. `meta` must be JSON-serializable; keys in
    `arrays` must not collide with the reserved metadata entry."""
    if _META_KEY in arrays:
        raise ValueError(f"array name {_META_KEY!r} is reserved")
    full_meta = {"format_version": FORMAT_VERSION, **meta}
    blob = json.dumps(full_meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = dict(arrays)
    payload[_META_KEY] = np.frombuffer(blob, dtype=np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **payload)
    # np.savez appends .npz when missing; keep the caller's exact path.
    written = path if path.suffix == ".npz" else path.with_name(path.name + ".npz")
    if written != path:
        written.replace(path)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"checkpoint not found: {path}")
    with np.load(path) as data:
        if _META_KEY not in data:
            raise ValueError(f"{path} is not a checkpoint (missing metadata entry)")
        meta = json.loads(bytes(data[_META_KEY].tobytes()).decode("utf-8"))
        version = meta.pop("format_version", None)
        if version != FORMAT_VERSION:
            raise ValueError(
                f"unsupported checkpoint version {version!r} in {path} "
                f"(expected {FORMAT_VERSION})"
            )
        arrays = {k: data[k].copy() for k in data.files if k != _META_KEY}
    return arrays, meta
