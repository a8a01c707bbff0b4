"""Run manifests: a machine-readable record tying outputs to their inputs.

Each subcommand writes one manifest naming the exact config (by hash), the
seed, and the SHA-256 of every input and output file. Manifests contain no
timestamps or host details, so re-running with identical config and inputs
reproduces them byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .exceptions import MissingInputError

MANIFEST_DIR = "manifests"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def file_sha256(path: str | Path) -> str:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"cannot hash missing file: {path}")
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_entry(workspace: Path, path: str | Path) -> dict:
    path = Path(path)
    try:
        rel = str(path.relative_to(workspace))
    except ValueError:
        rel = str(path)
    return {"path": rel, "sha256": file_sha256(path)}


def write_manifest(
    workspace: str | Path,
    subcommand: str,
    config: dict,
    seed: int,
    inputs: dict[str, str | Path],
    outputs: dict[str, str | Path],
) -> Path:
    """Hash all named files and write manifests/<subcommand>.manifest.json."""
    workspace = Path(workspace)
    body = {
        "subcommand": subcommand,
        "seed": seed,
        "config_sha256": config_hash(config),
        "inputs": {name: _hash_entry(workspace, p) for name, p in sorted(inputs.items())},
        "outputs": {name: _hash_entry(workspace, p) for name, p in sorted(outputs.items())},
    }
    out_path = workspace / MANIFEST_DIR / f"{subcommand}.manifest.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return out_path
