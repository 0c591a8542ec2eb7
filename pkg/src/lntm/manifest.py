"""Reproducibility manifests written alongside every command's outputs.

A manifest records the tool version, input digests, parameters and output
digests; two runs with identical manifests produced byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

TOOL_NAME = "lntm"


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    manifest_path: str | Path,
    command: str,
    inputs: Sequence[str | Path],
    parameters: dict,
    outputs: Sequence[str | Path],
) -> None:
    from . import __version__

    doc = {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "inputs": [
            {"path": Path(p).name, "sha256": sha256_file(p)} for p in inputs
        ],
        "parameters": parameters,
        "outputs": [
            {"path": Path(p).name, "sha256": sha256_file(p)} for p in outputs
        ],
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
