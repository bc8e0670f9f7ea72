"""Deterministic JSON writing shared by every artifact the package persists.

Floats are emitted with Python's shortest round-trip repr (the json default),
which parses back to the identical float64 bit pattern, so saved models and
manifests round-trip exactly and rerunning a command yields byte-identical
files. Keys are written in insertion order and files end with a newline.
"""

from __future__ import annotations

import hashlib
import json

__all__ = ["dump_json", "dumps_json", "sha256_of_json", "sha256_of_file"]


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(obj))


def sha256_of_json(obj) -> str:
    """Hash of the canonical (separator-free, sorted-key) JSON encoding."""
    canon = json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


def sha256_of_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
