"""Text checkpoints: JSON documents holding weight arrays as decimal strings."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

FORMAT_VERSION = 1


def encode_arrays(arrays: dict[str, np.ndarray]) -> dict:
    return {
        name: {"shape": list(a.shape), "data": [repr(float(x)) for x in np.ravel(a)]}
        for name, a in arrays.items()
    }


def decode_arrays(doc: dict) -> dict[str, np.ndarray]:
    out = {}
    for name, entry in doc.items():
        try:
            shape = tuple(int(s) for s in entry["shape"])
            data = np.array([float(x) for x in entry["data"]], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed weight array {name!r}: {exc}") from exc
        if data.size != int(np.prod(shape)):
            raise ConfigurationError(f"weight array {name!r}: {data.size} values for shape {shape}")
        out[name] = data.reshape(shape)
    return out


def write_document(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_document(path, kind: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"checkpoint not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{p}: not a valid checkpoint ({exc})") from exc
    if doc.get("version") != FORMAT_VERSION:
        raise ConfigurationError(f"{p}: unsupported checkpoint version {doc.get('version')!r}")
    if doc.get("kind") != kind:
        raise ConfigurationError(f"{p}: expected a {kind} checkpoint, found {doc.get('kind')!r}")
    return doc
