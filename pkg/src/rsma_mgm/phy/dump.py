"""Frame dumps: raw complex samples plus a text header for replay.

The sample file holds little-endian float32 (re, im) pairs, antenna after
antenna.  The sidecar ``<name>.hdr`` is ``key: value`` text.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np

from ..allocation import McsTriple
from .frame import DEFAULT_FRAME, FrameConfig

DUMP_FORMAT = "rsma-mgm-iq/1"
_DTYPE = np.dtype("<f4")


def config_hash(frame: FrameConfig = DEFAULT_FRAME) -> str:
    text = json.dumps(asdict(frame), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".hdr")


def write_dump(path, samples: np.ndarray, mcs: Optional[McsTriple] = None, seeds: Optional[dict] = None,
               frame: FrameConfig = DEFAULT_FRAME, extra: Optional[dict] = None) -> Path:
    """Write ``samples`` (n_antennas, n_samples) and its header; returns the sample path."""
    x = np.atleast_2d(np.asarray(samples, dtype=complex))
    path = Path(path)
    pairs = np.empty(x.shape + (2,), dtype=_DTYPE)
    pairs[..., 0] = x.real
    pairs[..., 1] = x.imag
    path.write_bytes(pairs.tobytes())
    fields = {
        "format": DUMP_FORMAT,
        "antennas": x.shape[0],
        "samples": x.shape[1],
        "sample_format": "float32-le-iq",
        "config_hash": config_hash(frame),
        "mcs": "-" if mcs is None else mcs.label(),
        "seeds": json.dumps(seeds or {}, sort_keys=True),
    }
    fields.update(extra or {})
    header_path(path).write_text("".join(f"{k}: {v}\n" for k, v in fields.items()))
    return path


def read_header(path) -> dict:
    out = {}
    for line in header_path(path).read_text().splitlines():
        if line.strip():
            key, _, value = line.partition(":")
            out[key.strip()] = value.strip()
    return out


def read_dump(path) -> tuple[np.ndarray, dict]:
    """Samples as complex64 (n_antennas, n_samples) and the parsed header."""
    hdr = read_header(path)
    if hdr.get("format") != DUMP_FORMAT:
        raise ValueError(f"{path}: unknown dump format {hdr.get('format')!r}")
    n_ant, n = int(hdr["antennas"]), int(hdr["samples"])
    raw = np.frombuffer(Path(path).read_bytes(), dtype=_DTYPE)
    if raw.size != 2 * n_ant * n:
        raise ValueError(f"{path}: {raw.size // 2} samples on disk, header says {n_ant * n}")
    pairs = raw.reshape(n_ant, n, 2)
    return (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex64), hdr
