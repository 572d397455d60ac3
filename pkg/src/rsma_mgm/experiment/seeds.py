"""Counter-based random streams keyed by (root seed, case, run, purpose).

Every stream is an independent Philox generator, so any run can be
regenerated in isolation and every scheme of a case sees the same noise.
"""

from __future__ import annotations

import zlib

import numpy as np

PURPOSES = ("channel", "sounding", "noise", "payload", "solver")


def _purpose_code(purpose: str) -> int:
    if purpose not in PURPOSES:
        raise ValueError(f"unknown random-stream purpose {purpose!r}")
    return zlib.crc32(purpose.encode())


def seed_sequence(root: int, case: int, run: int, purpose: str, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(root) & (2 ** 64 - 1), int(case), int(run), _purpose_code(purpose),
                                   int(stream)])


def rng_for(root: int, case: int, run: int, purpose: str, stream: int = 0) -> np.random.Generator:
    """Generator for one (case, run, purpose); ``stream`` separates e.g. the three payloads."""
    return np.random.Generator(np.random.Philox(seed_sequence(root, case, run, purpose, stream)))
