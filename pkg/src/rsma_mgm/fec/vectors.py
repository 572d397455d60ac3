"""Plain-text encoder test vectors for cross-implementation checks.

One vector per line, whitespace separated::

    n k design_param msg_hex codeword_hex

Bit strings are packed MSB first and zero-padded to a whole number of hex
digits; ``#`` starts a comment line.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .polar import construct, encode


@dataclass(frozen=True)
class TestVector:
    n: int
    k: int
    design_param: float
    msg: np.ndarray
    codeword: np.ndarray

    __test__ = False        # not a pytest class


def bits_to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    pad = (-bits.size) % 4
    b = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    if b.size == 0:
        return "-"
    nibbles = b.reshape(-1, 4) @ np.array([8, 4, 2, 1])
    return "".join("0123456789abcdef"[v] for v in nibbles)


def hex_to_bits(text: str, n_bits: int) -> np.ndarray:
    if text == "-":
        text = ""
    vals = [int(c, 16) for c in text]
    bits = np.array([(v >> (3 - i)) & 1 for v in vals for i in range(4)], dtype=np.int8)
    if bits.size < n_bits or np.any(bits[n_bits:]):
        raise ValueError(f"hex string does not hold exactly {n_bits} bits")
    return bits[:n_bits]


def make_vector(n: int, k: int, design_param: float, rng: np.random.Generator) -> TestVector:
    spec = construct(n, k, design_param)
    msg = rng.integers(0, 2, k, dtype=np.int8)
    return TestVector(n, k, float(design_param), msg, encode(spec, msg))


def format_vectors(vectors: Iterable[TestVector]) -> str:
    lines = ["# n k design_param msg_hex codeword_hex"]
    for v in vectors:
        lines.append(f"{v.n} {v.k} {v.design_param!r} {bits_to_hex(v.msg)} {bits_to_hex(v.codeword)}")
    return "\n".join(lines) + "\n"


def parse_vectors(text: str) -> list[TestVector]:
    out = []
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"line {no}: expected 5 fields, got {len(parts)}")
        n, k, dp = int(parts[0]), int(parts[1]), float(parts[2])
        out.append(TestVector(n, k, dp, hex_to_bits(parts[3], k), hex_to_bits(parts[4], n)))
    return out


def check_vectors(vectors: Iterable[TestVector]) -> list[int]:
    """Indices of vectors whose codeword differs from this encoder's output."""
    bad = []
    for i, v in enumerate(vectors):
        if not np.array_equal(encode(construct(v.n, v.k, v.design_param), v.msg), v.codeword):
            bad.append(i)
    return bad


def write_vectors(path, vectors: Iterable[TestVector]) -> Path:
    path = Path(path)
    path.write_text(format_vectors(vectors))
    return path


def read_vectors(path) -> list[TestVector]:
    return parse_vectors(Path(path).read_text())
