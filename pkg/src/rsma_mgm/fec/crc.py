"""CRC-8 over bit arrays.

Polynomial x^8 + x^2 + x + 1 (0x07, CRC-8/SMBUS), initial register 0x00,
no reflection, no output XOR.  Bits are processed MSB-first in array order
and the 8 parity bits are appended MSB-first.  The CRC of an empty message
is therefore all zeros.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CRC_POLY = 0x07
CRC_INIT = 0x00
CRC_BITS = 8


@njit(cache=True)
def _crc8_register(bits, poly, init):
    reg = init
    for i in range(bits.size):
        top = ((reg >> 7) & 1) ^ (bits[i] & 1)
        reg = (reg << 1) & 0xFF
        if top:
            reg ^= poly
    return reg


def crc8(bits) -> np.ndarray:
    bits = np.ascontiguousarray(bits, dtype=np.int8)
    reg = _crc8_register(bits, CRC_POLY, CRC_INIT)
    return np.array([(reg >> (7 - i)) & 1 for i in range(CRC_BITS)], dtype=np.int8)


def crc8_attach(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int8)
    return np.concatenate([bits, crc8(bits)])


def crc8_check(bits_with_crc) -> bool:
    """True when the trailing 8 bits are the CRC of the leading ones."""
    bits_with_crc = np.ascontiguousarray(bits_with_crc, dtype=np.int8)
    if bits_with_crc.size < CRC_BITS:
        return False
    # appending the CRC makes the whole word divisible by the generator
    return _crc8_register(bits_with_crc, CRC_POLY, CRC_INIT) == 0
