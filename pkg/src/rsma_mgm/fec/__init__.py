"""CRC-aided polar coding with successive-cancellation list decoding."""

from .crc import CRC_BITS, CRC_INIT, CRC_POLY, crc8, crc8_attach, crc8_check
from .polar import (
    PolarCodeSpec,
    construct,
    construct_for_payload,
    decode_sc,
    decode_scl,
    design_snr_for_rate,
    encode,
    polar_transform,
    rate_match,
    rate_recover,
)
from .vectors import TestVector, check_vectors, format_vectors, parse_vectors, read_vectors, write_vectors

__all__ = [
    "CRC_BITS", "CRC_INIT", "CRC_POLY", "crc8", "crc8_attach", "crc8_check",
    "PolarCodeSpec", "construct", "construct_for_payload", "decode_sc", "decode_scl",
    "design_snr_for_rate", "encode", "polar_transform", "rate_match", "rate_recover",
    "TestVector", "check_vectors", "format_vectors", "parse_vectors", "read_vectors", "write_vectors",
]
