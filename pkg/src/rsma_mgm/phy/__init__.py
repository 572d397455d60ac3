"""OFDM physical layer: frame layout, modulation, transmitter, channel and receiver."""

from .channel import RxObservation, apply_channel
from .dump import read_dump, write_dump
from .frame import DEFAULT_FRAME, FrameConfig
from .modulation import demap_llr, modulate
from .receiver import ReceiverConfig, RxResult, effective_noise_variance, receive_user, stage1_csit
from .transmitter import StreamPayload, TxFrame, build_frame, build_stage1, build_stage2, make_payload

__all__ = [
    "DEFAULT_FRAME", "FrameConfig", "ReceiverConfig", "RxObservation", "RxResult", "StreamPayload", "TxFrame",
    "apply_channel", "build_frame", "build_stage1", "build_stage2", "demap_llr", "effective_noise_variance",
    "make_payload", "modulate", "read_dump", "receive_user", "stage1_csit", "write_dump",
]
