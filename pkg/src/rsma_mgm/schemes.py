"""Multiple-access schemes and the stream roles they activate."""

from __future__ import annotations

import enum


class Scheme(str, enum.Enum):
    RSMA = "RSMA"
    SDMA = "SDMA"
    NOMA = "NOMA"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown scheme {value!r}; expected one of RSMA, SDMA, NOMA") from None


STREAMS = ("common", "private1", "private2")


def active_streams(scheme: Scheme, noma_common_group: int = 2) -> tuple[bool, bool, bool]:
    """Which of (common, private1, private2) carry data under ``scheme``.

    For NOMA the group whose whole message rides on the common stream has
    no private stream.
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.RSMA:
        return (True, True, True)
    if scheme is Scheme.SDMA:
        return (False, True, True)
    if noma_common_group not in (1, 2):
        raise ValueError("noma_common_group must be 1 or 2")
    return (True, noma_common_group != 1, noma_common_group != 2)
