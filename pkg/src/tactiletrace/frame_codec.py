"""Binary frame format for one 32-cell readout and file-based frame logs.

One wire frame is 44 octets:

    0..3   magic "TFRM"
    4      version (1)
    5..6   sequence counter, uint16 little-endian, wraps at 2^16
    7..10  timestamp, ms, uint32 little-endian
    11..42 32 raw ADC samples, one octet each, index = code*4 + pin
    43     checksum, XOR of octets 0..42

Raw ADC samples rise when IR is blocked.  Downstream code works in the
reported convention instead: value = 255 - raw, so high transmission reads
high.  A frame log (``.tfl``) is a plain concatenation of wire frames.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .hexgrid import ANALOG_PINS, DEMUX_CODES, GridSpec

MAGIC = b"TFRM"
VERSION = 1
N_CELLS = DEMUX_CODES * ANALOG_PINS
FRAME_SIZE = len(MAGIC) + 1 + 2 + 4 + N_CELLS + 1  # 44

_HEADER = struct.Struct("<4sBHI")


class FrameLength(ValueError):
    """Wire frame is not exactly 44 octets."""


class BadMagic(ValueError):
    pass


class BadVersion(ValueError):
    pass


class BadChecksum(ValueError):
    pass


class TruncatedLog(ValueError):
    """Log file ends in a partial frame."""


class NonMonotonicTime(UserWarning):
    """Timestamps in a log went backwards."""


@dataclass(frozen=True)
class RawFrame:
    """One readout in wire order (raw ADC, high = blocked)."""

    adc: tuple[int, ...]
    seq: int = 0
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        if len(self.adc) != N_CELLS:
            raise ValueError(f"expected {N_CELLS} samples, got {len(self.adc)}")


@dataclass(frozen=True)
class Frame:
    """One readout in the reported convention (high = high transmission).

    ``values`` is indexed linearly, row*cols + col.  Wire frames always
    carry 32 values; synthetic frames for reduced test grids may be
    shorter.
    """

    values: tuple[int, ...]
    seq: int = 0
    timestamp_ms: int = 0


def encode(frame: RawFrame) -> bytes:
    body = _HEADER.pack(MAGIC, VERSION, frame.seq & 0xFFFF, frame.timestamp_ms & 0xFFFFFFFF)
    body += bytes(frame.adc)
    checksum = 0
    for b in body:
        checksum ^= b
    return body + bytes([checksum])


def decode(data: bytes) -> RawFrame:
    if len(data) != FRAME_SIZE:
        raise FrameLength(f"frame must be {FRAME_SIZE} octets, got {len(data)}")
    checksum = 0
    for b in data[:-1]:
        checksum ^= b
    if checksum != data[-1]:
        raise BadChecksum(f"checksum {data[-1]:#04x}, computed {checksum:#04x}")
    magic, version, seq, timestamp_ms = _HEADER.unpack(data[: _HEADER.size])
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    adc = tuple(data[_HEADER.size : _HEADER.size + N_CELLS])
    return RawFrame(adc=adc, seq=seq, timestamp_ms=timestamp_ms)


def _wire_to_cell_index(spec: GridSpec) -> list[int]:
    # Wire index code*4 + pin maps to cell (row=code, col=pin); only the
    # 8x4 layout can hold the full address space.
    if spec.rows != DEMUX_CODES or spec.cols != ANALOG_PINS:
        raise ValueError(f"wire frames require an {DEMUX_CODES}x{ANALOG_PINS} grid")
    return [code * spec.cols + pin for code in range(DEMUX_CODES) for pin in range(ANALOG_PINS)]


def complement(raw: RawFrame, spec: GridSpec | None = None) -> Frame:
    """Convert a raw readout to reported values, value = 255 - raw."""
    if spec is None:
        spec = GridSpec()
    order = _wire_to_cell_index(spec)
    values = [0] * N_CELLS
    for wire_idx, cell_idx in enumerate(order):
        values[cell_idx] = 255 - raw.adc[wire_idx]
    return Frame(values=tuple(values), seq=raw.seq, timestamp_ms=raw.timestamp_ms)


def uncomplement(frame: Frame, spec: GridSpec | None = None) -> RawFrame:
    """Inverse of :func:`complement`."""
    if spec is None:
        spec = GridSpec()
    order = _wire_to_cell_index(spec)
    adc = [0] * N_CELLS
    for wire_idx, cell_idx in enumerate(order):
        adc[wire_idx] = 255 - frame.values[cell_idx]
    return RawFrame(adc=tuple(adc), seq=frame.seq, timestamp_ms=frame.timestamp_ms)


def write_log(path: str | Path, frames: Iterable[RawFrame]) -> int:
    """Write frames as a .tfl log; returns the number written."""
    count = 0
    with open(path, "wb") as fh:
        for frame in frames:
            fh.write(encode(frame))
            count += 1
    return count


def read_log(path: str | Path) -> list[RawFrame]:
    """Read a .tfl log.

    Raises TruncatedLog on a trailing partial frame and warns with
    NonMonotonicTime if timestamps go backwards.
    """
    data = Path(path).read_bytes()
    if len(data) % FRAME_SIZE:
        raise TruncatedLog(
            f"{len(data)} octets is not a multiple of the {FRAME_SIZE}-octet frame size"
        )
    frames = [decode(data[i : i + FRAME_SIZE]) for i in range(0, len(data), FRAME_SIZE)]
    for prev, cur in zip(frames, frames[1:]):
        if cur.timestamp_ms < prev.timestamp_ms:
            warnings.warn(
                f"timestamp went backwards at seq {cur.seq}"
                f" ({prev.timestamp_ms} -> {cur.timestamp_ms})",
                NonMonotonicTime,
                stacklevel=2,
            )
            break
    return frames


def frame_to_dict(frame: Frame) -> dict:
    return {
        "seq": frame.seq,
        "timestamp_ms": frame.timestamp_ms,
        "values": list(frame.values),
    }


def write_jsonl(path: str | Path, frames: Iterable[Frame]) -> int:
    """Export reported frames as JSONL, one object per frame."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(json.dumps(frame_to_dict(frame)) + "\n")
            count += 1
    return count
