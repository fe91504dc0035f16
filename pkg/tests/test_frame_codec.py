import numpy as np
import pytest

from tactiletrace import frame_codec as fc
from tactiletrace.hexgrid import CellId, GridSpec


def random_raw_frame(rng) -> fc.RawFrame:
    return fc.RawFrame(
        adc=tuple(int(v) for v in rng.integers(0, 256, size=32)),
        seq=int(rng.integers(0, 1 << 16)),
        timestamp_ms=int(rng.integers(0, 1 << 32)),
    )


def test_roundtrip_random_frames():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        frame = random_raw_frame(rng)
        assert fc.decode(fc.encode(frame)) == frame


def test_frame_size():
    assert fc.FRAME_SIZE == 44
    frame = fc.RawFrame(adc=tuple(range(32)))
    assert len(fc.encode(frame)) == 44


def test_short_frame_rejected():
    with pytest.raises(fc.FrameLength):
        fc.decode(b"\x00" * 43)


def test_bad_magic_rejected():
    data = bytearray(fc.encode(fc.RawFrame(adc=tuple(range(32)))))
    data[0] ^= 0xFF
    data[-1] ^= 0xFF  # keep the checksum valid so the magic check is hit
    with pytest.raises(fc.BadMagic):
        fc.decode(bytes(data))


def test_bad_version_rejected():
    data = bytearray(fc.encode(fc.RawFrame(adc=tuple(range(32)))))
    data[4] = 7
    data[-1] ^= 7 ^ fc.VERSION
    with pytest.raises(fc.BadVersion):
        fc.decode(bytes(data))


def test_corrupt_payload_rejected():
    data = bytearray(fc.encode(fc.RawFrame(adc=tuple(range(32)))))
    data[20] ^= 0x40
    with pytest.raises(fc.BadChecksum):
        fc.decode(bytes(data))


def test_payload_slot_maps_to_code_pin():
    # index = code*4 + pin; payload slot 13 must land on (code 3, pin 1)
    adc = [0] * 32
    adc[13] = 200
    decoded = fc.decode(fc.encode(fc.RawFrame(adc=tuple(adc))))
    assert decoded.adc[3 * 4 + 1] == 200


def test_complement_all_zero():
    frame = fc.complement(fc.RawFrame(adc=(0,) * 32))
    assert frame.values == (255,) * 32


def test_complement_all_max():
    frame = fc.complement(fc.RawFrame(adc=(255,) * 32))
    assert frame.values == (0,) * 32


def test_complement_addresses_one_cell():
    adc = [0] * 32
    adc[5] = 100  # code 1, pin 1
    frame = fc.complement(fc.RawFrame(adc=tuple(adc)))
    spec = GridSpec()
    idx = spec.index_of(CellId(1, 1))
    assert frame.values[idx] == 155
    assert all(v == 255 for i, v in enumerate(frame.values) if i != idx)


def test_complement_is_involution():
    rng = np.random.default_rng(2)
    for _ in range(50):
        raw = random_raw_frame(rng)
        assert fc.uncomplement(fc.complement(raw)) == raw


def test_complement_requires_device_layout():
    with pytest.raises(ValueError):
        fc.complement(fc.RawFrame(adc=(0,) * 32), GridSpec(rows=4, cols=8))


def test_log_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    frames = [random_raw_frame(rng) for _ in range(3)]
    # make timestamps non-decreasing so no warning fires
    frames = [
        fc.RawFrame(adc=f.adc, seq=i, timestamp_ms=i * 18) for i, f in enumerate(frames)
    ]
    path = tmp_path / "frames.tfl"
    assert fc.write_log(path, frames) == 3
    assert path.stat().st_size == 132
    assert fc.read_log(path) == frames


def test_log_roundtrip_1000(tmp_path):
    rng = np.random.default_rng(4)
    frames = [
        fc.RawFrame(adc=random_raw_frame(rng).adc, seq=i & 0xFFFF, timestamp_ms=i * 18)
        for i in range(1000)
    ]
    path = tmp_path / "big.tfl"
    fc.write_log(path, frames)
    assert fc.read_log(path) == frames


def test_truncated_log_rejected(tmp_path):
    path = tmp_path / "frames.tfl"
    fc.write_log(path, [fc.RawFrame(adc=tuple(range(32)))])
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(fc.TruncatedLog):
        fc.read_log(path)


def test_non_monotonic_timestamps_warn(tmp_path):
    frames = [
        fc.RawFrame(adc=(0,) * 32, seq=0, timestamp_ms=100),
        fc.RawFrame(adc=(0,) * 32, seq=1, timestamp_ms=50),
    ]
    path = tmp_path / "frames.tfl"
    fc.write_log(path, frames)
    with pytest.warns(fc.NonMonotonicTime):
        assert fc.read_log(path) == frames


def test_jsonl_export(tmp_path):
    import json

    frames = [fc.Frame(values=tuple(range(32)), seq=7, timestamp_ms=126)]
    path = tmp_path / "frames.jsonl"
    assert fc.write_jsonl(path, frames) == 1
    row = json.loads(path.read_text().splitlines()[0])
    assert row == {"seq": 7, "timestamp_ms": 126, "values": list(range(32))}
