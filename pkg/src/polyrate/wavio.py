"""Minimal mono WAV reading/writing on top of the stdlib wave module.

Only integer PCM is handled (8/16/24/32-bit in, 16/24/32-bit out);
float WAV raises inside the stdlib parser. Samples are exchanged as
float64 scaled so full scale is 1.0.
"""

import wave

import numpy as np

__all__ = ["read_wav", "write_wav"]


def read_wav(path):
    """Read a mono PCM WAV file.

    Returns (signal, rate_hz) with signal as float64 in [-1, 1).
    """
    with wave.open(str(path), "rb") as w:
        channels = w.getnchannels()
        if channels != 1:
            raise ValueError(
                f"only mono WAV files are supported, got {channels} channels")
        width = w.getsampwidth()
        rate = w.getframerate()
        raw = w.readframes(w.getnframes())
    if width == 1:
        x = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
        x = (x - 128.0) / 128.0
    elif width == 2:
        x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 2.0 ** 15
    elif width == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v & 0x800000, v - 0x1000000, v)
        x = v.astype(np.float64) / 2.0 ** 23
    elif width == 4:
        x = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2.0 ** 31
    else:
        raise ValueError(f"unsupported sample width {width} bytes")
    return x, float(rate)


def write_wav(path, signal, rate_hz, width=3):
    """Write a mono PCM WAV file (width bytes per sample: 2, 3 or 4).

    Values outside [-1, 1) are clipped at the integer boundaries.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("signal must be 1-D")
    if width not in (2, 3, 4):
        raise ValueError("width must be 2, 3 or 4 bytes")
    full = 2 ** (8 * width - 1)
    v = np.clip(np.rint(x * full), -full, full - 1).astype(np.int64)
    if width == 2:
        data = v.astype("<i2").tobytes()
    elif width == 4:
        data = v.astype("<i4").tobytes()
    else:
        u = (v & 0xFFFFFF).astype(np.uint32)
        b = np.empty((u.size, 3), dtype=np.uint8)
        b[:, 0] = u & 0xFF
        b[:, 1] = (u >> 8) & 0xFF
        b[:, 2] = (u >> 16) & 0xFF
        data = b.tobytes()
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(width)
        w.setframerate(int(round(rate_hz)))
        w.writeframes(data)
