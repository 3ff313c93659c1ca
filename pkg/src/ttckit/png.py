"""Minimal deterministic PNG reader/writer for 8-bit RGB frames.

Rewriting the same array always yields the same bytes (fixed zlib level,
no ancillary chunks), which keeps regenerated datasets byte-identical.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import ManifestError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def encode_png(image: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as a PNG byte string."""
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ManifestError(f"expected (H, W, 3) uint8 image, got {image.shape} {image.dtype}")
    h, w = image.shape[:2]
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    raw = bytearray()
    for row in image:
        raw.append(0)  # filter type: None
        raw.extend(row.tobytes())
    idat = zlib.compress(bytes(raw), 6)
    return _SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def _paeth(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    p = a.astype(np.int32) + b.astype(np.int32) - c.astype(np.int32)
    pa, pb, pc = np.abs(p - a), np.abs(p - b), np.abs(p - c)
    out = np.where((pa <= pb) & (pa <= pc), a, np.where(pb <= pc, b, c))
    return out.astype(np.uint8)


def decode_png(data: bytes) -> np.ndarray:
    """Decode an 8-bit RGB PNG into an (H, W, 3) uint8 array."""
    if data[:8] != _SIGNATURE:
        raise ManifestError("not a PNG file")
    pos = 8
    width = height = None
    idat = bytearray()
    while pos < len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        tag = data[pos + 4 : pos + 8]
        payload = data[pos + 8 : pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            width, height, depth, color, comp, filt, interlace = struct.unpack(
                ">IIBBBBB", payload
            )
            if depth != 8 or color != 2 or comp != 0 or filt != 0 or interlace != 0:
                raise ManifestError("only 8-bit non-interlaced RGB PNGs are supported")
        elif tag == b"IDAT":
            idat.extend(payload)
        elif tag == b"IEND":
            break
    if width is None:
        raise ManifestError("PNG missing IHDR")
    raw = zlib.decompress(bytes(idat))
    stride = width * 3
    if len(raw) != height * (stride + 1):
        raise ManifestError("PNG payload size mismatch")
    out = np.zeros((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for i in range(height):
        ftype = raw[i * (stride + 1)]
        row = np.frombuffer(
            raw, dtype=np.uint8, count=stride, offset=i * (stride + 1) + 1
        ).copy()
        if ftype == 0:
            pass
        elif ftype == 2:  # Up
            row += prev
        elif ftype in (1, 3, 4):  # Sub, Average, Paeth need per-pixel recurrence
            bpp = 3
            left = np.zeros(bpp, dtype=np.uint8)
            for x in range(0, stride, bpp):
                cur = row[x : x + bpp]
                up = prev[x : x + bpp]
                ul = prev[x - bpp : x] if x >= bpp else np.zeros(bpp, dtype=np.uint8)
                if ftype == 1:
                    cur += left
                elif ftype == 3:
                    cur += ((left.astype(np.int32) + up.astype(np.int32)) // 2).astype(
                        np.uint8
                    )
                else:
                    cur += _paeth(left, up, ul)
                left = cur
        else:
            raise ManifestError(f"unsupported PNG filter {ftype}")
        out[i] = row
        prev = out[i]
    return out.reshape(height, width, 3)


def write_png(path, image: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(image))


def read_png(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_png(fh.read())
