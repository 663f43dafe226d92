"""Minimal 8-bit PNG and binary PGM/PPM codec.

Only what the experiments need: 8-bit grayscale or RGB, non-interlaced,
no alpha and no palette. Arrays are uint8 with shape (height, width, channels).
"""

import struct
import zlib

import numpy as np

from .errors import CorruptData, UnsupportedFormat

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_COLOR_CHANNELS = {0: 1, 2: 3}


def _chunks(data):
    pos = len(PNG_SIGNATURE)
    while pos < len(data):
        if pos + 8 > len(data):
            raise CorruptData("truncated chunk header")
        (length,) = struct.unpack(">L", data[pos:pos + 4])
        ctype = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + length]
        crc_end = pos + 12 + length
        if crc_end > len(data):
            raise CorruptData("truncated %r chunk" % ctype)
        (crc,) = struct.unpack(">L", data[pos + 8 + length:crc_end])
        if zlib.crc32(body, zlib.crc32(ctype)) & 0xFFFFFFFF != crc:
            raise CorruptData("CRC mismatch in %r chunk" % ctype)
        yield ctype, body
        pos = crc_end
        if ctype == b"IEND":
            return
    raise CorruptData("missing IEND chunk")


def _paeth(a, b, c):
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(raw, height, stride, bpp):
    if len(raw) != height * (stride + 1):
        raise CorruptData("image data has %d bytes, expected %d" % (len(raw), height * (stride + 1)))
    out = np.zeros((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.int64)
    for y in range(height):
        start = y * (stride + 1)
        ftype = raw[start]
        line = np.frombuffer(raw, dtype=np.uint8, count=stride, offset=start + 1).astype(np.int64)
        if ftype == 0:
            cur = line
        elif ftype == 2:
            cur = (line + prev) & 0xFF
        elif ftype in (1, 3, 4):
            cur = line.tolist()
            up = prev.tolist()
            for x in range(stride):
                left = cur[x - bpp] if x >= bpp else 0
                if ftype == 1:
                    pred = left
                elif ftype == 3:
                    pred = (left + up[x]) >> 1
                else:
                    upleft = up[x - bpp] if x >= bpp else 0
                    pred = _paeth(left, up[x], upleft)
                cur[x] = (cur[x] + pred) & 0xFF
            cur = np.array(cur, dtype=np.int64)
        else:
            raise CorruptData("unknown filter type %d" % ftype)
        out[y] = cur
        prev = cur
    return out


def decode_png(data):
    if not data.startswith(PNG_SIGNATURE):
        raise CorruptData("not a PNG stream")
    header = None
    idat = []
    for ctype, body in _chunks(data):
        if ctype == b"IHDR":
            if len(body) != 13:
                raise CorruptData("bad IHDR length")
            header = struct.unpack(">2L5B", body)
        elif ctype == b"IDAT":
            idat.append(body)
    if header is None:
        raise CorruptData("missing IHDR chunk")
    width, height, depth, color, compression, filt, interlace = header
    if color not in _COLOR_CHANNELS:
        raise UnsupportedFormat("PNG color type %d (palette/alpha) not supported" % color)
    if depth != 8:
        raise UnsupportedFormat("PNG bit depth %d not supported" % depth)
    if interlace != 0:
        raise UnsupportedFormat("interlaced PNG not supported")
    if compression != 0 or filt != 0:
        raise CorruptData("unknown compression or filter method")
    if width == 0 or height == 0:
        raise CorruptData("empty image")
    channels = _COLOR_CHANNELS[color]
    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise CorruptData("bad zlib stream: %s" % exc) from None
    pixels = _unfilter(raw, height, width * channels, channels)
    return pixels.reshape(height, width, channels)


def encode_png(pixels):
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    height, width, channels = pixels.shape
    color = {1: 0, 3: 2}[channels]
    rows = pixels.reshape(height, width * channels)
    raw = np.zeros((height, width * channels + 1), dtype=np.uint8)
    raw[:, 1:] = rows
    out = [PNG_SIGNATURE]
    for ctype, body in (
        (b"IHDR", struct.pack(">2L5B", width, height, 8, color, 0, 0, 0)),
        (b"IDAT", zlib.compress(raw.tobytes(), 9)),
        (b"IEND", b""),
    ):
        out.append(struct.pack(">L", len(body)))
        out.append(ctype)
        out.append(body)
        out.append(struct.pack(">L", zlib.crc32(body, zlib.crc32(ctype)) & 0xFFFFFFFF))
    return b"".join(out)


def _pnm_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 2
    while len(tokens) < count:
        if pos >= len(data):
            raise CorruptData("truncated PNM header")
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pnm(data):
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise UnsupportedFormat("only binary PGM (P5) and PPM (P6) are supported")
    channels = 1 if magic == b"P5" else 3
    tokens, offset = _pnm_tokens(data, 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise CorruptData("non-numeric PNM header") from None
    if maxval != 255:
        raise UnsupportedFormat("PNM maxval %d not supported (need 255)" % maxval)
    if width <= 0 or height <= 0:
        raise CorruptData("empty image")
    n = width * height * channels
    body = data[offset:offset + n]
    if len(body) != n:
        raise CorruptData("PNM raster has %d bytes, expected %d" % (len(body), n))
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels).copy()


def encode_pnm(pixels):
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    height, width, channels = pixels.shape
    magic = {1: b"P5", 3: b"P6"}[channels]
    return magic + b"\n%d %d\n255\n" % (width, height) + pixels.tobytes()


def decode(data):
    if data.startswith(PNG_SIGNATURE):
        return decode_png(data)
    if data[:1] == b"P" and data[1:2].isdigit():
        return decode_pnm(data)
    raise UnsupportedFormat("unrecognized image format")
