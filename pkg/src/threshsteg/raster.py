"""Lossless BMP/PNG input and output plus RGB plane separation.

Rasters are stored row-major with a top-left origin: ``pixels[i, j]`` is the
(r, g, b) triple at row ``i``, column ``j``.  A channel is a plain 2-D
``uint8`` array of shape ``(height, width)``.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionError, ImageFormatError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
BMP_FILE_HEADER = struct.Struct("<2sIHHI")
BMP_INFO_HEADER = struct.Struct("<IiiHHIIiiII")


class ChannelId(IntEnum):
    R = 0
    G = 1
    B = 2

    @classmethod
    def parse(cls, value: "str | int | ChannelId") -> "ChannelId":
        if isinstance(value, ChannelId):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown channel {value!r}; expected r, g or b") from None
        return cls(int(value))


@dataclass(eq=False)
class RgbRaster:
    """An 8-bit RGB image.

    ``alpha`` carries a PNG alpha plane through a load/save round trip; it is
    never read by any embedding code.
    """

    pixels: np.ndarray
    alpha: np.ndarray | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DimensionError(f"pixels must have shape (h, w, 3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionError("raster must be at least 1x1")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValueError("pixel intensities must lie in 0..255")
            px = px.astype(np.uint8)
        self.pixels = px
        if self.alpha is not None:
            a = np.asarray(self.alpha, dtype=np.uint8)
            if a.shape != px.shape[:2]:
                raise DimensionError("alpha plane must match the raster dimensions")
            self.alpha = a

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, RgbRaster):
            return NotImplemented
        if not np.array_equal(self.pixels, other.pixels):
            return False
        if (self.alpha is None) != (other.alpha is None):
            return False
        return self.alpha is None or np.array_equal(self.alpha, other.alpha)

    def copy(self) -> "RgbRaster":
        alpha = None if self.alpha is None else self.alpha.copy()
        return RgbRaster(self.pixels.copy(), alpha)


def split_channels(raster: RgbRaster) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    px = raster.pixels
    return px[:, :, 0].copy(), px[:, :, 1].copy(), px[:, :, 2].copy()


def merge_channels(r, g, b, alpha: np.ndarray | None = None) -> RgbRaster:
    planes = [np.asarray(c) for c in (r, g, b)]
    if planes[0].ndim != 2 or any(p.shape != planes[0].shape for p in planes):
        raise DimensionError(
            "channels must be 2-D and share dimensions: "
            + ", ".join(str(p.shape) for p in planes)
        )
    return RgbRaster(np.stack(planes, axis=-1).astype(np.uint8), alpha)


def get_channel(raster: RgbRaster, channel: ChannelId) -> np.ndarray:
    return raster.pixels[:, :, int(channel)].copy()


def replace_channel(raster: RgbRaster, channel: ChannelId, values: np.ndarray) -> RgbRaster:
    planes = list(split_channels(raster))
    planes[int(channel)] = values
    alpha = None if raster.alpha is None else raster.alpha.copy()
    return merge_channels(*planes, alpha=alpha)


# --- BMP -------------------------------------------------------------------

def _decode_bmp(data: bytes) -> RgbRaster:
    if len(data) < BMP_FILE_HEADER.size + BMP_INFO_HEADER.size:
        raise ImageFormatError("truncated BMP header")
    magic, _size, _r1, _r2, offset = BMP_FILE_HEADER.unpack_from(data, 0)
    if magic != b"BM":
        raise ImageFormatError("not a BMP file")
    (hdr_size, width, height, planes, bpp, compression,
     _img_size, _xppm, _yppm, _clr_used, _clr_imp) = BMP_INFO_HEADER.unpack_from(data, 14)
    if hdr_size < 40:
        raise ImageFormatError(f"unsupported BMP header size {hdr_size}")
    if planes != 1 or bpp != 24 or compression != 0:
        raise ImageFormatError(
            f"only 24-bit uncompressed BMP is supported (bpp={bpp}, compression={compression})"
        )
    top_down = height < 0
    height = abs(height)
    if width <= 0 or height == 0:
        raise ImageFormatError("zero-dimension BMP")
    stride = (width * 3 + 3) & ~3
    end = offset + stride * height
    if offset < 14 + hdr_size or end > len(data):
        raise ImageFormatError("truncated BMP pixel array")
    rows = np.frombuffer(data, dtype=np.uint8, count=stride * height, offset=offset)
    rows = rows.reshape(height, stride)[:, : width * 3].reshape(height, width, 3)
    if not top_down:
        rows = rows[::-1]
    return RgbRaster(np.ascontiguousarray(rows[:, :, ::-1]))


def _encode_bmp(raster: RgbRaster) -> bytes:
    h, w = raster.height, raster.width
    stride = (w * 3 + 3) & ~3
    body = np.zeros((h, stride), dtype=np.uint8)
    body[:, : w * 3] = raster.pixels[::-1, :, ::-1].reshape(h, w * 3)
    offset = BMP_FILE_HEADER.size + BMP_INFO_HEADER.size
    header = BMP_FILE_HEADER.pack(b"BM", offset + body.size, 0, 0, offset)
    # 2835 px/m == 72 dpi
    info = BMP_INFO_HEADER.pack(40, w, h, 1, 24, 0, body.size, 2835, 2835, 0, 0)
    return header + info + body.tobytes()


# --- PNG -------------------------------------------------------------------

def _decode_png(data: bytes) -> RgbRaster:
    # IHDR must be the first chunk: length(4) type(4) w(4) h(4) depth(1) colour(1)
    if len(data) < 33 or data[12:16] != b"IHDR":
        raise ImageFormatError("truncated PNG header")
    width, height, depth, colour = struct.unpack(">IIBB", data[16:26])
    if width == 0 or height == 0:
        raise ImageFormatError("zero-dimension PNG")
    if depth != 8 or colour not in (2, 6):
        raise ImageFormatError(
            f"only 8-bit RGB/RGBA PNG is supported (bit depth {depth}, colour type {colour})"
        )
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            arr = np.asarray(im)
    except Exception as exc:  # Pillow raises a zoo of types for damaged files
        raise ImageFormatError(f"unreadable PNG: {exc}") from exc
    if arr.shape[:2] != (height, width):
        raise ImageFormatError("PNG decoded to unexpected dimensions")
    if colour == 6:
        return RgbRaster(arr[:, :, :3].copy(), arr[:, :, 3].copy())
    return RgbRaster(arr.copy())


def _encode_png(raster: RgbRaster) -> bytes:
    if raster.alpha is not None:
        arr = np.dstack([raster.pixels, raster.alpha])
        im = Image.fromarray(arr)
    else:
        im = Image.fromarray(raster.pixels)
    buf = io.BytesIO()
    im.save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


# --- public file API -------------------------------------------------------

def decode_image(data: bytes) -> RgbRaster:
    if data[:2] == b"BM":
        return _decode_bmp(data)
    if data[:8] == PNG_SIGNATURE:
        return _decode_png(data)
    if data[:3] == b"\xff\xd8\xff":
        raise ImageFormatError("JPEG is lossy and cannot carry an LSB payload; use BMP or PNG")
    raise ImageFormatError("unrecognised image format (expected BMP or PNG)")


def load_image(path) -> RgbRaster:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ImageFormatError(f"cannot read {path}: {exc}") from exc
    return decode_image(data)


def _format_for(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = path.suffix.lstrip(".") or "png"
    fmt = fmt.upper()
    if fmt not in ("BMP", "PNG"):
        raise ImageFormatError(f"unsupported output format {fmt!r}; expected BMP or PNG")
    return fmt


def encode_image(raster: RgbRaster, fmt: str) -> bytes:
    fmt = _format_for(Path(""), fmt)
    if fmt == "BMP":
        # BMP has no alpha plane; refuse rather than silently drop it
        if raster.alpha is not None:
            raise ImageFormatError("BMP output cannot carry an alpha plane; save as PNG")
        return _encode_bmp(raster)
    return _encode_png(raster)


def save_image(raster: RgbRaster, path, fmt: str | None = None) -> None:
    """Write ``raster`` losslessly; the format defaults to the file suffix."""
    path = Path(path)
    data = encode_image(raster, _format_for(path, fmt))
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise ImageFormatError(f"cannot write {path}: {exc}") from exc
