"""Threshold-driven region selection and the shared-key file format.

Pairs are fixed, non-overlapping horizontal neighbours ``(row, 2j)`` and
``(row, 2j + 1)``.  A pair qualifies at threshold ``t`` when its intensity
difference is at least ``t`` and neither pixel is saturated (0 or 255).
Pair lists are ``(k, 2)`` integer arrays of ``(row, col)`` in raster order.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CapacityError, KeyChecksumError, KeyFormatError
from .lsbmr import padded_length
from .raster import ChannelId

KEY_MAGIC = b"STGK"
KEY_VERSION = 1
KEY_HEADER = struct.Struct("<4sBBBBIIQI")
KEY_PAIR = struct.Struct("<II")
KEY_CRC = struct.Struct("<I")


class PairLocus(NamedTuple):
    row: int
    col: int


def pair_views(channel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left and right members of every even-column pair, shape ``(h, w // 2)``."""
    channel = np.asarray(channel)
    half = channel.shape[1] // 2
    return channel[:, 0 : 2 * half : 2], channel[:, 1 : 2 * half : 2]


def eligible_pair_mask(channel: np.ndarray) -> np.ndarray:
    left, right = pair_views(channel)
    return (left > 0) & (left < 255) & (right > 0) & (right < 255)


def pair_differences(channel: np.ndarray) -> np.ndarray:
    left, right = pair_views(channel)
    return np.abs(left.astype(np.int16) - right.astype(np.int16))


def mask_to_loci(mask: np.ndarray) -> np.ndarray:
    """Turn a ``(h, w // 2)`` pair mask into raster-ordered ``(row, col)`` loci."""
    rows, halfcols = np.nonzero(mask)
    return np.stack([rows, 2 * halfcols], axis=1).astype(np.int64)


def qualifying_pairs(channel: np.ndarray, t: int) -> np.ndarray:
    if not 1 <= t <= 255:
        raise ValueError(f"threshold must lie in 1..255, got {t}")
    mask = eligible_pair_mask(channel) & (pair_differences(channel) >= t)
    return mask_to_loci(mask)


def pairs_at_or_above(channel: np.ndarray) -> np.ndarray:
    """``counts[t]`` = number of qualifying pairs at threshold ``t`` (0..255)."""
    diffs = pair_differences(channel)[eligible_pair_mask(channel)]
    hist = np.bincount(diffs.ravel(), minlength=256)
    return np.cumsum(hist[::-1])[::-1]


def compute_threshold(channel: np.ndarray, required_bits: int) -> int:
    """Largest ``t`` whose qualifying pairs can hold ``required_bits``."""
    if required_bits < 1:
        raise ValueError("required_bits must be at least 1")
    need = padded_length(required_bits) // 2
    counts = pairs_at_or_above(channel)
    ok = np.flatnonzero(counts[1:] >= need)
    if ok.size == 0:
        raise CapacityError(
            f"{required_bits} bits need {need} pairs; only {int(counts[1])} qualify at T=1"
        )
    return int(ok[-1]) + 1


def max_capacity_bits(channel: np.ndarray) -> int:
    return 2 * int(pairs_at_or_above(channel)[1])


@dataclass(eq=False)
class RegionKey:
    channel: ChannelId
    threshold: int
    message_bit_length: int
    image_width: int
    image_height: int
    pairs: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self):
        self.channel = ChannelId.parse(self.channel)
        pairs = np.asarray(self.pairs, dtype=np.int64)
        self.pairs = pairs.reshape(-1, 2) if pairs.size else np.empty((0, 2), dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, RegionKey):
            return NotImplemented
        return (
            self.channel == other.channel
            and self.threshold == other.threshold
            and self.message_bit_length == other.message_bit_length
            and self.image_width == other.image_width
            and self.image_height == other.image_height
            and np.array_equal(self.pairs, other.pairs)
        )

    @property
    def loci(self) -> list[PairLocus]:
        return [PairLocus(int(r), int(c)) for r, c in self.pairs]

    def validate(self) -> None:
        """Raise :class:`KeyFormatError` unless every key invariant holds."""
        if not 1 <= self.threshold <= 255:
            raise KeyFormatError(f"threshold {self.threshold} outside 1..255")
        if self.image_width < 1 or self.image_height < 1:
            raise KeyFormatError("image dimensions must be positive")
        if self.message_bit_length < 0 or 2 * len(self.pairs) < self.message_bit_length:
            raise KeyFormatError(
                f"{len(self.pairs)} pairs cannot hold {self.message_bit_length} bits"
            )
        if len(self.pairs) == 0:
            return
        rows, cols = self.pairs[:, 0], self.pairs[:, 1]
        if (cols % 2).any():
            raise KeyFormatError("pair column must be even")
        if (rows < 0).any() or (cols < 0).any():
            raise KeyFormatError("negative pair coordinate")
        if (rows >= self.image_height).any() or (cols + 1 >= self.image_width).any():
            raise KeyFormatError("pair location out of bounds")
        order = rows * self.image_width + cols
        if (np.diff(order) <= 0).any():
            raise KeyFormatError("pairs must be unique and in raster order")


def build_key(channel_id, channel: np.ndarray, bits) -> RegionKey:
    nbits = int(np.asarray(bits).size)
    t = compute_threshold(channel, nbits)
    pairs = qualifying_pairs(channel, t)[: padded_length(nbits) // 2]
    h, w = np.asarray(channel).shape
    return RegionKey(ChannelId.parse(channel_id), t, nbits, w, h, pairs)


def serialize_key(key: RegionKey) -> bytes:
    key.validate()
    head = KEY_HEADER.pack(
        KEY_MAGIC, KEY_VERSION, int(key.channel), key.threshold, 0,
        key.image_width, key.image_height, key.message_bit_length, len(key.pairs),
    )
    body = key.pairs.astype("<u4").tobytes()
    data = head + body
    return data + KEY_CRC.pack(zlib.crc32(data) & 0xFFFFFFFF)


def deserialize_key(data: bytes) -> RegionKey:
    data = bytes(data)
    if len(data) < KEY_HEADER.size + KEY_CRC.size:
        raise KeyChecksumError(f"key record truncated ({len(data)} bytes)")
    (stored,) = KEY_CRC.unpack_from(data, len(data) - KEY_CRC.size)
    if zlib.crc32(data[: -KEY_CRC.size]) & 0xFFFFFFFF != stored:
        raise KeyChecksumError("key CRC-32 mismatch")
    magic, version, channel, threshold, reserved, width, height, nbits, count = (
        KEY_HEADER.unpack_from(data, 0)
    )
    if magic != KEY_MAGIC:
        raise KeyFormatError(f"bad key magic {magic!r}")
    if version != KEY_VERSION:
        raise KeyFormatError(f"unsupported key version {version}")
    if channel > 2:
        raise KeyFormatError(f"bad channel id {channel}")
    if reserved != 0:
        raise KeyFormatError("reserved byte must be zero")
    if len(data) != KEY_HEADER.size + count * KEY_PAIR.size + KEY_CRC.size:
        raise KeyFormatError("key length does not match its pair count")
    pairs = np.frombuffer(data, dtype="<u4", count=2 * count, offset=KEY_HEADER.size)
    key = RegionKey(ChannelId(channel), threshold, nbits, width, height,
                    pairs.astype(np.int64).reshape(-1, 2))
    key.validate()
    return key


def write_key(key: RegionKey, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_key(key))


def read_key(path) -> RegionKey:
    with open(path, "rb") as fh:
        return deserialize_key(fh.read())
