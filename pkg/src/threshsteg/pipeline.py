"""End-to-end embedding and extraction on RGB rasters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import edges
from .errors import DimensionError, KeyFormatError
from .lsbmr import decode_message, embed_stream, encode_message, extract_stream, make_rng, padded_length
from .raster import ChannelId, RgbRaster, get_channel, replace_channel
from .region import RegionKey, build_key, compute_threshold, max_capacity_bits, qualifying_pairs

METHODS = ("threshold", "sobel", "canny")


@dataclass
class EdgeParams:
    magnitude: str = "sqrt"
    sigma: float = edges.DEFAULT_SIGMA
    ksize: int = edges.DEFAULT_KSIZE
    high_frac: float = edges.DEFAULT_HIGH_FRAC
    low_ratio: float = edges.DEFAULT_LOW_RATIO

    def as_kwargs(self) -> dict:
        return dict(magnitude=self.magnitude, sigma=self.sigma, ksize=self.ksize,
                    high_frac=self.high_frac, low_ratio=self.low_ratio)


@dataclass
class Selection:
    pairs: np.ndarray
    parameter: float
    threshold: int


@dataclass
class EmbedResult:
    stego: RgbRaster
    key: RegionKey
    parameter: float
    cover_channel: np.ndarray = field(repr=False)
    stego_channel: np.ndarray = field(repr=False)


def _edge_key_threshold(values: np.ndarray, pairs: np.ndarray) -> int:
    # tightest difference bound every recorded pair meets, clamped to the key's 1..255 range
    if len(pairs) == 0:
        return 1
    diffs = np.abs(values[pairs[:, 0], pairs[:, 1]].astype(int)
                   - values[pairs[:, 0], pairs[:, 1] + 1].astype(int))
    return int(min(255, max(1, diffs.min())))


def select_pairs(values: np.ndarray, nbits: int, method: str = "threshold",
                 params: EdgeParams | None = None) -> Selection:
    params = params or EdgeParams()
    if method == "threshold":
        t = compute_threshold(values, nbits)
        pairs = qualifying_pairs(values, t)[: padded_length(nbits) // 2]
        return Selection(pairs, float(t), t)
    if method in ("sobel", "canny"):
        pairs, param = edges.adaptive_edge_pairs(values, nbits, method, **params.as_kwargs())
        return Selection(pairs, param, _edge_key_threshold(values, pairs))
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def capacity_bits(values: np.ndarray, method: str = "threshold",
                  params: EdgeParams | None = None) -> int:
    params = params or EdgeParams()
    if method == "threshold":
        return max_capacity_bits(values)
    kw = params.as_kwargs()
    kw.pop("magnitude")
    return edges.edge_capacity_bits(values, method, **kw)


def embed_bits(cover: RgbRaster, bits, channel="r", method: str = "threshold",
               seed: int = 0, params: EdgeParams | None = None) -> EmbedResult:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        raise ValueError("refusing to embed an empty message")
    channel = ChannelId.parse(channel)
    values = get_channel(cover, channel)
    if method == "threshold":
        key = build_key(channel, values, bits)
        parameter = float(key.threshold)
    else:
        sel = select_pairs(values, bits.size, method, params)
        key = RegionKey(channel, sel.threshold, int(bits.size), cover.width, cover.height, sel.pairs)
        parameter = sel.parameter
    marked = embed_stream(values, key.pairs, bits, make_rng(seed))
    stego = replace_channel(cover, channel, marked)
    return EmbedResult(stego, key, parameter, values, marked)


def embed_message(cover: RgbRaster, message: bytes, channel="r", method: str = "threshold",
                  seed: int = 0, params: EdgeParams | None = None) -> EmbedResult:
    return embed_bits(cover, encode_message(message), channel, method, seed, params)


def extract_bits(stego: RgbRaster, key: RegionKey) -> np.ndarray:
    if (stego.width, stego.height) != (key.image_width, key.image_height):
        raise DimensionError(
            f"key expects a {key.image_width}x{key.image_height} image, "
            f"got {stego.width}x{stego.height}"
        )
    return extract_stream(get_channel(stego, key.channel), key.pairs, key.message_bit_length)


def extract_message(stego: RgbRaster, key: RegionKey) -> bytes:
    if key.message_bit_length % 8:
        raise KeyFormatError("key bit length is not a whole number of bytes")
    return decode_message(extract_bits(stego, key))

