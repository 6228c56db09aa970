"""Threshold-region LSB matching revisited steganography for colour bitmaps."""

from .errors import (
    CapacityError,
    DimensionError,
    ImageFormatError,
    KeyChecksumError,
    KeyFormatError,
    MessageError,
    SaturatedPairError,
    StegError,
)
from .lsbmr import decode_message, encode_message, extract_pair, embed_pair, pair_function
from .metrics import improvement_pct, mse, psnr
from .pipeline import embed_message, extract_message
from .raster import ChannelId, RgbRaster, load_image, merge_channels, save_image, split_channels
from .region import RegionKey, build_key, compute_threshold, deserialize_key, qualifying_pairs, serialize_key

__version__ = "0.1.0"
