"""LSB matching revisited over pixel pairs.

A pair ``(x1, x2)`` carries two bits: ``m1`` in the LSB of ``x1`` and ``m2``
in the parity of ``x1 // 2 + x2``.  Embedding changes at most one of the two
values and by exactly one.

Bit streams are ``uint8`` numpy arrays of zeros and ones.
"""

from __future__ import annotations

import random
from collections.abc import Sequence

import numpy as np

from .errors import CapacityError, DimensionError, MessageError, SaturatedPairError


def make_rng(seed: int = 0) -> random.Random:
    """Sign source for the free +/-1 choice; same seed, same choices."""
    if seed < 0 or seed >= 1 << 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return random.Random(seed)


def encode_message(text: bytes | str) -> np.ndarray:
    if isinstance(text, str):
        text = text.encode("utf-8")
    return np.unpackbits(np.frombuffer(bytes(text), dtype=np.uint8))


def decode_message(bits) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 8:
        raise MessageError(f"bit length {bits.size} is not a multiple of 8")
    return np.packbits(bits).tobytes()


def padded_length(nbits: int) -> int:
    return nbits + (nbits & 1)


def pad_bits(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size & 1:
        bits = np.append(bits, np.uint8(0))
    return bits


def pair_function(a, b):
    """Parity of ``floor(a / 2) + b``; works on scalars and arrays."""
    return ((a >> 1) + b) & 1


def embed_pair(first: int, second: int, m1: int, m2: int,
               rng: random.Random) -> tuple[int, int]:
    if not (0 < first < 255 and 0 < second < 255):
        raise SaturatedPairError(f"pair ({first}, {second}) contains a saturated value")
    if (first & 1) == m1:
        if pair_function(first, second) == m2:
            return first, second
        return first, second + (1 if rng.getrandbits(1) else -1)
    # x1 +/- 1 flips the LSB either way; exactly one sign also gives the right parity
    if pair_function(first + 1, second) == m2:
        return first + 1, second
    return first - 1, second


def extract_pair(first: int, second: int) -> tuple[int, int]:
    return first & 1, int(pair_function(first, second))


def _as_loci(pairs) -> np.ndarray:
    loci = np.asarray(pairs, dtype=np.int64)
    if loci.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if loci.ndim != 2 or loci.shape[1] != 2:
        raise ValueError("pairs must be a sequence of (row, col) tuples")
    return loci


def _check_bounds(channel: np.ndarray, loci: np.ndarray) -> None:
    h, w = channel.shape
    rows, cols = loci[:, 0], loci[:, 1]
    if ((rows < 0) | (rows >= h) | (cols < 0) | (cols + 1 >= w)).any():
        raise DimensionError("pair location out of bounds for a %dx%d channel" % (w, h))


def embed_stream(channel: np.ndarray, pairs: Sequence, bits,
                 rng: random.Random) -> np.ndarray:
    """Embed ``bits`` into consecutive pairs of ``channel``.

    Returns a modified copy.  Pairs after the last one needed are left alone.
    Case-2 signs are drawn from ``rng`` in pair order, so the result equals
    calling :func:`embed_pair` pair by pair with the same generator.
    """
    channel = np.asarray(channel)
    if channel.ndim != 2:
        raise DimensionError("channel must be a 2-D array")
    bits = pad_bits(bits)
    loci = _as_loci(pairs)
    npairs = bits.size // 2
    if npairs > len(loci):
        raise CapacityError(f"{bits.size} bits need {npairs} pairs, only {len(loci)} given")
    out = channel.astype(np.uint8, copy=True)
    if npairs == 0:
        return out
    used = loci[:npairs]
    _check_bounds(channel, used)
    rows, cols = used[:, 0], used[:, 1]
    flat = np.concatenate([rows * channel.shape[1] + cols, rows * channel.shape[1] + cols + 1])
    if np.unique(flat).size != flat.size:
        raise ValueError("embedding pairs overlap")

    x1 = channel[rows, cols].astype(np.int64)
    x2 = channel[rows, cols + 1].astype(np.int64)
    if ((x1 == 0) | (x1 == 255) | (x2 == 0) | (x2 == 255)).any():
        raise SaturatedPairError("an embedding pair contains a saturated value")
    m1 = bits[0::2].astype(np.int64)
    m2 = bits[1::2].astype(np.int64)

    lsb_ok = (x1 & 1) == m1
    parity_ok = pair_function(x1, x2) == m2

    case2 = np.flatnonzero(lsb_ok & ~parity_ok)
    signs = np.array([1 if rng.getrandbits(1) else -1 for _ in range(case2.size)], dtype=np.int64)
    x2[case2] += signs

    fix_first = ~lsb_ok
    up = pair_function(x1 + 1, x2) == m2
    x1 = np.where(fix_first, np.where(up, x1 + 1, x1 - 1), x1)

    out[rows, cols] = x1
    out[rows, cols + 1] = x2
    return out


def extract_stream(channel: np.ndarray, pairs: Sequence, nbits: int) -> np.ndarray:
    channel = np.asarray(channel)
    loci = _as_loci(pairs)
    if nbits < 0 or nbits > 2 * len(loci):
        raise CapacityError(f"cannot read {nbits} bits from {len(loci)} pairs")
    npairs = (nbits + 1) // 2
    if npairs == 0:
        return np.empty(0, dtype=np.uint8)
    used = loci[:npairs]
    _check_bounds(channel, used)
    x1 = channel[used[:, 0], used[:, 1]].astype(np.int64)
    x2 = channel[used[:, 0], used[:, 1] + 1].astype(np.int64)
    out = np.empty(2 * npairs, dtype=np.uint8)
    out[0::2] = x1 & 1
    out[1::2] = pair_function(x1, x2)
    return out[:nbits]
