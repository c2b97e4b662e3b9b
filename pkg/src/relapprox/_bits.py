"""Packed bitset rows.

Element ``j`` of a ground set of size ``n`` lives in word ``j // 64`` at bit
``63 - j % 64``.  With this layout, comparing rows as big unsigned integers
(word 0 most significant) orders equal-size sets lexicographically by their
sorted member lists, smallest-first sets comparing *greater*.
"""

from __future__ import annotations

import numpy as np

WORD = 64


def n_words(n: int) -> int:
    return max(1, -(-n // WORD))


def pack(mask: np.ndarray) -> np.ndarray:
    """Pack a boolean ``(m, n)`` matrix into ``(m, W)`` uint64 words."""
    mask = np.atleast_2d(np.asarray(mask, dtype=bool))
    m, n = mask.shape
    w = n_words(n)
    raw = np.packbits(mask, axis=1, bitorder="big")
    if raw.shape[1] < 8 * w:
        raw = np.pad(raw, ((0, 0), (0, 8 * w - raw.shape[1])))
    return np.ascontiguousarray(raw).view(">u8").astype(np.uint64)


def unpack(words: np.ndarray, n: int) -> np.ndarray:
    words = np.atleast_2d(words)
    raw = words.astype(">u8").view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder="big")[:, :n].astype(bool)


def from_indices(indices, n: int) -> np.ndarray:
    """Single packed row (shape ``(W,)``) holding ``indices``."""
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(list(indices), dtype=np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= n:
            raise IndexError("member index out of range")
        mask[idx] = True
    return pack(mask[None, :])[0]


def to_indices(row: np.ndarray, n: int) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(unpack(row[None, :], n)[0]))


def popcount(words: np.ndarray) -> np.ndarray:
    """Number of set bits per row, as int64."""
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def intersect_count(words: np.ndarray, row: np.ndarray) -> np.ndarray:
    """``|range & row|`` for every range row, chunked to bound temporaries."""
    out = np.empty(words.shape[0], dtype=np.int64)
    step = max(1, (1 << 22) // max(1, words.shape[1]))
    for s in range(0, words.shape[0], step):
        out[s:s + step] = popcount(words[s:s + step] & row)
    return out


def column_counts(words: np.ndarray, n: int) -> np.ndarray:
    """How many rows contain each element (length ``n``)."""
    counts = np.zeros(n, dtype=np.int64)
    step = max(1, (1 << 22) // max(1, n))
    for s in range(0, words.shape[0], step):
        counts += unpack(words[s:s + step], n).sum(axis=0, dtype=np.int64)
    return counts


def canonical_order(words: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Permutation sorting rows by size, then lexicographically by members."""
    keys = [~words[:, k] for k in range(words.shape[1] - 1, -1, -1)]
    return np.lexsort(keys + [sizes])
