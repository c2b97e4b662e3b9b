"""Finite point sets with exact rational coordinates.

Coordinates are held as :class:`fractions.Fraction`.  For the geometric
predicates every point set also carries an integer image of itself
(translated and scaled, so sidedness and box containment are unchanged),
stored as ``int64`` when the orientation determinants provably fit and as
Python integers otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Point = tuple[Fraction, ...]

_INT64_SAFE = 1 << 62


def to_fraction(value) -> Fraction:
    """Exact value of ``value``; floats are read through their shortest decimal repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coordinate {value!r}")
        return Fraction(repr(float(value)))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse coordinate {value!r}") from exc


@dataclass(frozen=True)
class PointSet:
    """Ordered ground set; point ``i`` has id ``i``."""

    points: tuple[Point, ...]
    duplicates: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def __init__(self, points: Iterable[Sequence]):
        pts = tuple(tuple(to_fraction(c) for c in p) for p in points)
        if not pts:
            raise ValueError("a point set needs at least one point")
        dim = len(pts[0])
        if dim not in (1, 2, 3) or any(len(p) != dim for p in pts):
            raise ValueError("all points must share dimension 1, 2 or 3")
        first: dict[Point, int] = {}
        dups = []
        for i, p in enumerate(pts):
            if p in first:
                dups.append((first[p], i))
            else:
                first[p] = i
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "duplicates", tuple(dups))

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> Point:
        return self.points[i]

    def __iter__(self):
        return iter(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def subset(self, indices: Iterable[int]) -> "PointSet":
        return PointSet(self.points[i] for i in indices)

    @cached_property
    def integer_frame(self) -> tuple[tuple[Fraction, ...], Fraction]:
        """``(low, scale)`` such that ``integer_coords == (P - low) * scale``."""
        den = reduce(math.lcm, (c.denominator for p in self.points for c in p), 1)
        low = tuple(min(p[k] for p in self.points) for k in range(self.dim))
        g = reduce(math.gcd, (int((c - lo) * den) for p in self.points for c, lo in zip(p, low)), 0)
        return low, Fraction(den, g or 1)

    @cached_property
    def integer_coords(self) -> np.ndarray:
        """Translated, scaled integer coordinates (``int64`` or ``object``).

        ``int64`` is used only when ``6 * spread**3`` (the largest 3x3
        orientation determinant) stays below ``2**62``.
        """
        low, scale = self.integer_frame
        rows = [[int((c - lo) * scale) for c, lo in zip(p, low)] for p in self.points]
        spread = max((v for r in rows for v in r), default=0)
        if 6 * (spread + 1) ** 3 < _INT64_SAFE:
            return np.array(rows, dtype=np.int64).reshape(self.n, self.dim)
        arr = np.empty((self.n, self.dim), dtype=object)
        for i, r in enumerate(rows):
            arr[i, :] = r
        return arr

    def as_float(self) -> np.ndarray:
        return np.array([[float(c) for c in p] for p in self.points], dtype=float)

    def to_text(self) -> str:
        return "".join(" ".join(_fmt(c) for c in p) + "\n" for p in self.points)


def _fmt(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    den = c.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{c.numerator}/{c.denominator}"
    digits = max(twos, fives)
    scaled = abs(c.numerator) * 10**digits // c.denominator
    sign = "-" if c < 0 else ""
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def parse_points(text: str) -> PointSet:
    """Parse the plain-text point format.

    One point per line, whitespace-separated decimal coordinates, ``#``
    starts a comment.  The dimension is fixed by the first data line.
    """
    rows = []
    dim = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if dim is None:
            dim = len(parts)
        elif len(parts) != dim:
            raise ValueError(f"line {lineno}: expected {dim} coordinates, got {len(parts)}")
        rows.append([to_fraction(tok) for tok in parts])
    if not rows:
        raise ValueError("no points found")
    return PointSet(rows)


def read_points(path: str | Path) -> PointSet:
    return parse_points(Path(path).read_text(encoding="utf-8"))


def write_points(points: PointSet, path: str | Path) -> None:
    Path(path).write_text(points.to_text(), encoding="utf-8", newline="\n")
