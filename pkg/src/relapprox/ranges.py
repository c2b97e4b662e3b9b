"""Exact range spaces over finite point sets.

A catalog holds every distinct subset that a geometric family cuts out of a
point set, as packed bitset rows (see :mod:`relapprox._bits`).  Ranges are
closed.  Two enumerators cover the four families:

* halfplanes / halfspaces: every separable subset equals ``U | T'`` where
  ``U`` is the open side of a hyperplane through ``d`` affinely independent
  points, ``T`` the points on that hyperplane and ``T'`` a separable subset of
  ``T`` inside it (one dimension down).  Supports are all pairs (2D) or
  triples (3D); degenerate inputs recurse into the affine hull.
* rectangles / boxes: a subset is a range iff it equals the points of its
  own bounding box, so each range is emitted once, from the box whose every
  face carries a member.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import _bits
from .points import PointSet

KINDS = ("halfplanes2d", "halfspaces3d", "rects2d", "boxes3d")

# (c, phi) bound constants per family
_CONSTANTS = {
    "halfplanes2d": (1, "const1"),
    "halfspaces3d": (2, "const1"),
    "rects2d": (2, "log"),
    "boxes3d": (2, "log3"),
}
_DIMS = {"halfplanes2d": 2, "halfspaces3d": 3, "rects2d": 2, "boxes3d": 3}

# largest n enumerated without force_large_n
SIZE_CAPS = {"halfplanes2d": 400, "halfspaces3d": 200, "rects2d": 150, "boxes3d": 80}


class EnumerationTooLarge(ValueError):
    pass


def phi_value(name: str, n: int) -> float:
    """Growth function of the well-behaved bound, floored at 1."""
    if name == "const1":
        return 1.0
    lg = max(1.0, math.log2(n)) if n > 1 else 1.0
    if name == "log":
        return lg
    if name == "log3":
        return lg**3
    raise ValueError(f"unknown growth function {name!r}")


@dataclass(frozen=True)
class RangeFamily:
    kind: str
    c: int
    phi: str

    def __post_init__(self):
        if self.kind not in _CONSTANTS:
            raise ValueError(f"unknown range family {self.kind!r}; expected one of {KINDS}")
        if (self.c, self.phi) != _CONSTANTS[self.kind]:
            raise ValueError(f"{self.kind} is bound to (c, phi) = {_CONSTANTS[self.kind]}")

    @classmethod
    def of(cls, kind: str) -> "RangeFamily":
        if kind not in _CONSTANTS:
            raise ValueError(f"unknown range family {kind!r}; expected one of {KINDS}")
        c, phi = _CONSTANTS[kind]
        return cls(kind, c, phi)

    @property
    def dim(self) -> int:
        return _DIMS[self.kind]

    @property
    def is_box(self) -> bool:
        return self.kind in ("rects2d", "boxes3d")

    def phi_of(self, n: int) -> float:
        return phi_value(self.phi, n)

    def bound(self, n: int, k: int) -> float:
        """Nominal shallow-range bound ``n * phi(n) * k**c`` with unit constant."""
        return n * self.phi_of(n) * k**self.c


@dataclass(frozen=True)
class HalfspaceWitness:
    """Closed halfspace ``{x : normal . x >= offset}``; no point lies on its boundary."""

    normal: tuple[Fraction, ...]
    offset: Fraction

    def contains(self, point) -> bool:
        return sum(a * x for a, x in zip(self.normal, point)) >= self.offset


@dataclass(frozen=True)
class BoxWitness:
    """Closed axis-parallel box ``[lo, hi]``; ``lo > hi`` somewhere means empty."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def contains(self, point) -> bool:
        return all(a <= x <= b for a, x, b in zip(self.lo, point, self.hi))


@dataclass(frozen=True)
class CanonicalRange:
    members: tuple[int, ...]
    _witness_fn: Callable[[], object] | None = field(default=None, repr=False, compare=False)

    @cached_property
    def witness(self):
        return None if self._witness_fn is None else self._witness_fn()

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class RangeCatalog:
    """Deduplicated ranges of ``family`` over ``points``.

    ``words`` holds one packed row per range and ``sizes`` the member counts;
    rows are ordered by size, then lexicographically by sorted members.
    Individual :class:`CanonicalRange` objects are built on access.
    """

    points: PointSet
    family: RangeFamily
    words: np.ndarray
    sizes: np.ndarray

    @property
    def ground_size(self) -> int:
        return self.points.n

    def __len__(self) -> int:
        return self.words.shape[0]

    def __getitem__(self, i: int) -> CanonicalRange:
        i = range(len(self))[i]
        members = self.members(i)
        return CanonicalRange(members, lambda: witness_for(self.points, self.family, members))

    def __iter__(self) -> Iterator[CanonicalRange]:
        return (self[i] for i in range(len(self)))

    @property
    def ranges(self) -> Sequence[CanonicalRange]:
        return self

    def members(self, i: int) -> tuple[int, ...]:
        return _bits.to_indices(self.words[i], self.ground_size)

    def member_sets(self) -> list[frozenset[int]]:
        return [frozenset(self.members(i)) for i in range(len(self))]

    def index_of(self, members: Iterable[int]) -> int:
        """Position of the range with exactly these members (``KeyError`` if absent)."""
        row = _bits.from_indices(members, self.ground_size)
        hit = np.flatnonzero((self.words == row).all(axis=1))
        if hit.size == 0:
            raise KeyError("no range with these members")
        return int(hit[0])

    def shallow_count(self, k: int) -> int:
        return int(np.count_nonzero(self.sizes <= k))

    def intersect_counts(self, indices: Iterable[int]) -> np.ndarray:
        """``|tau & S|`` for every range, with ``S`` given by ground indices."""
        return _bits.intersect_count(self.words, _bits.from_indices(indices, self.ground_size))


# ---------------------------------------------------------------------------
# public operations


def canonical_ranges(points: PointSet, family: RangeFamily | str, *, force_large_n: bool = False) -> RangeCatalog:
    """Enumerate every distinct range the family realizes on ``points``."""
    if isinstance(family, str):
        family = RangeFamily.of(family)
    if points.n == 0:
        raise ValueError("empty point set")
    if points.dim != family.dim:
        raise ValueError(f"{family.kind} needs {family.dim}D points, got {points.dim}D")
    cap = SIZE_CAPS[family.kind]
    if points.n > cap and not force_large_n:
        raise EnumerationTooLarge(
            f"n={points.n} exceeds the {family.kind} enumeration cap of {cap}; pass force_large_n=True"
        )
    X = points.integer_coords
    n = points.n
    if family.is_box:
        words = _box_words(X)
    else:
        words = _separable_words(X)
    empty = np.zeros((1, _bits.n_words(n)), dtype=np.uint64)
    full = _bits.pack(np.ones((1, n), dtype=bool))
    words = np.unique(np.concatenate([words, empty, full]), axis=0)
    sizes = _bits.popcount(words)
    order = _bits.canonical_order(words, sizes)
    return RangeCatalog(points, family, np.ascontiguousarray(words[order]), sizes[order])


def shallow_ranges(catalog: RangeCatalog, k: int) -> list[CanonicalRange]:
    """Ranges with at most ``k`` members, in catalog order."""
    if k < 0 or k > catalog.ground_size:
        raise ValueError(f"k must lie in [0, {catalog.ground_size}]")
    return [catalog[int(i)] for i in np.flatnonzero(catalog.sizes <= k)]


def raw_measure(range_size: int, ground_size: int) -> Fraction:
    if ground_size <= 0:
        raise ValueError("ground_size must be positive")
    if not 0 <= range_size <= ground_size:
        raise ValueError("range_size must lie in [0, ground_size]")
    return Fraction(range_size, ground_size)


def incidence_counts(ranges, n: int) -> np.ndarray:
    """Per-object number of ranges containing it.

    ``ranges`` is either an iterable of member collections /
    :class:`CanonicalRange` objects, or a packed word matrix.
    """
    if isinstance(ranges, np.ndarray):
        return _bits.column_counts(ranges, n)
    if isinstance(ranges, RangeCatalog):
        return _bits.column_counts(ranges.words, n)
    counts = np.zeros(n, dtype=np.int64)
    for r in ranges:
        members = r.members if isinstance(r, CanonicalRange) else r
        for j in members:
            if not 0 <= j < n:
                raise IndexError(f"member {j} out of range for n={n}")
            counts[j] += 1
    return counts


@dataclass(frozen=True)
class ProfileRow:
    k: int
    count: int
    bound: float
    exceeds: bool


def well_behaved_profile(points: PointSet, family: RangeFamily | str, ks: Sequence[int], *,
                         catalog: RangeCatalog | None = None, force_large_n: bool = False) -> list[ProfileRow]:
    """Exact shallow counts next to ``n * phi(n) * k**c``."""
    if isinstance(family, str):
        family = RangeFamily.of(family)
    ks = list(ks)
    if ks != sorted(ks):
        raise ValueError("ks must be sorted ascending")
    if any(k < 0 or k > points.n for k in ks):
        raise ValueError(f"every k must lie in [0, {points.n}]")
    if catalog is None:
        catalog = canonical_ranges(points, family, force_large_n=force_large_n)
    sizes = np.sort(catalog.sizes)
    rows = []
    for k in ks:
        count = int(np.searchsorted(sizes, k, side="right"))
        bound = family.bound(points.n, k)
        rows.append(ProfileRow(k, count, bound, count > bound))
    return rows


def fitted_constant(rows: Sequence[ProfileRow], minimum_k: int = 1) -> float:
    """Smallest ``beta`` with ``count <= beta * bound`` on every row with ``k >= minimum_k``."""
    ratios = [r.count / r.bound for r in rows if r.k >= minimum_k and r.bound > 0]
    return max(ratios, default=0.0)


# ---------------------------------------------------------------------------
# halfspace enumeration


def _cross(u, v):
    return np.array([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]],
                    dtype=u.dtype)


def _hyperplane_normal(X: np.ndarray):
    """Integer normal ``a != 0`` with ``X @ a`` constant, or ``None`` if ``X`` is full-dimensional."""
    n, d = X.shape
    p0 = X[0]
    diffs = X - p0
    nz = np.flatnonzero((diffs != 0).any(axis=1))
    if nz.size == 0:
        a = np.zeros(d, dtype=X.dtype)
        a[0] = 1
        return a
    q = diffs[nz[0]]
    if d == 1:
        return None
    if d == 2:
        a = np.array([-q[1], q[0]], dtype=X.dtype)
        return a if not (diffs @ a != 0).any() else None
    crosses = [_cross(q, diffs[j]) for j in nz[1:]]
    r = next((c for c in crosses if (c != 0).any()), None)
    if r is None:
        # collinear: any plane containing the line
        for k in range(3):
            e = np.zeros(3, dtype=X.dtype)
            e[k] = 1
            a = _cross(q, e)
            if (a != 0).any():
                return a
    return r if not (diffs @ r != 0).any() else None


def _drop_axis(a) -> int:
    return int(np.flatnonzero(a != 0)[0])


def _project(X: np.ndarray, axis: int) -> np.ndarray:
    return np.delete(X, axis, axis=1)


def _one_dim_masks(x: np.ndarray) -> np.ndarray:
    vals = np.unique(x)
    le = x[None, :] <= vals[:, None]
    ge = x[None, :] >= vals[:, None]
    return np.concatenate([le, ge, np.zeros((1, x.size), dtype=bool)])


def _separable_words(X: np.ndarray) -> np.ndarray:
    """Packed rows of all halfspace-separable subsets of ``X`` (may repeat)."""
    n, d = X.shape
    if d == 1:
        return _bits.pack(_one_dim_masks(X[:, 0]))
    a = _hyperplane_normal(X)
    if a is not None:
        return _separable_words(_project(X, _drop_axis(a)))
    return _support_words(X)


def _supports(n: int, d: int) -> Iterator[np.ndarray]:
    """Chunks of index tuples ``i < j (< k)``."""
    if d == 2:
        i, j = np.triu_indices(n, 1)
        step = 1 << 16
        for s in range(0, i.size, step):
            yield np.stack([i[s:s + step], j[s:s + step]], axis=1)
        return
    for i in range(n - 2):
        m = n - i - 1
        jj, kk = np.triu_indices(m, 1)
        if jj.size:
            yield np.stack([np.full(jj.size, i), jj + i + 1, kk + i + 1], axis=1)


def _support_planes(X: np.ndarray, idx: np.ndarray):
    """Normals and offsets of the hyperplanes through each support tuple."""
    if X.shape[1] == 2:
        p, q = X[idx[:, 0]], X[idx[:, 1]]
        u = q - p
        normals = np.stack([-u[:, 1], u[:, 0]], axis=1)
    else:
        p, q, r = X[idx[:, 0]], X[idx[:, 1]], X[idx[:, 2]]
        u, v = q - p, r - p
        normals = np.stack([u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1],
                            u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2],
                            u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]], axis=1)
    offsets = (normals * p).sum(axis=1)
    return normals, offsets


def _support_words(X: np.ndarray) -> np.ndarray:
    n, d = X.shape
    singles = _bits.pack(np.eye(n, dtype=bool))
    patterns = [tuple((m >> b) & 1 for b in range(d)) for m in range(1 << d)]
    out = []
    flat_cache: dict[bytes, np.ndarray] = {}
    pending = 0
    for idx in _supports(n, d):
        normals, offsets = _support_planes(X, idx)
        ok = (normals != 0).any(axis=1)
        idx, normals, offsets = idx[ok], normals[ok], offsets[ok]
        if not idx.size:
            continue
        side = X @ normals.T - offsets          # (n, C)
        on = side == 0
        general = on.sum(axis=0) == d
        g = np.flatnonzero(general)
        if g.size:
            up = _bits.pack((side[:, g] > 0).T)
            down = _bits.pack((side[:, g] < 0).T)
            for pat in patterns:
                extra = np.zeros_like(up)
                for b, use in enumerate(pat):
                    if use:
                        extra |= singles[idx[g, b]]
                out.append(up | extra)
                out.append(down | extra)
                pending += 2 * g.size
        for c in np.flatnonzero(~general):
            on_c = on[:, c]
            key = np.packbits(on_c).tobytes()
            if key in flat_cache:
                continue
            members = np.flatnonzero(on_c)
            local = _separable_words(_project(X[members], _drop_axis(normals[c])))
            local_masks = _bits.unpack(local, members.size)
            lifted = np.zeros((local_masks.shape[0], n), dtype=bool)
            lifted[:, members] = local_masks
            flat_cache[key] = lifted
            for s in (side[:, c] > 0, side[:, c] < 0):
                out.append(_bits.pack(lifted | s[None, :]))
        if pending > (1 << 21):
            out = [np.unique(np.concatenate(out), axis=0)]
            pending = out[0].shape[0]
    if not out:
        return np.zeros((0, _bits.n_words(n)), dtype=np.uint64)
    return np.unique(np.concatenate(out), axis=0)


# ---------------------------------------------------------------------------
# box enumeration


def _axis_tables(X: np.ndarray):
    """Per axis: distinct values, value index of each point, packed GE/LE/EQ rows."""
    tables = []
    for k in range(X.shape[1]):
        vals, inv = np.unique(X[:, k], return_inverse=True)
        r = np.arange(vals.size)
        ge = _bits.pack(inv[None, :] >= r[:, None])
        le = _bits.pack(inv[None, :] <= r[:, None])
        eq = _bits.pack(inv[None, :] == r[:, None])
        tables.append((vals, inv, ge, le, eq))
    return tables


def _face_bounds(inv: np.ndarray, face_a: np.ndarray, face_b: np.ndarray):
    """Limits on an interval [lo, hi] (value indices) that must meet both face point sets."""
    lo_max = min(inv[face_a].max(), inv[face_b].max())
    hi_min = max(inv[face_a].min(), inv[face_b].min())
    return lo_max, hi_min


def _hits(S: np.ndarray, row: np.ndarray) -> np.ndarray:
    return (S & row).any(axis=-1)


def _box_words(X: np.ndarray) -> np.ndarray:
    n, d = X.shape
    tables = _axis_tables(X)
    vx, ix, gex, lex, eqx = tables[0]
    out = []
    for a in range(vx.size):
        for b in range(a, vx.size):
            slab = gex[a] & lex[b]
            in_slab = _bits.unpack(slab[None, :], n)[0]
            face_a = (ix == a) & in_slab
            face_b = (ix == b) & in_slab
            if d == 1:
                out.append(slab[None, :])
                continue
            cand = _boxes_in_slab(tables[1:], slab, in_slab, face_a, face_b, eqx[a], eqx[b])
            if cand.shape[0]:
                out.append(cand)
    if not out:
        return np.zeros((0, _bits.n_words(n)), dtype=np.uint64)
    return np.concatenate(out)


def _interval_choices(inv, present, face_a, face_b):
    vals = np.unique(inv[present])
    lo_max, hi_min = _face_bounds(inv, face_a, face_b)
    return vals[vals <= lo_max], vals[vals >= hi_min]


def _boxes_in_slab(rest, slab, in_slab, face_a, face_b, eq_a, eq_b) -> np.ndarray:
    vy, iy, gey, ley, eqy = rest[0]
    los, his = _interval_choices(iy, in_slab, face_a, face_b)
    if len(rest) == 1:
        S = slab[None, None, :] & gey[los][:, None, :] & ley[his][None, :, :]
        keep = (los[:, None] <= his[None, :]) & _hits(S, eq_a) & _hits(S, eq_b)
        return S[keep]
    vz, iz, gez, lez, eqz = rest[1]
    zlo, zhi = _interval_choices(iz, in_slab, face_a, face_b)
    z_ok = zlo[:, None] <= zhi[None, :]
    zi, zj = np.nonzero(z_ok)
    Z = gez[zlo[zi]] & lez[zhi[zj]]                       # (Pz, W)
    zl_rows, zh_rows = eqz[zlo[zi]], eqz[zhi[zj]]
    found = []
    for y0 in los:
        y1s = his[his >= y0]
        if not y1s.size:
            continue
        XY = slab & gey[y0] & ley[y1s]                    # (Py, W)
        S = XY[:, None, :] & Z[None, :, :]                # (Py, Pz, W)
        keep = (_hits(S, eq_a) & _hits(S, eq_b) & _hits(S, eqy[y0])
                & _hits(S, eqy[y1s][:, None, :]) & _hits(S, zl_rows[None, :, :]) & _hits(S, zh_rows[None, :, :]))
        if keep.any():
            found.append(S[keep])
    if not found:
        return np.zeros((0, slab.size), dtype=np.uint64)
    return np.concatenate(found)


# ---------------------------------------------------------------------------
# witnesses


def witness_for(points: PointSet, family: RangeFamily, members: Sequence[int]):
    """An explicit region realizing ``members``; raises if none exists."""
    n = points.n
    mask = np.zeros(n, dtype=bool)
    mask[list(members)] = True
    if family.is_box:
        return _box_witness(points, mask)
    X = points.integer_coords
    a, b = _separator(X, mask)
    return _halfspace_in_original_coords(points, a, b)


def _box_witness(points: PointSet, mask: np.ndarray) -> BoxWitness:
    if not mask.any():
        top = tuple(max(p[k] for p in points) + 1 for k in range(points.dim))
        return BoxWitness(top, tuple(t - 1 for t in top))
    sel = [points[i] for i in np.flatnonzero(mask)]
    lo = tuple(min(p[k] for p in sel) for k in range(points.dim))
    hi = tuple(max(p[k] for p in sel) for k in range(points.dim))
    box = BoxWitness(lo, hi)
    if any(box.contains(points[i]) for i in np.flatnonzero(~mask)):
        raise ValueError("members are not cut out by any box")
    return box


def _halfspace_in_original_coords(points: PointSet, a, b) -> HalfspaceWitness:
    # integer coords are X = (P - low) * scale, so a.X >= b  <=>  (scale a).P >= b + scale a.low
    low, scale = points.integer_frame
    normal = tuple(Fraction(int(ai)) * scale for ai in a)
    offset = Fraction(int(b)) + sum(nk * lo for nk, lo in zip(normal, low))
    # divide out the common factor so the witness prints small
    coeffs = (*normal, offset)
    num = math.gcd(*(c.numerator for c in coeffs))
    den = math.lcm(*(c.denominator for c in coeffs))
    if num:
        normal = tuple(c * den / num for c in normal)
        offset = offset * den / num
    return HalfspaceWitness(normal, offset)


def _separator(X: np.ndarray, mask: np.ndarray):
    """Integer ``(a, b)`` with ``a.x - b > 0`` exactly on ``mask`` and ``< 0`` elsewhere."""
    n, d = X.shape
    zero = np.zeros(d, dtype=object)
    if mask.all():
        return zero, -1
    if not mask.any():
        return zero, 1
    Xo = X.astype(object)
    if d == 1:
        x = [int(v) for v in Xo[:, 0]]
        inside = [v for v, m in zip(x, mask) if m]
        outside = [v for v, m in zip(x, mask) if not m]
        if max(inside) < min(outside):
            return np.array([-2], dtype=object), -(max(inside) + min(outside))
        if min(inside) > max(outside):
            return np.array([2], dtype=object), max(outside) + min(inside)
        raise ValueError("members are not cut out by any halfspace")
    a = _hyperplane_normal(X)
    if a is not None:
        k = _drop_axis(a)
        a2, b2 = _separator(_project(X, k), mask)
        return np.insert(np.asarray(a2, dtype=object), k, 0), b2
    for idx in _supports(n, d):
        normals, offsets = _support_planes(X, idx)
        ok = (normals != 0).any(axis=1)
        idx, normals, offsets = idx[ok], normals[ok], offsets[ok]
        side = X @ normals.T - offsets
        for sign in (1, -1):
            s = sign * side
            good = ~((s > 0) & ~mask[:, None]).any(axis=0) & ~((s < 0) & mask[:, None]).any(axis=0)
            for c in np.flatnonzero(good):
                on = s[:, c] == 0
                try:
                    sub_a, sub_b = _separator(_project(X[on], _drop_axis(normals[c])), mask[on])
                except ValueError:
                    continue
                k = _drop_axis(normals[c])
                ga = np.insert(np.asarray(sub_a, dtype=object), k, 0)
                gvals = Xo @ ga - sub_b
                M = int(max(abs(v) for v in gvals)) + 1
                na = sign * M * normals[c].astype(object) + ga
                nb = sign * M * int(offsets[c]) + sub_b
                return na, nb
    raise ValueError("members are not cut out by any halfspace")
