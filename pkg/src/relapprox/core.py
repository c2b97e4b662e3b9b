"""Layered heavy/light construction of small weighted relative approximations.

Pipeline (``construct``): resolve every numeric parameter, certify a uniform
intermediate sample ``F`` exactly, assign each range of ``F`` to a
measure layer, move objects that sit in too many same-layer ranges to the
heavy set ``H``, then pick the light objects by independent coins, resampling
with Moser-Tardos until no per-range deviation event and no oversize event
holds.  Heavy objects carry weight ``pi``, chosen light objects weight 1, and
the measure of a range is ``(|tau & F1| + pi |tau & H|) / (pi |F|)``.
"""

from __future__ import annotations

import json
import logging
import math
import time
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _bits
from ._exact import Real, ceil_log2, exact_array, fmt, frac, log2, to_rational
from .points import PointSet
from .ranges import RangeCatalog, RangeFamily, canonical_ranges
from .rng import as_generator
from .verify import SubsetMeasure, ViolationReport, check_relative, uniform_measure

log = logging.getLogger(__name__)

# keeps the integer event inequalities inside int64 at desk scale
PI_MAX_DENOMINATOR = 1000

MODES = ("full", "standard_fallback", "absolute_fallback", "constant_fallback", "degenerate_whole_set")


class ConstructionError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``detail`` carries diagnostics."""

    def __init__(self, stage: str, message: str, detail: dict | None = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.detail = detail or {}


class InitialSampleError(ConstructionError):
    pass


class ResampleCapExceeded(ConstructionError):
    pass


class UnsatisfiableEvents(ConstructionError):
    """Some range admits no value of ``|tau & F1|`` meeting its own inequality."""


class AnalysisAssumptionWarning(RuntimeWarning):
    """Fewer than half of ``F`` is light; the size analysis assumes otherwise."""


@dataclass(frozen=True)
class ApproxParams:
    p: Fraction
    eps: Fraction
    A: Fraction = Fraction(1)
    C: Fraction = Fraction(1)
    D: Fraction = Fraction(4)
    D_base: Fraction = Fraction(4)
    gamma: Fraction = Fraction(1)
    eps_scale: Fraction = Fraction(6)
    # with F = X there is no composition step, only the slack factor 2
    eps_scale_whole: Fraction = Fraction(2)
    initial_retries: int = 64
    mt_max_resamples: int = 10**6
    # run the layered stage on F = X when the initial sample would not be smaller than X
    core_on_whole_set: bool = False

    def __post_init__(self):
        for name in ("p", "eps", "A", "C", "D", "D_base", "gamma", "eps_scale", "eps_scale_whole"):
            object.__setattr__(self, name, frac(getattr(self, name)))
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        for name in ("A", "C", "D", "D_base", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eps_scale < 1 or self.eps_scale_whole < 1:
            raise ValueError("eps scales must be at least 1")
        if self.initial_retries < 1 or self.mt_max_resamples < 1:
            raise ValueError("retry caps must be at least 1")

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            out[k] = str(v) if isinstance(v, Fraction) else v
        return out


@dataclass(frozen=True)
class ResolvedPlan:
    mode: str
    n: int
    family: RangeFamily
    p: Fraction
    eps: Fraction
    p_int: Fraction
    eps_int: Fraction
    f_size: int
    layer_count: int = 0
    delta: tuple[Real, ...] = ()
    heavy_thresholds: tuple[Real, ...] = ()
    heavy_min_counts: tuple[int, ...] = ()
    pi: Fraction = Fraction(1)
    pi_raw: Real = 1.0
    pi_clamped: bool = False
    size_clamped: bool = False
    gamma: Fraction = Fraction(1)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "family": self.family.kind,
            "p": str(self.p),
            "eps": str(self.eps),
            "p_int": str(self.p_int),
            "eps_int": str(self.eps_int),
            "f_size": self.f_size,
            "layer_count": self.layer_count,
            "delta": [fmt(d) for d in self.delta],
            "heavy_thresholds": [fmt(t) for t in self.heavy_thresholds],
            "heavy_min_counts": list(self.heavy_min_counts),
            "pi": str(self.pi),
            "pi_raw": fmt(self.pi_raw),
            "pi_clamped": self.pi_clamped,
            "size_clamped": self.size_clamped,
            "gamma": str(self.gamma),
            "provenance": dict(self.provenance),
        }


def _mul(*xs) -> Real:
    out: Real = Fraction(1)
    for x in xs:
        out = out * x
    return out


def resolve_plan(n: int, params: ApproxParams, family: RangeFamily | str) -> ResolvedPlan:
    """Every numeric parameter of the construction, with the regime it falls in."""
    if isinstance(family, str):
        family = RangeFamily.of(family)
    if n < 1:
        raise ValueError("n must be positive")
    p, eps = params.p, params.eps
    eighth = Fraction(1, 8)
    prov: dict[str, str] = {}
    common = dict(n=n, family=family, p=p, eps=eps, gamma=params.gamma)

    def fallback(mode: str, size: Real, why: str) -> ResolvedPlan:
        size = math.ceil(size)
        prov["mode"] = why
        prov["f_size"] = f"uniform sample size {size}" + (f", clamped to n={n}" if size > n else "")
        return ResolvedPlan(mode=mode, p_int=p, eps_int=eps, f_size=min(size, n), size_clamped=size > n,
                            provenance=prov, **common)

    if p > eighth and eps >= eighth:
        return fallback("constant_fallback", params.D_base / (eighth * eighth),
                        "p > 1/8 and eps >= 1/8: constant-size sample, D_base/(1/8)^2")
    if p > eighth:
        return fallback("absolute_fallback", params.D_base / (eps * eps),
                        "p > 1/8 and eps < 1/8: absolute approximation, D_base/eps^2")
    if p > eps:
        return fallback("standard_fallback", params.D_base * log2(1 / p) / (eps * eps * p),
                        "p > eps: classical relative approximation, D_base log2(1/p)/(eps^2 p)")

    p_int = p
    eps_int = eps / params.eps_scale
    lg = log2(1 / (p_int * eps_int))
    raw_size = math.ceil(_mul(params.D, lg) / (eps_int * eps_int * p_int))
    prov["eps_int"] = f"eps / eps_scale = {eps} / {params.eps_scale}"
    prov["f_size"] = f"ceil(D log2(1/(p eps_int)) / (eps_int^2 p)) = {raw_size}"
    if raw_size >= n:
        if not params.core_on_whole_set:
            prov["mode"] = f"initial sample size {raw_size} >= n = {n}: the whole set is exact"
            return ResolvedPlan(mode="degenerate_whole_set", p_int=p_int, eps_int=eps_int, f_size=n,
                                size_clamped=True, provenance=prov, **common)
        prov["mode"] = f"initial sample size {raw_size} >= n = {n}: layered stage runs on F = X"
        f_size = n
        eps_int = eps / params.eps_scale_whole
        lg = log2(1 / (p_int * eps_int))
        prov["eps_int"] = f"eps / eps_scale_whole = {eps} / {params.eps_scale_whole} (F = X, no composition)"
    else:
        prov["mode"] = "p <= 1/8, p <= eps and |F| < n"
        f_size = raw_size

    L = ceil_log2(1 / p_int)
    base = _mul(params.C, lg) / (eps_int * eps_int)
    delta = tuple(_mul(base, Fraction(2) ** (i - 1)) for i in range(L + 1))
    phi_f = family.phi_of(f_size)
    phi_f = Fraction(1) if phi_f == 1 else phi_f
    thresholds = tuple(_mul(params.A, phi_f, d ** (family.c + 2)) for d in delta)
    min_counts = tuple(math.ceil(t) for t in thresholds)
    prov["delta"] = "C 2^(i-1) log2(1/(p eps_int)) / eps_int^2"
    prov["heavy_thresholds"] = f"A phi(|F|) delta_i^(c+2), phi(|F|) = {fmt(phi_f)}"

    loglog = log2(log2(1 / p_int)) if log2(1 / p_int) > 1 else Fraction(0)
    logphi = log2(frac(phi_f) if isinstance(phi_f, Fraction) else phi_f) if phi_f != 1 else Fraction(0)
    top = max(loglog, logphi) + log2(1 / eps_int)
    bottom = log2(1 / p_int) + log2(1 / eps_int)
    pi_raw = top / bottom
    pi = to_rational(pi_raw, PI_MAX_DENOMINATOR)
    clamped = pi > 1
    if clamped:
        pi = Fraction(1)
    prov["pi"] = ("(max{log2 log2(1/p), log2 phi(|F|)} + log2(1/eps_int)) / (log2(1/p) + log2(1/eps_int))"
                  + ("" if isinstance(pi_raw, Fraction) else f", rationalized to denominator <= {PI_MAX_DENOMINATOR}")
                  + (", clamped to 1" if clamped else ""))
    return ResolvedPlan(mode="full", p_int=p_int, eps_int=eps_int, f_size=f_size, layer_count=L,
                        delta=delta, heavy_thresholds=thresholds, heavy_min_counts=min_counts,
                        pi=pi, pi_raw=pi_raw, pi_clamped=clamped, size_clamped=raw_size > n,
                        provenance=prov, **common)


# ---------------------------------------------------------------------------
# initial sample


@dataclass(frozen=True)
class InitialSample:
    indices: tuple[int, ...]
    points: PointSet
    retries: int
    report: ViolationReport | None


def _certified_uniform(points, catalog, size, p, eps, retries, gen, stage) -> InitialSample:
    n = points.n
    if size >= n:
        return InitialSample(tuple(range(n)), points, 0, None)
    best = None
    for attempt in range(retries):
        idx = tuple(sorted(int(i) for i in gen.choice(n, size=size, replace=False)))
        rep = check_relative(catalog, uniform_measure(idx), p, eps, limit=5)
        if rep.passed:
            return InitialSample(idx, points.subset(idx), attempt, rep)
        if best is None or rep.violation_count < best.violation_count:
            best = rep
    raise InitialSampleError(stage, f"no certified sample of size {size} in {retries} attempts",
                             {"best_attempt": best.to_dict() if best else None})


def initial_sample(points: PointSet, family: RangeFamily | str, plan: ResolvedPlan, rng, *,
                   catalog: RangeCatalog | None = None, retries: int = 64) -> InitialSample:
    """Uniform sample ``F`` of ``plan.f_size`` points, certified against every range of ``X``."""
    if plan.mode != "full":
        raise ValueError("initial_sample needs a plan in full mode")
    if plan.f_size >= points.n:
        return InitialSample(tuple(range(points.n)), points, 0, None)
    if catalog is None:
        catalog = canonical_ranges(points, family)
    gen = as_generator(rng, "initial_sample")
    return _certified_uniform(points, catalog, plan.f_size, plan.p_int, plan.eps_int, retries, gen,
                              "initial_sample")


# ---------------------------------------------------------------------------
# layers and heavy/light split


@dataclass(frozen=True)
class LayerStructure:
    layers: np.ndarray      # layer index per catalog range
    layer_count: int

    def histogram(self) -> list[int]:
        return np.bincount(self.layers, minlength=self.layer_count + 1).tolist()


def layer_of(measure: Fraction, p: Fraction, layer_count: int) -> int:
    if measure < p:
        return 0
    i = 1
    while i < layer_count and measure >= Fraction(2) ** i * p:
        i += 1
    return i


def assign_layers(catalog_F: RangeCatalog, plan: ResolvedPlan) -> LayerStructure:
    """Layer ``i >= 1`` holds measures in ``[2^(i-1) p, 2^i p)``; layer 0 those below ``p``.

    Everything at or above ``2^(L-1) p`` lands in the top layer ``L``.
    """
    nf = catalog_F.ground_size
    pa, pb = plan.p_int.numerator, plan.p_int.denominator
    L = plan.layer_count
    s = exact_array(catalog_F.sizes, pb)
    layers = np.zeros(len(catalog_F), dtype=np.int64)
    for i in range(1, L + 1):
        layers[s * pb >= (1 << (i - 1)) * pa * nf] = i
    return LayerStructure(layers, L)


@dataclass(frozen=True)
class HeavyLightPartition:
    heavy: tuple[int, ...]
    light: tuple[int, ...]
    counts: np.ndarray          # (layer_count + 1, |F|) incidence counts per layer

    @property
    def light_mask(self) -> np.ndarray:
        m = np.zeros(self.counts.shape[1], dtype=bool)
        m[list(self.light)] = True
        return m


def classify_objects(catalog_F: RangeCatalog, layers: LayerStructure, plan: ResolvedPlan) -> HeavyLightPartition:
    nf = catalog_F.ground_size
    counts = np.zeros((layers.layer_count + 1, nf), dtype=np.int64)
    heavy = np.zeros(nf, dtype=bool)
    for i in range(layers.layer_count + 1):
        sel = layers.layers == i
        if sel.any():
            counts[i] = _bits.column_counts(catalog_F.words[sel], nf)
        heavy |= counts[i] >= plan.heavy_min_counts[i]
    H = tuple(int(j) for j in np.flatnonzero(heavy))
    Lt = tuple(int(j) for j in np.flatnonzero(~heavy))
    if 2 * len(Lt) < nf:
        warnings.warn(f"only {len(Lt)} of {nf} objects are light", AnalysisAssumptionWarning, stacklevel=2)
    return HeavyLightPartition(H, Lt, counts)


# ---------------------------------------------------------------------------
# coins and bad events


@dataclass(frozen=True)
class CoinVector:
    values: np.ndarray      # one bool per light object, in partition order

    def __len__(self) -> int:
        return self.values.size

    def chosen(self, partition: HeavyLightPartition) -> tuple[int, ...]:
        light = np.asarray(partition.light, dtype=np.int64)
        return tuple(int(j) for j in light[self.values])


def _coins(size: int, pi: Fraction, gen: np.random.Generator) -> np.ndarray:
    if pi == 1:
        return np.ones(size, dtype=bool)
    return gen.integers(0, pi.denominator, size=size, dtype=np.int64) < pi.numerator


def draw_coins(L_size: int, pi, rng) -> CoinVector:
    """Independent coins, each exactly ``pi = a/b`` (uniform integer in ``[0, b)`` below ``a``)."""
    pi = frac(pi)
    if not 0 < pi <= 1:
        raise ValueError("pi must lie in (0, 1]")
    if L_size < 0:
        raise ValueError("L_size must be nonnegative")
    return CoinVector(_coins(L_size, pi, as_generator(rng, "coins")))


@dataclass(frozen=True)
class BadEvent:
    kind: str                       # "A_tau" | "B_size"
    side: str                       # "lower" | "upper"
    dependency: tuple[int, ...]     # F-indices of the light objects the event reads
    range_id: int | None = None
    layer: int | None = None
    case: str | None = None         # "geq_threshold" | "lt_threshold" | "layer0"

    @property
    def key(self) -> str:
        return "B" if self.kind == "B_size" else str(self.range_id)


class _EventTable:
    """Integer form of every per-range deviation inequality.

    For ``pi = a/b``, ``eps = ea/eb``, ``p = pa/pb`` and ``t = |tau & L|``,
    ``f = |tau & F1|`` a range is violated when

    * multiplicative case: ``f b eb < t a (eb - ea)`` or ``f b eb > t a (eb + ea)``
    * additive cases:      ``|f b - t a| eb pb > ea 2^(i-1) pa a |L|`` (``2^(i-1)`` -> 1 on layer 0)
    """

    def __init__(self, catalog_F, layers, partition, plan):
        self.words = catalog_F.words
        self.nf = catalog_F.ground_size
        self.layers = layers.layers
        self.light_mask = partition.light_mask
        self.light_row = _bits.pack(self.light_mask[None, :])[0]
        self.nl = len(partition.light)
        pi, eps, p, gamma = plan.pi, plan.eps_int, plan.p_int, plan.gamma
        self.a, self.b = pi.numerator, pi.denominator
        self.ea, self.eb = eps.numerator, eps.denominator
        self.pa, self.pb = p.numerator, p.denominator
        self.ga, self.gb = gamma.numerator, gamma.denominator
        scale = self.a * self.b * self.ea * self.eb * self.pa * self.pb * max(1, self.nf) * (1 << layers.layer_count)
        self.t = exact_array(_bits.intersect_count(self.words, self.light_row), scale)
        lay = self.layers
        pow2 = np.where(lay >= 1, np.left_shift(1, np.maximum(lay - 1, 0)), 1)
        pow2 = exact_array(pow2, scale)
        self.multiplicative = (lay >= 1) & (self.t * self.pb >= pow2 * self.pa * self.nf)
        self.case = np.where(lay == 0, 2, np.where(self.multiplicative, 0, 1))
        self.slack = pow2 * (self.ea * self.pa * self.a * self.nl)

    def flags(self, f: np.ndarray):
        a, b, ea, eb, pb = self.a, self.b, self.ea, self.eb, self.pb
        f = f.astype(self.t.dtype)
        m = self.multiplicative
        lower = np.where(m, f * b * eb < self.t * a * (eb - ea), (self.t * a - f * b) * eb * pb > self.slack)
        upper = np.where(m, f * b * eb > self.t * a * (eb + ea), (f * b - self.t * a) * eb * pb > self.slack)
        return lower, upper

    def satisfiable(self) -> np.ndarray:
        """Per range: does some integer ``0 <= f <= |tau & L|`` avoid both sides of the event?"""
        a, b, ea, eb, pb = self.a, self.b, self.ea, self.eb, self.pb
        t = self.t
        m = self.multiplicative
        den_m = b * eb
        den_a = b * eb * pb
        lo_m = -((-(t * a * (eb - ea))) // den_m)
        hi_m = (t * a * (eb + ea)) // den_m
        lo_a = -((-(t * a * eb * pb - self.slack)) // den_a)
        hi_a = (t * a * eb * pb + self.slack) // den_a
        lo = np.maximum(np.where(m, lo_m, lo_a), 0)
        hi = np.minimum(np.where(m, hi_m, hi_a), t)
        return lo <= hi

    def size_event(self, f1_size: int) -> bool:
        return f1_size * self.b * self.gb > (self.gb + self.ga) * self.a * self.nl

    def dependency(self, range_id: int) -> tuple[int, ...]:
        row = _bits.unpack(self.words[range_id][None, :], self.nf)[0] & self.light_mask
        return tuple(int(j) for j in np.flatnonzero(row))

    def event(self, range_id: int, side: str) -> BadEvent:
        case = ("geq_threshold", "lt_threshold", "layer0")[int(self.case[range_id])]
        return BadEvent("A_tau", side, self.dependency(range_id), range_id, int(self.layers[range_id]), case)

    def order(self, bad: np.ndarray) -> np.ndarray:
        """Violated range ids sorted by (layer, range id)."""
        ids = np.flatnonzero(bad)
        return ids[np.lexsort((ids, self.layers[ids]))]


def _chosen_row(partition, coins: CoinVector, nf: int) -> np.ndarray:
    mask = np.zeros(nf, dtype=bool)
    mask[list(coins.chosen(partition))] = True
    return _bits.pack(mask[None, :])[0]


def violated_events(catalog_F: RangeCatalog, layers: LayerStructure, partition: HeavyLightPartition,
                    coins: CoinVector, plan: ResolvedPlan, *, limit: int | None = None) -> list[BadEvent]:
    """Every violated deviation event, ``B`` first, then by (layer, range id).

    ``limit`` caps how many range events are materialized.
    """
    table = _EventTable(catalog_F, layers, partition, plan)
    f = _bits.intersect_count(catalog_F.words, _chosen_row(partition, coins, catalog_F.ground_size))
    lower, upper = table.flags(f)
    out = []
    if table.size_event(int(coins.values.sum())):
        out.append(BadEvent("B_size", "upper", tuple(partition.light)))
    for r in table.order(lower | upper)[:limit]:
        out.append(table.event(int(r), "lower" if lower[r] else "upper"))
    return out


@dataclass
class ResampleStats:
    resample_count: int = 0
    per_event: Counter = field(default_factory=Counter)
    per_layer: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {
            "resample_count": self.resample_count,
            "per_event": {k: v for k, v in sorted(self.per_event.items(), key=lambda kv: (kv[0] != "B", kv[0]))},
            "per_layer": {str(k): v for k, v in sorted(self.per_layer.items(), key=lambda kv: str(kv[0]))},
        }


def moser_tardos(catalog_F: RangeCatalog, layers: LayerStructure, partition: HeavyLightPartition,
                 plan: ResolvedPlan, rng, *, max_resamples: int | None = None) -> tuple[CoinVector, ResampleStats]:
    """Redraw the coins of the first violated event until none is left.

    The oversize event ``B`` is checked first and redraws every light coin;
    otherwise the lowest (layer, range id) violated range redraws the coins of
    its light members.
    """
    cap = max_resamples if max_resamples is not None else 10**6
    gen = as_generator(rng, "moser_tardos")
    nf = catalog_F.ground_size
    table = _EventTable(catalog_F, layers, partition, plan)
    stuck = np.flatnonzero(~table.satisfiable())
    if stuck.size:
        raise UnsatisfiableEvents("moser_tardos", f"{stuck.size} range events cannot hold for any coin vector",
                                  {"count": int(stuck.size),
                                   "examples": [{"range_id": int(r), "layer": int(table.layers[r]),
                                                 "light_members": int(table.t[r])} for r in stuck[:20]]})
    light = np.asarray(partition.light, dtype=np.int64)
    pos = np.full(nf, -1, dtype=np.int64)
    pos[light] = np.arange(light.size)
    values = _coins(light.size, plan.pi, gen)
    chosen = np.zeros(nf, dtype=bool)
    chosen[light[values]] = True
    f = _bits.intersect_count(catalog_F.words, _bits.pack(chosen[None, :])[0])
    stats = ResampleStats()
    while True:
        if table.size_event(int(values.sum())):
            target = light
            key, layer = "B", "B"
        else:
            lower, upper = table.flags(f)
            bad = lower | upper
            if not bad.any():
                break
            r = int(table.order(bad)[0])
            target = np.asarray(table.dependency(r), dtype=np.int64)
            key, layer = str(r), int(table.layers[r])
        if stats.resample_count >= cap:
            lower, upper = table.flags(f)
            size_bad = table.size_event(int(values.sum()))
            surviving = [("B_size", None, None, "upper")] if size_bad else []
            surviving += [("A_tau", int(r), int(table.layers[r]), "lower" if lower[r] else "upper")
                          for r in table.order(lower | upper)[:50]]
            raise ResampleCapExceeded("moser_tardos", f"resample cap {cap} reached",
                                      {"stats": stats.to_dict(), "surviving_events": surviving[:50],
                                       "surviving_count": int(np.count_nonzero(lower | upper)) + int(size_bad)})
        old = chosen[target].copy()
        new = _coins(target.size, plan.pi, gen)
        values[pos[target]] = new
        chosen[target] = new
        on = np.zeros(nf, dtype=bool)
        off = np.zeros(nf, dtype=bool)
        on[target[new & ~old]] = True
        off[target[old & ~new]] = True
        if on.any():
            f += _bits.intersect_count(catalog_F.words, _bits.pack(on[None, :])[0])
        if off.any():
            f -= _bits.intersect_count(catalog_F.words, _bits.pack(off[None, :])[0])
        stats.resample_count += 1
        stats.per_event[key] += 1
        stats.per_layer[layer] += 1
    return CoinVector(values), stats


# ---------------------------------------------------------------------------
# weighted output


@dataclass(frozen=True)
class WeightedSample:
    """Intermediate sample ``F`` (ground indices), chosen light set ``F1`` and heavy set ``H``.

    ``F1`` and ``H`` are positions inside ``F``.
    """

    F_indices: tuple[int, ...]
    F1: tuple[int, ...]
    H: tuple[int, ...]
    pi: Fraction

    @property
    def F_size(self) -> int:
        return len(self.F_indices)

    @property
    def denominator(self) -> Fraction:
        return self.pi * self.F_size

    @property
    def support_size(self) -> int:
        return len(self.F1) + len(self.H)

    def weights(self) -> dict[int, Fraction]:
        """Ground index -> weight for every object of positive weight."""
        out = {self.F_indices[j]: Fraction(1) for j in self.F1}
        out.update({self.F_indices[j]: self.pi for j in self.H})
        return dict(sorted(out.items()))

    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.weights()))

    def sample_measure(self) -> SubsetMeasure:
        """Weighted measure on ranges of ``F`` (positions inside ``F``)."""
        return SubsetMeasure(self.F1, self.H, self.pi, self.denominator)

    def ground_measure(self) -> SubsetMeasure:
        """Weighted measure on ranges of the ground set."""
        return SubsetMeasure(tuple(self.F_indices[j] for j in self.F1),
                             tuple(self.F_indices[j] for j in self.H), self.pi, self.denominator)

    def to_dict(self) -> dict:
        return {"F_indices": list(self.F_indices), "F1": list(self.F1), "H": list(self.H), "pi": str(self.pi)}


def weighted_measure(sample: WeightedSample, range_members) -> Fraction:
    """``(|tau & F1| + pi |tau & H|) / (pi |F|)`` for a range given by positions in ``F``."""
    m = set(range_members)
    if any(not 0 <= j < sample.F_size for j in m):
        raise IndexError("range members must be positions inside F")
    c1 = sum(1 for j in sample.F1 if j in m)
    ch = sum(1 for j in sample.H if j in m)
    return (c1 + sample.pi * ch) / (sample.pi * sample.F_size)


@dataclass
class ConstructionReport:
    plan: ResolvedPlan
    seed: object = None
    f_size: int = 0
    heavy_size: int = 0
    light_size: int = 0
    f1_size: int = 0
    support_size: int = 0
    initial_retries: int = 0
    layer_histogram: list = field(default_factory=list)
    resample: ResampleStats | None = None
    catalog_F_size: int = 0
    warnings: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    @property
    def resample_count(self) -> int | None:
        return None if self.resample is None else self.resample.resample_count

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "plan": self.plan.to_dict(),
            "seed": self.seed if isinstance(self.seed, (int, type(None))) else str(self.seed),
            "sizes": {"F": self.f_size, "H": self.heavy_size, "L": self.light_size, "F1": self.f1_size,
                      "support": self.support_size, "catalog_F": self.catalog_F_size},
            "pi": str(self.plan.pi),
            "initial_retries": self.initial_retries,
            "layer_histogram": self.layer_histogram,
            "resample": self.resample.to_dict() if self.resample else None,
            "clamps": {"pi_clamped": self.plan.pi_clamped, "size_clamped": self.plan.size_clamped},
            "warnings": list(self.warnings),
        }
        if include_timing:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)


def construct(points: PointSet, family: RangeFamily | str, params: ApproxParams, rng=0, *,
              catalog: RangeCatalog | None = None) -> tuple[WeightedSample, ConstructionReport]:
    """Weighted relative ``(p, eps)``-approximation of ``points`` for ``family``.

    ``rng`` is a master seed (stages get derived streams) or a generator
    shared by all stages.  ``catalog`` may pass a precomputed catalog of
    ``points``.
    """
    if isinstance(family, str):
        family = RangeFamily.of(family)
    started = time.perf_counter()
    plan = resolve_plan(points.n, params, family)
    report = ConstructionReport(plan, seed=rng if isinstance(rng, int) else None)
    n = points.n

    def finish(sample: WeightedSample) -> tuple[WeightedSample, ConstructionReport]:
        report.f_size = sample.F_size
        report.heavy_size = len(sample.H)
        report.f1_size = len(sample.F1)
        report.support_size = sample.support_size
        report.wall_clock_seconds = time.perf_counter() - started
        return sample, report

    if plan.mode == "degenerate_whole_set":
        report.light_size = n
        return finish(WeightedSample(tuple(range(n)), tuple(range(n)), (), Fraction(1)))

    if plan.mode != "full":
        if plan.f_size >= n:
            report.light_size = n
            return finish(WeightedSample(tuple(range(n)), tuple(range(n)), (), Fraction(1)))
        if catalog is None:
            catalog = canonical_ranges(points, family)
        init = _certified_uniform(points, catalog, plan.f_size, plan.p, plan.eps, params.initial_retries,
                                  as_generator(rng, "fallback_sample"), "fallback_sample")
        report.initial_retries = init.retries
        report.light_size = len(init.indices)
        k = len(init.indices)
        return finish(WeightedSample(init.indices, tuple(range(k)), (), Fraction(1)))

    if plan.f_size < n and catalog is None:
        catalog = canonical_ranges(points, family)
    init = initial_sample(points, family, plan, as_generator(rng, "initial_sample"), catalog=catalog,
                          retries=params.initial_retries)
    report.initial_retries = init.retries
    if init.indices == tuple(range(n)) and catalog is not None:
        catalog_F = catalog
    else:
        catalog_F = canonical_ranges(init.points, family, force_large_n=True)
    report.catalog_F_size = len(catalog_F)

    layers = assign_layers(catalog_F, plan)
    report.layer_histogram = layers.histogram()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AnalysisAssumptionWarning)
        partition = classify_objects(catalog_F, layers, plan)
    for w in caught:
        report.warnings.append(str(w.message))
        log.warning("%s", w.message)
    report.light_size = len(partition.light)

    if partition.light:
        coins, stats = moser_tardos(catalog_F, layers, partition, plan, as_generator(rng, "moser_tardos"),
                                    max_resamples=params.mt_max_resamples)
    else:
        coins, stats = CoinVector(np.zeros(0, dtype=bool)), ResampleStats()
    report.resample = stats
    F1 = coins.chosen(partition)
    sample = WeightedSample(init.indices, F1, partition.heavy, plan.pi)

    tl = catalog_F.intersect_counts(partition.light)
    th = catalog_F.intersect_counts(partition.heavy)
    if not np.array_equal(tl + th, catalog_F.sizes):
        raise ConstructionError("partition", "|tau & F| != |tau & L| + |tau & H| for some range")
    return finish(sample)


def final_guarantee_eps(plan: ResolvedPlan) -> Fraction:
    """Error level the layered stage guarantees against ``F``: twice the internal eps."""
    return 2 * plan.eps_int
