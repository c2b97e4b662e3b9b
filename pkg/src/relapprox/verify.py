"""Exact certification against full range catalogs.

Every comparison is done on integers: measures are carried as
``numerator_array / common_denominator`` and cross-multiplied against the
ground measure ``size / n`` and the rational ``p`` and ``eps``.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _bits
from ._exact import exact_array, frac, log2
from .points import PointSet
from .ranges import CanonicalRange, RangeCatalog, RangeFamily, canonical_ranges
from .rng import as_generator


@dataclass(frozen=True)
class SubsetMeasure:
    """``(|tau & unit| + weight * |tau & fractional|) / total`` over ground indices.

    With the defaults this is the uniform measure of the subset ``unit``.
    """

    unit: tuple[int, ...]
    fractional: tuple[int, ...] = ()
    weight: Fraction = Fraction(1)
    total: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "unit", tuple(sorted(int(i) for i in self.unit)))
        object.__setattr__(self, "fractional", tuple(sorted(int(i) for i in self.fractional)))
        object.__setattr__(self, "weight", frac(self.weight))
        total = self.total
        if total is None:
            total = len(self.unit) + self.weight * len(self.fractional)
        total = frac(total)
        if total <= 0:
            raise ValueError("measure with zero total weight")
        object.__setattr__(self, "total", total)

    @property
    def support(self) -> tuple[int, ...]:
        s = set(self.unit)
        if self.weight > 0:
            s.update(self.fractional)
        return tuple(sorted(s))

    def ratios(self, catalog: RangeCatalog) -> tuple[np.ndarray, int]:
        """Numerators for every catalog range over one shared integer denominator."""
        a, b = self.weight.numerator, self.weight.denominator
        tn, td = self.total.numerator, self.total.denominator
        c1 = catalog.intersect_counts(self.unit)
        num = exact_array(c1, b, td)
        num = num * (b * td)
        if self.fractional:
            ch = exact_array(catalog.intersect_counts(self.fractional), a, td)
            num = num + ch * (a * td)
        return num, b * tn

    def __call__(self, members: Iterable[int]) -> Fraction:
        m = set(members)
        c1 = sum(1 for i in self.unit if i in m)
        ch = sum(1 for i in self.fractional if i in m)
        return (c1 + self.weight * ch) / self.total


def uniform_measure(indices: Iterable[int]) -> SubsetMeasure:
    return SubsetMeasure(tuple(indices))


def ground_measure(n: int) -> SubsetMeasure:
    return SubsetMeasure(tuple(range(n)))


@dataclass(frozen=True)
class Violation:
    range_id: int
    branch: str          # "multiplicative" | "additive"
    side: str            # "lower" | "upper"
    lhs: Fraction        # approximating measure
    rhs: Fraction        # the bound it crossed
    slack: Fraction      # amount by which it crossed (positive)

    def row(self) -> dict:
        return {"range_id": self.range_id, "branch": self.branch, "side": self.side,
                "lhs": str(self.lhs), "rhs": str(self.rhs), "slack": str(self.slack)}


@dataclass(frozen=True)
class ViolationReport:
    p: Fraction
    eps: Fraction
    checked_ranges: int
    violation_count: int
    violations: tuple[Violation, ...]
    max_multiplicative_error: Fraction
    max_additive_error: Fraction

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    # ``pass`` is a keyword; keep the field name from the report schema in to_dict
    def to_dict(self) -> dict:
        return {
            "p": str(self.p),
            "eps": str(self.eps),
            "checked_ranges": self.checked_ranges,
            "violation_count": self.violation_count,
            "violations": [v.row() for v in self.violations],
            "violations_truncated": len(self.violations) < self.violation_count,
            "max_multiplicative_error": str(self.max_multiplicative_error),
            "max_additive_error": str(self.max_additive_error),
            "pass": self.passed,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["range_id", "branch", "side", "lhs", "rhs", "slack"], lineterminator="\n")
        w.writeheader()
        for v in self.violations:
            w.writerow(v.row())
        return buf.getvalue()


def _exact_max_ratio(num: np.ndarray, den: np.ndarray) -> Fraction:
    """``max(num / den)`` computed exactly (``den > 0``)."""
    if num.size == 0:
        return Fraction(0)
    approx = num.astype(float) / den.astype(float)
    top = approx.max()
    if top == 0:  # integer numerators, so a float zero is an exact zero
        return Fraction(0)
    cand = np.flatnonzero(approx >= top * (1 - 1e-9))
    pairs = {(int(num[i]), int(den[i])) for i in cand}
    return max(Fraction(a, b) for a, b in pairs)


def _measure_arrays(catalog: RangeCatalog, measure_of) -> tuple[np.ndarray, int]:
    if hasattr(measure_of, "ratios"):
        return measure_of.ratios(catalog)
    values = [frac(measure_of(r)) for r in catalog]
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    num = np.array([v.numerator * (den // v.denominator) for v in values], dtype=object)
    return exact_array(num), den


def check_relative(catalog: RangeCatalog, measure_of, p, eps, *, limit: int | None = 10_000) -> ViolationReport:
    """Two-branch relative ``(p, eps)`` check of ``measure_of`` on every range.

    Ranges with ground measure ``>= p`` must satisfy ``g(1-eps) <= z <= g(1+eps)``,
    the rest ``|z - g| <= eps p``.  ``measure_of`` is a :class:`SubsetMeasure`
    (fast path) or any callable mapping a :class:`CanonicalRange` to a number.
    At most ``limit`` violations are materialized; ``violation_count`` is exact.
    """
    p, eps = frac(p), frac(eps)
    n = catalog.ground_size
    num, den = _measure_arrays(catalog, measure_of)
    pa, pb = p.numerator, p.denominator
    ea, eb = eps.numerator, eps.denominator
    s = exact_array(catalog.sizes, den, pb, eb)
    num = exact_array(num, n, eb, pb) if num.dtype != object else num
    heavy = s * pb >= pa * n
    diff = num * n - s * den                        # (z - g) * den * n
    mult_lower = heavy & (num * n * eb < s * den * (eb - ea))
    mult_upper = heavy & (num * n * eb > s * den * (eb + ea))
    add_bound = ea * pa * den * n
    add_lower = ~heavy & (-diff * eb * pb > add_bound)
    add_upper = ~heavy & (diff * eb * pb > add_bound)
    bad = mult_lower | mult_upper | add_lower | add_upper
    count = int(np.count_nonzero(bad))

    absdiff = np.abs(diff)
    hv = np.flatnonzero(heavy)
    lt = np.flatnonzero(~heavy)
    max_mult = _exact_max_ratio(absdiff[hv], (s[hv] * den)) if hv.size else Fraction(0)
    max_add = Fraction(int(absdiff[lt].max()), den * n) if lt.size else Fraction(0)

    violations = []
    for i in np.flatnonzero(bad)[: limit if limit is not None else None]:
        i = int(i)
        z = Fraction(int(num[i]), den)
        g = Fraction(int(s[i]), n)
        if heavy[i]:
            branch = "multiplicative"
            if mult_lower[i]:
                side, rhs = "lower", g * (1 - eps)
            else:
                side, rhs = "upper", g * (1 + eps)
        else:
            branch = "additive"
            if add_lower[i]:
                side, rhs = "lower", g - eps * p
            else:
                side, rhs = "upper", g + eps * p
        violations.append(Violation(i, branch, side, z, rhs, abs(z - rhs)))
    return ViolationReport(p, eps, len(catalog), count, tuple(violations), max_mult, max_add)


@dataclass(frozen=True)
class PNetResult:
    passed: bool
    witness: int | None = None
    witness_members: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {"pass": self.passed, "witness": self.witness, "witness_members": list(self.witness_members)}


def check_pnet(catalog: RangeCatalog, support: Iterable[int], p) -> PNetResult:
    """Fails iff some range of measure ``>= p`` contains no support element."""
    p = frac(p)
    n = catalog.ground_size
    support = list(support)
    heavy = catalog.sizes * p.denominator >= p.numerator * n
    hit = catalog.intersect_counts(support) > 0
    missed = np.flatnonzero(heavy & ~hit)
    if missed.size == 0:
        return PNetResult(True)
    i = int(missed[0])
    return PNetResult(False, i, catalog.members(i))


def baseline_size(n: int, p, eps, D_base=4) -> int:
    p, eps, D_base = frac(p), frac(eps), frac(D_base)
    return min(n, math.ceil(D_base * log2(1 / p) / (eps * eps * p)))


def baseline_sample(points: PointSet | int, p, eps, rng, *, D_base=4) -> tuple[int, ...]:
    """Uniform sample without replacement of the classical relative-approximation size."""
    n = points if isinstance(points, int) else points.n
    p, eps = frac(p), frac(eps)
    if not (0 < p < 1 and 0 < eps < 1):
        raise ValueError("p and eps must lie in (0, 1)")
    size = baseline_size(n, p, eps, D_base)
    if size >= n:
        return tuple(range(n))
    gen = as_generator(rng, "baseline")
    return tuple(sorted(int(i) for i in gen.choice(n, size=size, replace=False)))


@dataclass
class ComparisonTable:
    rows: list[dict] = field(default_factory=list)

    COLUMNS = ("seed", "mode", "baseline_size", "baseline_pass", "construct_size", "construct_pass",
               "f_size", "heavy", "light", "f1", "pi", "resample_count")

    @property
    def medians(self) -> dict:
        if not self.rows:
            return {}
        out = {}
        for key in ("baseline_size", "construct_size", "resample_count"):
            vals = [r[key] for r in self.rows if r.get(key) is not None]
            out[key] = statistics.median(vals) if vals else None
        return out

    def to_dict(self) -> dict:
        return {"rows": self.rows, "medians": self.medians}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, self.COLUMNS, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in self.rows:
            w.writerow(r)
        return buf.getvalue()


def compare(points: PointSet, family: RangeFamily | str, p, eps, seeds: Sequence[int], *,
            params=None, catalog: RangeCatalog | None = None) -> ComparisonTable:
    """Baseline uniform sample vs. the layered construction, one row per seed."""
    from .core import ApproxParams, construct

    if not seeds:
        raise ValueError("no seeds")
    if isinstance(family, str):
        family = RangeFamily.of(family)
    if params is None:
        params = ApproxParams(p=p, eps=eps)
    if catalog is None:
        catalog = canonical_ranges(points, family)
    table = ComparisonTable()
    for seed in seeds:
        base = baseline_sample(points, params.p, params.eps, as_generator(seed, "baseline"), D_base=params.D_base)
        base_rep = check_relative(catalog, uniform_measure(base), params.p, params.eps, limit=0)
        sample, report = construct(points, family, params, seed, catalog=catalog)
        rep = check_relative(catalog, sample.ground_measure(), params.p, params.eps, limit=0)
        table.rows.append({
            "seed": seed,
            "mode": report.plan.mode,
            "baseline_size": len(base),
            "baseline_pass": base_rep.passed,
            "construct_size": sample.support_size,
            "construct_pass": rep.passed,
            "f_size": sample.F_size,
            "heavy": len(sample.H),
            "light": report.light_size,
            "f1": len(sample.F1),
            "pi": str(sample.pi),
            "resample_count": report.resample_count,
        })
    return table
