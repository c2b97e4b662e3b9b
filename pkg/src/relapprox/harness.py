"""Seeded experiment driver: point generation, configs, end-to-end runs, reports.

A run is a pure function of its config.  Wall-clock timings live in a
separate ``timing`` field that the reproducibility hash leaves out.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import statistics
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from ._exact import frac
from .core import ApproxParams, ConstructionError, construct, final_guarantee_eps
from .points import PointSet
from .ranges import RangeFamily, canonical_ranges, fitted_constant, well_behaved_profile
from .rng import stage_rng
from .verify import ComparisonTable, baseline_sample, check_pnet, check_relative, uniform_measure

SCHEMA_VERSION = 1
GENERATORS = ("uniform_square", "uniform_cube", "grid", "convex_circle", "clustered")
CONSTANT_FIELDS = ("A", "C", "D", "D_base", "gamma", "eps_scale", "eps_scale_whole",
                   "initial_retries", "mt_max_resamples", "core_on_whole_set")
CHECKS = ("construct", "verify_F", "verify_X", "pnet")

_DIGITS = 6


def _decimal(x: float) -> Fraction:
    return Fraction(f"{x:.{_DIGITS}f}")


def _orient(a, b, c) -> Fraction:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def in_convex_position(points: Sequence[tuple]) -> bool:
    """Exact check that the points, in the given cyclic order, form a strictly convex polygon."""
    m = len(points)
    if m < 3:
        return True
    signs = {(_orient(points[i], points[(i + 1) % m], points[(i + 2) % m]) > 0) for i in range(m)}
    zero = any(_orient(points[i], points[(i + 1) % m], points[(i + 2) % m]) == 0 for i in range(m))
    return len(signs) == 1 and not zero


def generate_points(kind: str, n: int, seed: int, dim: int = 2) -> PointSet:
    """Deterministic point sets with exact decimal coordinates (at most 6 fractional digits).

    ``uniform_square`` is 2D and ``uniform_cube`` 3D; the other kinds follow ``dim``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if kind not in GENERATORS:
        raise ValueError(f"unknown generator {kind!r}; expected one of {GENERATORS}")
    gen = stage_rng(seed, f"points:{kind}")
    if kind == "uniform_square":
        pts = [tuple(_decimal(x) for x in row) for row in gen.random((n, 2))]
    elif kind == "uniform_cube":
        pts = [tuple(_decimal(x) for x in row) for row in gen.random((n, 3))]
    elif kind == "grid":
        side = math.ceil(n ** (1 / dim) - 1e-9)
        while side ** dim < n:
            side += 1
        pts = []
        for idx in np.ndindex(*(side,) * dim):
            if len(pts) == n:
                break
            pts.append(tuple(Fraction(int(i)) for i in reversed(idx)))
    elif kind == "convex_circle":
        if dim != 2:
            raise ValueError("convex_circle is planar")
        # random rotation, then an even angle grid rounded to 6 digits
        phase = gen.random() * 2 * math.pi / n
        pts = [(_decimal(math.cos(phase + 2 * math.pi * i / n)), _decimal(math.sin(phase + 2 * math.pi * i / n)))
               for i in range(n)]
        if not in_convex_position(pts):
            raise ValueError(f"n={n} too large for convex position at {_DIGITS} digits")
    else:
        k = math.ceil(math.sqrt(n))
        centers = gen.random((k, dim))
        which = gen.integers(0, k, size=n)
        raw = np.clip(centers[which] + 0.04 * gen.standard_normal((n, dim)), 0.0, 1.0)
        pts = [tuple(_decimal(x) for x in row) for row in raw]
    return PointSet(pts)


@dataclass
class ExperimentConfig:
    generator: str
    n: int
    family: str
    p: Fraction
    eps: Fraction
    seeds: list[int]
    constants: dict = field(default_factory=dict)
    out_dir: str | None = None
    force_large_n: bool = False
    profile_ks: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.p, self.eps = frac(self.p), frac(self.eps)
        self.seeds = [int(s) for s in self.seeds]
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        fam = RangeFamily.of(self.family)
        if self.n < 1:
            raise ValueError("n must be at least 1")
        unknown = set(self.constants) - set(CONSTANT_FIELDS)
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        if self.generator == "uniform_square" and fam.dim != 2 or self.generator == "uniform_cube" and fam.dim != 3:
            raise ValueError(f"generator {self.generator} does not match the dimension of {self.family}")
        self.params()  # validates p, eps and the overrides

    def params(self) -> ApproxParams:
        return ApproxParams(self.p, self.eps, **self.constants)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["p"], out["eps"] = str(self.p), str(self.eps)
        out["constants"] = {k: str(v) if isinstance(v, Fraction) else v for k, v in self.constants.items()}
        return out


@dataclass
class Report:
    config: dict
    seeds: list[dict]
    summary: dict
    comparison: ComparisonTable
    violations: list[dict]
    checks: list[dict]
    profile: list[dict] = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.summary["failed_runs"] == 0

    def body(self) -> dict:
        # the output location is not part of the experiment
        config = {k: v for k, v in self.config.items() if k != "out_dir"}
        return {"schema_version": SCHEMA_VERSION, "config": config, "seeds": self.seeds,
                "summary": self.summary, "comparison": self.comparison.to_dict(), "profile": self.profile}

    @property
    def reproducibility_hash(self) -> str:
        blob = json.dumps(self.body(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_dict(self) -> dict:
        out = self.body()
        out["reproducibility_hash"] = self.reproducibility_hash
        out["out_dir"] = self.config.get("out_dir")
        out["timing"] = self.timing
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "report": out / "report.json",
            "violations": out / "violations.csv",
            "comparison": out / "comparison.csv",
            "checks": out / "checks.csv",
            "profile": out / "profile.csv",
        }
        _write(paths["report"], self.to_json())
        _write(paths["violations"], rows_to_csv(self.violations, VIOLATION_COLUMNS))
        _write(paths["comparison"], self.comparison.to_csv())
        _write(paths["checks"], rows_to_csv(self.checks, CHECK_COLUMNS))
        _write(paths["profile"], rows_to_csv(self.profile, PROFILE_COLUMNS))
        return paths


VIOLATION_COLUMNS = ("seed", "check", "range_id", "branch", "side", "lhs", "rhs", "slack")
CHECK_COLUMNS = ("seed", "check", "pass", "violation_count", "max_multiplicative_error", "max_additive_error", "detail")
PROFILE_COLUMNS = ("k", "count", "bound", "exceeds", "ratio")


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def profile_rows(points: PointSet, family: str, ks: Sequence[int], *, catalog=None,
                 force_large_n: bool = False) -> tuple[list[dict], float]:
    rows = well_behaved_profile(points, family, ks, catalog=catalog, force_large_n=force_large_n)
    beta = fitted_constant(rows)
    out = [{"k": r.k, "count": r.count, "bound": repr(float(r.bound)), "exceeds": r.exceeds,
            "ratio": repr(r.count / r.bound) if r.bound else ""} for r in rows]
    return out, beta


def _check_row(seed, name, rep=None, *, passed=None, detail="") -> dict:
    if rep is not None:
        return {"seed": seed, "check": name, "pass": rep.passed, "violation_count": rep.violation_count,
                "max_multiplicative_error": str(rep.max_multiplicative_error),
                "max_additive_error": str(rep.max_additive_error), "detail": detail}
    return {"seed": seed, "check": name, "pass": passed, "violation_count": "", "max_multiplicative_error": "",
            "max_additive_error": "", "detail": detail}


def run_seed(config: ExperimentConfig, seed: int, violation_limit: int = 1000) -> tuple[dict, list[dict], list[dict], dict | None, dict]:
    """One seed end to end.  Returns (seed record, check rows, violation rows, comparison row, timing)."""
    import time

    fam = RangeFamily.of(config.family)
    params = config.params()
    timing: dict = {}
    t0 = time.perf_counter()
    points = generate_points(config.generator, config.n, seed, dim=fam.dim)
    catalog = canonical_ranges(points, fam, force_large_n=config.force_large_n)
    timing["catalog_seconds"] = time.perf_counter() - t0
    record: dict = {"seed": seed, "catalog_size": len(catalog)}
    checks, violations = [], []

    try:
        sample, creport = construct(points, fam, params, seed, catalog=catalog)
    except ConstructionError as exc:
        record["error"] = {"stage": exc.stage, "message": str(exc), "detail": _jsonable(exc.detail)}
        record["pass"] = False
        checks.append(_check_row(seed, "construct", passed=False, detail=exc.stage))
        timing["total_seconds"] = time.perf_counter() - t0
        return record, checks, violations, None, timing
    timing["construct_seconds"] = creport.wall_clock_seconds
    record["construction"] = creport.to_dict(include_timing=False)
    record["sample"] = sample.to_dict()
    checks.append(_check_row(seed, "construct", passed=True))
    plan = creport.plan

    verdicts = []
    if plan.mode == "full":
        if sample.F_indices == tuple(range(points.n)):
            catalog_F = catalog
        else:
            catalog_F = canonical_ranges(points.subset(sample.F_indices), fam, force_large_n=True)
        rep_F = check_relative(catalog_F, sample.sample_measure(), plan.p_int, final_guarantee_eps(plan),
                               limit=violation_limit)
        record["verify_F"] = rep_F.to_dict()
        checks.append(_check_row(seed, "verify_F", rep_F, detail=f"eps={final_guarantee_eps(plan)}"))
        violations += [{"seed": seed, "check": "verify_F", **v.row()} for v in rep_F.violations]
        verdicts.append(rep_F.passed)
    else:
        record["verify_F"] = None
        checks.append(_check_row(seed, "verify_F", passed=True, detail=f"not applicable in {plan.mode}"))

    rep_X = check_relative(catalog, sample.ground_measure(), config.p, config.eps, limit=violation_limit)
    record["verify_X"] = rep_X.to_dict()
    checks.append(_check_row(seed, "verify_X", rep_X, detail=f"eps={config.eps}"))
    violations += [{"seed": seed, "check": "verify_X", **v.row()} for v in rep_X.violations]
    verdicts.append(rep_X.passed)

    pnet = check_pnet(catalog, sample.support(), config.p)
    record["pnet"] = pnet.to_dict()
    checks.append(_check_row(seed, "pnet", passed=pnet.passed,
                             detail="" if pnet.passed else f"range {pnet.witness} missed"))
    verdicts.append(pnet.passed)

    base = baseline_sample(points, config.p, config.eps, seed, D_base=params.D_base)
    rep_B = check_relative(catalog, uniform_measure(base), config.p, config.eps, limit=0)
    record["baseline"] = {"size": len(base), "pass": rep_B.passed, "violation_count": rep_B.violation_count}
    record["pass"] = all(verdicts)
    comparison = {
        "seed": seed, "mode": plan.mode, "baseline_size": len(base), "baseline_pass": rep_B.passed,
        "construct_size": sample.support_size, "construct_pass": rep_X.passed, "f_size": sample.F_size,
        "heavy": len(sample.H), "light": creport.light_size, "f1": len(sample.F1), "pi": str(sample.pi),
        "resample_count": creport.resample_count,
    }
    timing["total_seconds"] = time.perf_counter() - t0
    return record, checks, violations, comparison, timing


def _jsonable(value):
    return json.loads(json.dumps(value, default=str))


def run(config: ExperimentConfig, *, write: bool = True) -> Report:
    """Generate, construct, verify (vs. F and vs. X), p-net check and baseline for every seed."""
    if not config.seeds:
        raise ValueError("no seeds")
    seeds, checks, violations, timing = [], [], [], {}
    table = ComparisonTable()
    for seed in config.seeds:
        record, c, v, comp, t = run_seed(config, seed)
        seeds.append(record)
        checks += c
        violations += v
        if comp is not None:
            table.rows.append(comp)
        timing[str(seed)] = t

    profile = []
    if config.profile_ks:
        fam = RangeFamily.of(config.family)
        pts = generate_points(config.generator, config.n, config.seeds[0], dim=fam.dim)
        profile, beta = profile_rows(pts, config.family, config.profile_ks, force_large_n=config.force_large_n)
    resamples = [r["resample_count"] for r in table.rows if r["resample_count"] is not None]
    summary = {
        "runs": len(seeds),
        "passed_runs": sum(1 for s in seeds if s["pass"]),
        "failed_runs": sum(1 for s in seeds if not s["pass"]),
        "failed_seeds": [s["seed"] for s in seeds if not s["pass"]],
        "modes": dict(sorted(Counter(r["mode"] for r in table.rows).items())),
        "errors": dict(sorted(Counter(s["error"]["stage"] for s in seeds if "error" in s).items())),
        "median_resample_count": statistics.median(resamples) if resamples else None,
        "max_resample_count": max(resamples) if resamples else None,
        "median_support_size": statistics.median(r["construct_size"] for r in table.rows) if table.rows else None,
        "median_baseline_size": statistics.median(r["baseline_size"] for r in table.rows) if table.rows else None,
    }
    if profile:
        summary["profile_fitted_beta"] = repr(beta)
    report = Report(config.to_dict(), seeds, summary, table, violations, checks, profile, timing)
    if write and config.out_dir:
        report.write(config.out_dir)
    return report
