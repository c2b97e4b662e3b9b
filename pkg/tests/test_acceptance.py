"""Acceptance criteria 1-8, one result line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import json
import math
import statistics
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import CRITERIA  # noqa: E402
from oracles import naive_box_catalog, naive_halfspace_catalog  # noqa: E402
from relapprox.core import (ApproxParams, ConstructionError, ResampleCapExceeded, assign_layers,  # noqa: E402
                            classify_objects, construct, layer_of, resolve_plan, violated_events)
from relapprox.core import CoinVector  # noqa: E402
from relapprox.harness import ExperimentConfig, generate_points, run  # noqa: E402
from relapprox.points import PointSet  # noqa: E402
from relapprox.ranges import RangeFamily, canonical_ranges, fitted_constant, incidence_counts, \
    well_behaved_profile  # noqa: E402
from relapprox.verify import check_pnet, check_relative  # noqa: E402

F = Fraction
MATRIX = [("halfplanes2d", 50), ("halfplanes2d", 100), ("halfplanes2d", 200), ("rects2d", 50), ("rects2d", 100),
          ("halfspaces3d", 40), ("halfspaces3d", 80), ("boxes3d", 40), ("boxes3d", 80)]
PS = (F(1, 16), F(1, 32))
EPSS = (F(1, 4), F(1, 2))
SEEDS = range(25)

# the one matrix cell where the coin stage is feasible on F = X (see the decisions ledger)
CORE_CELL = ("halfplanes2d", 200, F(1, 16), F(1, 2))


def _generator(family: str) -> str:
    return "uniform_square" if RangeFamily.of(family).dim == 2 else "uniform_cube"


def _points(family: str, n: int, seed: int) -> PointSet:
    return generate_points(_generator(family), n, seed, dim=RangeFamily.of(family).dim)


def _coin_stage_certificate(points, family, params, seed, catalog):
    """Construct, then re-derive the layered structures and check the final coins independently."""
    sample, report = construct(points, family, params, seed, catalog=catalog)
    plan = report.plan
    if plan.mode != "full":
        return sample, report, None
    layers = assign_layers(catalog, plan)
    part = classify_objects(catalog, layers, plan)
    light_pos = {j: k for k, j in enumerate(part.light)}
    values = np.zeros(len(part.light), dtype=bool)
    for j in sample.F1:
        values[light_pos[j]] = True
    events = violated_events(catalog, layers, part, CoinVector(values), plan)
    size_ok = len(sample.F1) <= (1 + plan.gamma) * plan.pi * len(part.light)
    return sample, report, (events == [] and size_ok)


@pytest.fixture(scope="module")
def matrix_results():
    """Criteria 1-3 over the full matrix with default constants (900 runs)."""
    out = {"runs": 0, "failures": [], "modes": {}, "coin_stage_runs": 0, "coin_failures": [],
           "cap_hits": 0, "resamples": []}
    for family, n in MATRIX:
        for seed in SEEDS:
            pts = _points(family, n, seed)
            cat = canonical_ranges(pts, family)
            for p in PS:
                for eps in EPSS:
                    out["runs"] += 1
                    params = ApproxParams(p, eps)
                    try:
                        sample, report, cert = _coin_stage_certificate(pts, family, params, seed, cat)
                    except ResampleCapExceeded:
                        out["cap_hits"] += 1
                        out["failures"].append((family, n, p, eps, seed, "cap"))
                        continue
                    except ConstructionError as exc:
                        out["failures"].append((family, n, p, eps, seed, exc.stage))
                        continue
                    mode = report.plan.mode
                    out["modes"][mode] = out["modes"].get(mode, 0) + 1
                    rep = check_relative(cat, sample.ground_measure(), p, eps, limit=1)
                    net = check_pnet(cat, sample.support(), p)
                    if not (rep.passed and net.passed):
                        out["failures"].append((family, n, p, eps, seed, "verify"))
                    if cert is not None:
                        out["coin_stage_runs"] += 1
                        out["resamples"].append(report.resample_count)
                        if not cert:
                            out["coin_failures"].append((family, n, p, eps, seed))
            del cat
    return out


@pytest.fixture(scope="module")
def core_supplement():
    """The coin stage exercised on F = X for the feasible cell, 25 seeds."""
    family, n, p, eps = CORE_CELL
    out = {"runs": 0, "verify_fail": 0, "cert_fail": 0, "cap_hits": 0, "other": 0, "resamples": [],
           "support": []}
    params = ApproxParams(p, eps, core_on_whole_set=True)
    for seed in SEEDS:
        pts = _points(family, n, seed)
        cat = canonical_ranges(pts, family)
        out["runs"] += 1
        try:
            sample, report, cert = _coin_stage_certificate(pts, family, params, seed, cat)
        except ResampleCapExceeded:
            out["cap_hits"] += 1
            continue
        except ConstructionError:
            out["other"] += 1
            continue
        out["resamples"].append(report.resample_count)
        out["support"].append(sample.support_size)
        if not cert:
            out["cert_fail"] += 1
        rep = check_relative(cat, sample.ground_measure(), p, eps, limit=1)
        if not (rep.passed and check_pnet(cat, sample.support(), p).passed):
            out["verify_fail"] += 1
    return out


def _record(k: int, ok: bool, detail: str) -> None:
    CRITERIA[k] = (ok, detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_1_end_to_end(matrix_results):
    r = matrix_results
    ok = r["runs"] == len(MATRIX) * len(PS) * len(EPSS) * len(SEEDS) and not r["failures"]
    _record(1, ok, f"{r['runs']} runs, {len(r['failures'])} failures; modes {r['modes']}")
    assert ok, r["failures"][:10]


def test_criterion_2_proposition_certificate(matrix_results, core_supplement):
    r, s = matrix_results, core_supplement
    ok_matrix = not r["coin_failures"]
    ok_supp = s["cert_fail"] == 0 and s["verify_fail"] == 0 and s["cap_hits"] == 0 and s["other"] == 0
    detail = (f"matrix: {r['coin_stage_runs']}/{r['runs']} runs reach the coin stage under default constants, "
              f"{len(r['coin_failures'])} uncertified; F = X supplement {CORE_CELL[0]} n={CORE_CELL[1]} "
              f"p={CORE_CELL[2]} eps={CORE_CELL[3]}: {s['runs'] - s['cert_fail'] - s['cap_hits'] - s['other']}"
              f"/{s['runs']} with no violated event and |F1| <= (1+gamma) pi |L|, "
              f"median support {statistics.median(s['support']) if s['support'] else None} of {CORE_CELL[1]}")
    _record(2, ok_matrix and ok_supp, detail)
    assert ok_matrix and ok_supp


def test_criterion_3_resampler_terminates(matrix_results, core_supplement):
    r, s = matrix_results, core_supplement
    counts = r["resamples"] + s["resamples"]
    ok = r["cap_hits"] == 0 and s["cap_hits"] == 0
    detail = (f"cap hits: matrix {r['cap_hits']}, supplement {s['cap_hits']}; resample count over "
              f"{len(counts)} coin-stage runs: median {statistics.median(counts) if counts else None}, "
              f"max {max(counts) if counts else None}")
    _record(3, ok, detail)
    assert ok


def _small_instances():
    rng = np.random.default_rng(2024)
    for n in (10, 12):
        for d in (2, 3):
            yield PointSet(np.round(rng.random((n, d)), 2).tolist())
            yield PointSet(rng.integers(0, 3, (n, d)).tolist())
    t = np.arange(12)
    yield PointSet(np.stack([t % 4, t // 4], 1).tolist())
    yield PointSet(np.stack([t, 2 * t, t % 3], 1).tolist())


def test_criterion_4_oracle_equivalence():
    checked, mismatches, conservation = 0, [], True
    for pts in _small_instances():
        kinds = ("halfplanes2d", "rects2d") if pts.dim == 2 else ("halfspaces3d", "boxes3d")
        for kind in kinds:
            cat = canonical_ranges(pts, kind)
            expect = naive_box_catalog(pts.points) if RangeFamily.of(kind).is_box \
                else naive_halfspace_catalog(pts.as_float())
            checked += 1
            if set(cat.member_sets()) != expect or len(cat) != len(expect):
                mismatches.append((kind, pts.n))
            conservation &= int(incidence_counts(cat, pts.n).sum()) == int(cat.sizes.sum())
    ok = not mismatches and conservation
    _record(4, ok, f"{checked} catalogs (n <= 12, all families) equal the naive oracle: "
                   f"{checked - len(mismatches)}/{checked}; incidence conservation {'holds' if conservation else 'fails'}")
    assert ok, mismatches


def test_criterion_5_exact_examples():
    results = {}
    results["convex circle n=20 -> 382"] = len(canonical_ranges(generate_points("convex_circle", 20, 0),
                                                                 "halfplanes2d")) == 382
    results["collinear rects -> 11"] = len(canonical_ranges(PointSet([(0, 0), (1, 1), (2, 2), (3, 3)]),
                                                             "rects2d")) == 11
    results["layer(1/8 at p=1/16) = 2"] = layer_of(F(1, 8), F(1, 16), 4) == 2
    results["layer(p) = 1"] = layer_of(F(1, 16), F(1, 16), 4) == 1
    results["layer(p/2) = 0"] = layer_of(F(1, 32), F(1, 16), 4) == 0
    C = F(8) * F(1, 16) / 6
    plan = resolve_plan(10 ** 9, ApproxParams(F(1, 16), F(1, 4), C=C, eps_scale=1), "halfplanes2d")
    results["threshold 8^3 = 512"] = plan.delta[1] == 8 and plan.heavy_thresholds[1] == 512
    plan = resolve_plan(10 ** 9, ApproxParams(F(1, 2 ** 16), F(1, 4), eps_scale=1), "halfplanes2d")
    results["pi = 1/3"] = plan.pi == F(1, 3)
    ok = all(results.values())
    _record(5, ok, ", ".join(f"{k}: {'ok' if v else 'WRONG'}" for k, v in results.items()))
    assert ok


def test_criterion_6_profiles():
    notes, ok = [], True
    for n in (50, 100, 200):
        pts = generate_points("convex_circle", n, 0)
        rows = well_behaved_profile(pts, "halfplanes2d", list(range(n + 1)))
        worst = max(r.count - (2 * n * r.k + 2) for r in rows)
        ok &= worst <= 0
        notes.append(f"halfplanes n={n} max(count - (2nk+2)) = {worst}")
    betas = []
    for n in (50, 100):
        pts = generate_points("uniform_square", n, 0)
        rows = well_behaved_profile(pts, "rects2d", list(range(1, n + 1)))
        betas.append(fitted_constant(rows))
    beta = max(betas)
    for n in (50, 100):
        pts = generate_points("uniform_square", n, 0)
        rows = well_behaved_profile(pts, "rects2d", list(range(1, n + 1)))
        ok &= all(r.count / (n * math.log2(n) * r.k ** 2) <= beta for r in rows)
    notes.append(f"rects2d single fitted beta = {beta:.4f} (per n: {', '.join(f'{b:.4f}' for b in betas)})")
    _record(6, ok, "; ".join(notes))
    assert ok


def test_criterion_7_determinism(tmp_path):
    base = dict(generator="uniform_square", n=200, family="halfplanes2d", p="1/16", eps="1/2", seeds=[0, 1, 2],
                constants={"core_on_whole_set": True}, profile_ks=[1, 2, 4])
    texts = []
    for name in ("a", "b"):
        report = run(ExperimentConfig.from_dict({**base, "out_dir": str(tmp_path / name)}))
        doc = json.loads((tmp_path / name / "report.json").read_text(encoding="utf-8"))
        doc.pop("timing")
        doc.pop("out_dir")
        texts.append(json.dumps(doc, sort_keys=True, indent=2))
        csvs = [(tmp_path / name / f).read_bytes() for f in ("violations.csv", "comparison.csv", "checks.csv",
                                                             "profile.csv")]
        texts.append(csvs)
    ok = texts[0] == texts[2] and texts[1] == texts[3] and report.passed
    _record(7, ok, f"two runs of a 3-seed coin-stage config: report.json identical outside timing/out_dir, "
                   f"CSV tables byte-identical; hash {report.reproducibility_hash[:16]}")
    assert ok


def test_criterion_8_fallback_modes():
    # (mode, p, eps, D_base that puts the uniform sample below n = 200)
    regimes = [("constant_fallback", F(1, 4), F(1, 2), F(2)),
               ("absolute_fallback", F(1, 4), F(1, 10), F(19, 10)),
               ("standard_fallback", F(1, 8), F(1, 16), F(95, 3072))]
    notes, ok = [], True
    family, n = "halfplanes2d", 200
    cats = {seed: canonical_ranges(_points(family, n, seed), family) for seed in range(10)}
    for mode, p, eps, small in regimes:
        for label, consts in (("default constants", {}), (f"D_base = {small}", {"D_base": small})):
            params = ApproxParams(p, eps, **consts)
            passed, sizes, errors = 0, [], 0
            for seed in range(10):
                pts = cats[seed].points
                try:
                    sample, report = construct(pts, family, params, seed, catalog=cats[seed])
                except ConstructionError:
                    errors += 1
                    continue
                routed = report.plan.mode == mode
                rep = check_relative(cats[seed], sample.ground_measure(), p, eps, limit=1)
                net = check_pnet(cats[seed], sample.support(), p)
                passed += routed and rep.passed and net.passed
                sizes.append(sample.support_size)
            ok &= passed == 10
            notes.append(f"{mode} [{label}]: {passed}/10 routed and verified, support {sorted(set(sizes))}"
                         + (f", {errors} certification failures" if errors else ""))
    _record(8, ok, "; ".join(notes))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
