"""``relapprox`` command line: run, profile, compare."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import (GENERATORS, PROFILE_COLUMNS, ExperimentConfig, generate_points, profile_rows, rows_to_csv,
                      run)
from .ranges import KINDS, RangeFamily, canonical_ranges
from .verify import compare


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _default_generator(family: str) -> str:
    return "uniform_square" if RangeFamily.of(family).dim == 2 else "uniform_cube"


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=_int_list, help="seed or comma-separated seeds (overrides the config)")
    sp.add_argument("--out-dir", help="directory for report.json and CSV tables")
    sp.add_argument("--force-large-n", action="store_true", help="allow n above the family enumeration cap")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relapprox", description="Weighted relative (p, eps)-approximations, "
                                 "certified against exhaustive range catalogs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="end-to-end experiment from a JSON config")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--generator", choices=GENERATORS)
    r.add_argument("--family", choices=KINDS)
    r.add_argument("--n", type=int)
    r.add_argument("--p")
    r.add_argument("--eps")
    _common(r)

    p = sub.add_parser("profile", help="shallow-range counts against n phi(n) k^c")
    p.add_argument("--family", required=True, choices=KINDS)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--ks", required=True, type=_int_list)
    p.add_argument("--generator", choices=GENERATORS)
    _common(p)

    c = sub.add_parser("compare", help="baseline uniform sample vs. construction, one row per seed")
    c.add_argument("--family", required=True, choices=KINDS)
    c.add_argument("--n", required=True, type=int)
    c.add_argument("--p", required=True)
    c.add_argument("--eps", required=True)
    c.add_argument("--generator", choices=GENERATORS)
    c.add_argument("--constants", type=json.loads, default={}, help="JSON object of constant overrides")
    _common(c)
    return ap


def _cmd_run(args) -> int:
    data = json.loads(args.config.read_text(encoding="utf-8"))
    for key in ("generator", "family", "n", "p", "eps"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.seed is not None:
        data["seeds"] = args.seed
    if args.out_dir is not None:
        data["out_dir"] = args.out_dir
    if args.force_large_n:
        data["force_large_n"] = True
    data.setdefault("out_dir", ".")
    config = ExperimentConfig.from_dict(data)
    report = run(config)
    s = report.summary
    print(f"{s['passed_runs']}/{s['runs']} runs passed; modes {s['modes']}; "
          f"median support {s['median_support_size']} vs baseline {s['median_baseline_size']}")
    if s["errors"]:
        print(f"stage failures: {s['errors']}")
    print(f"report: {Path(config.out_dir) / 'report.json'}  hash {report.reproducibility_hash[:16]}")
    return 0 if report.passed else 1


def _cmd_profile(args) -> int:
    gen = args.generator or _default_generator(args.family)
    seed = args.seed[0] if args.seed else 0
    pts = generate_points(gen, args.n, seed, dim=RangeFamily.of(args.family).dim)
    rows, beta = profile_rows(pts, args.family, sorted(args.ks), force_large_n=args.force_large_n)
    text = rows_to_csv(rows, PROFILE_COLUMNS)
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "profile.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    print(f"fitted beta = {beta!r}")
    return 0


def _cmd_compare(args) -> int:
    from .core import ApproxParams

    gen = args.generator or _default_generator(args.family)
    seeds = args.seed or [0]
    fam = RangeFamily.of(args.family)
    pts = generate_points(gen, args.n, seeds[0], dim=fam.dim)
    catalog = canonical_ranges(pts, fam, force_large_n=args.force_large_n)
    params = ApproxParams(args.p, args.eps, **args.constants)
    table = compare(pts, fam, params.p, params.eps, seeds, params=params, catalog=catalog)
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table.to_csv())
    sys.stdout.write(table.to_csv())
    print(f"medians: {table.medians}")
    return 0 if all(r["construct_pass"] for r in table.rows) else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return {"run": _cmd_run, "profile": _cmd_profile, "compare": _cmd_compare}[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"relapprox: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
