"""The layered heavy/light construction, stage by stage.

With the default constants the intermediate sample would be larger than
a desk-sized input, so the whole set is returned.  ``core_on_whole_set``
runs the layers, heavy/light split and coin resampling on F = X instead;
the result is certified exactly against every halfplane range.
"""

from fractions import Fraction

from relapprox import ApproxParams, canonical_ranges, check_pnet, check_relative, construct, generate_points

p, eps = Fraction(1, 16), Fraction(1, 2)
pts = generate_points("uniform_square", 200, seed=3)
cat = canonical_ranges(pts, "halfplanes2d")
print(f"{pts.n} points, {len(cat)} distinct halfplane ranges")

sample, report = construct(pts, "halfplanes2d", ApproxParams(p, eps), rng=3, catalog=cat)
print(f"default constants -> mode {report.plan.mode}, support {sample.support_size}")
print("  why:", report.plan.provenance["mode"])

params = ApproxParams(p, eps, core_on_whole_set=True)
sample, report = construct(pts, "halfplanes2d", params, rng=3, catalog=cat)
plan = report.plan
print(f"\ncoin stage on F = X: eps_int = {plan.eps_int}, pi = {plan.pi}, layers 0..{plan.layer_count}")
print(f"  layer histogram {report.layer_histogram}")
print(f"  |H| = {report.heavy_size}, |L| = {report.light_size}, |F1| = {report.f1_size}, "
      f"resamples = {report.resample_count}")

rep = check_relative(cat, sample.ground_measure(), p, eps)
print(f"\nsupport {sample.support_size} of {pts.n}; exact check at (p, eps) = ({p}, {eps}): "
      f"{'pass' if rep.passed else 'FAIL'}")
print(f"  worst multiplicative error {rep.max_multiplicative_error} "
      f"(~{float(rep.max_multiplicative_error):.3f}), worst additive error {rep.max_additive_error}")
print(f"  p-net: {'pass' if check_pnet(cat, sample.support(), p).passed else 'FAIL'}")
