"""Exhaustive range catalogs and the shallow-range profile.

Builds the catalog of every distinct halfplane range over points in convex
position, checks the n(n-1)+2 count, then compares shallow counts for
rectangles against n log2(n) k^2.
"""

from relapprox.harness import generate_points
from relapprox.ranges import canonical_ranges, fitted_constant, well_behaved_profile

pts = generate_points("convex_circle", 20, seed=0)
cat = canonical_ranges(pts, "halfplanes2d")
print(f"20 points on a circle: {len(cat)} halfplane ranges (n(n-1)+2 = {20 * 19 + 2})")

r = cat[5]
print(f"range {5}: members {r.members}, realized by {r.witness}")

pts = generate_points("uniform_square", 60, seed=1)
rows = well_behaved_profile(pts, "rects2d", [1, 2, 4, 8, 16])
print("\nrectangles, 60 uniform points")
print(f"{'k':>3} {'count':>7} {'n log2(n) k^2':>14}")
for row in rows:
    print(f"{row.k:>3} {row.count:>7} {row.bound:>14.0f}")
print(f"fitted beta = {fitted_constant(rows):.4f}")
