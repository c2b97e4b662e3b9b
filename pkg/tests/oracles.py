"""Independent slow oracles used to cross-check the fast paths."""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np
from scipy.optimize import linprog


def halfspace_separable(P: np.ndarray, mask: np.ndarray) -> bool:
    """Margin LP: is there (a, b) with a.x > b on the subset and a.x < b off it?"""
    n, d = P.shape
    if mask.all() or not mask.any():
        return True
    s = np.where(mask, 1.0, -1.0)
    # s_i (b - a.x_i) + t <= 0, maximize t
    A = np.hstack([-s[:, None] * P, s[:, None], np.ones((n, 1))])
    res = linprog(np.r_[np.zeros(d + 1), -1.0], A_ub=A, b_ub=np.zeros(n),
                  bounds=[(-1, 1)] * (d + 1) + [(None, 1)], method="highs")
    return res.status == 0 and -res.fun > 1e-9


def naive_halfspace_catalog(P: np.ndarray) -> set[frozenset[int]]:
    n = len(P)
    out = set()
    for bits in product((False, True), repeat=n):
        mask = np.array(bits, dtype=bool)
        if halfspace_separable(P, mask):
            out.add(frozenset(np.flatnonzero(mask).tolist()))
    return out


def naive_box_catalog(points) -> set[frozenset[int]]:
    """A subset is a box range iff it equals the points inside its own bounding box."""
    n = len(points)
    d = len(points[0])
    out = {frozenset()}
    for m in range(1, 1 << n):
        S = [i for i in range(n) if m >> i & 1]
        lo = [min(points[i][k] for i in S) for k in range(d)]
        hi = [max(points[i][k] for i in S) for k in range(d)]
        inside = [i for i in range(n) if all(lo[k] <= points[i][k] <= hi[k] for k in range(d))]
        if inside == S:
            out.add(frozenset(S))
    return out


def naive_relative_violations(member_sets, n, measure, p, eps) -> list[int]:
    """Range ids whose measure breaks the two-branch definition, by direct Fraction arithmetic."""
    bad = []
    for i, m in enumerate(member_sets):
        g = Fraction(len(m), n)
        z = measure(m)
        if g >= p:
            ok = g * (1 - eps) <= z <= g * (1 + eps)
        else:
            ok = abs(z - g) <= eps * p
        if not ok:
            bad.append(i)
    return bad


def naive_events(member_sets, nf, layers, light, chosen, pi, eps, p, gamma):
    """Violated (range id, side) pairs and the size event, straight from the Fraction inequalities."""
    L = set(light)
    F1 = set(chosen)
    nl = len(L)
    out = []
    for r, m in enumerate(member_sets):
        t = len(m & L)
        f = len(m & F1)
        i = layers[r]
        z = Fraction(f) / (pi * nl) if nl else Fraction(0)
        g = Fraction(t, nl) if nl else Fraction(0)
        if i >= 1 and t >= 2 ** (i - 1) * p * nf:
            lo, hi = g * (1 - eps), g * (1 + eps)
        else:
            slack = eps * p * (2 ** (i - 1) if i >= 1 else 1)
            lo, hi = g - slack, g + slack
        if z < lo:
            out.append((r, "lower"))
        elif z > hi:
            out.append((r, "upper"))
    size_bad = len(F1) > (1 + gamma) * pi * nl
    return out, size_bad
