"""Independent reference computations used only by tests."""

import math


def gini_pairwise(xs):
    n = len(xs)
    mean = sum(xs) / n
    if mean == 0:
        return 0.0
    return sum(abs(a - b) for a in xs for b in xs) / (2 * n * n * mean)


def pearson_cov(xs, ys):
    """r = cov / (sd_x sd_y) with population moments, two-pass."""
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / n
    sx = math.sqrt(sum((x - mx) ** 2 for x in xs) / n)
    sy = math.sqrt(sum((y - my) ** 2 for y in ys) / n)
    if sx == 0 or sy == 0:
        return 0.0
    return cov / (sx * sy)


def quantile_type7(values, p):
    """Hyndman-Fan type 7 via 1-based order statistic h = (n - 1) p + 1."""
    xs = sorted(values)
    h = (len(xs) - 1) * p + 1
    lo = int(h)
    if lo >= len(xs):
        return float(xs[-1])
    return xs[lo - 1] + (h - lo) * (xs[lo] - xs[lo - 1])


def tukey_oracle(values):
    xs = sorted(values)
    q1, med, q3 = (quantile_type7(xs, p) for p in (0.25, 0.5, 0.75))
    lo, hi = q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1)
    kept = [x for x in xs if lo <= x <= hi]
    return {
        "min": xs[0], "q1": q1, "median": med, "q3": q3, "max": xs[-1],
        "whisker_low": min(kept), "whisker_high": max(kept),
        "outliers": [x for x in xs if x < lo or x > hi],
    }


def slope_closed_form(xs, ys):
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxy = sum(x * y for x, y in zip(xs, ys))
    sxx = sum(x * x for x in xs)
    return (n * sxy - sx * sy) / (n * sxx - sx * sx)
