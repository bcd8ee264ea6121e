"""Regenerates the reference statistics used by the stats oracle tests.

Run once with scipy installed; the output is committed and the Rust crate
never calls into Python.
"""
import csv
import sys

import numpy as np
from scipy import stats

OUT = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/stats_oracle.csv"


def fmt(v):
    return ";".join(repr(float(x)) for x in v)


def main():
    rng = np.random.default_rng(20230131)
    cases = [
        ("shift_by_one", [1, 2, 3, 4, 5], [2, 3, 4, 5, 6]),
        ("heteroscedastic", [10.1, 9.8, 10.3, 10.0, 9.9, 10.2], [7.0, 13.5, 9.1, 15.2, 4.4, 11.8, 12.9, 6.3]),
        ("variance_ratio_4", list(rng.normal(0.0, 1.0, 25)), list(rng.normal(0.3, 2.0, 30))),
        ("unbalanced", list(rng.normal(0.1, 0.3, 12)), list(rng.normal(-0.05, 0.25, 60))),
        ("rsca_like", list(np.tanh(rng.normal(0.1, 0.4, 45))), list(np.tanh(rng.normal(0.0, 0.5, 80)))),
        ("small", [0.2, 0.4], [0.1, 0.5, 0.3]),
    ]
    rows = []
    for name, x, y in cases:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        r = stats.ttest_ind(x, y, equal_var=True)
        rows.append((name, "student", x, y, r.statistic, len(x) + len(y) - 2, r.pvalue))
        r = stats.ttest_ind(x, y, equal_var=False)
        vx, vy = x.var(ddof=1) / len(x), y.var(ddof=1) / len(y)
        df = (vx + vy) ** 2 / (vx**2 / (len(x) - 1) + vy**2 / (len(y) - 1))
        rows.append((name, "welch", x, y, r.statistic, df, r.pvalue))
        r = stats.levene(x, y, center="mean")
        rows.append((name, "levene_mean", x, y, r.statistic, len(x) + len(y) - 2, r.pvalue))
        r = stats.levene(x, y, center="median")
        rows.append((name, "levene_median", x, y, r.statistic, len(x) + len(y) - 2, r.pvalue))
    for name, n, noise in [("corr_strong", 30, 0.3), ("corr_weak", 45, 3.0), ("corr_small", 6, 1.0)]:
        x = rng.normal(0, 1, n)
        y = 0.8 * x + rng.normal(0, noise, n)
        r = stats.pearsonr(x, y)
        rows.append((name, "pearson", x, y, r.statistic, n - 2, r.pvalue))
    with open(OUT, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["case", "test", "x", "y", "statistic", "df", "p_value"])
        for name, test, x, y, s, df, p in rows:
            w.writerow([name, test, fmt(x), fmt(y), repr(float(s)), repr(float(df)), repr(float(p))])


if __name__ == "__main__":
    main()
