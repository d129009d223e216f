"""Regenerates stats_reference.json from scipy / statsmodels.

Run: python3 gen_stats_reference.py > stats_reference.json
"""
import json

import numpy as np
from scipy import stats
from statsmodels.stats.multitest import multipletests

rng = np.random.default_rng(20240601)

paired = []
for i in range(20):
    n = int(rng.integers(3, 60))
    base = rng.normal(0.5, 0.2, n)
    treat = base - rng.normal(rng.uniform(-0.1, 0.3), rng.uniform(0.05, 0.3), n)
    res = stats.ttest_rel(base, treat)
    paired.append({
        "baseline": base.tolist(),
        "treatment": treat.tolist(),
        "t": float(res.statistic),
        "p": float(res.pvalue),
    })

holm = []
for i in range(20):
    m = int(rng.integers(1, 12))
    p = rng.uniform(0, 1, m) ** 3
    adj = multipletests(p, method="holm")[1]
    holm.append({"p": p.tolist(), "adjusted": adj.tolist()})

cdf = []
for df in (1, 10, 799):
    for t in (-40.0, -6.5, -3.0, -1.96, -1.0, -0.25, 0.0, 0.3, 1.0, 2.0, 2.5, 5.93, 17.23):
        cdf.append({"df": df, "t": t, "cdf": float(stats.t.cdf(t, df)), "sf": float(stats.t.sf(t, df))})

print(json.dumps({"paired_t": paired, "holm": holm, "student_t_cdf": cdf}, indent=1))
