"""Per-trial summaries of ``episodes.csv`` rows and the tie-tolerant comparisons built on them."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np
from scipy import stats


def per_trial_window_mean(rows: list[dict], column: str, fraction: float) -> np.ndarray:
    """Mean of ``column`` over the last ``fraction`` of each trial's episodes, one value per trial."""
    by_trial = defaultdict(list)
    for row in rows:
        by_trial[row["trial"]].append((row["episode"], row[column]))
    out = []
    for trial in sorted(by_trial):
        values = [v for _, v in sorted(by_trial[trial])]
        window = max(1, int(len(values) * fraction))
        out.append(math.fsum(values[-window:]) / window)
    return np.array(out)


def welch_greater_pvalue(a, b) -> float:
    """One-sided Welch p-value for mean(a) > mean(b).

    Degenerate samples (both constant) are decided by the means alone.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.var() == 0.0 and b.var() == 0.0:
        return 0.0 if a.mean() > b.mean() else 1.0
    return float(stats.ttest_ind(a, b, equal_var=False, alternative="greater").pvalue)


def not_worse(a, b, alpha: float = 0.05) -> tuple[bool, float, float]:
    """``a`` is not worse than ``b``: non-negative mean gap, or b > a not significant.

    Returns ``(passed, mean_gap, p_value_b_greater)``.
    """
    gap = float(np.mean(a) - np.mean(b))
    p = welch_greater_pvalue(b, a)
    return gap >= 0.0 or p >= alpha, gap, p
