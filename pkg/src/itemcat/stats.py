"""One-way ANOVA and the Tukey HSD post-hoc test.

The ANOVA p-value comes from the F distribution via a hand-implemented
regularized incomplete beta function (continued-fraction evaluation). Tukey
critical values come from a bundled studentized-range quantile table
(alpha=0.05, 2-10 groups, 10-200 error degrees of freedom, the ranges a
cross-validation benchmark needs); entries were computed with
scipy.stats.studentized_range and spot-checked against published statistical
tables. Intermediate df values are interpolated linearly in 1/df, the
standard convention for these tables.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_BETACF_MAX_ITER = 200
_BETACF_EPS = 3e-14
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz method)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, df_num: float, df_den: float) -> float:
    """Survival function P(F > f) of the F distribution."""
    if f < 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = df_den / (df_den + df_num * f)
    return regularized_incomplete_beta(df_den / 2.0, df_num / 2.0, x)


@dataclass(frozen=True)
class AnovaResult:
    f: float
    p: float
    df_between: int
    df_within: int
    ms_between: float
    ms_within: float


def anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way analysis of variance over two or more groups of observations.

    Zero within-group variance with differing means reports F=inf, p=0; all
    observations identical reports F=0, p=1.
    """
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if any(a.size < 2 for a in arrays):
        raise ValueError("every group needs at least two values")
    k = len(arrays)
    n_total = sum(a.size for a in arrays)
    grand = sum(a.sum() for a in arrays) / n_total
    ss_between = sum(a.size * (a.mean() - grand) ** 2 for a in arrays)
    ss_within = sum(((a - a.mean()) ** 2).sum() for a in arrays)
    df_between = k - 1
    df_within = n_total - k
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    if ss_within == 0.0:
        if ss_between == 0.0:
            return AnovaResult(0.0, 1.0, df_between, df_within, 0.0, 0.0)
        return AnovaResult(math.inf, 0.0, df_between, df_within, ms_between, 0.0)
    f = ms_between / ms_within
    return AnovaResult(f, f_sf(f, df_between, df_within), df_between, df_within, ms_between, ms_within)


# --- studentized range quantiles, alpha = 0.05 --------------------------------

_Q_GROUPS = tuple(range(2, 11))
_Q_TABLE: tuple[tuple[int, tuple[float, ...]], ...] = (
    (10, (3.1511, 3.8768, 4.3266, 4.6543, 4.9120, 5.1242, 5.3042, 5.4605, 5.5984)),
    (11, (3.1127, 3.8196, 4.2561, 4.5736, 4.8230, 5.0281, 5.2021, 5.3531, 5.4863)),
    (12, (3.0813, 3.7729, 4.1987, 4.5077, 4.7502, 4.9496, 5.1187, 5.2653, 5.3946)),
    (13, (3.0552, 3.7341, 4.1509, 4.4529, 4.6897, 4.8842, 5.0491, 5.1921, 5.3181)),
    (14, (3.0332, 3.7014, 4.1105, 4.4066, 4.6385, 4.8290, 4.9903, 5.1301, 5.2534)),
    (15, (3.0143, 3.6734, 4.0760, 4.3670, 4.5947, 4.7816, 4.9399, 5.0770, 5.1979)),
    (16, (2.9980, 3.6491, 4.0461, 4.3327, 4.5568, 4.7406, 4.8962, 5.0310, 5.1498)),
    (17, (2.9837, 3.6280, 4.0200, 4.3027, 4.5237, 4.7048, 4.8580, 4.9907, 5.1077)),
    (18, (2.9712, 3.6093, 3.9970, 4.2763, 4.4944, 4.6731, 4.8243, 4.9552, 5.0705)),
    (19, (2.9600, 3.5927, 3.9766, 4.2528, 4.4685, 4.6450, 4.7944, 4.9236, 5.0375)),
    (20, (2.9500, 3.5779, 3.9583, 4.2319, 4.4452, 4.6199, 4.7676, 4.8954, 5.0079)),
    (21, (2.9410, 3.5646, 3.9419, 4.2130, 4.4244, 4.5973, 4.7435, 4.8699, 4.9813)),
    (22, (2.9329, 3.5526, 3.9270, 4.1959, 4.4055, 4.5769, 4.7217, 4.8469, 4.9572)),
    (23, (2.9255, 3.5417, 3.9136, 4.1805, 4.3883, 4.5583, 4.7018, 4.8260, 4.9353)),
    (24, (2.9188, 3.5317, 3.9013, 4.1663, 4.3727, 4.5413, 4.6838, 4.8069, 4.9152)),
    (25, (2.9126, 3.5226, 3.8900, 4.1534, 4.3583, 4.5258, 4.6672, 4.7894, 4.8969)),
    (26, (2.9070, 3.5142, 3.8796, 4.1415, 4.3451, 4.5115, 4.6519, 4.7733, 4.8800)),
    (27, (2.9017, 3.5064, 3.8701, 4.1305, 4.3329, 4.4983, 4.6378, 4.7584, 4.8644)),
    (28, (2.8969, 3.4993, 3.8612, 4.1203, 4.3217, 4.4861, 4.6248, 4.7446, 4.8500)),
    (29, (2.8924, 3.4926, 3.8530, 4.1109, 4.3112, 4.4747, 4.6127, 4.7318, 4.8366)),
    (30, (2.8882, 3.4864, 3.8454, 4.1021, 4.3015, 4.4642, 4.6014, 4.7199, 4.8241)),
    (32, (2.8807, 3.4752, 3.8316, 4.0862, 4.2839, 4.4451, 4.5811, 4.6984, 4.8016)),
    (34, (2.8740, 3.4654, 3.8195, 4.0723, 4.2684, 4.4284, 4.5632, 4.6795, 4.7818)),
    (36, (2.8682, 3.4568, 3.8088, 4.0600, 4.2548, 4.4135, 4.5473, 4.6628, 4.7642)),
    (38, (2.8629, 3.4490, 3.7992, 4.0490, 4.2426, 4.4003, 4.5332, 4.6479, 4.7486)),
    (40, (2.8582, 3.4421, 3.7907, 4.0391, 4.2316, 4.3885, 4.5205, 4.6345, 4.7345)),
    (44, (2.8502, 3.4301, 3.7760, 4.0222, 4.2128, 4.3681, 4.4987, 4.6114, 4.7103)),
    (48, (2.8435, 3.4203, 3.7637, 4.0081, 4.1972, 4.3511, 4.4806, 4.5923, 4.6902)),
    (50, (2.8405, 3.4159, 3.7584, 4.0020, 4.1904, 4.3437, 4.4727, 4.5839, 4.6814)),
    (60, (2.8288, 3.3987, 3.7371, 3.9774, 4.1632, 4.3141, 4.4411, 4.5504, 4.6463)),
    (70, (2.8206, 3.3864, 3.7220, 3.9600, 4.1438, 4.2932, 4.4186, 4.5267, 4.6214)),
    (80, (2.8144, 3.3773, 3.7107, 3.9470, 4.1294, 4.2775, 4.4019, 4.5089, 4.6028)),
    (90, (2.8096, 3.3702, 3.7020, 3.9370, 4.1182, 4.2654, 4.3889, 4.4952, 4.5883)),
    (100, (2.8058, 3.3646, 3.6950, 3.9289, 4.1093, 4.2557, 4.3785, 4.4842, 4.5768)),
    (120, (2.8000, 3.3561, 3.6846, 3.9169, 4.0960, 4.2412, 4.3630, 4.4678, 4.5595)),
    (140, (2.7960, 3.3501, 3.6772, 3.9084, 4.0865, 4.2309, 4.3520, 4.4561, 4.5473)),
    (160, (2.7929, 3.3456, 3.6716, 3.9020, 4.0794, 4.2232, 4.3437, 4.4473, 4.5381)),
    (180, (2.7906, 3.3422, 3.6673, 3.8970, 4.0739, 4.2172, 4.3373, 4.4405, 4.5309)),
    (200, (2.7887, 3.3394, 3.6639, 3.8931, 4.0695, 4.2124, 4.3322, 4.4351, 4.5252)),
)
_Q_DFS = tuple(row[0] for row in _Q_TABLE)

TUKEY_ALPHA = 0.05


def studentized_range_q(n_groups: int, df: int) -> float:
    """Critical value q(0.05; n_groups, df) from the bundled table."""
    if not _Q_GROUPS[0] <= n_groups <= _Q_GROUPS[-1]:
        raise ValueError(f"table covers {_Q_GROUPS[0]}-{_Q_GROUPS[-1]} groups, got {n_groups}")
    if df < _Q_DFS[0]:
        raise ValueError(f"table covers df >= {_Q_DFS[0]}, got {df}")
    col = n_groups - 2
    if df >= _Q_DFS[-1]:
        # beyond the table the quantile changes by <0.2%; use the last row
        return _Q_TABLE[-1][1][col]
    pos = bisect_left(_Q_DFS, df)
    if _Q_DFS[pos] == df:
        return _Q_TABLE[pos][1][col]
    df_lo, q_lo = _Q_DFS[pos - 1], _Q_TABLE[pos - 1][1][col]
    df_hi, q_hi = _Q_DFS[pos], _Q_TABLE[pos][1][col]
    w = (1.0 / df - 1.0 / df_lo) / (1.0 / df_hi - 1.0 / df_lo)
    return q_lo + w * (q_hi - q_lo)


@dataclass(frozen=True)
class PairComparison:
    group_a: str
    group_b: str
    mean_diff: float  # mean(a) - mean(b)
    ci_low: float
    ci_high: float
    reject: bool


@dataclass(frozen=True)
class SignificanceTable:
    anova: AnovaResult
    pairs: tuple[PairComparison, ...]
    q_critical: float
    hsd: float
    alpha: float
    group_labels: tuple[str, ...]


def tukey_hsd(
    groups: Sequence[Sequence[float]],
    alpha: float = TUKEY_ALPHA,
    labels: Sequence[str] | None = None,
) -> SignificanceTable:
    """All pairwise comparisons at the given alpha (0.05 only, per the table).

    Requires equal group sizes; a pair is rejected when its absolute mean
    difference exceeds q * sqrt(MS_within / n).
    """
    if alpha != TUKEY_ALPHA:
        raise ValueError(f"only alpha={TUKEY_ALPHA} is supported by the bundled table")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    sizes = {a.size for a in arrays}
    if len(sizes) != 1:
        raise ValueError("tukey_hsd needs equal group sizes")
    n = sizes.pop()
    result = anova(arrays)
    k = len(arrays)
    if labels is None:
        labels = tuple(f"group{i}" for i in range(k))
    else:
        labels = tuple(labels)
        if len(labels) != k:
            raise ValueError("labels must match the number of groups")
    q = studentized_range_q(k, result.df_within)
    hsd = q * math.sqrt(result.ms_within / n)
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = arrays[i].mean() - arrays[j].mean()
            pairs.append(
                PairComparison(
                    group_a=labels[i],
                    group_b=labels[j],
                    mean_diff=diff,
                    ci_low=diff - hsd,
                    ci_high=diff + hsd,
                    reject=abs(diff) > hsd,
                )
            )
    return SignificanceTable(
        anova=result,
        pairs=tuple(pairs),
        q_critical=q,
        hsd=hsd,
        alpha=alpha,
        group_labels=labels,
    )
