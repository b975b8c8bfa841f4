"""Censoring-adjusted evaluation of survival predictions.

All metrics take the predicted survival probability pi_i(t) at a horizon t
and adjust for right censoring with inverse-probability-of-censoring
weights (IPCW) from a Kaplan-Meier estimate G of the censoring
distribution. G at an observed event time is always taken as a left limit
to avoid the event's own censoring contribution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from coxmix.estimators import censoring_km, kaplan_meier

MIN_IPCW_DENOM = 1e-4   # drop records with smaller G from IPCW sums
MIN_GROUP_SIZE = 20
DEFAULT_ECE_BINS = 20


class MetricError(ValueError):
    pass


def concordance_td(surv_probs, times, events, g_curve, horizon):
    """Time-dependent concordance at a horizon, IPCW-weighted (Uno).

    Comparable pairs (i, j): i has an observed event, T_i < T_j, and
    T_i <= horizon; the pair is concordant when i is predicted at higher
    risk (lower survival probability). Ties in prediction count half; ties
    in time are excluded.
    """
    pi = np.asarray(surv_probs, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)

    g_left = g_curve.eval_left(times)
    cases = (events == 1) & (times <= horizon) & (g_left > MIN_IPCW_DENOM)
    weights = np.zeros_like(times)
    weights[cases] = 1.0 / g_left[cases] ** 2

    num = 0.0
    den = 0.0
    for i in np.flatnonzero(cases):
        later = times > times[i]
        if not np.any(later):
            continue
        w = weights[i]
        den += w * later.sum()
        num += w * ((pi[i] < pi[later]).sum() + 0.5 * (pi[i] == pi[later]).sum())
    if den == 0:
        raise MetricError("no comparable pairs at this horizon")
    return num / den


def auc_ipcw(surv_probs, times, events, g_curve, horizon):
    """IPCW-adjusted area under the ROC curve at a horizon.

    Cases are observed events with T <= horizon, weighted by
    delta / (n * G(T-)); controls are records with T > horizon
    (unweighted, per the specificity definition). Sensitivity/specificity
    are swept over the distinct predicted values and the (FPR, TPR) curve
    is integrated by trapezoid, which credits prediction ties by half.
    """
    pi = np.asarray(surv_probs, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    n = times.size

    g_left = g_curve.eval_left(times)
    cases = (events == 1) & (times <= horizon) & (g_left > MIN_IPCW_DENOM)
    controls = times > horizon
    if not np.any(cases) or not np.any(controls):
        raise MetricError("need at least one case and one control at this horizon")

    risk = 1.0 - pi  # higher risk = predicted earlier event
    omega = np.zeros(n)
    omega[cases] = 1.0 / (n * g_left[cases])

    thresholds = np.unique(risk)
    # sensitivity: weighted fraction of cases with risk > c
    # 1 - specificity: fraction of controls with risk > c
    w_case = omega[cases]
    r_case = risk[cases]
    r_ctrl = risk[controls]
    total_w = w_case.sum()
    n_ctrl = r_ctrl.size

    # sweep from high threshold (Se=0, FPR=0) to low (Se=1, FPR=1)
    cs = np.concatenate([thresholds[::-1], [-np.inf]])
    se = np.array([(w_case[r_case > c]).sum() / total_w for c in cs])
    fpr = np.array([(r_ctrl > c).sum() / n_ctrl for c in cs])
    se = np.concatenate([[0.0], se])
    fpr = np.concatenate([[0.0], fpr])
    return float(np.trapezoid(se, fpr))


def ece(surv_probs, times, events, horizon, n_bins=DEFAULT_ECE_BINS):
    """Expected L1 calibration error at a horizon.

    Records are partitioned into equal-mass quantile bins of the predicted
    survival probability; within each bin the Kaplan-Meier survival at the
    horizon is compared to the mean prediction. Bins whose Kaplan-Meier
    estimate is undefined at the horizon (follow-up ends earlier with a
    censored subject) are skipped with a warning and the divisor reduced.
    """
    pi = np.asarray(surv_probs, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    if pi.size < n_bins:
        raise MetricError(f"need at least {n_bins} records for {n_bins} bins")

    order = np.argsort(pi, kind="stable")
    bins = np.array_split(order, n_bins)
    gaps = []
    skipped = 0
    for idx in bins:
        tb, eb = times[idx], events[idx]
        t_max = tb.max()
        if horizon > t_max and eb[tb == t_max].sum() == 0:
            km_last = kaplan_meier(tb, eb)(t_max)
            if km_last > 0:
                skipped += 1
                continue
        gaps.append(abs(kaplan_meier(tb, eb)(horizon) - pi[idx].mean()))
    if skipped:
        warnings.warn(f"ece: skipped {skipped} bin(s) with undefined Kaplan-Meier "
                      f"at the horizon", stacklevel=2)
    if not gaps:
        raise MetricError("all calibration bins undefined at this horizon")
    return float(np.sum(gaps) / len(gaps))


def brier_ipcw(surv_probs, times, events, g_curve, horizon):
    """IPCW Brier score at a horizon:
    mean of pi^2 * 1{T<=t, event}/G(T-) + (1-pi)^2 * 1{T>t}/G(t)."""
    pi = np.asarray(surv_probs, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    g_t = g_curve(horizon)
    if g_t <= 0:
        raise MetricError("horizon beyond censoring follow-up (G(t) = 0)")
    g_left = g_curve.eval_left(times)

    early_event = (times <= horizon) & (events == 1)
    late = times > horizon
    usable_event = early_event & (g_left > MIN_IPCW_DENOM)
    if np.any(early_event & ~usable_event):
        warnings.warn("brier_ipcw: dropped record(s) with near-zero censoring "
                      "weight denominator", stacklevel=2)
    terms = np.zeros_like(pi)
    terms[usable_event] = pi[usable_event] ** 2 / g_left[usable_event]
    terms[late] += (1.0 - pi[late]) ** 2 / (g_t if g_t > MIN_IPCW_DENOM else np.inf)
    return float(terms.mean())


def bootstrap_se(metric_fn, n_records, n_replicates=100, seed=0):
    """Bootstrap mean and standard error of a metric.

    ``metric_fn`` receives an index array (a resample of record indices
    with replacement) and must recompute everything downstream of it, the
    censoring curve included. Replicates where the metric raises are
    dropped and counted. Returns (mean, se, used_replicates).
    """
    if n_records < 2:
        raise MetricError("need at least 2 records to bootstrap")
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(n_replicates):
        idx = rng.integers(0, n_records, size=n_records)
        try:
            values.append(metric_fn(idx))
        except MetricError:
            continue
    if not values:
        raise MetricError("all bootstrap replicates failed")
    values = np.asarray(values, dtype=float)
    se = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), se, int(values.size)


@dataclass(frozen=True)
class MetricRow:
    metric: str
    horizon: float
    group: str
    estimate: float
    se: float
    n: int


METRIC_NAMES = ("concordance_td", "auc_ipcw", "ece", "brier_ipcw")


def _stratum_metrics(surv_matrix, times, events, horizons, group,
                     n_replicates, seed):
    rows = []
    for h_idx, horizon in enumerate(horizons):
        pi = surv_matrix[:, h_idx]
        for name in METRIC_NAMES:
            def one(idx, name=name, pi=pi, horizon=horizon):
                t, e, p = times[idx], events[idx], pi[idx]
                if name == "ece":
                    return ece(p, t, e, horizon)
                g = censoring_km(t, e)
                if name == "concordance_td":
                    return concordance_td(p, t, e, g, horizon)
                if name == "auc_ipcw":
                    return auc_ipcw(p, t, e, g, horizon)
                return brier_ipcw(p, t, e, g, horizon)

            try:
                mean, se, used = bootstrap_se(one, len(times), n_replicates, seed)
            except MetricError:
                mean, se, used = np.nan, np.nan, 0
            rows.append(MetricRow(name, float(horizon), group, mean, se, used))
    return rows


def evaluate_by_group(surv_matrix, times, events, horizons, groups=None,
                      n_replicates=100, seed=0):
    """Every metric at every horizon for the full population and per
    group, with bootstrap standard errors. The censoring distribution is
    re-estimated within each evaluated stratum (and each bootstrap
    replicate). Groups below MIN_GROUP_SIZE records are reported with NaN
    estimates and n=0. Returns a list of MetricRow."""
    surv_matrix = np.asarray(surv_matrix, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    if surv_matrix.shape != (times.size, len(horizons)):
        raise MetricError("surv_matrix must be (n_records, n_horizons)")

    rows = _stratum_metrics(surv_matrix, times, events, horizons,
                            "population", n_replicates, seed)
    if groups is not None:
        groups = np.asarray(groups)
        for label in sorted(set(groups.tolist())):
            mask = groups == label
            if mask.sum() < MIN_GROUP_SIZE:
                for h in horizons:
                    for name in METRIC_NAMES:
                        rows.append(MetricRow(name, float(h), str(label),
                                              np.nan, np.nan, 0))
                continue
            rows.extend(_stratum_metrics(
                surv_matrix[mask], times[mask], events[mask], horizons,
                str(label), n_replicates, seed))
    return rows
