"""Nonparametric survival estimation: Kaplan-Meier product-limit curves,
the censoring-distribution Kaplan-Meier estimate, and the Breslow baseline
survival estimator for proportional-hazards models.

All curves are right-continuous step functions. Internally they store the
cumulative hazard and expose survival as exp(-H) so rounding can never
produce negative survival.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class StepSurvivalCurve:
    """Right-continuous piecewise-constant survival function.

    knot_times: strictly increasing times where the curve may drop
    cum_hazard: cumulative hazard at each knot (nondecreasing)

    S(t) = exp(-cum_hazard at the largest knot <= t), and S(t) = 1 before
    the first knot.
    """

    knot_times: np.ndarray
    cum_hazard: np.ndarray

    def __post_init__(self):
        if len(self.knot_times) != len(self.cum_hazard):
            raise EstimatorError("knot/hazard length mismatch")
        if len(self.knot_times) and np.any(np.diff(self.knot_times) <= 0):
            raise EstimatorError("knot times must be strictly increasing")

    @property
    def survival_values(self):
        return np.exp(-self.cum_hazard)

    def _eval(self, t, side):
        t = np.asarray(t, dtype=float)
        if len(self.knot_times) == 0:  # no drops anywhere: S = 1
            out = np.ones_like(t)
            return float(out) if out.ndim == 0 else out
        idx = np.searchsorted(self.knot_times, t, side=side) - 1
        h = np.where(idx >= 0, self.cum_hazard[np.maximum(idx, 0)], 0.0)
        out = np.exp(-h)
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        """Evaluate S(t), right-continuous; supports scalars and arrays."""
        return self._eval(t, "right")

    def eval_left(self, t):
        """Left limit S(t-): the value just before any knot exactly at t."""
        return self._eval(t, "left")


def eval_left(curve, t):
    """Left limit S(t-) of a step curve."""
    return curve.eval_left(t)


def _km_cum_hazard(times, events):
    """Distinct times with the -log survival increments of the product-limit
    estimate. Ties: all events at a time share the risk set; same-time
    censored individuals stay in the risk set."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    if times.size == 0:
        raise EstimatorError("empty input")
    order = np.argsort(times, kind="stable")
    t, e = times[order], events[order]
    uniq, start = np.unique(t, return_index=True)
    n_at_risk = t.size
    knots, cumh = [], []
    h = 0.0
    counts = np.diff(np.append(start, t.size))
    for ut, s, c in zip(uniq, start, counts):
        d = int(e[s:s + c].sum())
        if d > 0:
            frac = d / n_at_risk
            h += np.inf if frac >= 1.0 else -np.log1p(-frac)
            knots.append(float(ut))
            cumh.append(h)
        n_at_risk -= int(c)
    return np.asarray(knots), np.asarray(cumh)


def kaplan_meier(times, events):
    """Product-limit survival estimate with knots at distinct event times."""
    knots, cumh = _km_cum_hazard(times, events)
    return StepSurvivalCurve(knot_times=knots, cum_hazard=cumh)


def censoring_km(times, events):
    """Kaplan-Meier estimate of the censoring distribution G: the
    product-limit curve with the flipped indicator 1-event."""
    events = np.asarray(events, dtype=int)
    return kaplan_meier(times, 1 - events)


def breslow(times, events, log_hazards):
    """Breslow estimate of the baseline survival function.

    Cumulative baseline hazard jumps at each distinct event time by
    d / sum_{j in risk set} exp(log_hazard_j), where the risk set holds
    everyone with time >= that event time (Breslow tie handling: tied
    events share one denominator). Returns exp(-cumulative hazard) as a
    step curve.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    log_hazards = np.asarray(log_hazards, dtype=float)
    if times.size == 0:
        raise EstimatorError("empty input")
    if not np.all(np.isfinite(log_hazards)):
        raise EstimatorError("non-finite log hazards")
    order = np.argsort(times, kind="stable")
    t, e, w = times[order], events[order], np.exp(log_hazards[order])
    uniq, start = np.unique(t, return_index=True)
    counts = np.diff(np.append(start, t.size))
    # total exp-hazard of everyone with time >= each distinct time
    tail = np.cumsum(w[::-1])[::-1]
    knots, cumh = [], []
    h = 0.0
    for ut, s, c in zip(uniq, start, counts):
        d = int(e[s:s + c].sum())
        if d > 0:
            h += d / tail[s]
            knots.append(float(ut))
            cumh.append(h)
    return StepSurvivalCurve(knot_times=np.asarray(knots), cum_hazard=np.asarray(cumh))
