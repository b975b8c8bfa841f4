"""Cubic-spline smoothing of step baseline survival curves.

The Breslow estimator yields a step function, which has no density; the
posterior over mixture components for an uncensored observation needs one.
A degree-3 interpolating spline through the step curve's knots supplies a
differentiable survival estimate, with constant-hazard extrapolation past
the last knot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

EPS_SURVIVAL = 1e-10  # lower clamp for evaluated survival values
EPS_DENSITY = 1e-10   # floor for the implied event density

_MAX_KNOTS_DEFAULT = 100


@dataclass(frozen=True)
class SplineSurvivalCurve:
    """Degree-3 interpolating spline through (time, survival) knots.

    The interpolant is a monotonicity-preserving piecewise-cubic Hermite
    spline, so the evaluated survival never increases between knots.
    Beyond the last knot the curve decays exponentially at ``tail_hazard``,
    the average hazard over the final inter-knot interval. ``is_fallback``
    marks curves built from degenerate (< 2 knot) inputs.
    """

    knots: np.ndarray
    values: np.ndarray
    tail_hazard: float
    is_fallback: bool = False
    _spline: PchipInterpolator = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self._spline is None and len(self.knots) >= 2:
            object.__setattr__(
                self, "_spline", PchipInterpolator(self.knots, self.values))

    def __call__(self, t):
        return spline_eval(self, t)

    def derivative(self, t):
        return spline_derivative(self, t)


def fit_spline(curve, max_knots=_MAX_KNOTS_DEFAULT):
    """Interpolate a step survival curve with a degree-3 spline (a
    monotone piecewise-cubic Hermite interpolant, so the result is itself
    a valid survival curve).

    A knot at t=0 with survival 1 is prepended when the step curve starts
    later (the step curve is 1 there). Curves with more than ``max_knots``
    knots are thinned by even-rank subsampling, always keeping the first
    and last knot: uncapped interpolation through thousands of noisy steps
    oscillates. Step curves with fewer than 2 usable knots produce a
    flagged constant/exponential-tail fallback.
    """
    kt = np.asarray(curve.knot_times, dtype=float)
    sv = np.asarray(curve.survival_values, dtype=float)
    if kt.size == 0:
        return SplineSurvivalCurve(
            knots=np.array([0.0]), values=np.array([1.0]),
            tail_hazard=0.0, is_fallback=True)
    if kt[0] > 0:
        kt = np.concatenate([[0.0], kt])
        sv = np.concatenate([[1.0], sv])
    if kt.size > max_knots:
        pick = np.unique(np.round(np.linspace(0, kt.size - 1, max_knots)).astype(int))
        kt, sv = kt[pick], sv[pick]
    if kt.size < 2:
        t0, v0 = float(kt[0]), float(sv[0])
        h = -np.log(max(v0, EPS_SURVIVAL)) / t0 if t0 > 0 else 0.0
        return SplineSurvivalCurve(
            knots=np.array([t0]), values=np.array([v0]),
            tail_hazard=max(h, 0.0), is_fallback=True)
    s_prev = max(float(sv[-2]), EPS_SURVIVAL)
    s_last = max(float(sv[-1]), EPS_SURVIVAL)
    tail = max((np.log(s_prev) - np.log(s_last)) / (kt[-1] - kt[-2]), 0.0)
    return SplineSurvivalCurve(knots=kt, values=sv, tail_hazard=tail)


def spline_eval(s, t):
    """Clamped spline survival value at t (scalar or array).

    1 before the first knot; exponential constant-hazard tail after the
    last knot; in between, the monotone cubic clipped to [EPS_SURVIVAL, 1]
    (the interpolant never overshoots the knot values, so the clip only
    guards the floor).
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty_like(t)

    lo, hi = s.knots[0], s.knots[-1]
    before = t < lo
    after = t > hi
    mid = ~(before | after)
    out[before] = 1.0
    if np.any(after):
        out[after] = max(s.values[-1], EPS_SURVIVAL) * np.exp(-s.tail_hazard * (t[after] - hi))
    if np.any(mid):
        tm = t[mid]
        if s._spline is None:  # single-knot fallback
            raw = np.full_like(tm, s.values[-1])
        else:
            raw = s._spline(tm)
        out[mid] = raw
    out = np.clip(out, EPS_SURVIVAL, 1.0)
    return float(out[0]) if scalar else out


def spline_derivative(s, t):
    """Analytic derivative dS/dt, clamped to at most -EPS_DENSITY so the
    implied event density is strictly positive."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty_like(t)

    lo, hi = s.knots[0], s.knots[-1]
    before = t < lo
    after = t > hi
    mid = ~(before | after)
    out[before] = 0.0
    if np.any(after):
        val = max(s.values[-1], EPS_SURVIVAL) * np.exp(-s.tail_hazard * (t[after] - hi))
        out[after] = -s.tail_hazard * val
    if np.any(mid):
        if s._spline is None:
            out[mid] = 0.0
        else:
            out[mid] = s._spline(t[mid], 1)
    out = np.minimum(out, -EPS_DENSITY)
    return float(out[0]) if scalar else out


def density_given_cluster(s, log_hazard, t):
    """Event density at t for an individual with the given log hazard
    ratio, under this baseline: -exp(f) * S(t|x)/S0(t) * dS0/dt where
    S(t|x) = S0(t)^exp(f). Floored at EPS_DENSITY."""
    if not np.all(np.isfinite(log_hazard)):
        raise ValueError("non-finite log hazard")
    ef = np.exp(log_hazard)
    s0 = spline_eval(s, t)
    ds = spline_derivative(s, t)
    dens = -ef * np.power(s0, ef) / s0 * ds
    return np.maximum(dens, EPS_DENSITY)


def spline_to_dict(s):
    """Serializable representation (knots and values round-trip exactly
    through decimal text; the cubic is refit deterministically on load)."""
    return {
        "knots": [float(v) for v in s.knots],
        "values": [float(v) for v in s.values],
        "tail_hazard": float(s.tail_hazard),
        "is_fallback": bool(s.is_fallback),
    }


def spline_from_dict(d):
    return SplineSurvivalCurve(
        knots=np.asarray(d["knots"], dtype=float),
        values=np.asarray(d["values"], dtype=float),
        tail_hazard=float(d["tail_hazard"]),
        is_fallback=bool(d["is_fallback"]),
    )
