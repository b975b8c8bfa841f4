"""The Cox mixture model: K proportional-hazards components with neural
log-hazard and gating heads, trained by hard-assignment Monte Carlo EM.

Each EM sweep alternates, per minibatch, a posterior (E) step using the
current spline baselines, a categorical draw of hard assignments, and one
Adam step on the hard-assignment objective; once per epoch the per-cluster
Breslow baselines are recomputed over the full training data and re-splined.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from coxmix import neural, objective
from coxmix.estimators import breslow, kaplan_meier
from coxmix.spline import (
    EPS_DENSITY, density_given_cluster, fit_spline, spline_eval,
    spline_from_dict, spline_to_dict,
)

MODEL_FORMAT_VERSION = 1


class ModelError(ValueError):
    pass


@dataclass
class DcmConfig:
    """Training configuration. Defaults follow: Adam lr 1e-3, minibatch
    128, degree-3 baseline splines."""

    n_clusters: int = 3
    hidden_dims: tuple = (100,)
    lr: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 50
    patience: int = 3
    seed: int = 0
    max_spline_knots: int = 100
    use_prior_in_estep: bool = True
    val_fraction: float = 0.1
    # weight on the previous epoch's cumulative hazard when refreshing
    # baselines; 0 disables smoothing. Damps assignment-resampling noise.
    baseline_smoothing: float = 0.0

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ModelError("n_clusters must be >= 1")
        if self.batch_size < 2 * self.n_clusters:
            raise ModelError("batch_size must be at least 2 * n_clusters")


class DcmModel:
    """A trained Cox mixture: encoder + heads, one baseline survival
    spline per cluster, and the standardization stats used at fit time."""

    def __init__(self, params, heads, baselines, config, standardization=None,
                 feature_names=None, training_log=None):
        self.params = params
        self.heads = heads
        self.baselines = list(baselines)
        self.config = config
        self.standardization = standardization
        self.feature_names = tuple(feature_names) if feature_names else None
        self.training_log = training_log or []
        if len(self.baselines) != config.n_clusters:
            raise ModelError("baseline count must equal n_clusters")

    @property
    def n_clusters(self):
        return self.config.n_clusters

    def _heads_out(self, x):
        rep, _ = neural.forward(self.params, x)
        return neural.heads_forward(self.heads, rep)

    def log_hazards(self, x):
        return self._heads_out(np.atleast_2d(np.asarray(x, dtype=float)))[0]

    def gating_probs(self, x):
        return neural.softmax(self._heads_out(np.atleast_2d(np.asarray(x, dtype=float)))[1])

    def predict_survival(self, x, t):
        """Mixture survival P(T > t | x) = sum_k S_k(t)^exp(f_k(x)) *
        gate_k(x). Accepts a single vector or (N, d) batch for x and a
        scalar or grid for t; returns matching scalar/vector/matrix."""
        x = np.asarray(x, dtype=float)
        single_x = x.ndim == 1
        xb = np.atleast_2d(x)
        t = np.asarray(t, dtype=float)
        single_t = t.ndim == 0
        tg = np.atleast_1d(t)

        f, g = self._heads_out(xb)
        w = neural.softmax(g)                       # (N, K)
        ef = np.exp(f)                              # (N, K)
        out = np.zeros((xb.shape[0], tg.size))
        for k, bl in enumerate(self.baselines):
            s0 = spline_eval(bl, tg)                # (H,)
            out += w[:, k:k + 1] * np.power(s0[None, :], ef[:, k:k + 1])
        if single_x and single_t:
            return float(out[0, 0])
        if single_x:
            return out[0]
        if single_t:
            return out[:, 0]
        return out

    # -- persistence ----------------------------------------------------

    def save(self, path):
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "config": asdict(self.config),
            "standardization": None if self.standardization is None else {
                "mean": [float(v) for v in self.standardization[0]],
                "std": [float(v) for v in self.standardization[1]],
            },
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "mlp": {
                "layer_dims": list(self.params.layer_dims),
                "weights": [w.tolist() for w in self.params.weights],
                "biases": [b.tolist() for b in self.params.biases],
            },
            "heads": {
                "f_w": self.heads.f_w.tolist(), "f_b": self.heads.f_b.tolist(),
                "g_w": self.heads.g_w.tolist(), "g_b": self.heads.g_b.tolist(),
            },
            "splines": [spline_to_dict(b) for b in self.baselines],
            "training_log": self.training_log,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ModelError(f"{path}: corrupt model file ({exc})") from None
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ModelError(
                f"{path}: unsupported model format version {version!r}, "
                f"expected {MODEL_FORMAT_VERSION}")
        cfg = DcmConfig(**{**payload["config"],
                           "hidden_dims": tuple(payload["config"]["hidden_dims"])})
        mlp = neural.MlpParams(
            weights=[np.asarray(w, dtype=float) for w in payload["mlp"]["weights"]],
            biases=[np.asarray(b, dtype=float) for b in payload["mlp"]["biases"]],
            layer_dims=tuple(payload["mlp"]["layer_dims"]),
        )
        heads = neural.HeadParams(
            f_w=np.asarray(payload["heads"]["f_w"], dtype=float),
            f_b=np.asarray(payload["heads"]["f_b"], dtype=float),
            g_w=np.asarray(payload["heads"]["g_w"], dtype=float),
            g_b=np.asarray(payload["heads"]["g_b"], dtype=float),
        )
        std = payload["standardization"]
        standardization = None if std is None else (
            np.asarray(std["mean"], dtype=float), np.asarray(std["std"], dtype=float))
        return cls(
            params=mlp, heads=heads,
            baselines=[spline_from_dict(d) for d in payload["splines"]],
            config=cfg, standardization=standardization,
            feature_names=payload.get("feature_names"),
            training_log=payload.get("training_log", []),
        )


# -- EM steps ------------------------------------------------------------


def cluster_log_densities(baselines, log_hazards, times, events):
    """Per-row, per-cluster log likelihood terms: log density for events,
    exp(f_k) * log S_k(t) for censored rows. Shape (N, K)."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    f = np.asarray(log_hazards, dtype=float)
    n, k = f.shape
    out = np.empty((n, k))
    ev = events == 1
    for c, bl in enumerate(baselines):
        s0 = spline_eval(bl, times)
        logs0 = np.log(s0)
        ef = np.exp(f[:, c])
        out[:, c] = np.where(
            ev,
            np.log(density_given_cluster(bl, f[:, c], times)),
            ef * logs0,
        )
    return out


def e_step(model, x, times, events):
    """Posterior cluster responsibilities for a batch.

    Weights are density^delta * conditional-survival^(1-delta), times the
    gating prior when use_prior_in_estep is set. Computed in log space;
    each row is shifted by its max, floored at EPS_DENSITY and normalized.
    """
    f, g = model._heads_out(x)
    logw = cluster_log_densities(model.baselines, f, times, events)
    if model.config.use_prior_in_estep:
        z = g - g.max(axis=1, keepdims=True)
        logw = logw + (z - np.log(np.exp(z).sum(axis=1, keepdims=True)))
    logw = logw - logw.max(axis=1, keepdims=True)
    w = np.maximum(np.exp(logw), EPS_DENSITY)
    bad = ~np.all(np.isfinite(w), axis=1)
    if np.any(bad):
        w[bad] = 1.0
    return w / w.sum(axis=1, keepdims=True)


def sample_assignments(gamma, rng):
    """Draw one categorical hard assignment per row from its posterior."""
    u = rng.random(gamma.shape[0])
    cdf = np.cumsum(gamma, axis=1)
    return (u[:, None] > cdf).sum(axis=1).astype(int)


def m_step(model, adam, x, times, events, gamma, zeta):
    """One Adam step on the hard-assignment objective. Returns the batch
    loss before the update."""
    rep, cache = neural.forward(model.params, x)
    f, g = neural.heads_forward(model.heads, rep)
    loss, d_f, d_g = objective.q_hat(times, events, gamma, zeta, f, g)
    mlp_grads, head_grads = neural.backward(model.params, model.heads, cache, rep, d_f, d_g)
    neural.adam_step(model.params, model.heads, mlp_grads, head_grads, adam)
    return loss


def update_baselines(model, x, times, events, zeta):
    """Refresh each cluster's Breslow baseline over its assigned rows and
    refit the spline. Clusters with fewer than 2 events keep their
    previous spline; returns the number of such starved clusters.

    With baseline_smoothing > 0 the refreshed cumulative hazard is an
    exponential moving average of the previous and new estimates on the
    new knot grid."""
    f = model.log_hazards(x)
    smoothing = model.config.baseline_smoothing
    starved = 0
    for k in range(model.n_clusters):
        rows = np.flatnonzero(zeta == k)
        if rows.size < 2 or events[rows].sum() < 2:
            starved += 1
            continue
        curve = breslow(times[rows], events[rows], f[rows, k])
        new = fit_spline(curve, model.config.max_spline_knots)
        if smoothing > 0 and not model.baselines[k].is_fallback and not new.is_fallback:
            new = _blend_baselines(model.baselines[k], new, smoothing)
        model.baselines[k] = new
    return starved


def _blend_baselines(old, new, smoothing):
    from coxmix.spline import EPS_SURVIVAL, SplineSurvivalCurve

    kt = new.knots
    lam = (-smoothing * np.log(np.clip(spline_eval(old, kt), EPS_SURVIVAL, 1.0))
           - (1.0 - smoothing) * np.log(np.clip(new.values, EPS_SURVIVAL, 1.0)))
    vals = np.minimum.accumulate(np.clip(np.exp(-lam), EPS_SURVIVAL, 1.0))
    if len(kt) > 1:
        s_prev = max(float(vals[-2]), EPS_SURVIVAL)
        s_last = max(float(vals[-1]), EPS_SURVIVAL)
        tail = max((np.log(s_prev) - np.log(s_last)) / (kt[-1] - kt[-2]), 0.0)
    else:
        tail = new.tail_hazard
    return SplineSurvivalCurve(knots=kt, values=vals, tail_hazard=tail)


def expected_q_loss(model, x, times, events):
    """Soft-count EM objective on held-out data (negated, a loss): the
    posterior-weighted complete-data log likelihood, averaged per row.
    Deterministic; used for epoch monitoring and early stopping."""
    gamma = e_step(model, x, times, events)
    f, g = model._heads_out(x)
    logw = cluster_log_densities(model.baselines, f, times, events)
    z = g - g.max(axis=1, keepdims=True)
    log_gate = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return -float(np.sum(gamma * (logw + log_gate))) / len(times)


def fit(dataset, config):
    """Train a Cox mixture on a (standardized) dataset.

    Carves out an internal validation split, initializes all baselines to
    the pooled Kaplan-Meier spline, then runs minibatch EM epochs with a
    full-data baseline refresh per epoch. Early-stops when the validation
    objective fails to improve for ``patience`` epochs and returns the
    best-validation snapshot.
    """
    if dataset.events.sum() == 0:
        raise ModelError("cannot fit with no observed events")
    n, d = dataset.features.shape
    rng = np.random.default_rng(config.seed)

    perm = rng.permutation(n)
    n_val = max(int(round(config.val_fraction * n)), 1) if n >= 20 else 0
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if dataset.events[train_idx].sum() == 0:
        raise ModelError("no events left in the training split")

    xt = dataset.features[train_idx]
    tt = dataset.times[train_idx]
    et = dataset.events[train_idx]
    xv = dataset.features[val_idx]
    tv = dataset.times[val_idx]
    ev = dataset.events[val_idx]
    if n_val == 0 or ev.sum() == 0:  # tiny datasets: monitor on train
        xv, tv, ev = xt, tt, et

    layer_dims = (d, *config.hidden_dims)
    params, heads = neural.init_params(layer_dims, config.n_clusters, config.seed)
    pooled = fit_spline(kaplan_meier(tt, et), config.max_spline_knots)
    model = DcmModel(params, heads,
                     baselines=[pooled] * config.n_clusters,
                     config=config,
                     standardization=dataset.standardization,
                     feature_names=dataset.feature_names)
    adam = neural.AdamState.create(params, heads, config.lr)

    best = (np.inf, None)
    stale = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(len(train_idx))
        batch_losses = []
        for lo in range(0, len(order), config.batch_size):
            rows = order[lo:lo + config.batch_size]
            if rows.size < 2 * config.n_clusters:
                continue
            xb, tb, eb = xt[rows], tt[rows], et[rows]
            gamma = e_step(model, xb, tb, eb)
            zeta = sample_assignments(gamma, rng)
            batch_losses.append(m_step(model, adam, xb, tb, eb, gamma, zeta))

        gamma_full = e_step(model, xt, tt, et)
        zeta_full = sample_assignments(gamma_full, rng)
        starved = update_baselines(model, xt, tt, et, zeta_full)

        train_q = expected_q_loss(model, xt, tt, et)
        val_q = expected_q_loss(model, xv, tv, ev)
        if not np.isfinite(val_q):
            raise ModelError(f"non-finite objective at epoch {epoch}")
        model.training_log.append({
            "epoch": epoch,
            "train_q": train_q,
            "val_q": val_q,
            "batch_loss": float(np.mean(batch_losses)) if batch_losses else None,
            "starved_clusters": starved,
        })

        if val_q < best[0] - 1e-12:
            best = (val_q, (copy.deepcopy(model.params), copy.deepcopy(model.heads),
                            copy.deepcopy(model.baselines)))
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    if best[1] is not None:
        model.params, model.heads, model.baselines = best[1]
    return model
