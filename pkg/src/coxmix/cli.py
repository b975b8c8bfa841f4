"""Command-line entry points: synthetic cohort generation, training,
evaluation, cross-validation and prediction.

Every command takes --seed and --out and is deterministic given the seed;
on failure all partially written outputs are removed and the exit code is
nonzero. The effective configuration is echoed into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from coxmix import metrics as metrics_mod
from coxmix import synth as synth_mod
from coxmix.dataset import (
    DatasetError, event_quantiles, k_fold_split, load_csv, standardize,
)
from coxmix.model import DcmConfig, DcmModel, fit


class _OutputTracker:
    """Records files written by a command so they can be removed if a
    later step fails."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.written = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.written.append(p)
        return p

    def cleanup(self):
        for p in self.written:
            if os.path.exists(p):
                os.remove(p)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _echo_config(tracker, args, extra=None):
    payload = {k: v for k, v in vars(args).items() if k != "func"}
    if extra:
        payload.update(extra)
    _write_json(tracker.path("run_config.json"), payload)


def _load_dataset(args):
    return load_csv(
        args.data, time_col=args.time_col, event_col=args.event_col,
        group_col=args.group_col, drop_missing=args.drop_missing,
        drop_columns=tuple(args.drop_columns.split(",")) if args.drop_columns else (),
    )


def _resolve_horizons(spec, ds):
    """'q25,q50,q75' quantile tags (lower nearest-rank rule over the
    uncensored event times) or explicit comma-separated times."""
    parts = [p.strip() for p in spec.split(",") if p.strip()]
    out = []
    for p in parts:
        if p.startswith("q"):
            out.append(event_quantiles(ds, [float(p[1:]) / 100.0])[0])
        else:
            out.append(float(p))
    return out


def _dcm_config(args, seed_offset=0):
    hidden = tuple(int(v) for v in args.layers.split(",") if v.strip()) \
        if args.layers else ()
    if args.hidden is not None:
        hidden = tuple(args.hidden for _ in hidden)
    return DcmConfig(
        n_clusters=args.k, hidden_dims=hidden, lr=args.lr,
        batch_size=args.batch, max_epochs=args.epochs,
        patience=args.patience, seed=args.seed + seed_offset,
    )


# -- synth ----------------------------------------------------------------

_PRESETS = {
    # two components with crossing baseline survival curves (non-PH)
    "crossing": dict(
        clusters=[
            {"shape": 0.7, "scale": 6.0, "beta": [0.0, 0.8, 0.0]},
            {"shape": 5.0, "scale": 5.0, "beta": [0.0, 0.0, 0.8]},
        ],
        gating=[[2.5, 0.0, 0.0], [-2.5, 0.0, 0.0]],
    ),
    # two well-separated components; the shapes differ so membership cannot
    # be absorbed into a proportional-hazards shift
    "separated": dict(
        clusters=[
            {"shape": 6.0, "scale": 4.0, "beta": [0.0, 0.3, 0.0]},
            {"shape": 0.8, "scale": 0.8, "beta": [0.0, 0.0, 0.3]},
        ],
        gating=[[3.0, 0.0, 0.0], [-3.0, 0.0, 0.0]],
    ),
    # single proportional-hazards component
    "ph": dict(
        clusters=[{"shape": 1.0, "scale": 1.0, "beta": [1.0, -0.5, 0.25]}],
        gating=[[0.0, 0.0, 0.0]],
    ),
}


def _synth_config(args):
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = _PRESETS[args.preset]
    clusters = tuple(
        synth_mod.ClusterSpec(shape=c["shape"], scale=c["scale"], beta=tuple(c["beta"]))
        for c in raw["clusters"])
    return synth_mod.SynthConfig(
        n=args.n, clusters=clusters,
        gating=tuple(tuple(row) for row in raw["gating"]),
        censoring_fraction=args.censoring, seed=args.seed,
        with_groups=args.with_groups)


def cmd_synth(args, tracker):
    config = _synth_config(args)
    ds, sidecar = synth_mod.generate_cohort(config)
    header = list(ds.feature_names) + ["time", "event"]
    if ds.groups is not None:
        header.append("group")
    rows = []
    for i in range(len(ds)):
        row = [float(v) for v in ds.features[i]] + [float(ds.times[i]), int(ds.events[i])]
        if ds.groups is not None:
            row.append(ds.groups[i])
        rows.append(row)
    _write_csv(tracker.path("cohort.csv"), header, rows)
    _write_json(tracker.path("sidecar.json"), sidecar)
    _echo_config(tracker, args)


# -- train ----------------------------------------------------------------

def cmd_train(args, tracker):
    ds = _load_dataset(args)
    ds_std, _ = standardize(ds)
    config = _dcm_config(args)
    model = fit(ds_std, config)
    model.save(tracker.path("model.json"))
    _write_csv(
        tracker.path("training_log.csv"),
        ["epoch", "train_q", "val_q", "batch_loss", "starved_clusters"],
        [[e["epoch"], e["train_q"], e["val_q"], e["batch_loss"], e["starved_clusters"]]
         for e in model.training_log])
    _echo_config(tracker, args, {"effective_dcm_config": asdict(config)})


# -- predict / eval helpers ------------------------------------------------

def _predict_matrix(model, ds):
    if model.feature_names and tuple(ds.feature_names) != model.feature_names:
        missing = set(model.feature_names) ^ set(ds.feature_names)
        raise DatasetError(f"feature names differ from the model's: {sorted(missing)}")
    x = ds.features
    if model.standardization is not None:
        mean, std = model.standardization
        x = (x - mean) / std
    return x


def cmd_predict(args, tracker):
    model = DcmModel.load(args.model)
    ds = _load_dataset(args)
    horizons = _resolve_horizons(args.horizons, ds)
    x = _predict_matrix(model, ds)
    surv = model.predict_survival(x, np.asarray(horizons))
    surv = np.atleast_2d(surv)
    if surv.shape[0] != len(ds):
        surv = surv.reshape(len(ds), -1)
    _write_csv(tracker.path("predictions.csv"),
               [f"surv_at_{h}" for h in horizons],
               [list(map(float, row)) for row in surv])
    _echo_config(tracker, args, {"horizons": horizons})


def _report_rows(rows):
    return [[r.metric, r.horizon, r.group,
             "" if np.isnan(r.estimate) else r.estimate,
             "" if np.isnan(r.se) else r.se, r.n] for r in rows]


def _calibration_table(surv, times, events, horizons):
    rows = []
    for h_idx, h in enumerate(horizons):
        pi = surv[:, h_idx]
        order = np.argsort(pi, kind="stable")
        for b, idx in enumerate(np.array_split(order, metrics_mod.DEFAULT_ECE_BINS)):
            from coxmix.estimators import kaplan_meier
            km = kaplan_meier(times[idx], events[idx])(h)
            rows.append([float(h), b, float(pi[idx].mean()), float(km), int(idx.size)])
    return rows


def cmd_eval(args, tracker):
    model = DcmModel.load(args.model)
    ds = _load_dataset(args)
    horizons = _resolve_horizons(args.horizons, ds)
    x = _predict_matrix(model, ds)
    surv = np.atleast_2d(model.predict_survival(x, np.asarray(horizons)))
    if surv.shape[0] != len(ds):
        surv = surv.reshape(len(ds), -1)
    rows = metrics_mod.evaluate_by_group(
        surv, ds.times, ds.events, horizons, ds.groups,
        n_replicates=args.bootstrap, seed=args.seed)
    _write_csv(tracker.path("report.csv"),
               ["metric", "horizon", "group", "estimate", "se", "n"],
               _report_rows(rows))
    _write_json(tracker.path("report.json"),
                [asdict_row(r) for r in rows])
    _write_csv(tracker.path("calibration_bins.csv"),
               ["horizon", "bin", "mean_predicted", "km_observed", "n"],
               _calibration_table(surv, ds.times, ds.events, horizons))
    if args.dump_baselines:
        for k, bl in enumerate(model.baselines):
            grid = np.linspace(bl.knots[0], bl.knots[-1], 200)
            _write_csv(tracker.path(f"baseline_{k}.csv"), ["time", "survival"],
                       [[float(t), float(bl(t))] for t in grid])
    _echo_config(tracker, args, {"horizons": horizons})


def asdict_row(r):
    return {"metric": r.metric, "horizon": r.horizon, "group": r.group,
            "estimate": None if np.isnan(r.estimate) else r.estimate,
            "se": None if np.isnan(r.se) else r.se, "n": r.n}


# -- cross-validation -------------------------------------------------------

_GRID = [(k, layers, width)
         for k in (3, 4, 6) for layers in (1, 2) for width in (50, 100)]


def _run_cv(ds, horizons, config_fn, folds, seed):
    """Train per fold, pool held-out predictions, return the pooled
    survival matrix aligned with the dataset order."""
    split = k_fold_split(ds, folds, seed)
    surv = np.full((len(ds), len(horizons)), np.nan)
    for fold in range(folds):
        tr, te = split.train_idx(fold), split.test_idx(fold)
        train_ds, stats = standardize(ds.subset(tr))
        model = fit(train_ds, config_fn(fold))
        xte = (ds.features[te] - stats[0]) / stats[1]
        p = np.atleast_2d(model.predict_survival(xte, np.asarray(horizons)))
        surv[te] = p.reshape(len(te), -1)
    return surv


def cmd_cv(args, tracker):
    ds = _load_dataset(args)
    horizons = _resolve_horizons(args.horizons, ds)

    if args.grid:
        results = []
        for k, layers, width in _GRID:
            cfg = lambda fold, k=k, layers=layers, width=width: DcmConfig(
                n_clusters=k, hidden_dims=(width,) * layers, lr=args.lr,
                batch_size=args.batch, max_epochs=args.epochs,
                patience=args.patience, seed=args.seed + fold)
            surv = _run_cv(ds, horizons, cfg, args.folds, args.seed)
            briers = [metrics_mod.brier_ipcw(
                surv[:, i], ds.times, ds.events,
                metrics_mod.censoring_km(ds.times, ds.events), h)
                for i, h in enumerate(horizons)]
            results.append(((k, layers, width), float(np.mean(briers)), surv))
        results.sort(key=lambda r: (r[1], r[0]))
        (k, layers, width), best_brier, surv = results[0]
        grid_rows = [[f"k={r[0][0]},layers={r[0][1]},width={r[0][2]}", r[1]]
                     for r in results]
        _write_csv(tracker.path("grid.csv"), ["config", "mean_brier"], grid_rows)
        chosen = {"k": k, "layers": layers, "width": width, "mean_brier": best_brier}
    else:
        cfg = lambda fold: _dcm_config(args, seed_offset=fold)
        surv = _run_cv(ds, horizons, cfg, args.folds, args.seed)
        chosen = None

    rows = metrics_mod.evaluate_by_group(
        surv, ds.times, ds.events, horizons, ds.groups,
        n_replicates=args.bootstrap, seed=args.seed)
    _write_csv(tracker.path("report.csv"),
               ["metric", "horizon", "group", "estimate", "se", "n"],
               _report_rows(rows))
    _write_json(tracker.path("report.json"), [asdict_row(r) for r in rows])
    extra = {"horizons": horizons}
    if chosen:
        extra["selected"] = chosen
    _echo_config(tracker, args, extra)


# -- argument parsing --------------------------------------------------------

def _add_shared(p, data_required=True):
    p.add_argument("--data", required=data_required, help="input CSV path")
    p.add_argument("--time-col", default="time")
    p.add_argument("--event-col", default="event")
    p.add_argument("--group-col", default=None)
    p.add_argument("--drop-missing", action="store_true",
                   help="drop rows with missing values instead of failing")
    p.add_argument("--drop-columns", default="",
                   help="comma-separated columns to exclude from the features")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")


def _add_train_flags(p):
    p.add_argument("--k", type=int, default=3, help="number of mixture components")
    p.add_argument("--layers", default="100",
                   help="comma-separated hidden widths; empty for a linear model")
    p.add_argument("--hidden", type=int, default=None,
                   help="override width for every hidden layer")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=3)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="coxmix",
        description="Cox mixture survival models: synthesize, train, evaluate.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic censored cohort")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--preset", choices=sorted(_PRESETS), default="ph")
    p.add_argument("--spec", default=None,
                   help="JSON file with clusters/gating overriding --preset")
    p.add_argument("--censoring", type=float, default=0.0)
    p.add_argument("--with-groups", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model on a CSV dataset")
    _add_shared(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model")
    _add_shared(p)
    p.add_argument("--model", required=True)
    p.add_argument("--horizons", default="q25,q50,q75",
                   help="qNN quantile tags or explicit times, comma separated")
    p.add_argument("--bootstrap", type=int, default=100)
    p.add_argument("--dump-baselines", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cv", help="k-fold cross-validation with pooled report")
    _add_shared(p)
    _add_train_flags(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--horizons", default="q25,q50,q75")
    p.add_argument("--bootstrap", type=int, default=100)
    p.add_argument("--grid", action="store_true",
                   help="sweep K/layers/width and select by lowest pooled Brier")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("predict", help="survival probabilities at horizons")
    _add_shared(p)
    p.add_argument("--model", required=True)
    p.add_argument("--horizons", default="q25,q50,q75")
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    tracker = _OutputTracker(args.out)
    try:
        args.func(args, tracker)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        tracker.cleanup()
        print(f"coxmix {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
