# Training the Cox mixture with Monte Carlo EM and comparing it against a
# single Cox model on data where the proportional-hazards assumption
# fails. Also shows cluster recovery against the generator's latents.

import numpy as np

from coxmix.dataset import event_quantiles
from coxmix.estimators import censoring_km
from coxmix.metrics import concordance_td, ece
from coxmix.model import DcmConfig, e_step, fit
from coxmix.synth import ClusterSpec, SynthConfig, generate_cohort

config = SynthConfig(
    n=4000,
    clusters=(
        ClusterSpec(shape=0.7, scale=6.0, beta=(0.0, 0.8, 0.0)),
        ClusterSpec(shape=5.0, scale=5.0, beta=(0.0, 0.0, 0.8)),
    ),
    gating=((2.5, 0.0, 0.0), (-2.5, 0.0, 0.0)),
    censoring_fraction=0.3,
    seed=11,
)
ds, sidecar = generate_cohort(config)
z = np.asarray(sidecar["latent"])
horizon = event_quantiles(ds, [0.75])[0]
g = censoring_km(ds.times, ds.events)

# Single proportional-hazards model: K = 1 with a linear encoder.
cox = fit(ds, DcmConfig(n_clusters=1, hidden_dims=(), lr=0.02,
                        max_epochs=150, patience=150, seed=0))
pi_cox = cox.predict_survival(ds.features, horizon)

# Two-component mixture with a one-hidden-layer encoder. Each epoch runs
# minibatch E / sample / M steps and then refreshes the per-cluster
# Breslow baselines over the full training split.
mix = fit(ds, DcmConfig(n_clusters=2, hidden_dims=(50,), lr=1e-2,
                        max_epochs=60, patience=10, seed=0))
pi_mix = mix.predict_survival(ds.features, horizon)

print("epoch trace (held-out objective, lower is better):")
for entry in mix.training_log[:5]:
    print(f"  epoch {entry['epoch']:2d}  val_q {entry['val_q']:.4f}")
print(f"  ... ({len(mix.training_log)} epochs total, "
      f"best val_q {min(e['val_q'] for e in mix.training_log):.4f})")

print(f"\ndiscrimination and calibration at the 75th event quantile "
      f"(t = {horizon:.2f}):")
print(f"  single Cox  C-td {concordance_td(pi_cox, ds.times, ds.events, g, horizon):.4f}"
      f"  ECE {ece(pi_cox, ds.times, ds.events, horizon):.4f}")
print(f"  mixture K=2 C-td {concordance_td(pi_mix, ds.times, ds.events, g, horizon):.4f}"
      f"  ECE {ece(pi_mix, ds.times, ds.events, horizon):.4f}")

# Posterior hard assignments vs the generator's latent clusters
# (label-permutation invariant).
gamma = e_step(mix, ds.features, ds.times, ds.events)
hard = gamma.argmax(axis=1)
acc = max(np.mean(hard == z), np.mean(hard == 1 - z))
print(f"\ncluster recovery accuracy: {acc:.3f}")

# Each recovered component gets its own baseline; their survival curves
# should cross like the generator's.
print("\nrecovered baseline survival per cluster:")
print("   t    cluster 0   cluster 1")
for t in (1.0, 4.0, 8.0):
    print(f"  {t:4.1f}   {mix.baselines[0](t):7.3f}    {mix.baselines[1](t):7.3f}")
