"""
The feature-selection network
=============================

The flagship composition: a search node proposes feature masks, an
orchestrator projects the regression problem onto each mask and asks a
model node to fit it, and the resulting validation error (plus a small
per-feature penalty) flows back as the mask's fitness.

This run uses a reduced budget so it finishes in a few seconds. The
full-size configuration ships as feature_selection_network.yaml in this
directory and runs through the command line:

    optnet run demos/feature_selection_network.yaml
"""

import numpy as np

from optnet.data import BenchmarkConfig, generate_benchmark, partition
from optnet.linear import fit_ols, mae, predict
from optnet.networks import FitnessConfig, feature_selection_network
from optnet.osga import OsgaParams

dataset, truth = generate_benchmark(
    BenchmarkConfig(n_observations=400, n_features=40, n_relevant=8),
    seed=11)
partitioned = partition(dataset, seed=11)

params = OsgaParams(population_size=40, max_evaluations=4000,
                    max_selection_pressure=60.0)
result = feature_selection_network(
    partitioned, params, FitnessConfig(penalty_per_feature=0.05), seed=1)

print("best mask:", result.best_mask.to_string())
print("selected:", result.best_mask.indices)
print("informative:", truth.true_indices)
hits = np.intersect1d(result.best_mask.indices, truth.true_indices).size
print(f"recovered {hits} of {len(truth.true_indices)} informative features")
print(f"evaluations: {result.evaluations}, "
      f"generations: {result.generations}, "
      f"stopped by: {result.terminated_by}")

# Score against the oracle that knows the informative columns.
X_train, y_train = partitioned.train_xy()
X_test, y_test = partitioned.test_xy()
keep = np.array(truth.true_indices)
oracle = fit_ols(X_train[:, keep], y_train)
oracle_mae = mae(predict(oracle, X_test[:, keep]), y_test)
print(f"network test MAE: {result.best_model.test_mae:.4f}")
print(f"oracle test MAE:  {oracle_mae:.4f}")

# The same search as an ordinary loop, no network machinery. Results
# are identical bit for bit because both draw from the same seeded
# substreams.
from optnet.networks import feature_selection_direct

twin = feature_selection_direct(
    partitioned, params, FitnessConfig(penalty_per_feature=0.05), seed=1)
print("plain-loop twin identical:", twin == result)
