"""
Swapping the model node
=======================

The search and orchestrator nodes never look inside the model node, so
replacing least squares with a random forest is a one-argument change.
Same ports, same message kinds, different fitting engine.
"""

from optnet.data import BenchmarkConfig, generate_benchmark, partition
from optnet.forest import ForestConfig
from optnet.networks import FitnessConfig, feature_selection_network
from optnet.osga import OsgaParams

dataset, truth = generate_benchmark(
    BenchmarkConfig(n_observations=300, n_features=20, n_relevant=4),
    seed=5)
partitioned = partition(dataset, seed=5)

params = OsgaParams(population_size=16, max_evaluations=800,
                    max_selection_pressure=30.0)
fitness = FitnessConfig(penalty_per_feature=0.05)

ols_run = feature_selection_network(partitioned, params, fitness, seed=2)
print("least squares model node")
print("  mask:", ols_run.best_mask.to_string())
print(f"  validation MAE: {ols_run.best_model.validation_mae:.4f}")
print(f"  test MAE:       {ols_run.best_model.test_mae:.4f}")
print("  model label:", ols_run.best_model.label)

# model= accepts "ols", a ForestConfig, or any custom node instance
forest_run = feature_selection_network(
    partitioned, params, fitness, seed=2,
    model=ForestConfig(n_trees=25, sample_ratio=0.8, feature_ratio=0.7))
print("random forest model node")
print("  mask:", forest_run.best_mask.to_string())
print(f"  validation MAE: {forest_run.best_model.validation_mae:.4f}")
print(f"  test MAE:       {forest_run.best_model.test_mae:.4f}")
print("  model label:", forest_run.best_model.label)

# On a linear benchmark the linear model should win; the point is the
# seamless substitution, not the ranking.
print("forest run evaluations:", forest_run.evaluations)
