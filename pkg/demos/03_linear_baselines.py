"""
Linear baselines: plain least squares and the elastic net
=========================================================
"""

import numpy as np

from optnet.data import BenchmarkConfig, generate_benchmark, partition
from optnet.linear import (fit_ols, grid_search_elastic_net, mae, predict)

# A benchmark where only 15 of 100 columns matter. Fitting all of them
# overfits the training rows; the oracle fit on the informative subset
# is the target every other method is judged against.
dataset, truth = generate_benchmark(BenchmarkConfig(), seed=0)
partitioned = partition(dataset, seed=0)

X_train, y_train = partitioned.train_xy()
X_test, y_test = partitioned.test_xy()

full = fit_ols(X_train, y_train, dataset.feature_names)
full_mae = mae(predict(full, X_test), y_test)

keep = np.array(truth.true_indices)
oracle = fit_ols(X_train[:, keep], y_train)
oracle_mae = mae(predict(oracle, X_test[:, keep]), y_test)

print(f"full OLS test MAE:   {full_mae:.4f}  (100 features)")
print(f"oracle test MAE:     {oracle_mae:.4f}  (15 informative features)")
print(f"ratio:               {full_mae / oracle_mae:.3f}")

# The elastic net shrinks the irrelevant weights without knowing which
# columns are informative. grid_search_elastic_net tries a penalty and
# mixing grid, picks the best cell by validation MAE, then refits on the
# combined train and validation rows.
grid = grid_search_elastic_net(partitioned)
print(f"elastic net test MAE: {grid.test_mae:.4f}  "
      f"(penalty {grid.best_cell.penalty:.4g}, "
      f"l1_ratio {grid.best_cell.l1_ratio:.2f}, "
      f"{grid.best_model.n_selected} nonzero weights)")

between = oracle_mae < grid.test_mae < full_mae
print("strictly between oracle and full OLS:", between)
