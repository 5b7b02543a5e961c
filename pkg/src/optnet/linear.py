"""Linear regression fitting: ordinary least squares and elastic net.

Both fitters return a LinearModel operating on raw (unstandardized)
inputs. The elastic net standardizes internally for the coordinate
descent updates and maps the solution back, so its coefficients are
directly comparable with the OLS ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyInputError,
    InvalidConfigError,
    OptnetError,
    ShapeMismatchError,
)

#: Penalty strengths 10^k for k from -4 to 2 in quarter-decade steps.
DEFAULT_PENALTY_GRID = tuple(10.0 ** k for k in np.arange(-4.0, 2.25, 0.25))
#: Mixing weights from pure ridge (0) to pure lasso (1).
DEFAULT_L1_RATIO_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

_RCOND = 1e-10


@dataclass(frozen=True)
class LinearModel:
    """Affine predictor y = X @ weights + intercept.

    rank_deficient marks an OLS fit whose design matrix had linearly
    dependent columns; the stored weights are then the minimum-norm
    solution. converged is False when coordinate descent hit its sweep
    limit, in which case the last iterate is stored.
    """

    weights: np.ndarray
    intercept: float
    feature_names: tuple[str, ...]
    rank_deficient: bool = False
    converged: bool = True
    n_sweeps: int = 0
    objective_history: tuple[float, ...] = field(
        default=(), repr=False, compare=False)

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        if w.ndim != 1:
            raise ShapeMismatchError("weights must be 1-d")
        if len(self.feature_names) != w.shape[0]:
            raise ShapeMismatchError(
                f"{len(self.feature_names)} names for {w.shape[0]} weights")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_names",
                           tuple(str(n) for n in self.feature_names))
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def n_selected(self) -> int:
        """Number of features with a nonzero coefficient."""
        return int(np.count_nonzero(self.weights))

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (self.feature_names == other.feature_names
                and np.array_equal(self.weights, other.weights)
                and self.intercept == other.intercept
                and self.rank_deficient == other.rank_deficient
                and self.converged == other.converged)

    def __hash__(self):
        return hash((self.feature_names, self.intercept))


def predict(model: LinearModel, features: np.ndarray) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise ShapeMismatchError(
            f"expected (n, {model.weights.shape[0]}) features, got {X.shape}")
    return X @ model.weights + model.intercept


def mae(predicted: np.ndarray, actual: np.ndarray) -> float:
    """Mean absolute error between two equal-length vectors."""
    p = np.asarray(predicted, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.shape != a.shape:
        raise ShapeMismatchError(f"shape mismatch {p.shape} vs {a.shape}")
    if p.size == 0:
        raise EmptyInputError("mae of empty vectors is undefined")
    return float(np.mean(np.abs(p - a)))


def fit_ols(features: np.ndarray, target: np.ndarray,
            feature_names: tuple[str, ...] | None = None) -> LinearModel:
    """Least-squares fit with an unpenalized intercept.

    Solved through an orthogonal decomposition, which handles more
    columns than rows by returning the minimum-norm solution; the model
    is flagged rank_deficient in that case rather than raising.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatchError("features must be 2-d")
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"{X.shape[0]} feature rows vs {y.shape[0]} targets")
    if X.shape[0] == 0:
        raise EmptyInputError("cannot fit on zero rows")
    n, d = X.shape
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(d))
    if d == 0:
        return LinearModel(np.zeros(0), float(np.mean(y)), ())
    A = np.column_stack([X, np.ones(n)])
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=_RCOND)
    return LinearModel(coef[:d], float(coef[d]), tuple(feature_names),
                       rank_deficient=bool(rank < d + 1))


@dataclass
class ElasticNetConfig:
    """Settings for the coordinate-descent elastic net.

    penalty scales the whole regularizer; l1_ratio splits it between the
    absolute-value term (1) and the squared term (0).
    """

    penalty: float = 1.0
    l1_ratio: float = 0.5
    tolerance: float = 1e-6
    max_sweeps: int = 1000

    def validate(self) -> None:
        if self.penalty < 0:
            raise InvalidConfigError("penalty must be non-negative")
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise InvalidConfigError("l1_ratio must lie in [0, 1]")
        if self.tolerance <= 0:
            raise InvalidConfigError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise InvalidConfigError("max_sweeps must be at least 1")


def _soft_threshold(v: float, t: float) -> float:
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0


def elastic_net_objective(features, target, weights, intercept,
                          penalty: float, l1_ratio: float) -> float:
    """Penalized half mean squared error minimized by fit_elastic_net."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    r = y - X @ w - intercept
    loss = 0.5 * float(np.mean(r * r))
    reg = penalty * (l1_ratio * float(np.sum(np.abs(w)))
                     + 0.5 * (1.0 - l1_ratio) * float(np.sum(w * w)))
    return loss + reg


def fit_elastic_net(features: np.ndarray, target: np.ndarray,
                    config: ElasticNetConfig | None = None,
                    feature_names: tuple[str, ...] | None = None,
                    keep_history: bool = False) -> LinearModel:
    """Minimize (1/2n)||y - Xw - b||^2 + penalty * mix(w) by cyclic
    coordinate descent.

    mix(w) = l1_ratio * ||w||_1 + (1 - l1_ratio)/2 * ||w||_2^2. Features
    are centered and scaled to unit second moment internally; the
    returned model is on the original scale. The intercept is never
    penalized. Convergence is declared when no coefficient moves more
    than config.tolerance in a sweep; hitting max_sweeps first yields the
    last iterate with converged=False instead of an exception.

    With keep_history the model records the objective after every sweep,
    which decreases monotonically for this coordinate-wise scheme.
    """
    config = config or ElasticNetConfig()
    config.validate()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatchError("features must be 2-d")
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"{X.shape[0]} feature rows vs {y.shape[0]} targets")
    if X.shape[0] == 0:
        raise EmptyInputError("cannot fit on zero rows")
    n, d = X.shape
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(d))
    if d == 0:
        return LinearModel(np.zeros(0), float(np.mean(y)), ())

    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)  # ddof=0, so scaled columns have unit 2nd moment
    live = x_scale > 0
    x_scale = np.where(live, x_scale, 1.0)
    Z = (X - x_mean) / x_scale
    y_mean = float(y.mean())
    yc = y - y_mean

    l1 = config.penalty * config.l1_ratio
    l2 = config.penalty * (1.0 - config.l1_ratio)
    w = np.zeros(d)
    resid = yc.copy()
    history: list[float] = []
    active = np.flatnonzero(live)
    converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        max_delta = 0.0
        for j in active:
            zj = Z[:, j]
            wj = w[j]
            # rho is the coordinate-wise least-squares fit to the partial
            # residual; with unit second moment columns the update is exact
            rho = (zj @ resid) / n + wj
            w_new = _soft_threshold(rho, l1) / (1.0 + l2)
            if w_new != wj:
                resid += zj * (wj - w_new)
                w[j] = w_new
                max_delta = max(max_delta, abs(w_new - wj))
        if keep_history:
            history.append(
                0.5 * float(resid @ resid) / n
                + config.penalty * (config.l1_ratio * float(np.sum(np.abs(w)))
                                    + 0.5 * (1.0 - config.l1_ratio)
                                    * float(np.sum(w * w))))
        if max_delta <= config.tolerance:
            converged = True
            break

    w_orig = w / x_scale
    intercept = y_mean - float(x_mean @ w_orig)
    return LinearModel(w_orig, intercept, tuple(feature_names),
                       converged=converged, n_sweeps=sweeps,
                       objective_history=tuple(history))


@dataclass(frozen=True)
class GridCell:
    """Outcome of one (penalty, l1_ratio) grid point.

    A failed fit leaves a cell with error set, an infinite validation
    MAE, and no model; the search carries on with the rest of the grid.
    """

    penalty: float
    l1_ratio: float
    validation_mae: float
    n_selected: int
    converged: bool
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class GridSearchResult:
    """All grid cells plus the winning refit model and its test error."""

    cells: list[GridCell]
    best_cell: GridCell
    best_model: LinearModel
    validation_mae: float
    test_mae: float | None

    def cells_csv(self) -> str:
        lines = ["penalty,l1_ratio,validation_mae,n_selected,converged,error"]
        for c in self.cells:
            err = "" if c.error is None else c.error.replace("\n", " ")
            if "," in err or '"' in err:
                err = '"' + err.replace('"', '""') + '"'
            lines.append(f"{c.penalty!r},{c.l1_ratio!r},{c.validation_mae!r},"
                         f"{c.n_selected},{int(c.converged)},{err}")
        return "\n".join(lines) + "\n"


def grid_search_elastic_net(partitioned, penalty_grid=None, l1_ratio_grid=None,
                            tolerance: float = 1e-6, max_sweeps: int = 1000,
                            compute_test_mae: bool = True) -> GridSearchResult:
    """Fit every (penalty, l1_ratio) combination on the training part and
    pick the cell with the lowest validation MAE.

    Ties prefer fewer selected features, then the smaller penalty, then
    the smaller l1_ratio. The winner is scored once on the test part.
    """
    penalties = tuple(penalty_grid) if penalty_grid is not None \
        else DEFAULT_PENALTY_GRID
    ratios = tuple(l1_ratio_grid) if l1_ratio_grid is not None \
        else DEFAULT_L1_RATIO_GRID
    if not penalties or not ratios:
        raise InvalidConfigError("grids must be non-empty")
    X_train, y_train = partitioned.train_xy()
    X_val, y_val = partitioned.validation_xy()
    names = partitioned.base.feature_names

    cells: list[GridCell] = []
    models: list[LinearModel | None] = []
    for penalty in penalties:
        for ratio in ratios:
            cfg = ElasticNetConfig(penalty=penalty, l1_ratio=ratio,
                                   tolerance=tolerance, max_sweeps=max_sweeps)
            try:
                model = fit_elastic_net(X_train, y_train, cfg, names)
                val_mae = mae(predict(model, X_val), y_val)
            except (OptnetError, FloatingPointError) as exc:
                # flag the cell, keep scanning the grid
                cells.append(GridCell(float(penalty), float(ratio),
                                      float("inf"), 0, False, str(exc)))
                models.append(None)
                continue
            cells.append(GridCell(float(penalty), float(ratio), val_mae,
                                  model.n_selected, model.converged))
            models.append(model)

    if all(m is None for m in models):
        raise InvalidConfigError("every grid cell failed to fit")
    best_i = min(range(len(cells)), key=lambda i: (
        cells[i].validation_mae, cells[i].n_selected,
        cells[i].penalty, cells[i].l1_ratio))
    best = models[best_i]
    test_mae = None
    if compute_test_mae:
        X_test, y_test = partitioned.test_xy()
        test_mae = mae(predict(best, X_test), y_test)
    return GridSearchResult(cells, cells[best_i], best,
                            cells[best_i].validation_mae, test_mae)
