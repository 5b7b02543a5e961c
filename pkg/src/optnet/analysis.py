"""Input optimization against fitted models, as a three-stage network.

Given one dataset per target output, the first stage fits a pool of
candidate models per output from declared recipes, the second stage
picks the most promising subset (one model per output), and the third
stage searches for input values that push every selected model's
prediction to its target. Suitability of a subset is measured by the
inverse-problem residual: the sum of squared deviations between model
outputs and targets at the best found inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._rng import stream_seed, substream
from .data import PartitionedDataset
from .engine import Node, Port, SinksEmitted, Topology, run_network
from .errors import (
    InfeasibleBoundsError,
    InvalidConfigError,
    InvalidSubsetSizeError,
    ModelInputMismatchError,
    OptnetError,
)
from .forest import ForestConfig
from .linear import (
    fit_ols,
    grid_search_elastic_net,
    mae,
    predict,
)
from .networks import (
    FitnessConfig,
    NetworkResult,
    feature_selection_network,
    predict_any,
)
from .osga import OsgaParams, RealGenomeSpec, osga_minimize
from .payloads import ModelWithQuality


# ---------------------------------------------------------------------------
# Recipes and the model pool

@dataclass
class OlsRecipe:
    label: str = "ols"


@dataclass
class ElasticNetRecipe:
    penalties: tuple[float, ...] | None = None
    l1_ratios: tuple[float, ...] | None = None
    label: str = "elastic-net"


@dataclass
class ForestRecipe:
    config: ForestConfig = field(default_factory=ForestConfig)
    label: str = "random-forest"


@dataclass
class FeatureSelectionRecipe:
    params: OsgaParams = field(default_factory=OsgaParams)
    fitness: FitnessConfig = field(default_factory=FitnessConfig)
    model: object = "ols"
    label: str = "feature-selection"


Recipe = OlsRecipe | ElasticNetRecipe | ForestRecipe | FeatureSelectionRecipe


@dataclass
class PoolEntry:
    """One recipe outcome: a quality-annotated model or a recorded error."""

    label: str
    result: ModelWithQuality | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def _run_recipe(recipe: Recipe, partitioned: PartitionedDataset,
                seed: int) -> ModelWithQuality:
    X_train, y_train = partitioned.train_xy()
    X_val, y_val = partitioned.validation_xy()
    names = partitioned.base.feature_names
    if isinstance(recipe, OlsRecipe):
        model = fit_ols(X_train, y_train, names)
        result = ModelWithQuality(
            model,
            train_mae=mae(predict(model, X_train), y_train),
            validation_mae=mae(predict(model, X_val), y_val),
            n_features=model.n_selected, label=recipe.label)
    elif isinstance(recipe, ElasticNetRecipe):
        grid = grid_search_elastic_net(partitioned, recipe.penalties,
                                       recipe.l1_ratios,
                                       compute_test_mae=False)
        model = grid.best_model
        result = ModelWithQuality(
            model,
            train_mae=mae(predict(model, X_train), y_train),
            validation_mae=grid.validation_mae,
            n_features=model.n_selected, label=recipe.label)
    elif isinstance(recipe, ForestRecipe):
        from .networks import ForestModelNode
        from .payloads import RegressionProblem
        node = ForestModelNode("pool", recipe.config)
        problem = RegressionProblem(X_train, y_train, X_val, y_val, names)
        result = _with_label(
            node.fit_problem(problem, substream(seed, "pool-forest")),
            recipe.label)
    elif isinstance(recipe, FeatureSelectionRecipe):
        net: NetworkResult = feature_selection_network(
            partitioned, recipe.params, recipe.fitness, recipe.model,
            seed=seed, compute_test_mae=False)
        result = _with_label(net.best_model, recipe.label)
    else:
        raise InvalidConfigError(f"unknown recipe {recipe!r}")
    # final scoring only; searches above never saw these rows
    X_test, y_test = partitioned.test_xy()
    return _with_test(result, _masked_test_mae(result, recipe, partitioned,
                                               X_test, y_test))


def _with_label(result: ModelWithQuality, label: str) -> ModelWithQuality:
    from dataclasses import replace
    return replace(result, label=label)


def _with_test(result: ModelWithQuality, test_mae: float) -> ModelWithQuality:
    from dataclasses import replace
    return replace(result, test_mae=test_mae)


def _masked_test_mae(result, recipe, partitioned, X_test, y_test) -> float:
    model = result.model
    names = getattr(model, "feature_names", partitioned.base.feature_names)
    cols = [partitioned.base.feature_names.index(n) for n in names]
    return mae(predict_any(model, X_test[:, cols]), y_test)


def build_model_pool(partitioned: PartitionedDataset, recipes,
                     seed: int = 0) -> list[PoolEntry]:
    """Fit every recipe on the dataset; failures become flagged entries
    instead of aborting the pool."""
    if not recipes:
        raise InvalidConfigError("at least one recipe is required")
    entries: list[PoolEntry] = []
    for i, recipe in enumerate(recipes):
        recipe_seed = stream_seed(seed, "pool", i)
        try:
            entries.append(PoolEntry(recipe.label,
                                     _run_recipe(recipe, partitioned,
                                                 recipe_seed)))
        except OptnetError as exc:
            entries.append(PoolEntry(recipe.label, None, str(exc)))
    return entries


def select_model_subset(pool: list[PoolEntry], k: int,
                        criterion=None) -> list[PoolEntry]:
    """Pick the k best pool entries.

    criterion maps a ModelWithQuality to a sortable value; the default
    is validation MAE. Ties fall back to fewer features, then to recipe
    order. Failed entries never qualify.
    """
    usable = [e for e in pool if e.ok]
    if not 1 <= k <= len(usable):
        raise InvalidSubsetSizeError(
            f"k={k} not satisfiable from {len(usable)} usable pool entries")
    crit = criterion or (lambda r: r.validation_mae)
    order = sorted(range(len(usable)),
                   key=lambda i: (crit(usable[i].result),
                                  usable[i].result.n_features, i))
    return [usable[i] for i in order[:k]]


# ---------------------------------------------------------------------------
# Input optimization

@dataclass
class AnalysisTask:
    """The inverse problem: reach target outputs within input bounds.

    input_names orders the full input vector; bounds is one (lo, hi)
    row per input; fixed_inputs pins chosen inputs to constants,
    excluding them from the search.
    """

    input_names: tuple[str, ...]
    bounds: np.ndarray
    target_outputs: tuple[float, ...]
    fixed_inputs: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        b = np.asarray(self.bounds, dtype=np.float64)
        if b.ndim != 2 or b.shape[1] != 2 \
                or b.shape[0] != len(self.input_names):
            raise InvalidConfigError(
                "bounds must be one (lo, hi) pair per input name")
        if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
            raise InfeasibleBoundsError(
                "bounds must be finite with lo < hi")
        unknown = set(self.fixed_inputs) - set(self.input_names)
        if unknown:
            raise InvalidConfigError(
                f"fixed inputs {sorted(unknown)} are not task inputs")
        if not self.target_outputs:
            raise InvalidConfigError("at least one target output required")


@dataclass
class InputOptimizationResult:
    inputs: dict[str, float]
    residual: float
    model_outputs: tuple[float, ...]
    evaluations: int
    terminated_by: str


def _model_column_picker(model, input_names: tuple[str, ...]):
    names = getattr(model, "feature_names", None)
    if names is None:
        raise ModelInputMismatchError(
            f"model {type(model).__name__} exposes no feature names")
    missing = [n for n in names if n not in input_names]
    if missing:
        raise ModelInputMismatchError(
            f"model needs inputs {missing} absent from the task")
    idx = np.array([input_names.index(n) for n in names], dtype=np.intp)
    return idx


def optimize_inputs(models, task: AnalysisTask,
                    search: OsgaParams | None = None,
                    seed: int = 0) -> InputOptimizationResult:
    """Search input space so each model's output approaches its target.

    models is one fitted model per target output (bare models or
    ModelWithQuality wrappers). Minimizes the summed squared deviation
    over the free inputs; fixed inputs stay pinned. Lower residual is
    better; zero means every target is met exactly.
    """
    task.validate()
    models = [m.model if isinstance(m, ModelWithQuality) else m
              for m in models]
    if len(models) != len(task.target_outputs):
        raise InvalidConfigError(
            f"{len(models)} models for {len(task.target_outputs)} targets")
    pickers = [_model_column_picker(m, task.input_names) for m in models]
    targets = np.asarray(task.target_outputs, dtype=np.float64)
    bounds = np.asarray(task.bounds, dtype=np.float64)

    full = np.zeros(len(task.input_names))
    free = []
    for i, name in enumerate(task.input_names):
        if name in task.fixed_inputs:
            full[i] = float(task.fixed_inputs[name])
        else:
            free.append(i)
    if not free:
        raise InvalidConfigError("every input is fixed; nothing to search")
    free = np.array(free, dtype=np.intp)

    def outputs_at(x_free: np.ndarray) -> np.ndarray:
        x = full.copy()
        x[free] = x_free
        row = x.reshape(1, -1)
        return np.array([float(predict_any(m, row[:, idx])[0])
                         for m, idx in zip(models, pickers)])

    def residual(x_free: np.ndarray) -> float:
        d = outputs_at(x_free) - targets
        return float(d @ d)

    search = search or OsgaParams(
        population_size=50, max_evaluations=20000,
        crossover_kind="simulated-binary", max_selection_pressure=50.0,
        target_fitness=1e-12)
    spec = RealGenomeSpec(bounds[free], sigma_fraction=0.05)
    run = osga_minimize(residual, spec, search,
                        rng=substream(seed, "input-search"))
    best_free = run.best.genome
    outs = outputs_at(best_free)
    inputs = {}
    for i, name in enumerate(task.input_names):
        if name in task.fixed_inputs:
            inputs[name] = float(task.fixed_inputs[name])
    for pos, i in enumerate(free):
        inputs[task.input_names[i]] = float(best_free[pos])
    return InputOptimizationResult(inputs, run.best.fitness,
                                   tuple(float(o) for o in outs),
                                   run.evaluations, run.terminated_by)


# ---------------------------------------------------------------------------
# The three-stage network

class ModelPoolNode(Node):
    """Stage one: builds one recipe pool per target output.

    The same pools go out twice: downstream to selection and to the
    record port, normally left unconnected so the run collects them.
    """

    output_ports = (Port("pools", "run-result"),
                    Port("record", "run-result"))

    def __init__(self, node_id: str, datasets, recipes, seed: int):
        super().__init__(node_id)
        self.datasets = datasets
        self.recipes = recipes
        self.seed = seed

    def handle_entry(self, payload, ctx) -> None:
        pools = [build_model_pool(ds, self.recipes,
                                  stream_seed(self.seed, "output", i))
                 for i, ds in enumerate(self.datasets)]
        ctx.emit("pools", pools)
        ctx.emit("record", pools)


class SubsetSelectionNode(Node):
    """Stage two: one model per output, best validation error first."""

    input_ports = (Port("pools", "run-result"),)
    output_ports = (Port("subsets", "run-result"),)

    def __init__(self, node_id: str, k: int):
        super().__init__(node_id)
        self.k = k

    def handle(self, port_name: str, payload, ctx) -> None:
        subsets = [select_model_subset(pool, self.k) for pool in payload]
        ctx.emit("subsets", subsets)


class InputSearchNode(Node):
    """Stage three: ranks candidate model combinations by inverse-problem
    residual and reports the winner."""

    input_ports = (Port("subsets", "run-result"),)
    output_ports = (Port("report", "run-result"),)

    def __init__(self, node_id: str, task: AnalysisTask,
                 search: OsgaParams | None, seed: int):
        super().__init__(node_id)
        self.task = task
        self.search = search
        self.seed = seed

    def handle(self, port_name: str, payload, ctx) -> None:
        subsets: list[list[PoolEntry]] = payload
        n_outputs = len(subsets)
        if n_outputs != len(self.task.target_outputs):
            raise InvalidConfigError(
                f"{n_outputs} datasets for "
                f"{len(self.task.target_outputs)} target outputs")
        width = min(len(s) for s in subsets)
        ranked = []
        for rank_i in range(width):
            combo = [subsets[j][rank_i] for j in range(n_outputs)]
            result = optimize_inputs([e.result for e in combo], self.task,
                                     self.search,
                                     stream_seed(self.seed, "combo", rank_i))
            ranked.append((combo, result))
        ranked.sort(key=lambda cr: cr[1].residual)
        ctx.emit("report", ranked)


@dataclass
class AnalysisReport:
    """Full record of a three-stage run, ready for JSON."""

    pools: list[list[PoolEntry]]
    ranked: list[tuple[list[PoolEntry], InputOptimizationResult]]
    task: AnalysisTask
    seed: int
    subset_size: int

    @property
    def best_inputs(self) -> dict[str, float]:
        return self.ranked[0][1].inputs

    @property
    def best_residual(self) -> float:
        return self.ranked[0][1].residual

    def to_json_dict(self) -> dict:
        def entry_doc(e: PoolEntry) -> dict:
            if not e.ok:
                return {"label": e.label, "error": e.error}
            return {
                "label": e.label,
                "train_mae": e.result.train_mae,
                "validation_mae": e.result.validation_mae,
                "test_mae": e.result.test_mae,
                "n_features": e.result.n_features,
                "flags": list(e.result.flags),
            }

        return {
            "task": {
                "input_names": list(self.task.input_names),
                "bounds": np.asarray(self.task.bounds).tolist(),
                "target_outputs": list(self.task.target_outputs),
                "fixed_inputs": dict(self.task.fixed_inputs),
            },
            "seed": self.seed,
            "subset_size": self.subset_size,
            "pools": [[entry_doc(e) for e in pool] for pool in self.pools],
            "ranked": [
                {
                    "models": [e.label for e in combo],
                    "inputs": result.inputs,
                    "residual": result.residual,
                    "model_outputs": list(result.model_outputs),
                    "evaluations": result.evaluations,
                    "terminated_by": result.terminated_by,
                }
                for combo, result in self.ranked
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def optimization_analysis_network(datasets, recipes, k: int,
                                  task: AnalysisTask,
                                  search: OsgaParams | None = None,
                                  seed: int = 0,
                                  workers: int = 1) -> AnalysisReport:
    """Run pool construction, subset selection, and input search as a
    three-node pipeline.

    datasets is one PartitionedDataset per target output (a single
    dataset is accepted for one-output tasks). The report ranks the
    tried model combinations by residual, best first.
    """
    if isinstance(datasets, PartitionedDataset):
        datasets = [datasets]
    datasets = list(datasets)
    if len(datasets) != len(task.target_outputs):
        raise InvalidConfigError(
            f"{len(datasets)} datasets for {len(task.target_outputs)} "
            f"target outputs")
    task.validate()
    topo = Topology()
    topo.add(ModelPoolNode("pools", datasets, recipes, seed))
    topo.add(SubsetSelectionNode("selection", k))
    topo.add(InputSearchNode("optimizer", task, search, seed))
    topo.connect("pools", "pools", "selection", "pools")
    topo.connect("selection", "subsets", "optimizer", "subsets")
    run = run_network(topo,
                      SinksEmitted((("optimizer", "report"),
                                    ("pools", "record"))),
                      entry=("pools", None), seed=seed, workers=workers)
    ranked = run.sink("optimizer", "report")[0]
    pools = run.sink("pools", "record")[0]
    return AnalysisReport(pools, ranked, task, seed, k)
