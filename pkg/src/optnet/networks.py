"""Concrete optimization networks built from the generic engine.

The central network couples three nodes in a loop: a feature-selection
node runs a genetic search over masks, an orchestrator turns each mask
into a projected regression problem and scores fitted models into a
scalar fitness (validation error plus a per-feature penalty), and a
model node fits whatever regressor it wraps. Swapping the model node
switches the learning algorithm without touching the rest; replacing it
with a node that internally runs a second network gives nested
hyperparameter tuning.

A plain-loop twin of the feature-selection network (same nodes, no
engine) is provided as an oracle: both paths share one search stream and
must produce bit-identical results.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import substream
from .data import FeatureMask, PartitionedDataset
from .engine import Node, Port, SinksEmitted, Topology, run_network
from .errors import InvalidConfigError
from .forest import ForestConfig, ForestModel, fit_random_forest, \
    predict_forest
from .linear import fit_ols, mae, predict
from .osga import (
    BinaryGenomeSpec,
    OsgaParams,
    RealGenomeSpec,
    RunResult,
    osga_stream,
)
from .payloads import ModelWithQuality, ParameterVector, RegressionProblem


@dataclass
class FitnessConfig:
    """How a fitted model's quality folds into a mask's fitness.

    Fitness is validation MAE plus penalty_per_feature times the number
    of selected features. penalty_per_feature None resolves, per
    dataset, to 1% of the constant model's validation MAE divided by the
    total feature count, so the penalty is scale-free.
    """

    penalty_per_feature: float | None = None

    def validate(self) -> None:
        if self.penalty_per_feature is not None \
                and self.penalty_per_feature < 0:
            raise InvalidConfigError("penalty_per_feature must be >= 0")

    def resolve(self, train_target: np.ndarray,
                validation_target: np.ndarray, n_features: int) -> float:
        if self.penalty_per_feature is not None:
            return float(self.penalty_per_feature)
        constant = float(np.mean(train_target))
        base = float(np.mean(np.abs(validation_target - constant)))
        return 0.01 * base / max(n_features, 1)


@dataclass(eq=False)
class NetworkResult:
    """Outcome of a feature-selection run (network or direct loop).

    wall_time is excluded from equality so two runs can be compared for
    bit-identical search results.
    """

    best_mask: FeatureMask
    best_model: ModelWithQuality
    best_fitness: float
    evaluations: int
    generations: int
    terminated_by: str
    penalty_per_feature: float
    seed: int
    best_history: tuple[float, ...]
    pressure_history: tuple[float, ...]
    wall_time: float = field(compare=False, default=0.0)

    def __eq__(self, other):
        if not isinstance(other, NetworkResult):
            return NotImplemented
        return (self.best_mask == other.best_mask
                and self.best_model == other.best_model
                and self.best_fitness == other.best_fitness
                and self.evaluations == other.evaluations
                and self.generations == other.generations
                and self.terminated_by == other.terminated_by
                and self.penalty_per_feature == other.penalty_per_feature
                and self.seed == other.seed
                and self.best_history == other.best_history
                and self.pressure_history == other.pressure_history)


# ---------------------------------------------------------------------------
# Nodes

class FeatureSelectionNode(Node):
    """Runs the genetic mask search, one evaluation round-trip at a time.

    Emits masks on "mask", receives their fitness on "quality", and
    emits the final RunResult on "result" when the search terminates.
    """

    input_ports = (Port("quality", "scalar-quality"),)
    output_ports = (Port("mask", "feature-mask"),
                    Port("result", "run-result"))

    def __init__(self, node_id: str, genome_spec: BinaryGenomeSpec,
                 params: OsgaParams):
        super().__init__(node_id)
        self.genome_spec = genome_spec
        self.params = params
        self._stream = None

    def handle_entry(self, payload, ctx) -> None:
        self._stream = osga_stream(self.genome_spec, self.params, ctx.rng)
        self._advance(ctx, None)

    def handle(self, port_name: str, payload, ctx) -> None:
        self._advance(ctx, float(payload))

    def _advance(self, ctx, fitness: float | None) -> None:
        try:
            if fitness is None:
                genome = next(self._stream)
            else:
                genome = self._stream.send(fitness)
        except StopIteration as fin:
            ctx.emit("result", fin.value)
            return
        ctx.emit("mask", FeatureMask(genome))


class RegressionOrchestratorNode(Node):
    """Translates masks into projected regression problems and model
    results into scalar fitness values.

    Train and validation rows are read once at construction; the test
    partition is never touched here, which keeps the search honest.
    """

    input_ports = (Port("mask", "feature-mask"),
                   Port("model", "model-with-quality"))
    output_ports = (Port("problem", "regression-problem"),
                    Port("quality", "scalar-quality"))

    def __init__(self, node_id: str, partitioned: PartitionedDataset,
                 fitness: FitnessConfig | None = None):
        super().__init__(node_id)
        fitness = fitness or FitnessConfig()
        fitness.validate()
        self._train_x, self._train_y = partitioned.train_xy()
        self._val_x, self._val_y = partitioned.validation_xy()
        self._names = partitioned.base.feature_names
        self.penalty_per_feature = fitness.resolve(
            self._train_y, self._val_y, len(self._names))

    @property
    def n_features(self) -> int:
        return len(self._names)

    def make_problem(self, mask: FeatureMask) -> RegressionProblem:
        keep = np.flatnonzero(mask.bits)
        return RegressionProblem(
            self._train_x[:, keep], self._train_y,
            self._val_x[:, keep], self._val_y,
            tuple(self._names[i] for i in keep), mask)

    def score(self, result: ModelWithQuality) -> float:
        return result.validation_mae \
            + self.penalty_per_feature * result.n_features

    def handle(self, port_name: str, payload, ctx) -> None:
        if port_name == "mask":
            ctx.emit("problem", self.make_problem(payload))
        else:
            ctx.emit("quality", self.score(payload))


class OlsModelNode(Node):
    """Fits an ordinary least-squares model per problem."""

    input_ports = (Port("problem", "regression-problem"),)
    output_ports = (Port("model", "model-with-quality"),)

    def fit_problem(self, problem: RegressionProblem,
                    rng: np.random.Generator) -> ModelWithQuality:
        model = fit_ols(problem.train_features, problem.train_target,
                        problem.feature_names)
        return ModelWithQuality(
            model,
            train_mae=mae(predict(model, problem.train_features),
                          problem.train_target),
            validation_mae=mae(predict(model, problem.validation_features),
                               problem.validation_target),
            n_features=len(problem.feature_names),
            label="ols")

    def handle(self, port_name: str, payload, ctx) -> None:
        ctx.emit("model", self.fit_problem(payload, ctx.rng))


class ForestModelNode(Node):
    """Fits a random forest per problem; each fit draws a fresh seed
    from the node's stream so repeated fits are independent but the
    whole sequence is reproducible."""

    input_ports = (Port("problem", "regression-problem"),)
    output_ports = (Port("model", "model-with-quality"),)

    def __init__(self, node_id: str, config: ForestConfig | None = None):
        super().__init__(node_id)
        self.config = config or ForestConfig()
        self.config.validate()

    def fit_problem(self, problem: RegressionProblem,
                    rng: np.random.Generator) -> ModelWithQuality:
        fit_seed = int(rng.integers(np.iinfo(np.int64).max))
        if problem.train_features.shape[1] == 0:
            # degenerate empty mask: constant model, mirrors OLS behavior
            model = fit_ols(problem.train_features, problem.train_target, ())
            train_pred = predict(model, problem.train_features)
            val_pred = predict(model, problem.validation_features)
        else:
            model = fit_random_forest(problem.train_features,
                                      problem.train_target, self.config,
                                      fit_seed, problem.feature_names)
            train_pred = predict_forest(model, problem.train_features)
            val_pred = predict_forest(model, problem.validation_features)
        return ModelWithQuality(
            model,
            train_mae=mae(train_pred, problem.train_target),
            validation_mae=mae(val_pred, problem.validation_target),
            n_features=len(problem.feature_names),
            label="random-forest")

    def handle(self, port_name: str, payload, ctx) -> None:
        ctx.emit("model", self.fit_problem(payload, ctx.rng))


# ---------------------------------------------------------------------------
# Feature-selection network and its plain-loop twin

def _make_model_node(model) -> Node:
    if model == "ols" or model is None:
        return OlsModelNode("model")
    if isinstance(model, ForestConfig):
        return ForestModelNode("model", model)
    if isinstance(model, Node):
        return model
    raise InvalidConfigError(
        f"model must be 'ols', a ForestConfig, or a Node, got {model!r}")


def build_feature_selection_topology(
        partitioned: PartitionedDataset, params: OsgaParams,
        fitness: FitnessConfig | None = None, model="ols",
        init_one_probability: float = 0.1) -> Topology:
    """Wire selector, orchestrator, and model node into the search loop."""
    genome_spec = BinaryGenomeSpec(partitioned.base.n_features,
                                   init_one_probability)
    topo = Topology()
    topo.add(FeatureSelectionNode("selector", genome_spec, params))
    topo.add(RegressionOrchestratorNode("orchestrator", partitioned, fitness))
    topo.add(_make_model_node(model))
    topo.connect("selector", "mask", "orchestrator", "mask")
    topo.connect("orchestrator", "problem", "model", "problem")
    topo.connect("model", "model", "orchestrator", "model")
    topo.connect("orchestrator", "quality", "selector", "quality")
    return topo


def predict_any(model, features: np.ndarray) -> np.ndarray:
    """Predict with either model family."""
    if isinstance(model, ForestModel):
        return predict_forest(model, features)
    return predict(model, features)


def _final_result(run: RunResult, orchestrator: RegressionOrchestratorNode,
                  model_node, model_rng, partitioned: PartitionedDataset,
                  compute_test_mae: bool, seed: int,
                  started: float) -> NetworkResult:
    best_mask = FeatureMask(run.best.genome)
    refit = model_node.fit_problem(orchestrator.make_problem(best_mask),
                                   model_rng)
    if compute_test_mae:
        test_x, test_y = partitioned.test_xy()
        keep = np.flatnonzero(best_mask.bits)
        refit = replace(refit,
                        test_mae=mae(predict_any(refit.model, test_x[:, keep]),
                                     test_y))
    return NetworkResult(
        best_mask, refit, run.best.fitness, run.evaluations,
        run.generations, run.terminated_by,
        orchestrator.penalty_per_feature, seed,
        run.best_history, run.pressure_history,
        wall_time=time.perf_counter() - started)


def feature_selection_network(
        partitioned: PartitionedDataset, params: OsgaParams | None = None,
        fitness: FitnessConfig | None = None, model="ols", seed: int = 0,
        workers: int = 1, compute_test_mae: bool = True,
        init_one_probability: float = 0.1) -> NetworkResult:
    """Run the mask-search network to completion.

    The test partition is read exactly once, after the search, to score
    the winning model; pass compute_test_mae=False to skip even that.
    """
    started = time.perf_counter()
    params = params or OsgaParams()
    topo = build_feature_selection_topology(partitioned, params, fitness,
                                            model, init_one_probability)
    run = run_network(topo, SinksEmitted((("selector", "result"),)),
                      entry=("selector", None), seed=seed, workers=workers)
    ga_result: RunResult = run.sink("selector", "result")[0]
    orchestrator = topo.node("orchestrator")
    model_node = topo.node("model")
    # the model node's stream continues from where the search left it
    model_rng = _node_rng_after_run(seed, model_node, run)
    return _final_result(ga_result, orchestrator, model_node, model_rng,
                         partitioned, compute_test_mae, seed, started)


def _node_rng_after_run(seed, model_node, run) -> np.random.Generator:
    rng = substream(seed, "node", model_node.id)
    consumed = run.node_message_counts.get(model_node.id, 0)
    _burn_model_rng(model_node, rng, consumed)
    return rng


def _burn_model_rng(model_node, rng, n_fits: int) -> None:
    # advance the stream past the draws the node made during the search
    if isinstance(model_node, ForestModelNode):
        for _ in range(n_fits):
            rng.integers(np.iinfo(np.int64).max)
    elif isinstance(model_node, InnerTuningModelNode):
        for _ in range(n_fits):
            rng.integers(np.iinfo(np.int64).max)


def feature_selection_direct(
        partitioned: PartitionedDataset, params: OsgaParams | None = None,
        fitness: FitnessConfig | None = None, model="ols", seed: int = 0,
        compute_test_mae: bool = True,
        init_one_probability: float = 0.1) -> NetworkResult:
    """Plain-loop twin of feature_selection_network.

    Uses the same node objects and the same stream derivations but no
    message engine, so its NetworkResult must be bit-identical to the
    network's for equal arguments.
    """
    started = time.perf_counter()
    params = params or OsgaParams()
    genome_spec = BinaryGenomeSpec(partitioned.base.n_features,
                                   init_one_probability)
    selector_rng = substream(seed, "node", "selector")
    model_rng = substream(seed, "node", "model")
    orchestrator = RegressionOrchestratorNode("orchestrator", partitioned,
                                              fitness)
    model_node = _make_model_node(model)

    stream = osga_stream(genome_spec, params, selector_rng)
    try:
        genome = next(stream)
        while True:
            problem = orchestrator.make_problem(FeatureMask(genome))
            fitted = model_node.fit_problem(problem, model_rng)
            genome = stream.send(orchestrator.score(fitted))
    except StopIteration as fin:
        ga_result: RunResult = fin.value
    return _final_result(ga_result, orchestrator, model_node, model_rng,
                         partitioned, compute_test_mae, seed, started)


# ---------------------------------------------------------------------------
# Nested hyperparameter tuning

@dataclass
class InnerGridSearch:
    """Grid over forest settings searched for every mask.

    Cells are visited sample_ratio-major, then feature_ratio, then
    n_trees. If the grid exceeds the budget the tail is skipped and the
    returned quality is flagged "budget-exhausted".
    """

    sample_ratios: tuple[float, ...] = (0.5, 0.7, 0.9)
    feature_ratios: tuple[float, ...] = (0.3, 0.5, 0.8)
    n_trees_options: tuple[int, ...] = (10, 25, 50)
    budget: int = 30

    def validate(self) -> None:
        if not (self.sample_ratios and self.feature_ratios
                and self.n_trees_options):
            raise InvalidConfigError("inner grid axes must be non-empty")
        if self.budget < 1:
            raise InvalidConfigError("inner budget must be at least 1")

    def cells(self):
        for r in self.sample_ratios:
            for m in self.feature_ratios:
                for t in self.n_trees_options:
                    yield (float(r), float(m), int(t))


@dataclass
class InnerOsgaSearch:
    """Continuous search over (sample_ratio, feature_ratio, n_trees).

    The tree count travels as a real gene and is rounded when a forest
    is built. The search budget is the smaller of budget and the
    params' own evaluation budget.
    """

    params: OsgaParams = field(default_factory=lambda: OsgaParams(
        population_size=6, max_evaluations=30, elitism=1,
        crossover_kind="arithmetic", max_selection_pressure=20.0))
    sample_ratio_bounds: tuple[float, float] = (0.3, 1.0)
    feature_ratio_bounds: tuple[float, float] = (0.1, 1.0)
    n_trees_bounds: tuple[int, int] = (5, 60)
    budget: int = 30

    def validate(self) -> None:
        self.params.validate()
        if self.budget < 1:
            raise InvalidConfigError("inner budget must be at least 1")


class ForestParamSearchNode(Node):
    """Inner-network search node: proposes forest settings, receives the
    fitted candidates back, and finally emits the best one."""

    input_ports = (Port("candidate", "model-with-quality"),)
    output_ports = (Port("params", "parameter-vector"),
                    Port("result", "run-result"))

    _NAMES = ("sample_ratio", "feature_ratio", "n_trees")

    def __init__(self, node_id: str, search):
        super().__init__(node_id)
        self.search = search
        self.best: ModelWithQuality | None = None
        self.best_params: ParameterVector | None = None
        self.evaluations = 0
        self._pending: ParameterVector | None = None
        self._truncated = False
        self._cells = None
        self._stream = None

    def handle_entry(self, payload, ctx) -> None:
        if isinstance(self.search, InnerGridSearch):
            all_cells = list(self.search.cells())
            if len(all_cells) > self.search.budget:
                all_cells = all_cells[:self.search.budget]
                self._truncated = True
            self._cells = iter(all_cells)
            self._emit_next_cell(ctx)
        else:
            bounds = np.array([self.search.sample_ratio_bounds,
                               self.search.feature_ratio_bounds,
                               [float(b) for b in self.search.n_trees_bounds]])
            spec = RealGenomeSpec(bounds, sigma_fraction=0.2)
            params = self.search.params
            budget = min(self.search.budget, params.max_evaluations)
            params = replace(params, max_evaluations=budget)
            self._stream = osga_stream(spec, params, ctx.rng)
            self._advance_stream(ctx, None)

    def _emit_next_cell(self, ctx) -> None:
        try:
            r, m, t = next(self._cells)
        except StopIteration:
            self._finish(ctx)
            return
        self._pending = ParameterVector(np.array([r, m, float(t)]),
                                        self._NAMES)
        ctx.emit("params", self._pending)

    def _advance_stream(self, ctx, fitness: float | None) -> None:
        try:
            if fitness is None:
                genome = next(self._stream)
            else:
                genome = self._stream.send(fitness)
        except StopIteration as fin:
            if fin.value.terminated_by == "budget":
                self._truncated = True
            self._finish(ctx)
            return
        self._pending = ParameterVector(genome, self._NAMES)
        ctx.emit("params", self._pending)

    def handle(self, port_name: str, payload, ctx) -> None:
        self.evaluations += 1
        if self.best is None \
                or payload.validation_mae < self.best.validation_mae:
            self.best = payload
            self.best_params = self._pending
        if self._cells is not None:
            self._emit_next_cell(ctx)
        else:
            self._advance_stream(ctx, payload.validation_mae)

    def _finish(self, ctx) -> None:
        flags = ("budget-exhausted",) if self._truncated else ()
        best = replace(self.best, flags=self.best.flags + flags,
                       label=_forest_label(self.best_params))
        ctx.emit("result", InnerSearchResult(best, self.best_params,
                                             self.evaluations,
                                             self._truncated))


def _forest_label(params: ParameterVector | None) -> str:
    if params is None:
        return "tuned-forest"
    d = params.as_dict()
    return (f"tuned-forest(sample_ratio={d['sample_ratio']:.2f},"
            f"feature_ratio={d['feature_ratio']:.2f},"
            f"n_trees={int(round(d['n_trees']))})")


@dataclass(frozen=True, eq=False)
class InnerSearchResult:
    best: ModelWithQuality
    best_params: ParameterVector | None
    evaluations: int
    truncated: bool


class ForestBuilderNode(Node):
    """Inner-network worker: builds one forest per parameter vector."""

    input_ports = (Port("params", "parameter-vector"),)
    output_ports = (Port("fitted", "model-with-quality"),)

    def __init__(self, node_id: str, problem: RegressionProblem):
        super().__init__(node_id)
        self.problem = problem

    def handle(self, port_name: str, payload, ctx) -> None:
        d = payload.as_dict()
        config = ForestConfig(
            n_trees=max(1, int(round(d["n_trees"]))),
            sample_ratio=min(1.0, max(1e-6, d["sample_ratio"])),
            feature_ratio=min(1.0, max(1e-6, d["feature_ratio"])))
        node = ForestModelNode("fit", config)
        ctx.emit("fitted", node.fit_problem(self.problem, ctx.rng))


class InnerTuningModelNode(Node):
    """Model node whose fit runs an entire inner network per problem."""

    input_ports = (Port("problem", "regression-problem"),)
    output_ports = (Port("model", "model-with-quality"),)

    def __init__(self, node_id: str,
                 search: InnerGridSearch | InnerOsgaSearch | None = None):
        super().__init__(node_id)
        self.search = search or InnerGridSearch()
        self.search.validate()

    def fit_problem(self, problem: RegressionProblem,
                    rng: np.random.Generator) -> ModelWithQuality:
        inner_seed = int(rng.integers(np.iinfo(np.int64).max))
        if problem.train_features.shape[1] == 0:
            return OlsModelNode("fallback").fit_problem(problem, rng)
        topo = Topology()
        topo.add(ForestParamSearchNode("search", self.search))
        topo.add(ForestBuilderNode("builder", problem))
        topo.connect("search", "params", "builder", "params")
        topo.connect("builder", "fitted", "search", "candidate")
        run = run_network(topo, SinksEmitted((("search", "result"),)),
                          entry=("search", None), seed=inner_seed)
        inner: InnerSearchResult = run.sink("search", "result")[0]
        return inner.best

    def handle(self, port_name: str, payload, ctx) -> None:
        ctx.emit("model", self.fit_problem(payload, ctx.rng))


def nested_tuning_network(
        partitioned: PartitionedDataset, params: OsgaParams | None = None,
        fitness: FitnessConfig | None = None,
        inner: InnerGridSearch | InnerOsgaSearch | None = None, seed: int = 0,
        workers: int = 1, compute_test_mae: bool = True,
        init_one_probability: float = 0.1) -> NetworkResult:
    """Feature-selection network whose model node tunes forest settings
    through an inner network for every mask it receives."""
    return feature_selection_network(
        partitioned, params, fitness,
        model=InnerTuningModelNode("model", inner), seed=seed,
        workers=workers, compute_test_mae=compute_test_mae,
        init_one_probability=init_one_probability)
