"""Declarative network configs.

A run config is a YAML key/value tree with four top-level sections:

    seed: 7                  # master seed, default 0
    workers: 1               # engine worker count, default 1
    data:                    # exactly one of benchmark / csv
      benchmark:             # synthetic dataset (all keys optional)
        n_observations: 1000
        n_features: 100
        n_relevant: 15
        weight_low: 0.0
        weight_high: 10.0
        noise_variance_fraction: 0.20
        seed: 3              # dataset seed, defaults to the master seed
      # csv:
      #   path: dataset.csv
      #   target_column: y
      #   ground_truth: dataset.truth.json   # optional sidecar
      partition:
        ratios: [0.25, 0.375, 0.375]
        seed: 0              # defaults to the master seed
    network:
      nodes:                 # name -> kind + parameters
        selector:
          kind: feature-selection
          population_size: 100
          max_evaluations: 10000
        orchestrator:
          kind: regression-orchestrator
        model:
          kind: ols-model
      connections:           # "srcNode.srcPort -> dstNode.dstPort"
        - selector.mask -> orchestrator.mask
        - orchestrator.problem -> model.problem
        - model.model -> orchestrator.model
        - orchestrator.quality -> selector.quality
      entry: selector        # node whose handle_entry starts the run
      termination:           # exactly one of sinks / budget
        sinks: [selector.result]
        # budget: 500

Unknown keys anywhere are rejected. The parsed form converts back to
the same document (canonical arrow spelling "->"), so configs survive a
load/save round trip and reports can embed them for exact replay.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .data import (
    DEFAULT_PARTITION_RATIOS,
    BenchmarkConfig,
    FeatureMask,
    GroundTruth,
    PartitionedDataset,
    generate_benchmark,
    load_csv,
    load_ground_truth,
    partition,
)
from .engine import MessageBudget, SinksEmitted, Topology, run_network
from .errors import ConfigFileError
from .forest import ForestConfig, ForestModel
from .linear import LinearModel
from .networks import (
    FeatureSelectionNode,
    FitnessConfig,
    ForestModelNode,
    InnerGridSearch,
    InnerOsgaSearch,
    InnerSearchResult,
    InnerTuningModelNode,
    NetworkResult,
    OlsModelNode,
    RegressionOrchestratorNode,
)
from .osga import BinaryGenomeSpec, Individual, OsgaParams, RunResult
from .payloads import ModelWithQuality, ParameterVector, RegressionProblem

_ARROWS = ("->", "→")


# ---------------------------------------------------------------------------
# Connection strings

def parse_connection(text: str) -> tuple[str, str, str, str]:
    """Split "srcNode.srcPort -> dstNode.dstPort" into its four parts."""
    if not isinstance(text, str):
        raise ConfigFileError(f"connection must be a string, got {text!r}")
    for arrow in _ARROWS:
        if arrow in text:
            left, _, right = text.partition(arrow)
            break
    else:
        raise ConfigFileError(f"connection {text!r} lacks an '->' arrow")
    ends = []
    for part, side in ((left, "source"), (right, "destination")):
        part = part.strip()
        node, dot, port = part.partition(".")
        if not dot or not node or not port or "." in port:
            raise ConfigFileError(
                f"connection {side} {part!r} must be 'node.port'")
        ends.extend((node, port))
    return tuple(ends)


def format_connection(src_node: str, src_port: str,
                      dst_node: str, dst_port: str) -> str:
    return f"{src_node}.{src_port} -> {dst_node}.{dst_port}"


def _parse_endpoint(text: str, where: str) -> tuple[str, str]:
    node, dot, port = str(text).partition(".")
    if not dot or not node or not port or "." in port:
        raise ConfigFileError(f"{where}: {text!r} must be 'node.port'")
    return node, port


# ---------------------------------------------------------------------------
# Schema helpers

def _mapping(doc, where: str) -> dict:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigFileError("must be a mapping", field=where)
    return doc


def _check_keys(doc: dict, allowed, where: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ConfigFileError(f"unknown key {key!r}", field=where)


def _pick(doc: dict, keys) -> dict:
    return {k: doc[k] for k in keys if k in doc}


# ---------------------------------------------------------------------------
# Node registry

@dataclass(frozen=True)
class NodeKind:
    """One entry of the node-type registry."""

    name: str
    option_keys: frozenset
    build: object  # (node_id, options, BuildContext) -> Node


@dataclass
class BuildContext:
    """What node builders may depend on besides their own options."""

    partitioned: PartitionedDataset


_OSGA_KEYS = ("population_size", "mutation_rate", "comparison_factor",
              "success_ratio", "max_selection_pressure", "max_evaluations",
              "crossover_kind", "elitism", "target_fitness")
_FOREST_KEYS = ("n_trees", "sample_ratio", "feature_ratio", "max_depth",
                "min_leaf_size")


def _osga_params(options: dict) -> OsgaParams:
    return OsgaParams(**_pick(options, _OSGA_KEYS))


def _build_feature_selection(node_id, options, ctx):
    spec = BinaryGenomeSpec(
        ctx.partitioned.base.n_features,
        init_one_probability=options.get("init_one_probability", 0.1))
    return FeatureSelectionNode(node_id, spec, _osga_params(options))


def _build_orchestrator(node_id, options, ctx):
    fitness = FitnessConfig(options.get("penalty_per_feature"))
    return RegressionOrchestratorNode(node_id, ctx.partitioned, fitness)


def _build_ols(node_id, options, ctx):
    return OlsModelNode(node_id)


def _build_forest(node_id, options, ctx):
    return ForestModelNode(node_id, ForestConfig(**_pick(options,
                                                         _FOREST_KEYS)))


_GRID_KEYS = ("sample_ratios", "feature_ratios", "n_trees_options")
_BOUND_KEYS = ("sample_ratio_bounds", "feature_ratio_bounds",
               "n_trees_bounds")


def inner_search_from_options(options: dict, where: str
                              ) -> InnerGridSearch | InnerOsgaSearch:
    """Turn a config block into an inner forest-tuning search."""
    mode = options.get("search", "grid")
    if mode == "grid":
        bad = [k for k in _BOUND_KEYS + ("osga",) if k in options]
        if bad:
            raise ConfigFileError(
                f"keys {bad} require search: osga", field=where)
        kw = {k: tuple(options[k]) for k in _GRID_KEYS if k in options}
        if "budget" in options:
            kw["budget"] = int(options["budget"])
        return InnerGridSearch(**kw)
    if mode == "osga":
        bad = [k for k in _GRID_KEYS if k in options]
        if bad:
            raise ConfigFileError(
                f"keys {bad} require search: grid", field=where)
        kw = {k: tuple(options[k]) for k in _BOUND_KEYS if k in options}
        if "budget" in options:
            kw["budget"] = int(options["budget"])
        sub = _mapping(options.get("osga"), f"{where}.osga")
        _check_keys(sub, _OSGA_KEYS, f"{where}.osga")
        if sub:
            kw["params"] = _osga_params(sub)
        return InnerOsgaSearch(**kw)
    raise ConfigFileError(f"search must be 'grid' or 'osga', got {mode!r}",
                          field=where)


def _build_nested(node_id, options, ctx):
    return InnerTuningModelNode(node_id,
                                inner_search_from_options(options, node_id))


NODE_KINDS: dict[str, NodeKind] = {
    "feature-selection": NodeKind(
        "feature-selection",
        frozenset(_OSGA_KEYS) | {"init_one_probability"},
        _build_feature_selection),
    "regression-orchestrator": NodeKind(
        "regression-orchestrator", frozenset({"penalty_per_feature"}),
        _build_orchestrator),
    "ols-model": NodeKind("ols-model", frozenset(), _build_ols),
    "random-forest-model": NodeKind(
        "random-forest-model", frozenset(_FOREST_KEYS), _build_forest),
    "nested-tuning-model": NodeKind(
        "nested-tuning-model",
        frozenset(_GRID_KEYS) | frozenset(_BOUND_KEYS)
        | {"search", "budget", "osga"},
        _build_nested),
}


# ---------------------------------------------------------------------------
# Topology documents

@dataclass
class NodeSpec:
    kind: str
    options: dict = field(default_factory=dict)


@dataclass
class TopologySpec:
    """Parsed, validated form of a network: block."""

    nodes: dict[str, NodeSpec]
    connections: tuple[tuple[str, str, str, str], ...]


def topology_spec_from_doc(doc, where: str = "network") -> TopologySpec:
    doc = _mapping(doc, where)
    _check_keys(doc, ("nodes", "connections"), where)
    nodes_doc = _mapping(doc.get("nodes"), f"{where}.nodes")
    if not nodes_doc:
        raise ConfigFileError("at least one node required",
                              field=f"{where}.nodes")
    nodes: dict[str, NodeSpec] = {}
    for name, node_doc in nodes_doc.items():
        node_where = f"{where}.nodes.{name}"
        node_doc = _mapping(node_doc, node_where)
        if "kind" not in node_doc:
            raise ConfigFileError("missing 'kind'", field=node_where)
        kind = node_doc["kind"]
        if kind not in NODE_KINDS:
            raise ConfigFileError(
                f"unknown node kind {kind!r}; known: "
                f"{sorted(NODE_KINDS)}", field=node_where)
        options = {k: v for k, v in node_doc.items() if k != "kind"}
        _check_keys(options, NODE_KINDS[kind].option_keys, node_where)
        nodes[str(name)] = NodeSpec(kind, options)
    raw_conns = doc.get("connections") or []
    if not isinstance(raw_conns, list):
        raise ConfigFileError("must be a list",
                              field=f"{where}.connections")
    connections = tuple(parse_connection(c) for c in raw_conns)
    return TopologySpec(nodes, connections)


def topology_spec_to_doc(spec: TopologySpec) -> dict:
    return {
        "nodes": {name: {"kind": ns.kind, **ns.options}
                  for name, ns in spec.nodes.items()},
        "connections": [format_connection(*c) for c in spec.connections],
    }


def build_topology(spec: TopologySpec, ctx: BuildContext) -> Topology:
    """Instantiate nodes through the registry and wire them up."""
    topo = Topology()
    for name, ns in spec.nodes.items():
        topo.add(NODE_KINDS[ns.kind].build(name, ns.options, ctx))
    for src_node, src_port, dst_node, dst_port in spec.connections:
        topo.connect(src_node, src_port, dst_node, dst_port)
    return topo


# ---------------------------------------------------------------------------
# Data section

_BENCH_KEYS = ("n_observations", "n_features", "n_relevant", "weight_low",
               "weight_high", "noise_variance_fraction")


@dataclass
class DataSpec:
    """Where the dataset comes from and how it is partitioned."""

    benchmark: BenchmarkConfig | None = None
    benchmark_seed: int | None = None
    csv_path: str | None = None
    target_column: str = "y"
    ground_truth_path: str | None = None
    ratios: tuple[float, float, float] = DEFAULT_PARTITION_RATIOS
    partition_seed: int | None = None


def data_spec_from_doc(doc, where: str = "data") -> DataSpec:
    doc = _mapping(doc, where)
    _check_keys(doc, ("benchmark", "csv", "partition"), where)
    if ("benchmark" in doc) == ("csv" in doc):
        raise ConfigFileError("exactly one of benchmark/csv required",
                              field=where)
    spec = DataSpec()
    if "benchmark" in doc:
        b = _mapping(doc["benchmark"], f"{where}.benchmark")
        _check_keys(b, _BENCH_KEYS + ("seed",), f"{where}.benchmark")
        spec.benchmark = BenchmarkConfig(**_pick(b, _BENCH_KEYS))
        if "seed" in b:
            spec.benchmark_seed = int(b["seed"])
    else:
        c = _mapping(doc["csv"], f"{where}.csv")
        _check_keys(c, ("path", "target_column", "ground_truth"),
                    f"{where}.csv")
        if "path" not in c:
            raise ConfigFileError("missing 'path'", field=f"{where}.csv")
        spec.csv_path = str(c["path"])
        spec.target_column = str(c.get("target_column", "y"))
        if "ground_truth" in c:
            spec.ground_truth_path = str(c["ground_truth"])
    p = _mapping(doc.get("partition"), f"{where}.partition")
    _check_keys(p, ("ratios", "seed"), f"{where}.partition")
    if "ratios" in p:
        ratios = p["ratios"]
        if not isinstance(ratios, list) or len(ratios) != 3:
            raise ConfigFileError("ratios must be a 3-item list",
                                  field=f"{where}.partition")
        spec.ratios = tuple(float(x) for x in ratios)
    if "seed" in p:
        spec.partition_seed = int(p["seed"])
    return spec


def data_spec_to_doc(spec: DataSpec) -> dict:
    doc: dict = {}
    if spec.benchmark is not None:
        b = {f.name: getattr(spec.benchmark, f.name)
             for f in fields(BenchmarkConfig)}
        if spec.benchmark_seed is not None:
            b["seed"] = spec.benchmark_seed
        doc["benchmark"] = b
    else:
        c = {"path": spec.csv_path, "target_column": spec.target_column}
        if spec.ground_truth_path is not None:
            c["ground_truth"] = spec.ground_truth_path
        doc["csv"] = c
    part: dict = {"ratios": list(spec.ratios)}
    if spec.partition_seed is not None:
        part["seed"] = spec.partition_seed
    doc["partition"] = part
    return doc


def load_experiment_data(spec: DataSpec, default_seed: int = 0
                         ) -> tuple[PartitionedDataset, GroundTruth | None]:
    """Materialize the dataset a config describes and partition it."""
    truth = None
    if spec.benchmark is not None:
        ds_seed = spec.benchmark_seed
        if ds_seed is None:
            ds_seed = default_seed
        dataset, truth = generate_benchmark(spec.benchmark, seed=ds_seed)
    else:
        dataset = load_csv(spec.csv_path, spec.target_column)
        if spec.ground_truth_path is not None:
            truth = load_ground_truth(spec.ground_truth_path)
    p_seed = spec.partition_seed
    if p_seed is None:
        p_seed = default_seed
    return partition(dataset, spec.ratios, seed=p_seed), truth


# ---------------------------------------------------------------------------
# Whole run configs

@dataclass
class NetworkRunConfig:
    """Everything needed to execute one configured network."""

    data: DataSpec
    topology: TopologySpec
    entry: str
    sink_termination: tuple[tuple[str, str], ...] | None = None
    budget_termination: int | None = None
    seed: int = 0
    workers: int = 1


def run_config_from_doc(doc) -> NetworkRunConfig:
    doc = _mapping(doc, "config")
    _check_keys(doc, ("seed", "workers", "data", "network"), "config")
    for key in ("data", "network"):
        if key not in doc:
            raise ConfigFileError(f"missing section {key!r}", field="config")
    net = _mapping(doc["network"], "network")
    _check_keys(net, ("nodes", "connections", "entry", "termination"),
                "network")
    topo_spec = topology_spec_from_doc(
        {"nodes": net.get("nodes"), "connections": net.get("connections")})
    if "entry" not in net:
        raise ConfigFileError("missing 'entry'", field="network")
    entry = str(net["entry"])
    term = _mapping(net.get("termination"), "network.termination")
    _check_keys(term, ("sinks", "budget"), "network.termination")
    if ("sinks" in term) == ("budget" in term):
        raise ConfigFileError("exactly one of sinks/budget required",
                              field="network.termination")
    sinks = None
    budget = None
    if "sinks" in term:
        raw = term["sinks"]
        if not isinstance(raw, list) or not raw:
            raise ConfigFileError("sinks must be a non-empty list",
                                  field="network.termination")
        sinks = tuple(_parse_endpoint(s, "network.termination.sinks")
                      for s in raw)
    else:
        budget = int(term["budget"])
    return NetworkRunConfig(
        data=data_spec_from_doc(doc["data"]),
        topology=topo_spec,
        entry=entry,
        sink_termination=sinks,
        budget_termination=budget,
        seed=int(doc.get("seed", 0)),
        workers=int(doc.get("workers", 1)))


def run_config_to_doc(cfg: NetworkRunConfig) -> dict:
    if cfg.sink_termination is not None:
        term = {"sinks": [f"{n}.{p}" for n, p in cfg.sink_termination]}
    else:
        term = {"budget": cfg.budget_termination}
    net = topology_spec_to_doc(cfg.topology)
    net["entry"] = cfg.entry
    net["termination"] = term
    return {
        "seed": cfg.seed,
        "workers": cfg.workers,
        "data": data_spec_to_doc(cfg.data),
        "network": net,
    }


def load_run_config(text: str) -> NetworkRunConfig:
    """Parse a YAML run config from a string."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigFileError(f"invalid YAML{loc}: {exc}") from exc
    return run_config_from_doc(doc)


def load_run_config_file(path) -> NetworkRunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigFileError(f"cannot read config: {exc}") from exc
    return load_run_config(text)


def save_run_config(cfg: NetworkRunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(run_config_to_doc(cfg), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# Payload serialization

def _float_list(values) -> list[float]:
    return [float(v) for v in values]


def payload_doc(obj):
    """JSON-able rendering of any payload the engine can carry.

    Masks and binary genomes render as 0/1 strings. Forests render as a
    shape summary; their trees stay in memory only. Everything here is
    a pure function of the run outputs, so serialized results are
    byte-stable across replays.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return float(obj)
    if isinstance(obj, (np.bool_, np.integer, np.floating)):
        return obj.item()
    if isinstance(obj, FeatureMask):
        return obj.to_string()
    if isinstance(obj, np.ndarray):
        if obj.dtype == bool:
            return "".join("1" if b else "0" for b in obj)
        return obj.tolist()
    if isinstance(obj, LinearModel):
        return {
            "type": "linear-model",
            "feature_names": list(obj.feature_names),
            "weights": _float_list(obj.weights),
            "intercept": float(obj.intercept),
            "rank_deficient": bool(obj.rank_deficient),
            "converged": bool(obj.converged),
        }
    if isinstance(obj, ForestModel):
        return {
            "type": "forest-model",
            "n_trees": len(obj.trees),
            "n_nodes": [t.n_nodes for t in obj.trees],
            "feature_names": list(obj.feature_names),
            "config": {
                "n_trees": obj.config.n_trees,
                "sample_ratio": obj.config.sample_ratio,
                "feature_ratio": obj.config.feature_ratio,
                "max_depth": obj.config.max_depth,
                "min_leaf_size": obj.config.min_leaf_size,
            },
        }
    if isinstance(obj, ModelWithQuality):
        return {
            "type": "model-with-quality",
            "label": obj.label,
            "train_mae": obj.train_mae,
            "validation_mae": obj.validation_mae,
            "test_mae": obj.test_mae,
            "n_features": obj.n_features,
            "flags": list(obj.flags),
            "model": payload_doc(obj.model),
        }
    if isinstance(obj, ParameterVector):
        return {
            "type": "parameter-vector",
            "names": list(obj.names),
            "values": _float_list(obj.values),
        }
    if isinstance(obj, Individual):
        return {
            "genome": payload_doc(obj.genome),
            "fitness": obj.fitness,
        }
    if isinstance(obj, RunResult):
        return {
            "type": "run-result",
            "best": payload_doc(obj.best),
            "evaluations": obj.evaluations,
            "generations": obj.generations,
            "terminated_by": obj.terminated_by,
            "best_history": _float_list(obj.best_history),
            "pressure_history": _float_list(obj.pressure_history),
        }
    if isinstance(obj, InnerSearchResult):
        return {
            "type": "inner-search-result",
            "best": payload_doc(obj.best),
            "best_params": payload_doc(obj.best_params),
            "evaluations": obj.evaluations,
            "truncated": obj.truncated,
        }
    if isinstance(obj, NetworkResult):
        return network_result_doc(obj)
    if isinstance(obj, RegressionProblem):
        return {
            "type": "regression-problem",
            "n_train": int(obj.train_features.shape[0]),
            "n_validation": int(obj.validation_features.shape[0]),
            "feature_names": list(obj.feature_names),
            "mask": payload_doc(obj.mask),
        }
    if isinstance(obj, dict):
        return {str(k): payload_doc(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [payload_doc(v) for v in obj]
    return repr(obj)


def network_result_doc(result: NetworkResult) -> dict:
    """Replay-stable rendering; wall_time deliberately left out."""
    return {
        "type": "network-result",
        "best_mask": result.best_mask.to_string(),
        "best_model": payload_doc(result.best_model),
        "best_fitness": result.best_fitness,
        "evaluations": result.evaluations,
        "generations": result.generations,
        "terminated_by": result.terminated_by,
        "penalty_per_feature": result.penalty_per_feature,
        "seed": result.seed,
        "best_history": _float_list(result.best_history),
        "pressure_history": _float_list(result.pressure_history),
    }


# ---------------------------------------------------------------------------
# Execution and reports

@dataclass
class ConfiguredRunReport:
    """Outcome of run_configured: embedded config, stable result, timing.

    The result section is a pure function of the config, so replaying
    the embedded config reproduces it byte for byte; wall-clock timing
    lives outside it.
    """

    config_doc: dict
    result_doc: dict
    wall_time: float

    def result_json(self) -> str:
        return json.dumps(self.result_doc, indent=2, sort_keys=True)

    def to_json(self) -> str:
        doc = {
            "config": self.config_doc,
            "result": self.result_doc,
            "timing": {"wall_time": self.wall_time},
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")


def run_configured(cfg: NetworkRunConfig) -> ConfiguredRunReport:
    """Build the configured network, run it, and package the outcome."""
    started = time.perf_counter()
    partitioned, _ = load_experiment_data(cfg.data, cfg.seed)
    topo = build_topology(cfg.topology, BuildContext(partitioned))
    if cfg.sink_termination is not None:
        termination = SinksEmitted(cfg.sink_termination)
    else:
        termination = MessageBudget(cfg.budget_termination)
    run = run_network(topo, termination, entry=(cfg.entry, None),
                      seed=cfg.seed, workers=cfg.workers)
    result_doc = {
        "sinks": {
            f"{node}.{port}": [payload_doc(p) for p in payloads]
            for (node, port), payloads in sorted(run.sink_outputs.items())
        },
        "rounds": run.rounds,
        "messages_handled": run.messages_handled,
        "messages_produced": run.messages_produced,
        "messages_remaining": run.messages_remaining,
        "stopped_by": run.stopped_by,
        "node_message_counts": dict(sorted(
            run.node_message_counts.items())),
    }
    return ConfiguredRunReport(run_config_to_doc(cfg), result_doc,
                               time.perf_counter() - started)


def replay_report(report_doc: dict) -> ConfiguredRunReport:
    """Re-run the config a report embeds; its result section must come
    back identical."""
    if "config" not in report_doc:
        raise ConfigFileError("report lacks an embedded config")
    return run_configured(run_config_from_doc(report_doc["config"]))
