"""Experiment configuration: strict YAML parsing, overrides, round-trip.

Unknown keys are rejected with their full dot path so typos fail loudly
instead of silently falling back to defaults. parse_config is pure text
in, config out; the seed env override is applied by the CLI layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .orchestrator import RunPolicy, direction_for_objective
from .pruning import PrunerConfig
from .samplers import TpeConfig
from .study import (
    BOOLEAN,
    CHOICE,
    INT_CATEGORICAL,
    LOG_UNIFORM,
    UNIFORM,
    Distribution,
    SearchSpace,
)
from .surrogate import BENCHMARKS, DEFAULT_HP

TASKS = ("binary", "multiclass")
SAMPLER_KINDS = ("tpe", "random", "grid")

SURROGATE_PARAMS = tuple(DEFAULT_HP)


@dataclass(frozen=True)
class SyntheticConfig:
    """Built-in dataset used when no manifest is given."""

    n_per_class: int = 60
    image_side: int = 16
    noise_std: float = 0.8
    seed: int = 0


@dataclass(frozen=True)
class DataConfig:
    manifest: str
    ratios: tuple = (0.7, 0.2, 0.1)
    seed: int = 0


@dataclass(frozen=True)
class SamplerSpec:
    kind: str = "tpe"
    tpe: TpeConfig = field(default_factory=TpeConfig)
    resolution: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    objective: str
    space: SearchSpace
    seed: int = 0
    task: str = "binary"
    epochs: int = 20
    output_dir: str = "runs/study"
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    pruner: PrunerConfig | None = None
    policy: RunPolicy = field(default_factory=RunPolicy)
    data: DataConfig | None = None
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)

    def pruner_config(self) -> PrunerConfig:
        return self.pruner if self.pruner is not None else PrunerConfig()

    @property
    def direction(self) -> str:
        return direction_for_objective(self.objective)


def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"expected a mapping at {path or '<root>'}")
    for key in node:
        if not isinstance(key, str):
            raise ConfigError(f"non-string key {key!r}", path=path)
    return node


def _take(node: dict, key: str, path: str, default=None, required=False):
    if key in node:
        return node.pop(key)
    if required:
        raise ConfigError("missing required key", path=_join(path, key))
    return default


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _reject_unknown(node: dict, path: str) -> None:
    if node:
        key = sorted(node)[0]
        raise ConfigError("unknown key", path=_join(path, key))


def _as_int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path=path)
    return value


def _as_float(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path=path)
    return float(value)


def _as_str(value, path, allowed=None):
    if not isinstance(value, str):
        raise ConfigError(f"expected a string, got {value!r}", path=path)
    if allowed is not None and value not in allowed:
        raise ConfigError(f"must be one of {sorted(allowed)}, got {value!r}", path=path)
    return value


def _parse_distribution(name: str, node, path: str) -> Distribution:
    node = dict(_require_mapping(node, path))
    kind = _as_str(_take(node, "kind", path, required=True), _join(path, "kind"))
    try:
        if kind in (UNIFORM, LOG_UNIFORM):
            low = _as_float(_take(node, "low", path, required=True), _join(path, "low"))
            high = _as_float(_take(node, "high", path, required=True), _join(path, "high"))
            _reject_unknown(node, path)
            return Distribution(kind=kind, low=low, high=high)
        if kind in (INT_CATEGORICAL, CHOICE):
            choices = _take(node, "choices", path, required=True)
            if not isinstance(choices, list):
                raise ConfigError("choices must be a list", path=_join(path, "choices"))
            _reject_unknown(node, path)
            return Distribution(kind=kind, choices=tuple(choices))
        if kind == BOOLEAN:
            _reject_unknown(node, path)
            return Distribution(kind=BOOLEAN)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc), path=path) from exc
    raise ConfigError(f"unknown distribution kind {kind!r}", path=_join(path, "kind"))


def _parse_space(node, path: str) -> SearchSpace:
    node = _require_mapping(node, path)
    if not node:
        raise ConfigError("space must define at least one parameter", path=path)
    entries = {
        name: _parse_distribution(name, sub, _join(path, name))
        for name, sub in node.items()
    }
    return SearchSpace(entries)


def _check_surrogate_space(space: SearchSpace) -> None:
    """Surrogate objectives only understand the fixed hyperparameter names."""
    bounds = {
        "dropout": (0.0, 0.2),
        "scale": (0.0, 1.0),
        "shear": (0.0, 1.0),
        "translate": (0.0, 1.0),
        "rotation": (0.0, 360.0),
    }
    for name, dist in space.entries.items():
        path = _join("space", name)
        if name not in SURROGATE_PARAMS:
            raise ConfigError(
                f"not a surrogate hyperparameter (expected one of {sorted(SURROGATE_PARAMS)})",
                path=path,
            )
        if name == "lr" and dist.kind in (UNIFORM, LOG_UNIFORM) and dist.low <= 0:
            raise ConfigError("lr must be positive", path=path)
        if name == "batch_size":
            if dist.kind not in (INT_CATEGORICAL, CHOICE):
                raise ConfigError("batch_size must be categorical", path=path)
            if any((not isinstance(c, int)) or c < 1 for c in dist.choices):
                raise ConfigError("batch_size choices must be positive ints", path=path)
        if name in bounds and dist.kind in (UNIFORM, LOG_UNIFORM):
            lo, hi = bounds[name]
            if dist.low < lo or dist.high > hi:
                raise ConfigError(
                    f"bounds must stay within [{lo}, {hi}]", path=path
                )
        if name == "scale" and dist.kind in (UNIFORM, LOG_UNIFORM) and dist.high >= 1.0:
            raise ConfigError("scale upper bound must be < 1", path=path)


def _check_benchmark_space(objective: str, space: SearchSpace) -> None:
    continuous = [n for n, d in space.entries.items() if not d.is_discrete]
    if len(continuous) != len(space):
        raise ConfigError("benchmark spaces must be continuous", path="space")
    if objective == "quadratic-1d" and len(continuous) != 1:
        raise ConfigError("quadratic-1d needs exactly one parameter", path="space")
    if objective == "rosenbrock-2d" and len(continuous) != 2:
        raise ConfigError("rosenbrock-2d needs exactly two parameters", path="space")


def _parse_sampler(node, path: str) -> SamplerSpec:
    node = dict(_require_mapping(node, path))
    kind = _as_str(
        _take(node, "kind", path, default="tpe"), _join(path, "kind"), allowed=SAMPLER_KINDS
    )
    resolution = _as_int(_take(node, "resolution", path, default=5), _join(path, "resolution"))
    tpe_node = _take(node, "tpe", path, default={})
    tpe_node = dict(_require_mapping(tpe_node, _join(path, "tpe")))
    tpe_path = _join(path, "tpe")
    kwargs = {}
    for key in ("n_startup_trials", "n_candidates", "gamma_cap"):
        if key in tpe_node:
            kwargs[key] = _as_int(tpe_node.pop(key), _join(tpe_path, key))
    for key in ("gamma_fraction", "prior_weight"):
        if key in tpe_node:
            kwargs[key] = _as_float(tpe_node.pop(key), _join(tpe_path, key))
    _reject_unknown(tpe_node, tpe_path)
    _reject_unknown(node, path)
    try:
        tpe = TpeConfig(**kwargs)
    except Exception as exc:
        raise ConfigError(str(exc), path=tpe_path) from exc
    return SamplerSpec(kind=kind, tpe=tpe, resolution=resolution)


def _parse_pruner(node, path: str) -> PrunerConfig:
    node = dict(_require_mapping(node, path))
    kwargs = {}
    for key in ("warmup_steps", "min_completed"):
        if key in node:
            kwargs[key] = _as_int(node.pop(key), _join(path, key))
    _reject_unknown(node, path)
    try:
        return PrunerConfig(**kwargs)
    except Exception as exc:
        raise ConfigError(str(exc), path=path) from exc


def _parse_policy(node, path: str, pruning_enabled: bool) -> RunPolicy:
    node = dict(_require_mapping(node, path))
    kwargs = {"pruning_enabled": pruning_enabled}
    if "n_trials" in node:
        kwargs["n_trials"] = _as_int(node.pop("n_trials"), _join(path, "n_trials"))
    if "max_parallel" in node:
        kwargs["max_parallel"] = _as_int(node.pop("max_parallel"), _join(path, "max_parallel"))
    for key in ("save_threshold", "stop_threshold"):
        if key in node:
            kwargs[key] = _as_float(node.pop(key), _join(path, key))
    _reject_unknown(node, path)
    try:
        return RunPolicy(**kwargs)
    except Exception as exc:
        raise ConfigError(str(exc), path=path) from exc


def _parse_data(node, path: str) -> DataConfig:
    node = dict(_require_mapping(node, path))
    manifest = _as_str(_take(node, "manifest", path, required=True), _join(path, "manifest"))
    seed = _as_int(_take(node, "seed", path, default=0), _join(path, "seed"))
    ratios = _take(node, "ratios", path, default=[0.7, 0.2, 0.1])
    if not isinstance(ratios, list) or len(ratios) != 3:
        raise ConfigError("ratios must be a list of three numbers", path=_join(path, "ratios"))
    ratios = tuple(_as_float(r, _join(path, "ratios")) for r in ratios)
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError("ratios must be nonnegative and sum to 1", path=_join(path, "ratios"))
    _reject_unknown(node, path)
    return DataConfig(manifest=manifest, ratios=ratios, seed=seed)


def _parse_synthetic(node, path: str) -> SyntheticConfig:
    node = dict(_require_mapping(node, path))
    kwargs = {}
    for key in ("n_per_class", "image_side", "seed"):
        if key in node:
            kwargs[key] = _as_int(node.pop(key), _join(path, key))
    if "noise_std" in node:
        kwargs["noise_std"] = _as_float(node.pop("noise_std"), _join(path, "noise_std"))
    _reject_unknown(node, path)
    try:
        return SyntheticConfig(**kwargs)
    except Exception as exc:
        raise ConfigError(str(exc), path=path) from exc


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return config_from_mapping(raw)


def config_from_mapping(raw) -> ExperimentConfig:
    raw = dict(_require_mapping(raw, ""))
    objective = _as_str(
        _take(raw, "objective", "", required=True),
        "objective",
        allowed=("surrogate",) + BENCHMARKS,
    )
    task = _as_str(_take(raw, "task", "", default="binary"), "task", allowed=TASKS)
    seed = _as_int(_take(raw, "seed", "", default=0), "seed")
    epochs = _as_int(_take(raw, "epochs", "", default=20), "epochs")
    if epochs < 1:
        raise ConfigError("epochs must be >= 1", path="epochs")
    output_dir = _as_str(_take(raw, "output_dir", "", default="runs/study"), "output_dir")

    space = _parse_space(_take(raw, "space", "", required=True), "space")
    if objective == "surrogate":
        _check_surrogate_space(space)
    else:
        _check_benchmark_space(objective, space)

    sampler_node = _take(raw, "sampler", "", default={})
    sampler = _parse_sampler(sampler_node, "sampler")

    pruner = None
    if "pruner" in raw:
        pruner = _parse_pruner(raw.pop("pruner"), "pruner")

    policy_node = _take(raw, "policy", "", default={})
    policy = _parse_policy(policy_node, "policy", pruning_enabled=pruner is not None)

    data = None
    if "data" in raw:
        data = _parse_data(raw.pop("data"), "data")

    synthetic_node = _take(raw, "synthetic", "", default={})
    synthetic = _parse_synthetic(synthetic_node, "synthetic")

    _reject_unknown(raw, "")

    config = ExperimentConfig(
        objective=objective,
        space=space,
        seed=seed,
        task=task,
        epochs=epochs,
        output_dir=output_dir,
        sampler=sampler,
        pruner=pruner,
        policy=policy,
        data=data,
        synthetic=synthetic,
    )
    try:
        policy.validate_for_direction(config.direction)
    except Exception as exc:
        raise ConfigError(str(exc), path="policy") from exc
    return config


def serialize_config(config: ExperimentConfig) -> dict:
    """Plain mapping that parses back to an equal config."""
    out = {
        "objective": config.objective,
        "task": config.task,
        "seed": config.seed,
        "epochs": config.epochs,
        "output_dir": config.output_dir,
        "space": config.space.to_dict(),
        "sampler": {
            "kind": config.sampler.kind,
            "resolution": config.sampler.resolution,
            "tpe": {
                "n_startup_trials": config.sampler.tpe.n_startup_trials,
                "n_candidates": config.sampler.tpe.n_candidates,
                "gamma_cap": config.sampler.tpe.gamma_cap,
                "gamma_fraction": config.sampler.tpe.gamma_fraction,
                "prior_weight": config.sampler.tpe.prior_weight,
            },
        },
        "policy": {
            "n_trials": config.policy.n_trials,
            "max_parallel": config.policy.max_parallel,
        },
        "synthetic": {
            "n_per_class": config.synthetic.n_per_class,
            "image_side": config.synthetic.image_side,
            "noise_std": config.synthetic.noise_std,
            "seed": config.synthetic.seed,
        },
    }
    if config.policy.save_threshold is not None:
        out["policy"]["save_threshold"] = config.policy.save_threshold
    if config.policy.stop_threshold is not None:
        out["policy"]["stop_threshold"] = config.policy.stop_threshold
    if config.pruner is not None:
        out["pruner"] = {
            "warmup_steps": config.pruner.warmup_steps,
            "min_completed": config.pruner.min_completed,
        }
    if config.data is not None:
        out["data"] = {
            "manifest": config.data.manifest,
            "ratios": list(config.data.ratios),
            "seed": config.data.seed,
        }
    return out


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(serialize_config(config), sort_keys=False)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply dotted key=value assignments onto the raw mapping."""
    raw = dict(_require_mapping(raw, ""))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key_path, _, value_text = item.partition("=")
        keys = key_path.split(".")
        if not all(keys):
            raise ConfigError(f"override {item!r} has an empty key segment")
        try:
            value = yaml.safe_load(value_text) if value_text != "" else ""
        except yaml.YAMLError:
            value = value_text
        node = raw
        for key in keys[:-1]:
            child = node.get(key)
            if child is None:
                child = {}
                node[key] = child
            elif not isinstance(child, dict):
                raise ConfigError(f"cannot descend into scalar", path=key_path)
            node = child
        node[keys[-1]] = value
    return raw
