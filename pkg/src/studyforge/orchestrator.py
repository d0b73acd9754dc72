"""Study runner: ask -> objective -> report/prune -> tell, with journaling.

One coordinator owns the study and journal; objectives may execute on up
to max_parallel worker threads, but every study mutation and journal
append happens under the coordinator lock, so samplers always see a
consistent history snapshot. Threshold policy: once a completed value
meets save_threshold and improves on the prior best, a checkpoint record
is written; once a completed value meets stop_threshold, no further
trials start. Runs are bitwise deterministic for max_parallel = 1.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np

from . import journal as journal_mod
from .augment import read_pgm, resize_to
from .errors import (
    DivergenceError,
    ExhaustedSearchError,
    TrialPruned,
    ValidationError,
)
from .journal import Journal
from .manifest import (
    LABELS,
    balance_binary,
    binary_label,
    exclude_multi_image_studies,
    load_manifest,
    stratified_split,
)
from .pruning import should_prune
from .samplers import make_sampler
from .study import (
    MAXIMIZE,
    MINIMIZE,
    Study,
    TrialRecord,
    TrialState,
    create_study,
    is_improvement,
    meets_threshold,
)
from .surrogate import (
    BENCHMARKS,
    SplitArrays,
    SyntheticSpec,
    benchmark_objective,
    make_synthetic_dataset,
    split_arrays,
    train_and_evaluate,
)

if TYPE_CHECKING:
    from .config import ExperimentConfig


@dataclass(frozen=True)
class RunPolicy:
    """Trial budget plus the save/stop thresholds and worker count."""

    n_trials: int = 20
    save_threshold: float | None = None
    stop_threshold: float | None = None
    max_parallel: int = 1
    pruning_enabled: bool = False

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValidationError("n_trials must be >= 1")
        if self.max_parallel < 1:
            raise ValidationError("max_parallel must be >= 1")

    def validate_for_direction(self, direction: str) -> None:
        if self.save_threshold is None or self.stop_threshold is None:
            return
        if direction == MAXIMIZE and self.stop_threshold < self.save_threshold:
            raise ValidationError("stop_threshold must be >= save_threshold")
        if direction == MINIMIZE and self.stop_threshold > self.save_threshold:
            raise ValidationError("stop_threshold must be <= save_threshold")


def direction_for_objective(objective: str) -> str:
    if objective == "surrogate":
        return MAXIMIZE
    if objective in BENCHMARKS:
        return MINIMIZE
    raise ValidationError(f"unknown objective {objective!r}")


@dataclass
class StudyResult:
    study: Study
    best: TrialRecord | None
    journal_path: Path


# objective callable: (params, reporter, rng_seed) -> (value, metrics|None)
Objective = Callable[[dict, Callable[[int, float], None], list], tuple[float, dict | None]]


def load_manifest_arrays(config: "ExperimentConfig") -> SplitArrays:
    """Build train/val/test rasters from a manifest of PGM files."""
    data_cfg = config.data
    manifest_path = Path(data_cfg.manifest)
    entries = exclude_multi_image_studies(load_manifest(manifest_path))
    base = manifest_path.parent
    side = config.synthetic.image_side

    if config.task == "binary":
        pool = balance_binary(entries, data_cfg.seed)
        entries = [e for e, _ in pool]
        split = stratified_split(entries, data_cfg.ratios, data_cfg.seed, label_key=binary_label)
        label_of = lambda e: 0 if binary_label(e) == "negative" else 1
        n_classes = 2
    else:
        split = stratified_split(entries, data_cfg.ratios, data_cfg.seed)
        label_of = lambda e: LABELS.index(e.label)
        n_classes = 4

    def rasters(group):
        xs = np.array([resize_to(read_pgm(base / e.image_path), side) for e in group])
        ys = np.array([label_of(e) for e in group], dtype=int)
        return xs, ys

    train_x, train_y = rasters(split.train)
    val_x, val_y = rasters(split.val)
    test_x, test_y = rasters(split.test)
    return SplitArrays(train_x, train_y, val_x, val_y, test_x, test_y, side, n_classes)


def build_surrogate_data(config: "ExperimentConfig") -> SplitArrays:
    if config.data is not None:
        return load_manifest_arrays(config)
    syn = config.synthetic
    spec = SyntheticSpec(
        n_classes=2 if config.task == "binary" else 4,
        n_per_class=syn.n_per_class,
        image_side=syn.image_side,
        noise_std=syn.noise_std,
        seed=syn.seed,
    )
    images, labels = make_synthetic_dataset(spec)
    return split_arrays(images, labels, seed=syn.seed)


def build_objective(config: "ExperimentConfig") -> Objective:
    if config.objective == "surrogate":
        data = build_surrogate_data(config)

        def objective(params, reporter, seed):
            report = train_and_evaluate(
                params, data, epochs=config.epochs, reporter=reporter, seed=seed
            )
            metrics = {
                "confusion": report.confusion.tolist(),
                "f1": [float(v) for v in report.f1_per_class],
                "macro_f1": report.macro_f1,
            }
            return report.final_accuracy, metrics

        return objective

    name = config.objective

    def objective(params, reporter, seed):
        return benchmark_objective(name, params), None

    return objective


def config_hash(config: "ExperimentConfig") -> str:
    from .config import serialize_config

    canonical = json.dumps(serialize_config(config), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_study(config: "ExperimentConfig", journal_path=None) -> StudyResult:
    """Execute the configured study end to end, journaling every event."""
    direction = direction_for_objective(config.objective)
    policy = config.policy
    policy.validate_for_direction(direction)
    study = create_study(config.space, direction, config.seed)
    sampler = make_sampler(
        config.sampler.kind,
        tpe_config=config.sampler.tpe,
        resolution=config.sampler.resolution,
    )
    objective = build_objective(config)

    out_dir = Path(config.output_dir)
    journal_path = Path(journal_path) if journal_path else out_dir / "journal.jsonl"
    meta = {
        "space": config.space.to_dict(),
        "direction": direction,
        "seed": config.seed,
        "config_hash": config_hash(config),
    }

    lock = threading.Lock()
    state = {"asked": 0, "stop": False, "best_completed": None}

    with Journal(journal_path, meta=meta) as journal:

        def start_trial():
            """Coordinator step: returns the new trial or None when done."""
            with lock:
                if state["stop"] or state["asked"] >= policy.n_trials:
                    return None
                try:
                    trial = study.ask(sampler)
                except ExhaustedSearchError:
                    state["stop"] = True
                    return None
                state["asked"] += 1
                journal.append(
                    journal_mod.KIND_TRIAL_START,
                    trial_id=trial.trial_id,
                    params=trial.params,
                )
                return trial

        def finish_complete(trial, value, metrics):
            with lock:
                study.tell(trial.trial_id, value)
                end = {
                    "trial_id": trial.trial_id,
                    "state": TrialState.COMPLETE.value,
                    "final_value": value,
                }
                if metrics is not None:
                    end["metrics"] = metrics
                journal.append(journal_mod.KIND_TRIAL_END, **end)
                if (
                    policy.save_threshold is not None
                    and meets_threshold(direction, value, policy.save_threshold)
                    and is_improvement(direction, value, state["best_completed"])
                ):
                    journal.append(
                        journal_mod.KIND_CHECKPOINT,
                        trial_id=trial.trial_id,
                        value=value,
                        best_params=trial.params,
                    )
                if is_improvement(direction, value, state["best_completed"]):
                    state["best_completed"] = value
                if policy.stop_threshold is not None and meets_threshold(
                    direction, value, policy.stop_threshold
                ):
                    state["stop"] = True

        def finish_terminal(trial, terminal_state):
            with lock:
                study.tell(trial.trial_id, state=terminal_state)
                journal.append(
                    journal_mod.KIND_TRIAL_END,
                    trial_id=trial.trial_id,
                    state=terminal_state.value,
                )

        def run_one(trial):
            def reporter(step, value):
                with lock:
                    study.report_intermediate(trial.trial_id, step, value)
                    journal.append(
                        journal_mod.KIND_INTERMEDIATE,
                        trial_id=trial.trial_id,
                        step=step,
                        value=value,
                    )
                    prune = policy.pruning_enabled and should_prune(
                        study, trial.trial_id, step, config.pruner_config()
                    )
                if prune:
                    raise TrialPruned()

            try:
                value, metrics = objective(
                    trial.params, reporter, [study.seed, trial.trial_id, 1]
                )
            except TrialPruned:
                finish_terminal(trial, TrialState.PRUNED)
            except DivergenceError:
                finish_terminal(trial, TrialState.FAILED)
            else:
                finish_complete(trial, float(value), metrics)

        if policy.max_parallel == 1:
            while (trial := start_trial()) is not None:
                run_one(trial)
        else:
            def worker():
                while (trial := start_trial()) is not None:
                    run_one(trial)

            with ThreadPoolExecutor(max_workers=policy.max_parallel) as pool:
                futures = [pool.submit(worker) for _ in range(policy.max_parallel)]
                for f in futures:
                    f.result()

    best = None
    if study.completed_trials():
        best = study.best_trial()
    return StudyResult(study=study, best=best, journal_path=journal_path)
