import numpy as np
import pytest

from studyforge.study import (
    MAXIMIZE,
    MINIMIZE,
    SearchSpace,
    Study,
    boolean,
    int_categorical,
    log_uniform,
    uniform,
)


@pytest.fixture
def unit_space():
    return SearchSpace({"x": uniform(0.0, 1.0)})


@pytest.fixture
def mixed_space():
    return SearchSpace(
        {
            "lr": log_uniform(1e-4, 1e-3),
            "dropout": uniform(0.0, 0.2),
            "batch_size": int_categorical([8, 16, 32, 64, 128]),
            "hflip": boolean(),
        }
    )


def make_study(space, direction=MINIMIZE, seed=0):
    return Study(space, direction, seed)


def complete_trial(study, params, value, intermediates=()):
    """Append a finished trial directly, bypassing a sampler."""
    from studyforge.study import TrialRecord, TrialState

    trial = TrialRecord(trial_id=len(study.trials), params=params)
    study.trials.append(trial)
    for step, v in intermediates:
        study.report_intermediate(trial.trial_id, step, v)
    study.tell(trial.trial_id, value)
    return trial


def running_trial(study, params, intermediates=()):
    from studyforge.study import TrialRecord

    trial = TrialRecord(trial_id=len(study.trials), params=params)
    study.trials.append(trial)
    for step, v in intermediates:
        study.report_intermediate(trial.trial_id, step, v)
    return trial
