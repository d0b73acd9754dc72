"""Samplers: random, grid, and the tree-structured Parzen estimator (TPE).

TPE splits the observed trials into a small "good" set and the remaining
"bad" set, fits one truncated-Gaussian mixture to each (per parameter,
independently), then proposes the candidate maximizing the density ratio
good/bad. Discrete parameters use smoothed categorical weights instead of
a mixture. Random search is also the fallback before enough trials exist.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExhaustedSearchError, ValidationError
from .study import (
    MAXIMIZE,
    SearchSpace,
    Study,
    TrialState,
)

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


@dataclass(frozen=True)
class TpeConfig:
    """TPE constants; defaults sized for sub-1000-trial studies."""

    n_startup_trials: int = 10
    n_candidates: int = 24
    gamma_cap: int = 25
    gamma_fraction: float = 0.25
    prior_weight: float = 1.0

    def __post_init__(self):
        if self.n_startup_trials <= 0 or self.n_candidates <= 0 or self.gamma_cap <= 0:
            raise ValidationError("TPE counts must be positive")
        if not 0.0 < self.gamma_fraction <= 1.0:
            raise ValidationError("gamma_fraction must be in (0, 1]")
        if self.prior_weight <= 0:
            raise ValidationError("prior_weight must be positive")


@dataclass
class ParzenEstimator:
    """Truncated-Gaussian mixture over a bounded 1-D domain.

    Lives entirely in its internal coordinate: natural-log space when
    is_log (domain and centers are then log-transformed). The density is
    renormalized per component so the mixture integrates to 1 over
    [low, high].
    """

    centers: np.ndarray
    bandwidths: np.ndarray
    weights: np.ndarray
    low: float
    high: float
    is_log: bool = False
    # per-component log of the truncation mass Phi(beta)-Phi(alpha)
    _log_trunc_mass: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.bandwidths = np.asarray(self.bandwidths, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.bandwidths <= 0) or np.any(self.weights <= 0):
            raise ValidationError("bandwidths and weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must sum to 1")
        if np.any(self.centers < self.low) or np.any(self.centers > self.high):
            raise ValidationError("centers must lie within the domain")
        mass = np.array(
            [
                _norm_cdf((self.high - c) / b) - _norm_cdf((self.low - c) / b)
                for c, b in zip(self.centers, self.bandwidths)
            ]
        )
        self._log_trunc_mass = np.log(mass)


def fit_parzen(
    values,
    low: float,
    high: float,
    is_log: bool = False,
    cfg: TpeConfig = TpeConfig(),
) -> ParzenEstimator:
    """Fit the mixture: one component per observation plus a wide prior.

    Per-observation bandwidth is Scott-style 1.06 * sd * n^(-1/5) floored
    at width/min(100, n+1) (sd is the ddof=1 sample standard deviation;
    half the width when a single observation gives no spread estimate).
    The floor shrinks as observations accumulate so the search narrows
    coarse-to-fine; a fixed floor lets the good-set kernel collapse onto
    an early cluster and the suggestion loop stops migrating toward the
    optimum. The prior sits at the domain midpoint with bandwidth equal
    to the full width. All components share the uniform weight 1/(n+1).
    """
    if not (math.isfinite(low) and math.isfinite(high) and low < high):
        raise ValidationError(f"invalid domain [{low}, {high}]")
    values = [float(v) for v in values]
    if any(not low <= v <= high for v in values):
        raise ValidationError("observation outside domain")
    if is_log:
        if low <= 0:
            raise ValidationError("log domain requires low > 0")
        values = [math.log(v) for v in values]
        low, high = math.log(low), math.log(high)

    width = high - low
    n = len(values)
    centers = [low + width / 2.0]
    bandwidths = [width]
    if n == 1:
        obs_bw = width / 2.0
    elif n > 1:
        sd = float(np.std(values, ddof=1))
        obs_bw = max(1.06 * sd * n ** (-0.2), width / min(100.0, n + 1.0))
    for v in values:
        centers.append(v)
        bandwidths.append(obs_bw)
    weights = np.full(n + 1, 1.0 / (n + 1))
    return ParzenEstimator(
        centers=np.array(centers),
        bandwidths=np.array(bandwidths),
        weights=weights,
        low=low,
        high=high,
        is_log=is_log,
    )


def parzen_logpdf(est: ParzenEstimator, x):
    """Log-density of the truncation-renormalized mixture at x.

    x is in the estimator's internal coordinate and must lie within
    [est.low, est.high]; accepts a scalar or an array.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < est.low) or np.any(arr > est.high):
        raise ValidationError("x outside estimator domain")
    z = (arr[..., None] - est.centers) / est.bandwidths
    comp = (
        np.log(est.weights)
        - np.log(est.bandwidths)
        - _LOG_SQRT_2PI
        - 0.5 * z * z
        - est._log_trunc_mass
    )
    # logsumexp over the component axis
    m = comp.max(axis=-1)
    out = m + np.log(np.exp(comp - m[..., None]).sum(axis=-1))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def parzen_sample(est: ParzenEstimator, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw from the mixture by component choice + in-domain rejection."""
    idx = rng.choice(len(est.weights), size=size, p=est.weights)
    mu = est.centers[idx]
    sigma = est.bandwidths[idx]
    out = np.empty(size)
    pending = np.arange(size)
    # acceptance mass per component is >= ~0.38, so a few rounds suffice
    for _ in range(1000):
        draws = rng.normal(mu[pending], sigma[pending])
        ok = (draws >= est.low) & (draws <= est.high)
        out[pending[ok]] = draws[ok]
        pending = pending[~ok]
        if pending.size == 0:
            return out
    raise RuntimeError("truncated-normal rejection failed to converge")


def suggest_random(space: SearchSpace, rng: np.random.Generator) -> dict:
    """Independent draw per parameter: uniform, log-uniform, or choice."""
    params = {}
    for name, dist in space.entries.items():
        if dist.is_discrete:
            params[name] = dist.choices[int(rng.integers(len(dist.choices)))]
        elif dist.is_log:
            v = math.exp(rng.uniform(math.log(dist.low), math.log(dist.high)))
            params[name] = min(max(v, dist.low), dist.high)
        else:
            params[name] = float(rng.uniform(dist.low, dist.high))
    return params


def grid_enumerate(space: SearchSpace, resolution: int) -> list[dict]:
    """Cartesian product, row-major over the space's entry order.

    Continuous axes get `resolution` evenly spaced points including both
    endpoints (log-evenly for log-uniform); discrete axes use all choices.
    """
    if len(space) == 0:
        raise ValidationError("empty space")
    axes = []
    for name, dist in space.entries.items():
        if dist.is_discrete:
            axes.append(list(dist.choices))
        else:
            if resolution < 2:
                raise ValidationError(
                    f"resolution must be >= 2 for continuous parameter {name!r}"
                )
            if dist.is_log:
                pts = np.exp(
                    np.linspace(math.log(dist.low), math.log(dist.high), resolution)
                )
                pts = np.clip(pts, dist.low, dist.high)
            else:
                pts = np.linspace(dist.low, dist.high, resolution)
            axes.append([float(p) for p in pts])
    names = space.names
    return [dict(zip(names, combo)) for combo in itertools.product(*axes)]


def trial_observations(study: Study) -> list[tuple[dict, float]]:
    """History TPE learns from: complete trials at their final value,
    pruned trials at their last intermediate; failed trials carry nothing."""
    history = []
    for t in study.trials:
        if t.state is TrialState.COMPLETE:
            history.append((t.params, t.final_value))
        elif t.state is TrialState.PRUNED and t.intermediates:
            history.append((t.params, t.intermediates[-1][1]))
    return history


def tpe_split_observations(
    history: list[tuple[dict, float]],
    direction: str,
    cfg: TpeConfig = TpeConfig(),
) -> tuple[list, list]:
    """Split history into (good, bad) by the gamma rule.

    n_good = min(gamma_cap, max(1, ceil(gamma_fraction * n))); the good set
    is the n_good best values per direction, ties resolved by trial order.
    """
    n = len(history)
    if n == 0:
        raise ValidationError("history must be non-empty")
    n_good = min(cfg.gamma_cap, max(1, math.ceil(cfg.gamma_fraction * n)))
    order = sorted(
        range(n),
        key=lambda i: history[i][1],
        reverse=(direction == MAXIMIZE),
    )
    good_idx = sorted(order[:n_good])
    good_set = set(good_idx)
    good = [history[i] for i in good_idx]
    bad = [history[i] for i in range(n) if i not in good_set]
    return good, bad


def _categorical_weights(values, choices, prior_weight: float) -> np.ndarray:
    counts = np.array([sum(1 for v in values if v == c and type(v) is type(c)) for c in choices], dtype=float)
    w = counts + prior_weight / len(choices)
    return w / w.sum()


def tpe_suggest(
    study: Study,
    cfg: TpeConfig = TpeConfig(),
    rng: np.random.Generator | None = None,
) -> dict:
    """Propose one assignment; random until enough complete trials exist."""
    if rng is None:
        rng = study.rng_for(len(study.trials), lane=0)
    n_complete = len(study.completed_trials())
    if n_complete < cfg.n_startup_trials:
        return suggest_random(study.space, rng)

    history = trial_observations(study)
    good, bad = tpe_split_observations(history, study.direction, cfg)
    params = {}
    for name, dist in study.space.entries.items():
        good_vals = [p[name] for p, _ in good]
        bad_vals = [p[name] for p, _ in bad]
        if dist.is_discrete:
            w_good = _categorical_weights(good_vals, dist.choices, cfg.prior_weight)
            w_bad = _categorical_weights(bad_vals, dist.choices, cfg.prior_weight)
            cand_idx = rng.choice(len(dist.choices), size=cfg.n_candidates, p=w_good)
            scores = np.log(w_good[cand_idx]) - np.log(w_bad[cand_idx])
            params[name] = dist.choices[int(cand_idx[int(np.argmax(scores))])]
        else:
            l_est = fit_parzen(good_vals, dist.low, dist.high, dist.is_log, cfg)
            g_est = fit_parzen(bad_vals, dist.low, dist.high, dist.is_log, cfg)
            cand = parzen_sample(l_est, rng, size=cfg.n_candidates)
            scores = parzen_logpdf(l_est, cand) - parzen_logpdf(g_est, cand)
            best = float(cand[int(np.argmax(scores))])
            if dist.is_log:
                best = math.exp(best)
            params[name] = min(max(best, dist.low), dist.high)
    return params


class RandomSampler:
    """Independent uniform draws; the paper-style baseline."""

    def suggest(self, study: Study, rng: np.random.Generator) -> dict:
        return suggest_random(study.space, rng)


class GridSampler:
    """Walks the grid in enumeration order; raises once exhausted."""

    def __init__(self, resolution: int = 5):
        self.resolution = resolution

    def suggest(self, study: Study, rng: np.random.Generator) -> dict:
        cells = grid_enumerate(study.space, self.resolution)
        index = len(study.trials)
        if index >= len(cells):
            raise ExhaustedSearchError(
                f"grid of {len(cells)} cells fully consumed"
            )
        return cells[index]


class TpeSampler:
    def __init__(self, cfg: TpeConfig = TpeConfig()):
        self.cfg = cfg

    def suggest(self, study: Study, rng: np.random.Generator) -> dict:
        return tpe_suggest(study, self.cfg, rng)


def make_sampler(kind: str, *, tpe_config: TpeConfig | None = None, resolution: int = 5):
    if kind == "tpe":
        return TpeSampler(tpe_config or TpeConfig())
    if kind == "random":
        return RandomSampler()
    if kind == "grid":
        return GridSampler(resolution)
    raise ValidationError(f"unknown sampler kind {kind!r}")
