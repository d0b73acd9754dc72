import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import simpson
from scipy.stats import truncnorm

from studyforge.errors import ExhaustedSearchError, ValidationError
from studyforge.samplers import (
    GridSampler,
    RandomSampler,
    TpeConfig,
    TpeSampler,
    fit_parzen,
    grid_enumerate,
    make_sampler,
    parzen_logpdf,
    parzen_sample,
    suggest_random,
    tpe_split_observations,
    tpe_suggest,
    trial_observations,
)
from studyforge.study import (
    MAXIMIZE,
    MINIMIZE,
    SearchSpace,
    TrialState,
    boolean,
    int_categorical,
    log_uniform,
    uniform,
)

from conftest import complete_trial, make_study, running_trial


class TestRandomSampler:
    def test_draws_stay_in_bounds(self, mixed_space):
        rng = np.random.default_rng(0)
        for _ in range(200):
            mixed_space.validate_assignment(suggest_random(mixed_space, rng))

    def test_log_uniform_spreads_over_decades(self):
        space = SearchSpace({"lr": log_uniform(1e-6, 1.0)})
        rng = np.random.default_rng(1)
        draws = [suggest_random(space, rng)["lr"] for _ in range(500)]
        logs = np.log10(draws)
        # log-uniform over 6 decades: each half holds roughly half the mass
        assert 0.35 < np.mean(logs < -3.0) < 0.65

    def test_deterministic_in_rng(self, mixed_space):
        a = suggest_random(mixed_space, np.random.default_rng(7))
        b = suggest_random(mixed_space, np.random.default_rng(7))
        assert a == b


class TestGridEnumerate:
    def test_product_of_cardinalities(self):
        space = SearchSpace(
            {"batch": int_categorical([8, 16, 32, 64, 128]), "lr": uniform(0, 1)}
        )
        cells = grid_enumerate(space, resolution=3)
        assert len(cells) == 15

    def test_single_boolean(self):
        cells = grid_enumerate(SearchSpace({"flip": boolean()}), resolution=2)
        assert cells == [{"flip": False}, {"flip": True}]

    def test_even_spacing_includes_endpoints(self):
        cells = grid_enumerate(SearchSpace({"x": uniform(0.0, 1.0)}), resolution=3)
        assert [c["x"] for c in cells] == [0.0, 0.5, 1.0]

    def test_row_major_over_entry_order(self):
        space = SearchSpace({"a": int_categorical([1, 2]), "b": int_categorical([10, 20])})
        cells = grid_enumerate(space, resolution=2)
        assert cells == [
            {"a": 1, "b": 10},
            {"a": 1, "b": 20},
            {"a": 2, "b": 10},
            {"a": 2, "b": 20},
        ]

    def test_log_even_spacing(self):
        cells = grid_enumerate(SearchSpace({"lr": log_uniform(1e-4, 1e-2)}), resolution=3)
        pts = [c["lr"] for c in cells]
        assert pts[0] == pytest.approx(1e-4, rel=1e-12)
        assert pts[1] == pytest.approx(1e-3, rel=1e-12)
        assert pts[2] == pytest.approx(1e-2, rel=1e-12)

    def test_resolution_below_two_rejected(self):
        with pytest.raises(ValidationError):
            grid_enumerate(SearchSpace({"x": uniform(0, 1)}), resolution=1)

    def test_grid_points_in_domain(self):
        space = SearchSpace({"lr": log_uniform(1e-4, 1e-3), "x": uniform(-2, 3)})
        for cell in grid_enumerate(space, resolution=7):
            space.validate_assignment(cell)


class TestGridSampler:
    def test_walks_in_order_then_exhausts(self, unit_space):
        study = make_study(unit_space)
        sampler = GridSampler(resolution=3)
        seen = []
        for _ in range(3):
            t = study.ask(sampler)
            study.tell(t.trial_id, 0.0)
            seen.append(t.params["x"])
        assert seen == [0.0, 0.5, 1.0]
        with pytest.raises(ExhaustedSearchError):
            study.ask(sampler)


class TestSplitObservations:
    def test_eight_value_maximize_example(self):
        values = [0.1, 0.9, 0.3, 0.8, 0.2, 0.4, 0.5, 0.6]
        history = [({"x": 0.0}, v) for v in values]
        good, bad = tpe_split_observations(history, MAXIMIZE)
        assert sorted(v for _, v in good) == [0.8, 0.9]
        assert len(bad) == 6

    def test_single_observation(self):
        good, bad = tpe_split_observations([({"x": 0.0}, 1.0)], MINIMIZE)
        assert len(good) == 1 and bad == []

    def test_gamma_cap_at_200(self):
        history = [({"x": 0.0}, float(i)) for i in range(200)]
        good, bad = tpe_split_observations(history, MINIMIZE)
        assert len(good) == 25
        assert sorted(v for _, v in good) == [float(i) for i in range(25)]

    def test_good_preserves_trial_order(self):
        history = [({"x": 0.0}, v) for v in [0.9, 0.1, 0.8, 0.2, 0.3, 0.4, 0.5, 0.6]]
        good, _ = tpe_split_observations(history, MINIMIZE)
        assert [v for _, v in good] == [0.1, 0.2]

    def test_empty_history_rejected(self):
        with pytest.raises(ValidationError):
            tpe_split_observations([], MINIMIZE)

    @given(
        values=st.lists(
            st.floats(min_value=-100, max_value=100, allow_nan=False),
            min_size=2,
            max_size=40,
            unique=True,
        )
    )
    def test_monotone_transform_invariance(self, values):
        warped_values = [math.exp(v / 100.0) for v in values]
        # exp must stay injective on the sample for strict monotonicity
        assume(len(set(warped_values)) == len(warped_values))
        history = [({"i": i}, v) for i, v in enumerate(values)]
        warped = [({"i": i}, w) for i, w in enumerate(warped_values)]
        good_a, _ = tpe_split_observations(history, MAXIMIZE)
        good_b, _ = tpe_split_observations(warped, MAXIMIZE)
        assert {p["i"] for p, _ in good_a} == {p["i"] for p, _ in good_b}


class TestFitParzen:
    def test_empty_fit_is_prior_only(self):
        est = fit_parzen([], 0.0, 1.0)
        assert est.centers.tolist() == [0.5]
        assert est.bandwidths.tolist() == [1.0]
        assert est.weights.tolist() == [1.0]

    def test_single_observation_fallback_bandwidth(self):
        est = fit_parzen([0.5], 0.0, 1.0)
        assert est.centers.tolist() == [0.5, 0.5]
        assert est.bandwidths[0] == 1.0
        assert est.bandwidths[1] == 0.5

    def test_two_observation_bandwidth_formula(self):
        est = fit_parzen([0.2, 0.8], 0.0, 1.0)
        assert len(est.centers) == 3
        assert np.allclose(est.weights, [1 / 3] * 3)
        sd = np.std([0.2, 0.8], ddof=1)
        expected = max(1.06 * sd * 2 ** (-0.2), 0.01)
        assert est.bandwidths[1] == pytest.approx(expected, rel=1e-12)
        assert est.bandwidths[2] == pytest.approx(expected, rel=1e-12)

    def test_clustered_observations_hit_floor(self):
        # zero spread, so the width/min(100, n+1) floor binds
        est = fit_parzen([0.5, 0.5, 0.5, 0.5], 0.0, 1.0)
        assert np.all(est.bandwidths[1:] == 1.0 / 5.0)

    def test_floor_shrinks_with_observation_count(self):
        tight = [0.5] * 150
        est = fit_parzen(tight, 0.0, 1.0)
        assert np.all(est.bandwidths[1:] == 0.01)
        wider = fit_parzen(tight[:30], 0.0, 1.0)
        assert np.all(wider.bandwidths[1:] == 1.0 / 31.0)

    def test_value_outside_domain_rejected(self):
        with pytest.raises(ValidationError):
            fit_parzen([1.5], 0.0, 1.0)

    def test_log_fit_transforms_to_log_space(self):
        est = fit_parzen([1e-3], 1e-4, 1e-2, is_log=True)
        assert est.is_log
        assert est.low == pytest.approx(math.log(1e-4))
        assert est.high == pytest.approx(math.log(1e-2))
        assert est.centers[1] == pytest.approx(math.log(1e-3))
        # prior bandwidth is the log-domain width
        assert est.bandwidths[0] == pytest.approx(math.log(1e-2) - math.log(1e-4))


class TestParzenLogpdf:
    def test_prior_only_matches_truncated_normal_closed_form(self):
        est = fit_parzen([], 0.0, 1.0)
        dist = truncnorm((0.0 - 0.5) / 1.0, (1.0 - 0.5) / 1.0, loc=0.5, scale=1.0)
        for x in (0.1, 0.5, 0.9):
            assert abs(math.exp(parzen_logpdf(est, x)) - dist.pdf(x)) < 1e-9

    def test_mixture_matches_truncnorm_mixture(self):
        est = fit_parzen([0.2, 0.8], 0.0, 1.0)
        xs = np.linspace(0.0, 1.0, 101)
        ref = np.zeros_like(xs)
        for c, b, w in zip(est.centers, est.bandwidths, est.weights):
            comp = truncnorm((0.0 - c) / b, (1.0 - c) / b, loc=c, scale=b)
            ref += w * comp.pdf(xs)
        ours = np.exp(parzen_logpdf(est, xs))
        assert np.allclose(ours, ref, atol=1e-9)

    def test_symmetric_estimator_is_symmetric(self):
        est = fit_parzen([0.3, 0.7], 0.0, 1.0)
        for delta in (0.0, 0.05, 0.13, 0.29):
            a = parzen_logpdf(est, 0.3 + delta)
            b = parzen_logpdf(est, 0.7 - delta)
            assert abs(math.exp(a) - math.exp(b)) < 1e-9

    def test_integral_is_one(self):
        xs = np.linspace(0.0, 1.0, 10_001)
        est = fit_parzen([0.1, 0.2, 0.25, 0.9], 0.0, 1.0)
        total = simpson(np.exp(parzen_logpdf(est, xs)), x=xs)
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_outside_domain_rejected(self):
        est = fit_parzen([0.5], 0.0, 1.0)
        with pytest.raises(ValidationError):
            parzen_logpdf(est, 1.5)
        with pytest.raises(ValidationError):
            parzen_logpdf(est, np.array([0.5, -0.1]))


class TestParzenSample:
    def test_samples_stay_in_domain(self):
        est = fit_parzen([0.01, 0.99], 0.0, 1.0)
        rng = np.random.default_rng(3)
        draws = parzen_sample(est, rng, size=5000)
        assert draws.shape == (5000,)
        assert np.all((draws >= 0.0) & (draws <= 1.0))

    def test_concentrates_near_tight_cluster(self):
        est = fit_parzen([0.5] * 30, 0.0, 1.0)
        rng = np.random.default_rng(4)
        draws = parzen_sample(est, rng, size=2000)
        # 30/31 of the weight sits on floor-bandwidth (1/31) components
        # at 0.5, so most draws land within ~3 bandwidths of the cluster
        assert np.mean(np.abs(draws - 0.5) < 0.1) > 0.9


def _seeded_history_study(direction=MINIMIZE, n=20, seed=0):
    space = SearchSpace({"x": uniform(0.0, 1.0), "batch": int_categorical([8, 16, 32])})
    study = make_study(space, direction=direction, seed=seed)
    rng = np.random.default_rng(seed)
    for _ in range(n):
        params = {"x": float(rng.uniform()), "batch": int(rng.choice([8, 16, 32]))}
        complete_trial(study, params, float(rng.uniform()))
    return study


class TestTpeSuggest:
    def test_startup_falls_back_to_random(self, mixed_space):
        study = make_study(mixed_space, seed=5)
        params = tpe_suggest(study, rng=np.random.default_rng(5))
        mixed_space.validate_assignment(params)

    def test_post_startup_suggestion_in_domain(self):
        study = _seeded_history_study()
        params = tpe_suggest(study, rng=np.random.default_rng(9))
        study.space.validate_assignment(params)

    def test_degenerate_history_all_same_point(self):
        space = SearchSpace({"x": uniform(0.0, 1.0)})
        study = make_study(space, direction=MINIMIZE)
        for _ in range(12):
            complete_trial(study, {"x": 0.5}, 0.25)
        params = tpe_suggest(study, rng=np.random.default_rng(2))
        assert 0.0 <= params["x"] <= 1.0

    def test_deterministic_given_history_and_seed(self):
        study = _seeded_history_study()
        a = tpe_suggest(study, rng=np.random.default_rng(11))
        b = tpe_suggest(study, rng=np.random.default_rng(11))
        assert a == b

    def test_pruned_trials_contribute_last_intermediate(self, unit_space):
        study = make_study(unit_space, direction=MAXIMIZE)
        t = running_trial(study, {"x": 0.3}, intermediates=[(1, 0.2), (2, 0.4)])
        study.tell(t.trial_id, state=TrialState.PRUNED)
        complete_trial(study, {"x": 0.6}, 0.9)
        history = trial_observations(study)
        assert ({"x": 0.3}, 0.4) in history
        assert ({"x": 0.6}, 0.9) in history

    def test_failed_trials_excluded(self, unit_space):
        study = make_study(unit_space)
        t = running_trial(study, {"x": 0.3}, intermediates=[(1, 0.2)])
        study.tell(t.trial_id, state=TrialState.FAILED)
        assert trial_observations(study) == []

    def test_concentrates_on_quadratic_optimum(self):
        space = SearchSpace({"x": uniform(0.0, 1.0)})
        study = make_study(space, direction=MINIMIZE, seed=0)
        sampler = TpeSampler()
        for _ in range(50):
            t = study.ask(sampler)
            study.tell(t.trial_id, (t.params["x"] - 0.3) ** 2)
        late = [t.params["x"] for t in study.trials[30:]]
        assert np.median(np.abs(np.array(late) - 0.3)) < 0.2


class TestMakeSampler:
    def test_known_kinds(self):
        assert isinstance(make_sampler("tpe"), TpeSampler)
        assert isinstance(make_sampler("random"), RandomSampler)
        assert isinstance(make_sampler("grid", resolution=3), GridSampler)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            make_sampler("annealing")


class TestTpeConfigValidation:
    def test_bad_constants_rejected(self):
        with pytest.raises(ValidationError):
            TpeConfig(n_startup_trials=0)
        with pytest.raises(ValidationError):
            TpeConfig(gamma_fraction=0.0)
        with pytest.raises(ValidationError):
            TpeConfig(gamma_fraction=1.5)
        with pytest.raises(ValidationError):
            TpeConfig(prior_weight=0.0)


@st.composite
def random_space(draw):
    entries = {}
    n = draw(st.integers(min_value=1, max_value=3))
    for i in range(n):
        kind = draw(st.sampled_from(["uniform", "log", "cat", "bool"]))
        name = f"p{i}"
        if kind == "uniform":
            low = draw(st.floats(min_value=-100, max_value=99, allow_nan=False))
            width = draw(st.floats(min_value=1e-3, max_value=50))
            entries[name] = uniform(low, low + width)
        elif kind == "log":
            low = draw(st.floats(min_value=1e-6, max_value=1.0))
            factor = draw(st.floats(min_value=1.5, max_value=1e4))
            entries[name] = log_uniform(low, low * factor)
        elif kind == "cat":
            choices = draw(
                st.lists(st.integers(min_value=-50, max_value=50), min_size=1, max_size=5, unique=True)
            )
            entries[name] = int_categorical(choices)
        else:
            entries[name] = boolean()
    return SearchSpace(entries)


@settings(max_examples=60, deadline=None)
@given(space=random_space(), seed=st.integers(min_value=0, max_value=2**31))
def test_all_samplers_contained_on_random_spaces(space, seed):
    rng = np.random.default_rng(seed)
    study = make_study(space, direction=MINIMIZE, seed=0)
    space.validate_assignment(suggest_random(space, rng))
    # build a history and check the TPE path too
    for _ in range(12):
        complete_trial(study, suggest_random(space, rng), float(rng.uniform()))
    space.validate_assignment(tpe_suggest(study, rng=rng))
