import math

import numpy as np
import pytest

from core.errors import ConfigError, IntegrationError, SamplerError
from core.models import SamplerConfig
from core.sampler import Target, adapt_scales, chain_seeds, mh_step, run_chain, tune
from core.tasks import TaskRunner, map_ordered
from helpers import ExponentialTarget, batch_means_se


def _config(**kwargs):
    values = {"n_samples": 20000, "n_burnin": 1000, "tune_rounds": 10, "tune_length": 200, "seed": 11}
    values.update(kwargs)
    return SamplerConfig(**values)


def test_poisson_gamma_conjugate_posterior():
    counts = np.random.default_rng(3).poisson(5.0, size=20)
    chain = run_chain(_config(), _poisson_gamma_target(), np.array([4.0]))
    shape, rate = 1 + counts.sum(), 1 + counts.size
    draws = chain.column("lam")
    assert abs(draws.mean() - shape / rate) < 4 * batch_means_se(draws)
    assert draws.var() == pytest.approx(shape / rate ** 2, rel=0.15)


def test_exponential_product_target():
    names = ("a", "b", "c")
    chain = run_chain(_config(n_samples=30000), ExponentialTarget(names), np.ones(3))
    for name in names:
        draws = chain.column(name)
        assert abs(draws.mean() - 1.0) < 4 * batch_means_se(draws)
        assert np.median(draws) == pytest.approx(math.log(2), abs=0.08)


def test_same_seed_same_chain():
    target = ExponentialTarget(("a", "b"))
    first = run_chain(_config(n_samples=500), target, np.ones(2))
    second = run_chain(_config(n_samples=500), target, np.ones(2))
    other = run_chain(_config(n_samples=500, seed=12), target, np.ones(2))
    np.testing.assert_array_equal(first.samples, second.samples)
    np.testing.assert_array_equal(first.log_posteriors, second.log_posteriors)
    assert not np.array_equal(first.samples, other.samples)


def _poisson_gamma_target():
    counts = np.random.default_rng(3).poisson(5.0, size=20)

    def log_density(theta):
        lam = theta[0]
        if lam <= 0:
            return -math.inf
        return float(np.sum(counts) * math.log(lam) - counts.size * lam - lam)

    return Target(log_density, names=("lam",))


def test_tuning_moves_acceptance_toward_target():
    target = ExponentialTarget(("a",))
    scales = tune(_config(tune_rounds=25, proposal_scales=np.array([0.01])), target, np.ones(1))
    assert scales[0] > 0.01


def test_tuned_scales_give_acceptance_near_target():
    target = _poisson_gamma_target()
    scales = tune(_config(tune_rounds=20, tune_length=250, proposal_scales=np.array([0.01])), target, np.array([4.0]))
    chain = run_chain(
        _config(n_samples=5000, n_burnin=0, tune_rounds=0, proposal_scales=scales, seed=12),
        target,
        np.array([4.0]),
    )
    assert 0.15 <= chain.acceptance_rates()["lam"] <= 0.50


def test_adapt_scales_rule():
    scales = np.array([0.1, 0.1, 0.1, 5.0, 1e-6])
    acceptance = np.array([0.30, 1.0, 0.0, 1.0, 0.0])
    new = adapt_scales(scales, acceptance)
    assert new[0] == pytest.approx(0.1)
    assert new[1] == pytest.approx(0.1 * math.exp(0.7))
    assert new[2] == pytest.approx(0.1 * math.exp(-0.3))
    assert new[3] == 10.0
    assert new[4] == 1e-6


def test_empty_chain_requested():
    with pytest.raises(ConfigError, match="empty chain requested"):
        SamplerConfig(n_samples=0)


def test_zero_density_start_is_an_error():
    with pytest.raises(SamplerError):
        run_chain(_config(n_samples=10), Target(lambda theta: -math.inf, names=("a",)), np.ones(1))
    with pytest.raises(SamplerError):
        run_chain(_config(n_samples=10), ExponentialTarget(("a",)), np.array([-1.0]))


def test_integration_failure_rejects_the_proposal():
    def log_density(theta):
        if theta[0] > 2.0:
            raise IntegrationError("blew up", day=3)
        return -float(theta[0])

    chain = run_chain(_config(n_samples=3000), Target(log_density, names=("a",)), np.ones(1))
    assert chain.column("a").max() <= 2.0


def test_frozen_component_never_moves():
    def log_density(theta):
        return -float(theta[0]) if theta[0] > 0 else -math.inf

    target = Target(log_density, names=("a", "rho"), free=np.array([True, False]))
    chain = run_chain(_config(n_samples=1000), target, np.array([1.0, 0.0]))
    assert np.all(chain.column("rho") == 0.0)
    assert chain.accept_count[1] == 0


def test_mh_step_proposes_each_free_component_once():
    calls = []

    def log_density(theta):
        calls.append(theta.copy())
        return -float(np.sum(theta))

    target = Target(log_density, names=("a", "b", "c"), free=np.array([True, False, True]))
    rng = np.random.default_rng(0)
    theta, lp, accepted = mh_step(np.ones(3), -3.0, np.full(3, 0.1), rng, target)
    assert len(calls) == 2
    assert theta[1] == 1.0
    assert not accepted[1]
    assert lp == pytest.approx(-float(np.sum(theta)))


def test_chain_seeds_are_distinct_and_reproducible():
    seeds = chain_seeds(20200229, 4)
    assert len(set(seeds)) == 4
    assert seeds == chain_seeds(20200229, 4)


def test_task_runner_returns_chains_in_config_order():
    target = ExponentialTarget(("a", "b"))
    configs = [_config(n_samples=200, seed=s) for s in chain_seeds(5, 3)]
    progress = []
    serial = TaskRunner(max_workers=1).run_chains(configs, target, np.ones(2), progress.append)
    parallel = TaskRunner(max_workers=3).run_chains(configs, target, np.ones(2))
    assert [p.completed for p in progress] == [1, 2, 3]
    for a, b, config in zip(serial, parallel, configs):
        assert a.seed == config.seed
        np.testing.assert_array_equal(a.samples, b.samples)


def test_cancelled_run_raises_sampler_error():
    target = ExponentialTarget(("a",))
    configs = [_config(n_samples=100, seed=s) for s in chain_seeds(7, 3)]
    runner = TaskRunner(max_workers=1)
    with pytest.raises(SamplerError, match="cancelled after 1 of 3"):
        runner.run_chains(configs, target, np.ones(1), lambda progress: runner.cancel())


def test_map_ordered_keeps_input_order():
    assert map_ordered(lambda x: x * x, range(20), workers=4) == [x * x for x in range(20)]


@pytest.mark.slow
def test_recovers_parameters_from_simulated_data():
    from core.analysis import simulate_observations, summarize
    from core.models import CompartmentState, InterventionSchedule, ParameterSet
    from core.posterior import PosteriorModel

    sched = InterventionSchedule(alpha_days=(50, 100), gamma_days=(80,), tau=30, T_V=150)
    truth = ParameterSet(
        alpha=[3e-6, 1e-6, 1.5e-6], beta=0.1, beta_star=0.5, gamma=[0.05, 0.08], zeta=0.005, rho=0.01
    )
    init = CompartmentState(S=1e5, E=50)
    sweeps = {"n_samples": 10000, "n_burnin": 2000, "tune_rounds": 20, "tune_length": 250}

    covered = []
    for seed in range(5):
        data = simulate_observations(truth, sched, init, 199, np.random.default_rng(100 + seed))
        model = PosteriorModel(sched, data, init)
        chain = run_chain(_config(seed=seed, **sweeps), model, truth)
        rows = summarize(chain)
        assert [row.name for row in rows] == list(truth.names)
        covered += [row.q025 <= value <= row.q975 for row, value in zip(rows, truth.to_vector())]
    assert np.mean(covered) >= 0.80
