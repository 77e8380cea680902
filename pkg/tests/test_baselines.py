import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import make_spec, small_state
from fogsched.baselines import (
    GaConfig,
    GaScheduler,
    LrMmtScheduler,
    MadMcScheduler,
    RandomScheduler,
    mad,
    pearson,
    place_least_utilized,
    regression_forecast,
)
from fogsched.catalog import build_hosts
from fogsched.gobi import InputLayout
from fogsched.model import Decision
from fogsched.nn import Network
from fogsched.simulator import SimState, step


def running_state(specs, placement, hosts=None):
    """State one interval in, with ``specs`` running where ``placement`` put them."""
    state = SimState(hosts or build_hosts(), seed=0).admit(specs)
    nxt, _ = step(state, Decision(tuple(placement.items())))
    assert set(nxt.active) == set(placement)
    return nxt


def test_random_empty_and_single_host(empty_state):
    assert len(RandomScheduler(0).schedule(empty_state)) == 0
    one = SimState(build_hosts({"B4ms-edge": 1})).admit([make_spec(i) for i in range(4)])
    assert set(h for _, h in RandomScheduler(0).schedule(one)) == {0}


def test_random_is_uniform(empty_state):
    sched = RandomScheduler(3)
    state = empty_state.admit([make_spec(i) for i in range(100)])
    counts = np.zeros(10)
    for _ in range(100):
        for _, h in sched.schedule(state):
            counts[h] += 1
    assert counts.sum() == 10_000
    assert chisquare(counts).pvalue > 0.01


def test_regression_forecast_closed_form():
    series = np.array([0.5, 0.6, 0.7])
    assert regression_forecast(series) == pytest.approx(0.8)
    assert regression_forecast(np.array([0.5, 0.6, 0.7, 0.8])) == pytest.approx(0.9)


def test_lr_mmt_flat_load_no_migration():
    state = running_state([make_spec(0, length=5), make_spec(1, length=5)], {0: 4, 1: 4})
    state.cpu_history = [np.full(10, 0.1)] * 10
    assert len(LrMmtScheduler().schedule(state)) == 0


def test_lr_mmt_rising_load_triggers_min_migration_time_task():
    small = make_spec(0, (900, 100, 1, 1), length=5)
    big = make_spec(1, (900, 3000, 1, 1), length=5)
    state = running_state([small, big], {0: 4, 1: 4})
    hist = np.zeros((4, 10))
    hist[:, 4] = [0.5, 0.6, 0.7, 0.75]  # forecast 0.825 > 0.8
    state.cpu_history = list(hist)
    decision = LrMmtScheduler(window=4).schedule(state).as_dict()
    assert list(decision) == [0]  # the smaller RAM footprint migrates fastest
    assert decision[0] != 4


def test_lr_mmt_empty(empty_state):
    assert len(LrMmtScheduler().schedule(empty_state)) == 0


def test_mad_constant_history_never_overloaded():
    sched = MadMcScheduler(window=3)
    assert mad(np.full(5, 0.95)) == 0.0
    assert sched.threshold(np.full(5, 0.95)) == 1.0
    state = running_state([make_spec(0, length=5)], {0: 4})
    state.cpu_history = [np.full(10, 0.95)] * 3
    assert not sched.overloaded(state, 4)


def test_mad_mc_correlation_selection():
    # by hand: r(a, b+c) = -1.5/sqrt(5*6.75), r(b, a+c) = 1.5/sqrt(1*4.75), r(c, a+b) = -4/sqrt(10*6.75)
    a, b, c = np.array([1.0, 2, 3, 4]), np.array([2.0, 2, 3, 3]), np.array([4.0, 1, 3, 1])
    assert pearson(a, b + c) == pytest.approx(-1.5 / np.sqrt(33.75), abs=1e-12)
    assert pearson(b, a + c) == pytest.approx(1.5 / np.sqrt(4.75), abs=1e-12)
    assert pearson(c, a + b) == pytest.approx(-4 / np.sqrt(67.5), abs=1e-12)
    state = running_state([make_spec(i, length=6) for i in range(3)], {0: 4, 1: 4, 2: 4})
    tasks = [state.active[i] for i in range(3)]
    for task, series in zip(tasks, (a, b, c)):
        task.history = [np.array([v, 0, 0, 0]) for v in series]
    assert MadMcScheduler().select(state, 4, tasks) is tasks[1]
    assert MadMcScheduler().select(state, 4, tasks[2:]) is tasks[2]
    assert pearson(np.ones(3), np.arange(3.0)) == 0.0


def test_place_least_utilized_respects_capacity(empty_state):
    state = empty_state.admit([make_spec(i, (3000, 100, 1, 1)) for i in range(20)])
    loads = state.host_loads()
    pairs = place_least_utilized(state, state.candidates(), loads)
    assert (loads <= state.capacities + 1e-9).all()
    assert len(pairs) < 20  # not everything fits


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population=1)
    with pytest.raises(ValueError):
        GaConfig(mutation=1.5)
    with pytest.raises(ValueError):
        GaConfig(elitism=60)


def test_ga_single_host():
    hosts = build_hosts({"B4ms-edge": 1})
    state = SimState(hosts).admit([make_spec(0)])
    net = Network.approximator(InputLayout(1).dim, seed=0)
    assert GaScheduler(net, GaConfig(generations=3), 0).schedule(state).assignments == ((0, 0),)


def test_ga_zero_generations_returns_best_initial(host0_net):
    sched = GaScheduler(host0_net, GaConfig(generations=0, population=8), 1)
    state = small_state(2, seed=11)
    sched.schedule(state)
    assert len(sched.best_history) == 1


def test_ga_elitism_never_loses_best(host0_net):
    sched = GaScheduler(host0_net, GaConfig(generations=20), 2)
    sched.schedule(small_state(2, seed=12))
    assert all(b <= a + 1e-15 for a, b in zip(sched.best_history, sched.best_history[1:]))


def test_ga_finds_host0_optimum(host0_net):
    hits = 0
    for seed in range(20):
        decision = GaScheduler(host0_net, GaConfig(generations=50), seed).schedule(small_state(2, seed=700 + seed))
        hits += decision.as_dict() == {0: 0, 1: 0}
    assert hits >= 19
