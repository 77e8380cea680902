import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_spec
from fogsched.catalog import HOST_MODELS, build_hosts
from fogsched.model import (
    ContractError,
    Decision,
    QoSRecord,
    TaskSpec,
    UtilizationSample,
    advance_sets,
    feasible_subset,
    objective,
)
from fogsched.simulator import SimState


def test_utilization_sample_rejects_negative():
    with pytest.raises(ValueError):
        UtilizationSample(-1, 0, 0, 0)
    s = UtilizationSample.from_array([1, 2, 3, 4])
    assert np.array_equal(s.as_array(), [1, 2, 3, 4])


def test_b2s_power_interpolation():
    host = HOST_MODELS["B2s"].build(0)
    assert host.power(0.05) == pytest.approx(76.7, abs=1e-12)
    assert host.power(0.0) == 75.2
    assert host.power(1.0) == host.max_power == 117.0


def test_host_validation():
    model = HOST_MODELS["B2s"]
    with pytest.raises(ValueError):
        type(model)(**{**model.__dict__, "ips": 0}).build(0)
    with pytest.raises(ValueError):
        type(model)(**{**model.__dict__, "power_curve": (1.0,) * 10}).build(0)
    with pytest.raises(ValueError):
        type(model)(**{**model.__dict__, "power_curve": (2.0,) + (1.0,) * 10}).build(0)


def test_task_spec_validation():
    with pytest.raises(ValueError):
        TaskSpec(0, 0, "c", 10.0, np.zeros((0, 4)), 1.0)
    with pytest.raises(ValueError):
        TaskSpec(0, 0, "c", 10.0, np.zeros((2, 4)), 1.0)
    with pytest.raises(ValueError):
        TaskSpec(0, 0, "c", 0.0, np.ones((2, 4)), 1.0)
    spec = make_spec(0, peak=np.array([5.0, 5.0, 5.0, 5.0]))
    # the peak can never undercut the trace itself
    assert np.array_equal(spec.peak, [1000.0, 500.0, 5.0, 10.0])
    assert spec.sample(7).ips == 1000.0


def test_decision_rejects_duplicates_and_bad_hosts():
    with pytest.raises(ValueError):
        Decision(((1, 0), (1, 2)))
    with pytest.raises(ValueError):
        Decision(((1, 5),)).validate(3)
    assert Decision(((1, 2),)).as_dict() == {1: 2}


def test_qos_record_bounds():
    with pytest.raises(ValueError):
        QoSRecord(aec=1.5)
    with pytest.raises(ValueError):
        QoSRecord(fairness=-0.1)


@pytest.mark.parametrize("aec,art,expected", [(0, 0, 0), (1, 1, 1), (0.4, 0.6, 0.5)])
def test_objective_examples(aec, art, expected):
    assert objective(aec, art, 0.5, 0.5) == pytest.approx(expected)


def test_objective_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        objective(0.1, 0.1, 0.5, 0.6)


def _state_with(specs, hosts=None, waits=None):
    state = SimState(hosts or build_hosts(), seed=0).admit(specs)
    for tid, w in (waits or {}).items():
        state.new[tid].wait_intervals = w
    return state


def test_feasible_subset_empty():
    assert len(feasible_subset(Decision(), _state_with([]))) == 0


def test_feasible_subset_keeps_longer_waiting_task():
    specs = [make_spec(0, (3000, 100, 1, 1)), make_spec(1, (3000, 100, 1, 1))]
    for waits, kept in (({0: 2, 1: 0}, 0), ({0: 0, 1: 5}, 1)):
        state = _state_with(specs, waits=waits)
        out = feasible_subset(Decision(((0, 0), (1, 0))), state)
        assert out.assignments == ((kept, 0),)


def test_feasible_subset_skips_noops_and_unknown():
    state = _state_with([make_spec(0)])
    state.new[0].host = 2
    out = feasible_subset(Decision(((0, 2), (99, 1))), state)
    assert len(out) == 0


@st.composite
def placements(draw):
    n = draw(st.integers(0, 12))
    utils = [
        (draw(st.floats(10, 5000)), draw(st.floats(10, 20000)), draw(st.floats(0, 8)), draw(st.floats(0, 600)))
        for _ in range(n)
    ]
    hosts = [draw(st.integers(0, 9)) for _ in range(n)]
    return utils, hosts


@settings(max_examples=60, deadline=None)
@given(placements())
def test_feasible_subset_respects_capacity(case):
    utils, targets = case
    state = _state_with([make_spec(i, u) for i, u in enumerate(utils)])
    out = feasible_subset(Decision(tuple(enumerate(targets))), state)
    loads = np.zeros((10, 4))
    for tid, h in out:
        loads[h] += state.task(tid).spec.peak
    caps = state.capacities
    assert (loads <= caps + 1e-6).all()


@settings(max_examples=60, deadline=None)
@given(placements(), st.data())
def test_feasible_subset_monotone(case, data):
    utils, targets = case
    if not utils:
        return
    state = _state_with([make_spec(i, u) for i, u in enumerate(utils)])
    full = Decision(tuple(enumerate(targets)))
    drop = data.draw(st.integers(0, len(utils) - 1))
    kept_full = set(feasible_subset(full, state).as_dict())
    reduced = Decision(tuple(p for p in full if p[0] != drop))
    kept_reduced = set(feasible_subset(reduced, state).as_dict())
    assert kept_full - {drop} <= kept_reduced


def test_advance_sets_examples():
    assert advance_sets((), (), (), (), ()) == (frozenset(), frozenset())
    assert advance_sets((), (), {1}, {1}, ()) == (frozenset({1}), frozenset())
    assert advance_sets((), (), {1, 2}, {1}, ()) == (frozenset({1}), frozenset({2}))
    active, waiting = advance_sets({5, 6}, {3}, {7}, {3}, {5})
    assert active == {3, 6} and waiting == {7}


def test_advance_sets_contracts():
    with pytest.raises(ContractError):
        advance_sets({1}, {1}, (), (), ())
    with pytest.raises(ContractError):
        advance_sets({1}, (), (), {1}, ())
    with pytest.raises(ContractError):
        advance_sets((), (), (), (), {4})
