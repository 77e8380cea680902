import itertools

import numpy as np
import pytest

from conftest import make_spec, small_state
from fogsched.catalog import build_hosts
from fogsched.gobi import HOST_FEATURES, GobiScheduler, InputLayout, decode, encode, fine_tune, fit_scaler
from fogsched.model import Decision
from fogsched.nn import AdamW, DenseLayer, Network
from fogsched.simulator import SimState, step


def test_layout_dimensions():
    lay = InputLayout(10)
    assert lay.max_tasks == 100
    assert lay.dim == 100 * 4 + 10 * HOST_FEATURES + 100 * 10 == 1490
    star = InputLayout(10, star=True)
    assert star.dim == 1491 and star.objective_index == 490 and star.decision_start == 491
    assert list(lay.decision_indices(2)) == list(range(490, 510))


def test_encode_empty_state(empty_state):
    enc = encode(empty_state)
    assert not enc.tasks.any() and not enc.decision.any()
    assert enc.task_ids == []
    # host block still carries capacities and latencies
    assert enc.hosts[:, 4:].any()


def test_encode_one_hot_row(empty_state):
    state = empty_state.admit([make_spec(0, length=3)])
    nxt, _ = step(state, Decision(((0, 3),)))
    enc = encode(nxt)
    assert enc.decision[0, 3] == 1.0 and enc.decision.sum() == 1.0
    assert np.array_equal(enc.tasks[0], [1000.0, 500.0, 1.0, 10.0])


def test_encode_orders_by_creation(empty_state):
    state = empty_state.admit([make_spec(7, created_at=5), make_spec(8, created_at=2)])
    enc = encode(state, {7: 1, 8: 4})
    assert enc.task_ids == [8, 7]
    assert enc.decision[0, 4] == 1.0 and enc.decision[1, 1] == 1.0


def test_encode_overflow_defers(caplog):
    hosts = build_hosts({"B2s": 1, "B8ms": 1})
    state = SimState(hosts).admit([make_spec(i) for i in range(6)])
    enc = encode(state)
    assert len(enc.task_ids) == 4
    assert "exceed" in caplog.text


def test_fit_scaler_shares_bounds_across_rows():
    lay = InputLayout(2)
    X = np.zeros((2, lay.dim))
    X[0, 0] = 10.0  # task row 0, ips
    X[1, 4] = 30.0  # task row 1, ips
    sc = fit_scaler(X, lay)
    assert sc.hi[0] == sc.hi[4] == 30.0
    assert sc.lo[0] == 0.0
    dec = slice(lay.decision_start, lay.dim)
    assert np.all(sc.lo[dec] == 0.0) and np.all(sc.hi[dec] == 1.0)


def test_decode_argmax_and_tiebreak():
    block = np.array([[0.2, 0.9, 0.1], [1.0, 1.0, 0.0]])
    assert decode(block, [4, 5]).assignments == ((4, 1), (5, 0))
    grad = np.array([[0, 0, 0], [0.5, -0.5, 0.0]])
    assert decode(block, [4, 5], grad).assignments == ((4, 1), (5, 1))


def test_fine_tune_examples():
    net = Network([DenseLayer(np.zeros((1, 1)), np.zeros(1), "sigmoid")])
    opt = AdamW(net.params, lr=1e-5)
    x = np.array([0.4])
    assert fine_tune(net, opt, x, 0.3, t=1) == 0.0
    assert net.layers[0].b[0] == 0.0
    assert fine_tune(net, opt, x, 0.3, t=2) == pytest.approx(0.04)
    perfect = Network([DenseLayer(np.zeros((1, 1)), np.zeros(1), "sigmoid")])
    assert fine_tune(perfect, AdamW(perfect.params), x, 0.5, t=5) == 0.0


def test_first_decision_is_valid():
    lay = InputLayout(3)
    net = Network.approximator(lay.dim, seed=1)
    state = small_state(3, seed=1)
    decision = GobiScheduler(net, seed=0).schedule(state)
    assert sorted(decision.as_dict()) == [0, 1, 2]
    assert all(0 <= h < 3 for _, h in decision)


def test_empty_candidates_give_empty_decision(empty_state):
    net = Network.approximator(InputLayout(10).dim, seed=0)
    assert len(GobiScheduler(net).schedule(empty_state)) == 0


def test_learns_host0_preference(host0_net):
    for seed in range(5):
        state = small_state(2, seed=900 + seed)
        values = {
            hs: host0_net(encode(state, dict(enumerate(hs))).vector(host0_net.scaler))
            for hs in itertools.product(range(3), repeat=2)
        }
        assert min(values, key=values.get) == (0, 0)
        decision = GobiScheduler(host0_net, seed=seed, freeze=True).schedule(state)
        assert decision.as_dict() == {0: 0, 1: 0}


def test_online_fine_tuning_runs_after_observe(host0_net):
    net = host0_net.copy()
    sched = GobiScheduler(net, seed=0)
    state = small_state(2, seed=3)
    for t in range(3):
        state.t = t
        decision = sched.schedule(state)
        state, rec = step(state, decision)
        sched.observe(rec)
    assert sched.losses  # at least one update happened once t >= 2
    frozen = GobiScheduler(host0_net.copy(), seed=0, freeze=True)
    frozen.schedule(small_state(2, seed=3))
    assert frozen.losses == []


def test_warm_start_uses_previous_then_current_host():
    state = small_state(2, seed=0)
    sched = GobiScheduler(Network.approximator(InputLayout(3).dim), seed=0)
    sched.prev = Decision(((0, 2),))
    state.new[1].host = 1
    assert sched.warm_start(state, state.candidates()) == {0: 2, 1: 1}
