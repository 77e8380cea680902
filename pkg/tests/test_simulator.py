import numpy as np
import pytest

from conftest import make_spec
from fogsched.catalog import DEFAULT_COUNTS, HOST_MODELS, build_hosts
from fogsched.model import Decision
from fogsched.simulator import JOULES_PER_KWH, SimState, interval_energy, lookahead, migration_time, step

IDLE_W = 4 * 75.2 + 2 * 71.0 + 2 * 71.0 + 2 * 68.7
MAX_W = 4 * 117.0 + 2 * 126.0 + 2 * 126.0 + 2 * 137.0


def test_no_tasks_idle_energy(empty_state):
    nxt, rec = step(empty_state, Decision(((3, 1),)))
    assert rec.energy_kwh == pytest.approx(IDLE_W * 300 / JOULES_PER_KWH, rel=1e-12)
    assert rec.art == 0.0
    assert rec.aec == pytest.approx(IDLE_W / MAX_W, abs=1e-9)
    assert nxt.t == 1 and not nxt.active and not nxt.waiting


def test_single_task_finishes_after_one_interval(empty_state):
    state = empty_state.admit([make_spec(0, length=1.0)])
    nxt, rec = step(state, Decision(((0, 4),)))
    assert rec.n_leaving == 1
    task = nxt.finished[0]
    assert task.response_time == pytest.approx(300.0)
    assert task.finished_at == 0
    assert rec.art == pytest.approx(1.0)


def test_unplaced_task_waits(empty_state):
    state = empty_state.admit([make_spec(0), make_spec(1, (3000, 100, 1, 1), length=3), make_spec(2, (3000, 100, 1, 1), length=3)])
    nxt, rec = step(state, Decision(((0, 4), (1, 0), (2, 0))))
    assert set(nxt.active) == {1} or set(nxt.active) == {2}
    assert 0 not in nxt.active and 0 not in nxt.waiting  # finished in the interval
    assert len(nxt.waiting) == 1
    assert rec.n_waiting == 1


def test_step_does_not_mutate_input(empty_state):
    state = empty_state.admit([make_spec(0, length=3.0)])
    step(state, Decision(((0, 4),)))
    assert state.t == 0 and 0 in state.new and state.new[0].host is None


def test_proportional_scaling_on_oversubscription(empty_state):
    state = empty_state.admit([make_spec(0, (1500, 100, 1, 1), length=5), make_spec(1, (1500, 100, 1, 1), length=5)])
    nxt, _ = step(state, Decision(((0, 4), (1, 5))))
    # trace growth beyond B8ms capacity after admission is scaled, never exceeding it
    for task in nxt.active.values():
        task.spec.trace.setflags(write=True)
        task.spec.trace[:] = [2000.0, 100, 1, 1]
    nxt, _ = step(nxt, Decision(((1, 8), (0, 8))))
    nxt, rec = step(nxt, Decision())
    assert nxt.host_util[8][0] <= build_hosts()[8].ips_capacity + 1e-9


def test_migration_time_examples():
    hosts = build_hosts()
    task = SimState(hosts).admit([make_spec(0, (100, 1000, 1, 1))]).new[0]
    same = HOST_MODELS["B4ms-edge"].build(5)
    assert migration_time(task, hosts[4], same) == pytest.approx(1.0)
    empty = SimState(hosts).admit([make_spec(1, (100, 0, 1, 1))]).new[1]
    cross = migration_time(empty, hosts[0], hosts[6])
    assert cross == pytest.approx(hosts[0].latency + hosts[6].latency)
    assert migration_time(task, hosts[3], hosts[3]) == 0.0


def test_migration_delays_progress(empty_state):
    state = empty_state.admit([make_spec(0, (1000, 3000, 1, 1), length=4)])
    s1, _ = step(state, Decision(((0, 4),)))
    stay, _ = step(s1, Decision())
    moved, rec = step(s1, Decision(((0, 6),)))
    assert rec.n_migrations == 1 and rec.avg_migration_time > 0
    assert moved.active[0].instructions_done < stay.active[0].instructions_done


def test_interval_energy_idle_sum():
    hosts = build_hosts()
    kwh, joules = interval_energy(hosts, np.zeros(len(hosts)), 300.0)
    assert joules == pytest.approx(IDLE_W * 300.0)
    assert kwh == pytest.approx(joules / JOULES_PER_KWH)


def test_lookahead_with_true_utils_matches_step(empty_state):
    state = empty_state.admit([make_spec(0, length=2.5), make_spec(1, (2000, 800, 2, 50), length=1.5)])
    decision = Decision(((0, 4), (1, 6)))
    _, actual = step(state, decision)
    pred = {0: [1000.0, 500.0, 1.0, 10.0], 1: [2000.0, 800.0, 2.0, 50.0]}
    first = lookahead(state, decision, pred)
    assert first == lookahead(state, decision, pred)
    for name in ("aec", "art", "objective", "energy_kwh", "n_active", "n_leaving"):
        assert getattr(first, name) == pytest.approx(getattr(actual, name))


def test_lookahead_zero_predictions_idle_aec(empty_state):
    state = empty_state.admit([make_spec(0, length=2)])
    rec = lookahead(state, Decision(((0, 4),)), {0: np.zeros(4)})
    assert rec.aec == pytest.approx(IDLE_W / MAX_W, abs=1e-9)


def test_lookahead_missing_prediction(empty_state):
    state = empty_state.admit([make_spec(0)])
    with pytest.raises(KeyError):
        lookahead(state, Decision(((0, 4),)), {})


def test_copy_preserves_rng_stream(empty_state):
    twin = empty_state.copy()
    assert empty_state.rng.random() == twin.rng.random()


def test_duplicate_admission_rejected(empty_state):
    state = empty_state.admit([make_spec(0)])
    with pytest.raises(ValueError):
        state.admit([make_spec(0)])


def test_default_host_mix():
    assert DEFAULT_COUNTS == {"B2s": 4, "B4ms-edge": 2, "B4ms-cloud": 2, "B8ms": 2}
    assert len(build_hosts(scale=5)) == 50
    with pytest.raises(ValueError):
        build_hosts({"nope": 1})
