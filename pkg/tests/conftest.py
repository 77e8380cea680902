import numpy as np
import pytest

from fogsched.catalog import build_hosts
from fogsched.model import TaskSpec
from fogsched.simulator import SimState

_ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one acceptance line; it is echoed and shown in the terminal summary."""

    def _report(number: int, passed: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return _report


def make_spec(task_id, util=(1000.0, 500.0, 1.0, 10.0), length=1.0, created_at=0, app_class="compute",
              deadline=600.0, delta=300.0, peak=None):
    """Task with a constant trace needing ``length`` intervals at full grant."""
    trace = np.array([util], dtype=float)
    return TaskSpec(task_id, created_at, app_class, util[0] * delta * length, trace, deadline, peak)


@pytest.fixture
def hosts():
    return build_hosts()


@pytest.fixture
def empty_state(hosts):
    return SimState(hosts, seed=0)


def central_difference(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


THREE_HOSTS = {"B2s": 1, "B4ms-edge": 1, "B8ms": 1}


def small_state(n_tasks=2, seed=0, hosts=None):
    """Fresh three-host state holding ``n_tasks`` newly arrived tasks."""
    rng = np.random.default_rng(seed)
    specs = [
        make_spec(i, (rng.uniform(100, 900), rng.uniform(100, 900), 1.0, 5.0), length=3, created_at=0)
        for i in range(n_tasks)
    ]
    return SimState(hosts or build_hosts(THREE_HOSTS), seed=seed).admit(specs)


@pytest.fixture(scope="session")
def host0_net():
    """Surrogate trained on a synthetic dataset where placing tasks on host 0 is always better."""
    from fogsched.gobi import InputLayout, encode, fit_scaler
    from fogsched.harness.config import TrainingSection
    from fogsched.harness.training import fit_network
    from fogsched.nn import Network

    rng = np.random.default_rng(0)
    X, y = [], []
    for k in range(1500):
        state = small_state(2, seed=k)
        hosts = rng.integers(0, 3, 2)
        X.append(encode(state, {0: int(hosts[0]), 1: int(hosts[1])}).vector())
        y.append(0.1 + 0.4 * float(np.sum(hosts != 0)))
    X, y = np.array(X), np.array(y)
    layout = InputLayout(3)
    net = Network.approximator(layout.dim, seed=0)
    net.scaler = fit_scaler(X, layout)
    fit_network(net, net.scaler.transform(X), y, TrainingSection(min_epochs=40, max_epochs=40), seed=0)
    return net
