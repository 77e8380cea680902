import numpy as np
import pytest

from fogsched.workloads import (
    DEFAULT_CLASSES,
    TraceCatalog,
    WorkloadConfig,
    WorkloadGenerator,
    arrivals,
    load_traces,
    synthetic_catalog,
    write_traces,
)


@pytest.fixture(scope="module")
def catalog():
    return synthetic_catalog(pool_size=16, seed=0)


def test_poisson_rate_and_mix(catalog):
    cfg = WorkloadConfig(rate=1.2, mix=(("compute", 0.8), ("bandwidth", 0.1), ("mixed", 0.1)))
    gen = WorkloadGenerator(cfg, catalog, seed=7)
    counts, classes = [], []
    for t in range(100_000):
        tasks = gen(t)
        counts.append(len(tasks))
        classes.extend(task.app_class for task in tasks)
    assert abs(np.mean(counts) - 1.2) / 1.2 < 0.01
    freq = {name: classes.count(name) / len(classes) for name in ("compute", "bandwidth", "mixed")}
    assert freq["compute"] == pytest.approx(0.8, abs=0.02)
    assert freq["bandwidth"] == pytest.approx(0.1, abs=0.02)
    assert freq["mixed"] == pytest.approx(0.1, abs=0.02)
    # ids are unique and consecutive
    assert gen.next_id == sum(counts)


def test_config_validation():
    with pytest.raises(ValueError):
        WorkloadConfig(rate=0.0)
    with pytest.raises(ValueError):
        WorkloadConfig(mix=(("compute", 0.5), ("mixed", 0.2)))


def test_arrivals_produce_valid_specs(catalog):
    rng = np.random.default_rng(0)
    tasks = [t for k in range(50) for t in arrivals(WorkloadConfig(rate=3.0), catalog, k, rng, 1000 * k)]
    assert tasks
    for task in tasks:
        assert task.total_instructions == pytest.approx(task.trace[:, 0].sum() * 300.0)
        assert np.all(task.peak >= task.trace.max(axis=0))
        assert task.sla_deadline == catalog.deadlines[task.app_class]


def test_unknown_class_in_mix(catalog):
    with pytest.raises(KeyError):
        arrivals(WorkloadConfig(rate=50.0, mix=(("video", 1.0),)), catalog, 0, np.random.default_rng(0))


def test_synthetic_series_respect_caps():
    rng = np.random.default_rng(3)
    for cls in DEFAULT_CLASSES:
        s = cls.sample_series(rng)
        assert cls.length[0] <= len(s) <= cls.length[1]
        caps = [cls.ips[2], cls.ram[2], cls.disk_bw[2], cls.net_bw[2]]
        assert np.all(s <= caps) and np.all(s > 0)


def test_catalog_validation_and_deadlines():
    with pytest.raises(ValueError):
        TraceCatalog({"a": []})
    with pytest.raises(ValueError):
        TraceCatalog({"a": [np.array([[-1.0, 0, 0, 0]])]})
    cat = TraceCatalog({"a": [np.ones((10, 4))]}, delta=100.0)
    assert cat.deadlines["a"] == pytest.approx(1.2 * 10 * 100.0)
    with pytest.raises(KeyError):
        cat.with_deadlines({"b": 1.0})
    assert cat.with_deadlines({"a": 5.0}).deadlines == {"a": 5.0}


def test_trace_roundtrip(tmp_path, catalog):
    path = tmp_path / "traces.csv"
    write_traces(catalog, path)
    back = load_traces(path)
    assert back.classes == catalog.classes
    for name in catalog.classes:
        assert len(back.pools[name]) == len(catalog.pools[name])
        for a, b in zip(back.pools[name], catalog.pools[name]):
            assert np.array_equal(a, b)


def test_trace_columns_map_field_for_field(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("series_id,interval,ips,ram_mb,disk_bw,net_bw\nvm1,1,20,30,40,50\nvm1,0,1,2,3,4\n")
    cat = load_traces(path)
    assert cat.classes == ["default"]
    assert np.array_equal(cat.pools["default"][0], [[1, 2, 3, 4], [20, 30, 40, 50]])


@pytest.mark.parametrize(
    "content,message",
    [
        ("", "empty"),
        ("series_id,interval,ips\n1,0,2\n", "missing columns"),
        ("series_id,interval,ips,ram_mb,disk_bw,net_bw\n", "no trace rows"),
        ("series_id,interval,ips,ram_mb,disk_bw,net_bw\n1,0,x,1,1,1\n", ":2:"),
        ("series_id,interval,ips,ram_mb,disk_bw,net_bw\n1,0,-1,1,1,1\n", "negative"),
    ],
)
def test_bad_trace_files(tmp_path, content, message):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(ValueError, match=message):
        load_traces(path)
