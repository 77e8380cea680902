"""Azure host models used for the default fog environment."""

from __future__ import annotations

from dataclasses import dataclass

from fogsched.model import Host

POWER_B2S = (75.2, 78.2, 84.1, 89.6, 94.9, 100.0, 105.0, 109.0, 112.0, 115.0, 117.0)
POWER_B4MS = (71.0, 77.9, 83.4, 89.2, 95.6, 102.0, 108.0, 114.0, 119.0, 123.0, 126.0)
POWER_B8MS = (68.7, 78.3, 84.0, 88.4, 92.5, 97.3, 104.0, 111.0, 121.0, 131.0, 137.0)


@dataclass(frozen=True)
class HostModel:
    name: str
    ips: float
    ram: float
    ram_bw: float
    latency: float
    net_bw: float
    disk_bw: float
    cost_rate: float
    layer: str
    power_curve: tuple

    def build(self, host_id: int) -> Host:
        return Host(
            id=host_id,
            name=self.name,
            ips_capacity=self.ips,
            ram_capacity=self.ram,
            ram_bw=self.ram_bw,
            disk_bw=self.disk_bw,
            net_bw=self.net_bw,
            latency=self.latency,
            power_curve=self.power_curve,
            cost_rate=self.cost_rate,
            layer=self.layer,
        )


HOST_MODELS = {
    "B2s": HostModel("B2s", 4029, 4295, 372, 0.003, 1000, 13.4, 0.0472, "edge", POWER_B2S),
    "B4ms-edge": HostModel("B4ms-edge", 8102, 17180, 360, 0.003, 1000, 10.3, 0.1890, "edge", POWER_B4MS),
    "B4ms-cloud": HostModel("B4ms-cloud", 8102, 17180, 360, 0.076, 1000, 10.3, 0.166, "cloud", POWER_B4MS),
    "B8ms": HostModel("B8ms", 2000, 34360, 376, 0.076, 2500, 11.64, 0.333, "cloud", POWER_B8MS),
}

# 4/2/2/2 mix of the 10-VM testbed; the 50-host setup scales every count by 5
DEFAULT_COUNTS = {"B2s": 4, "B4ms-edge": 2, "B4ms-cloud": 2, "B8ms": 2}


def build_hosts(counts: dict | None = None, scale: int = 1) -> list:
    counts = DEFAULT_COUNTS if counts is None else counts
    hosts = []
    for name, count in counts.items():
        if name not in HOST_MODELS:
            raise ValueError(f"unknown host model {name!r}; known: {sorted(HOST_MODELS)}")
        for _ in range(count * scale):
            hosts.append(HOST_MODELS[name].build(len(hosts)))
    if not hosts:
        raise ValueError("host catalog is empty")
    return hosts
