"""Area-energy-delay comparison between the nanomagnet and a CMOS reservoir.

Only ratios are meaningful. The default absolute figures are calibrated so
that the CMOS/NMRC ratios land near (3e5, 10, 3); they are not measurements.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PlatformMetrics:
    area_per_node: float  # m^2
    energy_per_update: float  # J per input symbol, whole system
    min_period: float  # s
    node_count: int

    def __post_init__(self):
        for name in ("area_per_node", "energy_per_update", "min_period", "node_count"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def area_total(self):
        return self.area_per_node * self.node_count


def aedp(metrics):
    """Area (total) x energy per update x minimum period, in J m^2 s."""
    return metrics.area_total * metrics.energy_per_update * metrics.min_period


@dataclass(frozen=True)
class Ratios:
    area: float
    energy: float
    delay: float
    aedp: float

    def as_dict(self):
        return {"area": self.area, "energy": self.energy, "delay": self.delay, "aedp": self.aedp}


def ratio_report(nmrc, cmos):
    """CMOS / NMRC ratio in each dimension; ``aedp`` is their exact product."""
    area = cmos.area_total / nmrc.area_total
    energy = cmos.energy_per_update / nmrc.energy_per_update
    delay = cmos.min_period / nmrc.min_period
    return Ratios(area, energy, delay, area * energy * delay)


# 60 nm pitch cell; 35 nodes as in the Boolean reservoir
NMRC_DEFAULT = PlatformMetrics(area_per_node=(60e-9) ** 2, energy_per_update=2.0e-12,
                               min_period=1.5e-9, node_count=35)
# 25-neuron CMOS reservoir, ~39 um x 39 um per neuron with its synapses
CMOS_DEFAULT = PlatformMetrics(area_per_node=1.5e-9, energy_per_update=2.0e-11,
                               min_period=4.5e-9, node_count=25)


def report_lines(ratios):
    return [f"{k}_ratio: {v:.6g}" for k, v in ratios.as_dict().items()]


def write_csv(ratios, path, nmrc=NMRC_DEFAULT, cmos=CMOS_DEFAULT):
    rows = [
        ("quantity", "nmrc", "cmos", "ratio"),
        ("area_total_m2", nmrc.area_total, cmos.area_total, ratios.area),
        ("energy_per_update_J", nmrc.energy_per_update, cmos.energy_per_update, ratios.energy),
        ("min_period_s", nmrc.min_period, cmos.min_period, ratios.delay),
        ("aedp_J_m2_s", aedp(nmrc), aedp(cmos), ratios.aedp),
    ]
    with open(path, "w") as fh:
        for r in rows:
            fh.write(",".join(x if isinstance(x, str) else repr(float(x)) for x in r) + "\n")
