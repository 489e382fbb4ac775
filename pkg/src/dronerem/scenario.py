"""Reviewable simulation scenarios: volume, lattice, fleet and RF world."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .core import VolumeSpec
from .mission import HoverSimConfig, TimingModel, assign, generate_lattice, simulate_mission
from .synthetic_rf import RfEnvironment, generate_environment

DEFAULT_SEED = 19
_DEFAULT_FILE = "default_scenario.json"


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    environment: RfEnvironment
    volume: VolumeSpec = VolumeSpec()
    lattice: tuple[int, int, int] = (6, 4, 3)
    margin: float = 0.3
    n_drones: int = 2
    timing: TimingModel = field(default_factory=TimingModel)
    hover: HoverSimConfig = field(default_factory=HoverSimConfig)

    def routes(self):
        return assign(generate_lattice(self.volume, *self.lattice, margin=self.margin),
                      self.n_drones)

    def simulate(self, seed: int | None = None, **kwargs):
        return simulate_mission(self.routes(), self.timing, self.environment, self.hover,
                                seed=self.seed if seed is None else seed, **kwargs)

    def to_dict(self):
        v = self.volume
        return {"name": self.name, "seed": self.seed,
                "volume": [v.x_len, v.y_len, v.z_len], "lattice": list(self.lattice),
                "margin": self.margin, "n_drones": self.n_drones,
                "timing": self.timing.__dict__, "hover": self.hover.__dict__,
                "environment": self.environment.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], int(d["seed"]), RfEnvironment.from_dict(d["environment"]),
                   VolumeSpec(*d["volume"]), tuple(d["lattice"]), float(d["margin"]),
                   int(d["n_drones"]), TimingModel(**d["timing"]),
                   HoverSimConfig(**d["hover"]))


def build_scenario(seed: int = DEFAULT_SEED, name: str | None = None, n_aps: int = 73,
                   **env_kwargs) -> Scenario:
    volume = VolumeSpec()
    env = generate_environment(seed, n_aps, volume, **env_kwargs)
    return Scenario(name or f"generated-{seed}", seed, env, volume)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))


def default_scenario() -> Scenario:
    """The bundled 73-AP, 72-waypoint, two-drone scenario."""
    text = resources.files("dronerem.data").joinpath(_DEFAULT_FILE).read_text("utf-8")
    return Scenario.from_dict(json.loads(text))


def scenario_json(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=1) + "\n"
