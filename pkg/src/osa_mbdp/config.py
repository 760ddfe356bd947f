"""YAML run configuration.

Example (every key shown; ``qos``, ``sim``, ``compare`` and ``output`` may be omitted)::

    scenario:
      num_sus: 2
      channels:
        - {p_busy_to_idle: 0.15, p_idle_to_busy: 0.95}
        - {p_busy_to_idle: 0.95, p_idle_to_busy: 0.15}
      initial_belief:
        mode: point-mass          # or: steady-state
        state: [1, 0]             # channel states in the first slot, 1 = idle
    solver: {horizon: 5, max_trees: 3, trials: 30, seed: 0, belief_jitter: 0.0}
    qos: {weights: [1.5, 1.0], zeta: 0.25}
    sim: {trials: 100000, seed: 0}
    compare: {horizons: [4, 5, 6, 7, 8, 9, 10]}
    output: {library: library.json, results: results.csv}

Probabilities are plain decimal literals.  Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .radio import ChannelChain, RadioScenario
from .solver import SolverConfig


@dataclass(frozen=True)
class QosConfig:
    weights: tuple[float, ...] | None = None  # None: equal weights
    zeta: float = 0.25


@dataclass(frozen=True)
class SimSettings:
    trials: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    scenario: RadioScenario
    solver: SolverConfig
    qos: QosConfig = field(default_factory=QosConfig)
    sim: SimSettings = field(default_factory=SimSettings)
    compare_horizons: tuple[int, ...] = (4, 5, 6, 7, 8, 9, 10)
    library_path: str = "library.json"
    results_path: str = "results.csv"

    def qos_weights(self) -> tuple[float, ...]:
        return self.qos.weights or (1.0,) * self.scenario.num_sus


def _section(d: dict, name: str, allowed: set[str], required: bool = False) -> dict:
    sec = d.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section '{name}'")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    extra = set(sec) - allowed
    if extra:
        raise ConfigError(f"unknown keys in '{name}': {sorted(extra)}")
    return sec


def _prob(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{what} must be a number, got {x!r}")
    if not 0.0 <= x <= 1.0:
        raise ConfigError(f"{what}={x} is not a probability")
    return float(x)


def _count(x, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 1:
        raise ConfigError(f"{what} must be an integer >= 1, got {x!r}")
    return x


def parse_config(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a mapping")
    extra = set(d) - {"scenario", "solver", "qos", "sim", "compare", "output"}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")

    sc = _section(d, "scenario", {"num_sus", "channels", "initial_belief"}, required=True)
    num_sus = _count(sc.get("num_sus"), "scenario.num_sus")
    raw_channels = sc.get("channels")
    if not isinstance(raw_channels, list) or not raw_channels:
        raise ConfigError("scenario.channels must be a non-empty list")
    channels = []
    for k, ch in enumerate(raw_channels):
        if not isinstance(ch, dict) or set(ch) != {"p_busy_to_idle", "p_idle_to_busy"}:
            raise ConfigError(f"scenario.channels[{k}] needs exactly p_busy_to_idle and p_idle_to_busy")
        channels.append(ChannelChain(
            _prob(ch["p_busy_to_idle"], f"channels[{k}].p_busy_to_idle"),
            _prob(ch["p_idle_to_busy"], f"channels[{k}].p_idle_to_busy"),
        ))
    ib = sc.get("initial_belief") or {"mode": "steady-state"}
    mode = ib.get("mode")
    try:
        if mode == "point-mass":
            state = ib.get("state")
            if not isinstance(state, list) or len(state) != len(channels) or any(s not in (0, 1) for s in state):
                raise ConfigError("initial_belief.state must list one 0/1 entry per channel")
            scenario = RadioScenario.from_state(channels, num_sus, state)
        elif mode == "steady-state":
            scenario = RadioScenario.at_steady_state(channels, num_sus)
        else:
            raise ConfigError(f"initial_belief.mode must be 'point-mass' or 'steady-state', got {mode!r}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sv = _section(d, "solver", {"horizon", "max_trees", "trials", "seed", "belief_jitter", "max_nodes"}, required=True)
    try:
        solver = SolverConfig(
            horizon=_count(sv.get("horizon"), "solver.horizon"),
            max_trees=_count(sv.get("max_trees", 3), "solver.max_trees"),
            trials=_count(sv.get("trials", 30), "solver.trials"),
            seed=int(sv.get("seed", 0)),
            belief_jitter=float(sv.get("belief_jitter", 0.0)),
            max_nodes=_count(sv.get("max_nodes", 1_000_000), "solver.max_nodes"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    q = _section(d, "qos", {"weights", "zeta"})
    weights = q.get("weights")
    if weights is not None:
        if not isinstance(weights, list) or len(weights) != num_sus or any(
            isinstance(w, bool) or not isinstance(w, (int, float)) or w <= 0 for w in weights
        ):
            raise ConfigError(f"qos.weights must list {num_sus} positive numbers")
        weights = tuple(float(w) for w in weights)
    zeta = q.get("zeta", 0.25)
    if isinstance(zeta, bool) or not isinstance(zeta, (int, float)) or zeta < 0:
        raise ConfigError(f"qos.zeta must be a nonnegative number, got {zeta!r}")
    qos = QosConfig(weights, float(zeta))

    s = _section(d, "sim", {"trials", "seed"})
    sim = SimSettings(_count(s.get("trials", 100_000), "sim.trials"), int(s.get("seed", 0)))

    c = _section(d, "compare", {"horizons"})
    horizons = tuple(_count(h, "compare.horizons[]") for h in c.get("horizons", [4, 5, 6, 7, 8, 9, 10]))

    o = _section(d, "output", {"library", "results"})
    return RunConfig(
        scenario=scenario,
        solver=solver,
        qos=qos,
        sim=sim,
        compare_horizons=horizons,
        library_path=str(o.get("library", "library.json")),
        results_path=str(o.get("results", "results.csv")),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)
