"""Policy-library files and CSV result tables.

A policy library is JSON::

    {
      "format_version": 1,
      "scenario_hash": "<sha256 of the canonical scenario parameters>",
      "selected_identity": 7,            # or null
      "entries": [
        {
          "identity": 0,
          "horizon": 5,
          "qos_weights": [1.5, 1.0],
          "zeta": 0.25,
          "trees": [{"root": 4, "nodes": [[action, [child ids]], ...]}, ...],
          "agent_values": [3.0, 2.0],
          "joint_value": 5.0
        }
      ]
    }

Nodes are listed children first; a child id always refers to an earlier node of
the same tree, so trees are rebuilt in one pass with no recursion.  Structurally
identical subtrees are stored once.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, StructureError
from .model import JointPolicy, PolicyTree
from .radio import RadioScenario

FORMAT_VERSION = 1
CSV_COLUMNS = ("strategy", "horizon", "su_index", "mean", "stderr", "network_mean", "normalized", "collisions")


def scenario_hash(sc: RadioScenario) -> str:
    payload = {
        "channels": [[ch.p_busy_to_idle, ch.p_idle_to_busy] for ch in sc.channels],
        "num_sus": sc.num_sus,
        "initial_belief": [float(p) for p in sc.initial_belief.probs],
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def tree_to_nodes(tree: PolicyTree) -> dict:
    nodes = tree.distinct_nodes()
    pos = {n: k for k, n in enumerate(nodes)}
    return {"root": pos[tree], "nodes": [[n.action, [pos[c] for c in n.children]] for n in nodes]}


def nodes_to_tree(data: dict) -> PolicyTree:
    built: list[PolicyTree] = []
    for k, (action, kids) in enumerate(data["nodes"]):
        if any(not 0 <= c < k for c in kids):
            raise StructureError(f"node {k} refers to a child that is not an earlier node: {kids}")
        built.append(PolicyTree(int(action), [built[c] for c in kids]))
    root = data["root"]
    if not 0 <= root < len(built):
        raise StructureError(f"root id {root} out of range")
    return built[root]


@dataclass(frozen=True, eq=True)
class LibraryEntry:
    identity: int
    horizon: int
    qos_weights: tuple[float, ...]
    zeta: float
    policy: JointPolicy
    agent_values: tuple[float, ...]
    joint_value: float

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "horizon": self.horizon,
            "qos_weights": list(self.qos_weights),
            "zeta": self.zeta,
            "trees": [tree_to_nodes(t) for t in self.policy.trees],
            "agent_values": list(self.agent_values),
            "joint_value": self.joint_value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LibraryEntry":
        policy = JointPolicy(tuple(nodes_to_tree(t) for t in d["trees"]))
        if policy.depth != d["horizon"]:
            raise StructureError(f"entry {d['identity']}: trees have depth {policy.depth}, horizon says {d['horizon']}")
        return cls(
            identity=int(d["identity"]),
            horizon=int(d["horizon"]),
            qos_weights=tuple(float(w) for w in d["qos_weights"]),
            zeta=float(d["zeta"]),
            policy=policy,
            agent_values=tuple(float(v) for v in d["agent_values"]),
            joint_value=float(d["joint_value"]),
        )


@dataclass(eq=True)
class PolicyLibrary:
    scenario_hash: str
    entries: list[LibraryEntry] = field(default_factory=list)
    selected_identity: int | None = None
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        ids = [e.identity for e in self.entries]
        if len(set(ids)) != len(ids):
            raise StructureError("duplicate identities in policy library")
        if self.selected_identity is not None and self.selected_identity not in ids:
            raise StructureError(f"selected identity {self.selected_identity} not in library")

    def get(self, identity: int) -> LibraryEntry:
        for e in self.entries:
            if e.identity == identity:
                return e
        available = ", ".join(str(e.identity) for e in self.entries)
        raise KeyError(f"no policy with identity {identity}; available: {available}")

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "scenario_hash": self.scenario_hash,
            "selected_identity": self.selected_identity,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyLibrary":
        if d.get("format_version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported library format_version {d.get('format_version')!r}")
        return cls(
            scenario_hash=d["scenario_hash"],
            entries=[LibraryEntry.from_dict(e) for e in d["entries"]],
            selected_identity=d.get("selected_identity"),
            format_version=d["format_version"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "PolicyLibrary":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "PolicyLibrary":
        return cls.loads(Path(path).read_text())

    def check_scenario(self, sc: RadioScenario) -> None:
        if scenario_hash(sc) != self.scenario_hash:
            raise ConfigError("policy library was built for a different scenario (scenario_hash mismatch)")


def stats_rows(strategy: str, horizon: int, stats) -> list[dict]:
    return [
        {
            "strategy": strategy,
            "horizon": horizon,
            "su_index": i,
            "mean": repr(float(stats.per_su_mean[i])),
            "stderr": repr(float(stats.per_su_stderr[i])),
            "network_mean": repr(stats.network_mean),
            "normalized": repr(stats.normalized_network),
            "collisions": repr(stats.collision_count_mean),
        }
        for i in range(len(stats.per_su_mean))
    ]


def write_results_csv(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_results_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV columns {reader.fieldnames}")
        return list(reader)
