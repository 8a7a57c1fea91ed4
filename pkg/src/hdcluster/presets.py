"""Named graphs and experiment presets.

A preset is plain JSON::

    {"name": "qudit5", "spec": {"d": 5, "N": 2}, "graph": {...} | "builtin:qudit5",
     "noise": {"p": 0.1, "mean_counts": 10000, "seed": 0},
     "sweep": {"steps": 16, "inputs": ["Z"]}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .encoding import EncodingSpec
from .errors import ValidationError
from .graph import GraphState, make_graph


def comb8() -> GraphState:
    """Eight-qubit comb: chain 1-2-3-4 on photon A, teeth 8,7,6,5 on photon B."""
    return make_graph(
        2,
        [(1, 2), (2, 3), (3, 4), (1, 8), (2, 7), (3, 6), (4, 5)],
        photon_a=[1, 2, 3, 4],
        photon_b=[5, 6, 7, 8],
        frame={1, 4, 6, 7},
    )


def chain4_qudit(d: int = 5) -> GraphState:
    """Four-qudit linear chain 1-2-3-4 with qudits 2, 3 on photon A."""
    return make_graph(d, [(1, 2), (2, 3), (3, 4)], photon_a=[2, 3], photon_b=[1, 4], frame={1, 4})


BUILTIN_GRAPHS = {"cluster8": comb8, "qudit5": lambda: chain4_qudit(5)}


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    spec: EncodingSpec
    graph: GraphState
    noise_p: float = 0.0
    mean_counts: float = 10_000
    seed: int = 0
    sweep_steps: int = 16
    sweep_inputs: tuple = ("Z",)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.noise_p <= 1:
            raise ValidationError(f"noise fraction {self.noise_p} outside [0, 1]")
        if self.sweep_steps < 1 or not self.sweep_inputs:
            raise ValidationError("sweep grid must be non-empty")
        if self.spec.d != self.graph.d or self.spec.N * 2 != self.graph.n_vertices:
            raise ValidationError("encoding spec does not match the graph")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "name": self.name,
            "spec": self.spec.to_dict(),
            "graph": self.graph.to_dict(),
            "noise": {"p": self.noise_p, "mean_counts": self.mean_counts, "seed": self.seed},
            "sweep": {"steps": self.sweep_steps, "inputs": list(self.sweep_inputs)},
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_dict(cls, obj: dict, base_dir: Path | None = None) -> "ExperimentPreset":
        graph = obj.get("graph")
        if isinstance(graph, str):
            if graph.startswith("builtin:"):
                key = graph.split(":", 1)[1]
                if key not in BUILTIN_GRAPHS:
                    raise ValidationError(f"unknown builtin graph {key!r}")
                graph = BUILTIN_GRAPHS[key]()
            else:
                path = Path(graph) if base_dir is None else base_dir / graph
                if not path.exists():
                    raise ValidationError(f"graph file {path} not found")
                graph = GraphState.from_json(path.read_text())
        elif isinstance(graph, dict):
            graph = GraphState.from_dict(graph)
        else:
            raise ValidationError("preset needs a graph (object, file name or builtin:<name>)")
        spec = EncodingSpec.from_dict(obj["spec"]) if "spec" in obj else EncodingSpec(graph.d, graph.n_vertices // 2)
        noise = obj.get("noise", {})
        sweep = obj.get("sweep", {})
        return cls(
            name=obj.get("name", "custom"),
            spec=spec,
            graph=graph,
            noise_p=float(noise.get("p", 0.0)),
            mean_counts=float(noise.get("mean_counts", 10_000)),
            seed=int(noise.get("seed", 0)),
            sweep_steps=int(sweep.get("steps", 16)),
            sweep_inputs=tuple(sweep.get("inputs", ("Z",))),
            extra=obj.get("extra", {}),
        )


PRESETS = {
    "cluster8": {"name": "cluster8", "spec": {"d": 2, "N": 4}, "graph": "builtin:cluster8"},
    "qudit5": {
        "name": "qudit5",
        "spec": {"d": 5, "N": 2},
        "graph": "builtin:qudit5",
        "noise": {"p": 0.1, "mean_counts": 10_000, "seed": 0},
    },
    "rotation-sweep": {
        "name": "rotation-sweep",
        "spec": {"d": 2, "N": 4},
        "graph": "builtin:cluster8",
        "sweep": {"steps": 16, "inputs": ["Z"]},
    },
}


def load_preset(name_or_path: str) -> ExperimentPreset:
    """Builtin preset by name, or a JSON preset file."""
    if name_or_path in PRESETS:
        return ExperimentPreset.from_dict(PRESETS[name_or_path])
    path = Path(name_or_path)
    if not path.exists():
        raise ValidationError(f"unknown preset {name_or_path!r}; builtins are {sorted(PRESETS)}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return ExperimentPreset.from_dict(obj, path.parent)
