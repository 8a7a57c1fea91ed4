"""Measurement rounds for MBQC patterns where photons carry several qubits.

``fc[q]`` lists the qubits whose basis depends on the outcome of ``q``; this
induces a strict order ``q < p`` for every ``p`` in ``fc[q]``. The closure is
kept as one integer bitset per qubit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

from .errors import OrderViolationError, ValidationError


def _members(mask: int) -> list[int]:
    out, k = [], 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


def _find_cycle(succ: Mapping) -> list | None:
    """Return one directed cycle of ``succ`` (node -> iterable of nodes), or None."""
    color: dict = {}
    parent: dict = {}
    for root in succ:
        if color.get(root):
            continue
        stack = [(root, iter(succ.get(root, ())))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif color.get(nxt) == 1:
                cycle = [nxt]
                cur = node
                while cur != nxt:
                    cycle.append(cur)
                    cur = parent[cur]
                return cycle[::-1] if len(cycle) > 1 else cycle
            elif not color.get(nxt):
                color[nxt] = 1
                parent[nxt] = node
                stack.append((nxt, iter(succ.get(nxt, ()))))
    return None


def _rotate_cycle(cycle: list) -> list:
    i = cycle.index(min(cycle, key=repr))
    return cycle[i:] + cycle[:i]


@dataclass(frozen=True)
class DependencyGraph:
    n: int
    fc: Mapping  # qubit (1-based) -> frozenset of later qubits

    def __post_init__(self):
        fc = {q: frozenset() for q in range(1, self.n + 1)}
        for q, cone in dict(self.fc).items():
            if q not in fc:
                raise ValidationError(f"forward cone given for unknown qubit {q}")
            cone = frozenset(int(p) for p in cone)
            if any(p not in fc for p in cone):
                raise ValidationError(f"fc({q}) references unknown qubits")
            if q in cone:
                raise OrderViolationError(f"qubit {q} is in its own forward cone", witness=(q,))
            fc[q] = cone
        object.__setattr__(self, "fc", fc)
        cycle = _find_cycle(fc)
        if cycle:
            cycle = _rotate_cycle(cycle)
            raise OrderViolationError(
                "dependency cycle " + " -> ".join(map(str, cycle + cycle[:1])), witness=tuple(cycle)
            )
        object.__setattr__(self, "_after", self._closure())

    def _closure(self) -> dict[int, int]:
        after: dict[int, int] = {}

        def visit(q):
            if q in after:
                return after[q]
            mask = 0
            for p in self.fc[q]:
                mask |= (1 << p) | visit(p)
            after[q] = mask
            return mask

        for q in self.fc:
            visit(q)
        return after

    @property
    def qubits(self) -> range:
        return range(1, self.n + 1)

    def precedes(self, a: int, b: int) -> bool:
        """``a`` strictly before ``b`` in the transitive order."""
        return bool(self._after[a] >> b & 1)

    def successors(self, q: int) -> list[int]:
        return _members(self._after[q])

    def to_dict(self) -> dict:
        return {"schema_version": 1, "n": self.n, "fc": {str(q): sorted(c) for q, c in self.fc.items() if c}}

    @classmethod
    def from_dict(cls, obj: dict) -> "DependencyGraph":
        return cls(int(obj["n"]), {int(q): frozenset(c) for q, c in obj.get("fc", {}).items()})


@dataclass(frozen=True)
class PhotonAllocation:
    photon_of: Mapping  # qubit -> photon id

    def __post_init__(self):
        object.__setattr__(self, "photon_of", dict(self.photon_of))

    def photons(self) -> list:
        seen = []
        for q in sorted(self.photon_of):
            if self.photon_of[q] not in seen:
                seen.append(self.photon_of[q])
        return seen

    def qubits_on(self, photon) -> list[int]:
        return sorted(q for q, p in self.photon_of.items() if p == photon)

    def check_total(self, dep: DependencyGraph):
        missing = [q for q in dep.qubits if q not in self.photon_of]
        extra = [q for q in self.photon_of if q not in dep.fc]
        if missing or extra:
            raise ValidationError(f"allocation must cover qubits 1..{dep.n}; missing {missing}, unknown {extra}")

    def to_dict(self) -> dict:
        return {"schema_version": 1, "photon_of": {str(q): p for q, p in sorted(self.photon_of.items())}}

    @classmethod
    def from_dict(cls, obj: dict) -> "PhotonAllocation":
        return cls({int(q): p for q, p in obj["photon_of"].items()})


@dataclass(frozen=True)
class Schedule:
    rounds: tuple  # tuple of frozensets
    kind: str  # 'qubit' | 'photon'

    def __len__(self):
        return len(self.rounds)

    def round_of(self) -> dict:
        return {x: t for t, r in enumerate(self.rounds) for x in r}

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": self.kind,
            "rounds": [sorted(r, key=repr) for r in self.rounds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_dot(self, edges: Iterable[tuple] = ()) -> str:
        lines = [f"digraph {self.kind}_rounds {{", "  rankdir=LR;"]
        for t, r in enumerate(self.rounds):
            names = " ".join(f'"{x}";' for x in sorted(r, key=repr))
            lines.append(f"  {{ rank=same; {names} }}  // round {t + 1}")
        for a, b in edges:
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _peel(nodes: list, before) -> tuple:
    """Repeatedly take the nodes with no remaining predecessor."""
    remaining = list(nodes)
    rounds = []
    while remaining:
        layer = [x for x in remaining if not any(before(y, x) for y in remaining if y != x)]
        if not layer:
            raise OrderViolationError("no minimal element; relation is cyclic", witness=tuple(remaining))
        rounds.append(frozenset(layer))
        remaining = [x for x in remaining if x not in layer]
    return tuple(rounds)


def qubit_rounds(dep: DependencyGraph) -> Schedule:
    return Schedule(_peel(list(dep.qubits), dep.precedes), "qubit")


def photon_forward_cones(dep: DependencyGraph, alloc: PhotonAllocation) -> dict:
    alloc.check_total(dep)
    cones = {p: set() for p in alloc.photons()}
    for q, cone in dep.fc.items():
        src = alloc.photon_of[q]
        cones[src].update(alloc.photon_of[r] for r in cone if alloc.photon_of[r] != src)
    return {p: frozenset(c) for p, c in cones.items()}


@dataclass(frozen=True)
class AllocationVerdict:
    valid: bool
    witness: tuple = ()  # (q_i, q_j, q_k, l) or a photon cycle
    reason: str = ""

    def __bool__(self):
        return self.valid


def check_allocation(dep: DependencyGraph, alloc: PhotonAllocation) -> AllocationVerdict:
    """Every photon pair must agree on which is measured first.

    Scans ``q_i < q_j`` on photons ``(p_n, p_m)`` in ascending order and
    reports the first ``(q_k, q_l)`` with ``q_k`` on ``p_n``, ``q_l`` on
    ``p_m`` and ``q_l < q_k``. Pairwise agreement alone still admits a
    cycle through three or more photons, so the photon order is checked for
    cycles afterwards.
    """
    alloc.check_total(dep)
    ph = alloc.photon_of
    for i in dep.qubits:
        for j in dep.successors(i):
            if ph[i] == ph[j]:
                continue
            for l in dep.qubits:
                if ph[l] != ph[j]:
                    continue
                for k in dep.successors(l):
                    if ph[k] == ph[i]:
                        return AllocationVerdict(
                            False,
                            (i, j, k, l),
                            f"q{i} < q{j} orders photon {ph[i]!r} first, q{l} < q{k} orders photon {ph[j]!r} first",
                        )
    cones = photon_forward_cones(dep, alloc)
    cycle = _find_cycle(cones)
    if cycle:
        return AllocationVerdict(
            False, tuple(cycle), "photon order is cyclic: " + " -> ".join(map(str, cycle + cycle[:1]))
        )
    return AllocationVerdict(True)


def photon_rounds(dep: DependencyGraph, alloc: PhotonAllocation) -> Schedule:
    verdict = check_allocation(dep, alloc)
    if not verdict:
        raise OrderViolationError(f"allocation rejected: {verdict.reason}", witness=verdict.witness)
    cones = photon_forward_cones(dep, alloc)
    succ = dict(cones)

    # transitive photon order for peeling
    def before(a, b, _seen=None):
        stack, seen = [a], set()
        while stack:
            x = stack.pop()
            for y in succ[x]:
                if y == b:
                    return True
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    return Schedule(_peel(alloc.photons(), before), "photon")


def flatten(schedule: Schedule, alloc: PhotonAllocation) -> Schedule:
    """Photon rounds expressed as qubit rounds."""
    return Schedule(
        tuple(frozenset(q for p in r for q in alloc.qubits_on(p)) for r in schedule.rounds), "qubit"
    )


def backward_edges(dep: DependencyGraph, schedule: Schedule) -> list[tuple[int, int]]:
    """Direct dependencies ``q -> p`` with ``p`` not in a strictly later qubit round."""
    t = schedule.round_of()
    return [(q, p) for q, cone in dep.fc.items() for p in cone if t[p] <= t[q]]


def rotation_dependencies(include_output: bool = False) -> DependencyGraph:
    """Cones of the adaptive single-qubit rotation on a 5-qubit chain.

    Qubit 2 adapts to 1, qubit 3 to 2, qubit 4 to 1 and 3. With the output
    qubit included, its readout frame depends on qubits 2 and 4.
    """
    fc = {1: {2, 4}, 2: {3}, 3: {4}}
    if include_output:
        fc[2] = fc[2] | {5}
        fc[4] = {5}
        return DependencyGraph(5, fc)
    return DependencyGraph(4, fc)
