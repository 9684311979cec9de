"""Coupling-map routing: insert SWAPs so every two-qubit gate acts on an edge.

This models the gate inflation a hardware transpiler adds when logical
qubits that must interact sit on non-adjacent physical qubits.  Routing is
greedy: each two-qubit gate, in program order, moves its first qubit along a
shortest path until it neighbours the second.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import networkx as nx
import numpy as np

from .simulator import Circuit, Gate, NoiseModel, final_state


class RoutingError(ValueError):
    pass


class DisconnectedMap(RoutingError):
    pass


@dataclass(frozen=True)
class CouplingMap:
    n_physical: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v or not (0 <= u < self.n_physical and 0 <= v < self.n_physical):
                raise RoutingError(f"bad edge ({u}, {v}) for {self.n_physical} qubits")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], n_physical: int | None = None) -> CouplingMap:
        edges = [(int(u), int(v)) for u, v in edges]
        if n_physical is None:
            n_physical = 1 + max(max(e) for e in edges)
        return cls(n_physical, frozenset(edges))

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_physical))
        g.add_edges_from(sorted(self.edges))
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.graph())

    def adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def distance(self, a: int, b: int) -> int:
        return nx.shortest_path_length(self.graph(), a, b)

    def to_text(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in sorted(self.edges))


LAGOS_EDGES = ((0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6))

# Alice -> physical 0, 4; Bob -> 1, 5; delegation register -> 3.
LAGOS_PL_LAYOUT = {0: 0, 1: 4, 2: 1, 3: 5, 4: 3}


def lagos_map() -> CouplingMap:
    """Seven-qubit heavy-hex fragment: an H shape with spine 1-3-5."""
    return CouplingMap(7, frozenset(LAGOS_EDGES))


def _parse_pairs(text: str) -> list[tuple[int, int]]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise RoutingError(f"expected two integers per line, got {raw!r}")
        out.append((int(parts[0]), int(parts[1])))
    return out


def load_coupling_map(path: str | Path) -> CouplingMap:
    """Read a map from a file with one ``u v`` edge per line (``#`` comments allowed)."""
    return CouplingMap.from_edges(_parse_pairs(Path(path).read_text()))


def parse_layout(text: str) -> dict[int, int]:
    """Parse ``logical physical`` pairs, one per line or separated by ``;``."""
    return dict(_parse_pairs(text.replace(";", "\n")))


def load_layout(path: str | Path) -> dict[int, int]:
    return parse_layout(Path(path).read_text())


def format_layout(layout: Mapping[int, int]) -> str:
    return "".join(f"{k} {v}\n" for k, v in sorted(layout.items()))


def _check_layout(layout: Mapping[int, int], n_logical: int, cmap: CouplingMap) -> dict[int, int]:
    layout = {int(k): int(v) for k, v in layout.items()}
    missing = [q for q in range(n_logical) if q not in layout]
    if missing:
        raise RoutingError(f"layout does not place logical qubits {missing}")
    if len(set(layout.values())) != len(layout):
        raise RoutingError("layout is not injective")
    if any(not 0 <= p < cmap.n_physical for p in layout.values()):
        raise RoutingError("layout uses a physical qubit outside the map")
    return layout


def route(circuit: Circuit, cmap: CouplingMap, layout: Mapping[int, int] | None = None) -> Circuit:
    """Rewrite ``circuit`` onto physical qubits, inserting SWAPs where needed.

    The routed circuit measures the physical qubits that hold the original
    measured qubits at the end, in the original order, so its bitstrings
    read the same way.  ``metadata["routing"]`` records both layouts.
    """
    if circuit.n_qubits > cmap.n_physical:
        raise RoutingError(f"circuit needs {circuit.n_qubits} qubits, map has {cmap.n_physical}")
    if not cmap.is_connected():
        raise DisconnectedMap("coupling map is not connected")
    if layout is None:
        layout = {q: q for q in range(circuit.n_qubits)}
    l2p = _check_layout(layout, circuit.n_qubits, cmap)
    initial = dict(l2p)
    p2l = {p: l for l, p in l2p.items()}
    graph = cmap.graph()

    out: list[Gate] = []
    swaps = 0
    for g in circuit.gates:
        if g.arity == 2:
            a, b = (l2p[t] for t in g.targets)
            if not cmap.adjacent(a, b):
                path = nx.shortest_path(graph, a, b)
                for u, v in zip(path[:-2], path[1:-1]):
                    out.append(Gate("SWAP", (u, v)))
                    swaps += 1
                    lu, lv = p2l.pop(u, None), p2l.pop(v, None)
                    if lu is not None:
                        l2p[lu] = v
                        p2l[v] = lu
                    if lv is not None:
                        l2p[lv] = u
                        p2l[u] = lv
        out.append(g.relabel(l2p))

    meta = dict(circuit.metadata)
    meta["routing"] = {
        "initial_layout": initial,
        "final_layout": dict(l2p),
        "swaps": swaps,
        "pre_two_qubit": circuit.two_qubit_count(),
        "post_two_qubit": circuit.two_qubit_count() + 3 * swaps,
    }
    measured = tuple(l2p[q] for q in circuit.measured)
    return Circuit(cmap.n_physical, out, measured, meta)


def check_coupling(circuit: Circuit, cmap: CouplingMap) -> bool:
    return all(cmap.adjacent(*g.targets) for g in circuit.gates if g.arity == 2)


def embed_state(state: np.ndarray, l2p: Mapping[int, int], n_physical: int) -> np.ndarray:
    """Place a logical state onto physical qubits; unused physical qubits are |0>."""
    n = int(state.size).bit_length() - 1
    free = [p for p in range(n_physical) if p not in set(l2p.values())]
    zero = np.zeros(2 ** (n_physical - n), dtype=complex)
    zero[0] = 1.0
    full = np.kron(state, zero).reshape((2,) * n_physical)
    # axis i of `full` is logical i (i < n) or the (i-n)th free physical qubit
    dest = [l2p[i] for i in range(n)] + free
    return np.moveaxis(full, list(range(n_physical)), dest).reshape(-1)


def equivalent_after_routing(original: Circuit, routed: Circuit, tol: float = 1e-8) -> bool:
    """Compare final states up to global phase, undoing the tracked permutation."""
    from .simulator import states_equal_up_to_global_phase

    final = routed.metadata["routing"]["final_layout"]
    expect = embed_state(final_state(original), final, routed.n_qubits)
    return states_equal_up_to_global_phase(expect, final_state(routed), tol)


@dataclass(frozen=True)
class OverheadReport:
    pre_two_qubit: int
    post_two_qubit: int
    added_two_qubit: int
    swaps: int
    pre_no_error: float
    post_no_error: float

    def to_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def noise_overhead(
    circuit: Circuit,
    cmap: CouplingMap,
    layout: Mapping[int, int] | None = None,
    noise: NoiseModel | None = None,
) -> OverheadReport:
    """Two-qubit gate counts before/after routing.

    ``*_no_error`` is the chance that no two-qubit gate depolarizes,
    ``(1 - p2) ** count``.
    """
    routed = route(circuit, cmap, layout)
    info = routed.metadata["routing"]
    p2 = noise.p2 if noise else 0.0
    pre, post = info["pre_two_qubit"], info["post_two_qubit"]
    return OverheadReport(pre, post, post - pre, info["swaps"], (1 - p2) ** pre, (1 - p2) ** post)
