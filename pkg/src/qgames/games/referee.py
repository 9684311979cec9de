"""Play a game end to end: build circuits per question, sample, adjudicate, aggregate."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterator, Mapping

import numpy as np

from ..circuits import (
    PointLineUnsupported,
    build_delegation_circuit_LL,
    build_delegation_circuit_PL,
    build_unitary_circuit,
    plan_of,
)
from ..geometry import Configuration, Kind, Line, intersect, line_orderings, questions_LL, questions_PL
from ..pauli import format_pauli
from ..simulator import Circuit, NoiseModel, run_histogram
from ..transpile import CouplingMap, route
from .bounds import classical_value
from .strategies import builtin_strategy, play_cells_LL, play_cells_PL

SCENARIOS = ("ll", "pl")
QUANTUM_METHODS = ("unitary", "delegation")


class GameError(ValueError):
    pass


class InvariantViolation(AssertionError):
    """A per-shot answer broke its parity condition."""


@dataclass(frozen=True)
class GameSpec:
    geometry: Configuration
    scenario: str
    method: str
    shots: int = 8192
    seed: int = 0
    noise: NoiseModel | None = None
    coupling_map: CouplingMap | None = None
    layout: Mapping[int, int] | None = None
    orderings: str = "all"
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", self.scenario.lower())
        object.__setattr__(self, "method", self.method.lower())
        if self.scenario not in SCENARIOS:
            raise GameError(f"scenario must be one of {SCENARIOS}")
        if self.method not in QUANTUM_METHODS and not self.method.startswith("classical:"):
            raise GameError(f"unknown method {self.method!r}")
        if self.method == "unitary" and self.scenario == "pl":
            raise PointLineUnsupported(
                "the unitary method cannot play the point-line scenario: Alice measures a "
                "single observable, so nothing forces agreement with Bob's eigenbasis readout"
            )
        if self.orderings not in ("all", "canonical"):
            raise GameError("orderings must be 'all' or 'canonical'")
        if self.shots < 1:
            raise GameError("shots must be >= 1")
        if self.layout is not None and self.coupling_map is None:
            raise GameError("a layout needs a coupling map")

    @property
    def game(self) -> str:
        if self.name:
            return self.name
        return "mermin" if self.geometry.kind is Kind.GRID else "doily"


@dataclass(frozen=True)
class Cell:
    """One question under one line ordering."""

    alice: Line | int
    bob: Line
    ordering: int

    @property
    def is_point_line(self) -> bool:
        return isinstance(self.alice, int)

    def positions(self) -> tuple[int, int]:
        if self.is_point_line:
            return 0, self.bob.position(self.alice)
        return intersect(self.alice, self.bob)


@dataclass
class GameResult:
    game: str
    scenario: str
    method: str
    shots: int
    seed: int
    orderings: str
    noise: dict[str, Any] | None
    routing: dict[str, Any] | None
    cells: list[dict[str, Any]]
    omega: Fraction
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def wins(self) -> int:
        return sum(c["wins"] for c in self.cells)

    @property
    def total_shots(self) -> int:
        return sum(c["shots"] for c in self.cells)

    @property
    def sigma(self) -> Fraction:
        """Success rate; every cell carries the same shot count, so cells weigh equally."""
        return Fraction(self.wins, self.total_shots)

    @property
    def stderr(self) -> float:
        s = float(self.sigma)
        return math.sqrt(max(s * (1 - s), 0.0) / self.total_shots)

    @property
    def advantage(self) -> bool:
        return self.sigma > self.omega

    def per_ordering(self) -> dict[int, float]:
        acc: dict[int, list[int]] = {}
        for c in self.cells:
            w = acc.setdefault(c["ordering"], [0, 0])
            w[0] += c["wins"]
            w[1] += c["shots"]
        return {k: w / n for k, (w, n) in sorted(acc.items())}

    def to_dict(self) -> dict[str, Any]:
        return {
            "game": self.game,
            "scenario": self.scenario,
            "method": self.method,
            "shots_per_cell": self.shots,
            "seed": self.seed,
            "orderings": self.orderings,
            "noise": self.noise,
            "routing": self.routing,
            "sigma": {"numerator": self.sigma.numerator, "denominator": self.sigma.denominator,
                      "value": float(self.sigma)},
            "omega": {"numerator": self.omega.numerator, "denominator": self.omega.denominator,
                      "value": float(self.omega)},
            "wins": self.wins,
            "total_shots": self.total_shots,
            "cell_count": len(self.cells),
            "per_ordering": {str(k): v for k, v in self.per_ordering().items()},
            "cells": self.cells,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def iter_cells(config: Configuration, scenario: str, orderings: str = "all") -> Iterator[Cell]:
    """Question cells in a fixed order.

    Line-line: each question, then each ordering applied to both lines.
    Point-line: each line, then each ordering of it, then each of its points.
    """
    ks = range(6) if orderings == "all" else range(1)
    if scenario == "ll":
        for la, lb in questions_LL(config):
            oa, ob = line_orderings(la), line_orderings(lb)
            for k in ks:
                yield Cell(oa[k], ob[k], k)
    else:
        for ln in config.lines:
            orders = line_orderings(ln)
            for k in ks:
                for p in ln.points:
                    yield Cell(p, orders[k], k)


def cell_count(config: Configuration, scenario: str, orderings: str = "all") -> int:
    per = 6 if orderings == "all" else 1
    n = len(questions_LL(config)) if scenario == "ll" else len(questions_PL(config))
    return n * per


def _cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def build_cell_circuit(spec: GameSpec, cell: Cell) -> Circuit:
    cfg = spec.geometry
    bob = cfg.context(cell.bob)
    if cell.is_point_line:
        if spec.method == "unitary":
            raise PointLineUnsupported("the unitary method cannot play point-line questions")
        return build_delegation_circuit_PL(cfg.label(cell.alice), bob)
    alice = cfg.context(cell.alice)
    if spec.method == "unitary":
        return build_unitary_circuit(alice, bob)
    return build_delegation_circuit_LL(alice, bob)


def _routed(spec: GameSpec, circuit: Circuit) -> Circuit:
    if spec.coupling_map is None:
        return circuit
    layout = None
    if spec.layout is not None:
        layout = {k: v for k, v in spec.layout.items() if k < circuit.n_qubits}
    return route(circuit, spec.coupling_map, layout)


def _win_table(circuit: Circuit, cell: Cell, signs: tuple[int, int]) -> np.ndarray:
    """For every outcome index: does this shot win?  Parity is checked on the way."""
    plan = plan_of(circuit)
    m = len(circuit.measured)
    pos_a, pos_b = cell.positions()
    wins = np.zeros(2**m, dtype=bool)
    for idx in range(2**m):
        bits = [(idx >> (m - 1 - j)) & 1 for j in range(m)]
        a, b = plan.answers(bits)
        for ans, sign in zip((a, b), signs):
            if len(ans) == 3 and math.prod(ans) != sign:
                raise InvariantViolation(f"answer {ans} breaks parity {sign}")
        wins[idx] = a[pos_a] == b[pos_b]
    return wins


def _play_quantum(spec: GameSpec) -> tuple[list[dict[str, Any]], dict[str, Any] | None]:
    cells = []
    routing_total = None
    for i, cell in enumerate(iter_cells(spec.geometry, spec.scenario, spec.orderings)):
        circuit = _routed(spec, build_cell_circuit(spec, cell))
        sign_a = 1 if cell.is_point_line else cell.alice.sign
        table = _win_table(circuit, cell, (sign_a, cell.bob.sign))
        hist = run_histogram(circuit, spec.shots, spec.noise, _cell_seed(spec.seed, i))
        row = _cell_record(spec.geometry, cell, int(hist[table].sum()), spec.shots)
        if "routing" in circuit.metadata:
            info = circuit.metadata["routing"]
            row["added_two_qubit"] = info["post_two_qubit"] - info["pre_two_qubit"]
            if routing_total is None:
                routing_total = {"swaps": 0, "pre_two_qubit": 0, "post_two_qubit": 0}
            for key in routing_total:
                routing_total[key] += info[key]
        cells.append(row)
    return cells, routing_total


def _play_classical(spec: GameSpec) -> list[dict[str, Any]]:
    strategy = builtin_strategy(spec.method.split(":", 1)[1], spec.geometry)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    cells = list(iter_cells(spec.geometry, spec.scenario, spec.orderings))
    if spec.scenario == "ll":
        wins = play_cells_LL(strategy, [(c.alice, c.bob) for c in cells], spec.shots, rng)
    else:
        wins = play_cells_PL(strategy, [(c.alice, c.bob) for c in cells], spec.shots, rng)
    return [_cell_record(spec.geometry, c, int(w), spec.shots) for c, w in zip(cells, wins)]


def _cell_record(cfg: Configuration, cell: Cell, wins: int, shots: int) -> dict[str, Any]:
    def names(line: Line) -> str:
        return " ".join(format_pauli(o) for o in cfg.observables(line))

    alice = format_pauli(cfg.label(cell.alice)) if cell.is_point_line else names(cell.alice)
    return {"alice": alice, "bob": names(cell.bob), "ordering": cell.ordering, "wins": wins, "shots": shots}


def referee_play(spec: GameSpec, date: str | None = None) -> GameResult:
    """Play every question cell of ``spec`` and aggregate the success rate.

    Deterministic in ``spec.seed``; ``date`` is copied into the metadata
    verbatim and never read from the clock.
    """
    routing = None
    if spec.method.startswith("classical:"):
        cells = _play_classical(spec)
    else:
        cells, routing_counts = _play_quantum(spec)
        if spec.coupling_map is not None:
            routing = {
                "edges": [list(e) for e in sorted(spec.coupling_map.edges)],
                "n_physical": spec.coupling_map.n_physical,
                "layout": {str(k): v for k, v in sorted((spec.layout or {}).items())},
                **(routing_counts or {}),
            }
    meta: dict[str, Any] = {"labels": [format_pauli(p) for p in spec.geometry.labels]}
    if date:
        meta["date"] = date
    return GameResult(
        game=spec.game,
        scenario=spec.scenario,
        method=spec.method,
        shots=spec.shots,
        seed=spec.seed,
        orderings=spec.orderings,
        noise=spec.noise.to_dict() if spec.noise else None,
        routing=routing,
        cells=cells,
        omega=classical_value(spec.geometry, spec.scenario),
        metadata=meta,
    )


def full_experiment(spec: GameSpec, date: str | None = None) -> GameResult:
    """:func:`referee_play` over all six orderings of every line."""
    return referee_play(replace(spec, orderings="all"), date)
