"""Exact classical values of the line-line and point-line games.

A deterministic player answers each line with one of the four ±1 triples
whose product is the line's sign.  Questions are uniform, so the value is
the best number of won questions divided by the number of questions.

* grid LL: all 64 x 64 row/column table pairs
* PL: every ±1 assignment of Alice's points; Bob best-responds line by line
* general LL: branch and bound over Bob's tables with Alice best-responding
  line by line (used for the doily, where Bob has 4**15 tables)

Bit convention for triples: bit 1 means the answer -1.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Sequence

import numba
import numpy as np

from ..geometry import Configuration, Kind, questions_LL
from ..pauli import commutes, format_pauli

log = logging.getLogger(__name__)


def parity_triples(sign: int) -> list[tuple[int, int, int]]:
    """The four answer triples (as -1 bits) allowed on a line of the given sign."""
    want = 0 if sign > 0 else 1
    return [t for t in itertools.product((0, 1), repeat=3) if sum(t) % 2 == want]


def bits_to_values(bits: Sequence[int]) -> tuple[int, ...]:
    return tuple(1 - 2 * int(b) for b in bits)


@dataclass(frozen=True)
class ClassicalSolution:
    """Optimal value with a witness strategy pair.

    Tables map a line index to its answer triple in the line's stored point
    order; ``alice_points`` is only used in the point-line scenario.
    """

    scenario: str
    wins: int
    questions: int
    alice_lines: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    alice_points: dict[int, int] = field(default_factory=dict)
    bob_lines: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    stats: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def value(self) -> Fraction:
        return Fraction(self.wins, self.questions)

    def to_dict(self, config: Configuration | None = None) -> dict[str, Any]:
        def line_name(i: int) -> str:
            if config is None:
                return str(i)
            return " ".join(format_pauli(config.labels[p]) for p in config.lines[i].points)

        out: dict[str, Any] = {
            "scenario": self.scenario,
            "wins": self.wins,
            "questions": self.questions,
            "value": f"{self.value.numerator}/{self.value.denominator}",
            "bob_lines": {line_name(i): list(t) for i, t in sorted(self.bob_lines.items())},
        }
        if self.alice_lines:
            out["alice_lines"] = {line_name(i): list(t) for i, t in sorted(self.alice_lines.items())}
        if self.alice_points:
            names = (lambda p: format_pauli(config.labels[p])) if config else str
            out["alice_points"] = {names(p): v for p, v in sorted(self.alice_points.items())}
        return out


# ---------------------------------------------------------------------------
# scoring helpers shared with the tests


def ll_question_table(config: Configuration, questions=None) -> list[tuple[int, int, int, int]]:
    """(alice line idx, bob line idx, alice pos, bob pos) for each LL question."""
    questions = questions if questions is not None else questions_LL(config)
    out = []
    for la, lb in questions:
        (p,) = la.key & lb.key
        out.append((config.line_index(la), config.line_index(lb), la.position(p), lb.position(p)))
    return out


def score_ll(config: Configuration, alice: dict[int, Sequence[int]], bob: dict[int, Sequence[int]]) -> int:
    """Wins of a deterministic table pair (values ±1, canonical line order)."""
    wins = 0
    for la, lb, pa, pb in ll_question_table(config):
        wins += alice[la][pa] == bob[lb][pb]
    return wins


def score_pl(config: Configuration, alice_points: dict[int, int], bob: dict[int, Sequence[int]]) -> int:
    wins = 0
    for i, ln in enumerate(config.lines):
        for j, p in enumerate(ln.points):
            wins += alice_points[p] == bob[i][j]
    return wins


# ---------------------------------------------------------------------------
# grid LL: 64 x 64


def solve_grid_ll(config: Configuration) -> ClassicalSolution:
    if config.kind is not Kind.GRID:
        raise ValueError("solve_grid_ll expects a grid")
    rows = [parity_triples(ln.sign) for ln in config.rows()]
    cols = [parity_triples(ln.sign) for ln in config.columns()]
    best = None
    for a in itertools.product(*rows):
        for b in itertools.product(*cols):
            # row r meets column c at position c of the row and r of the column
            wins = sum(a[r][c] == b[c][r] for r in range(3) for c in range(3))
            if best is None or wins > best[0]:
                best = (wins, a, b)
    wins, a, b = best
    return ClassicalSolution(
        "ll",
        wins,
        9,
        alice_lines={r: bits_to_values(a[r]) for r in range(3)},
        bob_lines={3 + c: bits_to_values(b[c]) for c in range(3)},
        stats={"solver": "grid-64x64"},
    )


# ---------------------------------------------------------------------------
# PL: enumerate Alice's points


def solve_pl(config: Configuration) -> ClassicalSolution:
    n = config.num_points
    assign = ((np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)
    total = np.zeros(2**n, dtype=np.int32)
    best_choice = []
    for ln in config.lines:
        trips = np.array(parity_triples(ln.sign), dtype=np.int8)  # (4, 3)
        pts = assign[:, list(ln.points)]  # (2**n, 3)
        matches = (pts[:, None, :] == trips[None, :, :]).sum(axis=2)  # (2**n, 4)
        total += matches.max(axis=1)
        best_choice.append((trips, matches))
    k = int(np.argmax(total))
    bob = {}
    for i, (trips, matches) in enumerate(best_choice):
        bob[i] = bits_to_values(trips[int(np.argmax(matches[k]))])
    alice_points = {p: 1 - 2 * int(assign[k, p]) for p in range(n)}
    wins = int(total[k])
    assert wins == score_pl(config, alice_points, bob)
    return ClassicalSolution(
        "pl",
        wins,
        3 * len(config.lines),
        alice_points=alice_points,
        bob_lines=bob,
        stats={"solver": f"points-2^{n}"},
    )


# ---------------------------------------------------------------------------
# general LL: branch and bound over Bob's tables


@numba.njit(cache=True)
def _ll_search(prefix, bob_trip, alice_trip, q_start, q_alice, q_pa, q_pb, remaining, best_in, prune):
    """Depth-first search below a fixed prefix of Bob's choices.

    Returns (best wins, choice vector, nodes).  Only strategies scoring
    strictly more than ``best_in`` are reported; if none exists the returned
    value is ``best_in`` and the choice vector is all -1.
    """
    n_bob = bob_trip.shape[0]
    n_alice = alice_trip.shape[0]
    cnt = np.zeros((n_alice, 4), dtype=np.int64)
    choice = -np.ones(n_bob, dtype=np.int64)
    best = best_in
    best_choice = -np.ones(n_bob, dtype=np.int64)
    nodes = 0

    d0 = prefix.shape[0]
    for d in range(d0):
        c = prefix[d]
        choice[d] = c
        for q in range(q_start[d], q_start[d + 1]):
            la = q_alice[q]
            bb = bob_trip[d, c, q_pb[q]]
            for t in range(4):
                if alice_trip[la, t, q_pa[q]] == bb:
                    cnt[la, t] += 1

    if d0 == n_bob:
        s = 0
        for la in range(n_alice):
            m = 0
            for t in range(4):
                if cnt[la, t] > m:
                    m = cnt[la, t]
            s += m
        if s > best:
            return s, choice.copy(), 1
        return best, best_choice, 1

    d = d0
    choice[d] = -1
    while d >= d0:
        c = choice[d]
        if c >= 0:
            for q in range(q_start[d], q_start[d + 1]):
                la = q_alice[q]
                bb = bob_trip[d, c, q_pb[q]]
                for t in range(4):
                    if alice_trip[la, t, q_pa[q]] == bb:
                        cnt[la, t] -= 1
        c += 1
        if c == 4:
            choice[d] = -1
            d -= 1
            continue
        choice[d] = c
        for q in range(q_start[d], q_start[d + 1]):
            la = q_alice[q]
            bb = bob_trip[d, c, q_pb[q]]
            for t in range(4):
                if alice_trip[la, t, q_pa[q]] == bb:
                    cnt[la, t] += 1
        nodes += 1
        s = 0
        for la in range(n_alice):
            m = 0
            for t in range(4):
                if cnt[la, t] > m:
                    m = cnt[la, t]
            s += m
        if d == n_bob - 1:
            if s > best:
                best = s
                best_choice[:] = choice
            continue
        if prune and s + remaining[d] <= best:
            continue
        d += 1
        choice[d] = -1
    return best, best_choice, nodes


@dataclass
class _LLProblem:
    bob_lines: list[int]
    alice_lines: list[int]
    bob_trip: np.ndarray
    alice_trip: np.ndarray
    q_start: np.ndarray
    q_alice: np.ndarray
    q_pa: np.ndarray
    q_pb: np.ndarray
    remaining: np.ndarray
    n_questions: int


def _ll_problem(config: Configuration) -> _LLProblem:
    table = ll_question_table(config)
    bob_lines = sorted({q[1] for q in table})
    alice_lines = sorted({q[0] for q in table})
    a_index = {l: i for i, l in enumerate(alice_lines)}
    bob_trip = np.array([parity_triples(config.lines[l].sign) for l in bob_lines], dtype=np.int8)
    alice_trip = np.array([parity_triples(config.lines[l].sign) for l in alice_lines], dtype=np.int8)
    q_start = [0]
    qa, qpa, qpb = [], [], []
    for lb in bob_lines:
        for la, lbb, pa, pb in table:
            if lbb == lb:
                qa.append(a_index[la])
                qpa.append(pa)
                qpb.append(pb)
        q_start.append(len(qa))
    q_start = np.array(q_start, dtype=np.int64)
    per_line = np.diff(q_start)
    # questions still unassigned once Bob's lines 0..d are fixed
    remaining = np.array([per_line[d + 1 :].sum() for d in range(len(bob_lines))], dtype=np.int64)
    return _LLProblem(
        bob_lines,
        alice_lines,
        bob_trip,
        alice_trip,
        q_start,
        np.array(qa, dtype=np.int64),
        np.array(qpa, dtype=np.int64),
        np.array(qpb, dtype=np.int64),
        remaining,
        len(table),
    )


def sign_flip_masks(config: Configuration) -> list[tuple[int, ...]]:
    """Point sets meeting every line evenly, as 0/1 vectors over points.

    Negating both players' answers on such a set keeps every parity condition
    and every win, so it maps strategy pairs to equally good ones.  For Pauli
    labellings these are the points anticommuting with a fixed Pauli.
    """
    n = config.labels[0].n
    from ..pauli import all_paulis

    masks = set()
    for v in all_paulis(n, include_identity=True):
        mask = tuple(0 if commutes(v, lab) else 1 for lab in config.labels)
        if all(sum(mask[p] for p in ln.points) % 2 == 0 for ln in config.lines):
            masks.add(mask)
    return sorted(masks)


def _canonical_prefixes(prob: _LLProblem, config: Configuration, depth: int) -> list[tuple[int, ...]]:
    """Prefixes of Bob's choices that are lexicographically least in their flip orbit."""
    masks = sign_flip_masks(config)
    trip_index = [
        {tuple(int(b) for b in t): c for c, t in enumerate(prob.bob_trip[d])} for d in range(depth)
    ]
    out = []
    for prefix in itertools.product(range(4), repeat=depth):
        best = prefix
        for mask in masks:
            image = []
            for d, c in enumerate(prefix):
                pts = config.lines[prob.bob_lines[d]].points
                flipped = tuple(int(b) ^ mask[p] for b, p in zip(prob.bob_trip[d, c], pts))
                image.append(trip_index[d][flipped])
            best = min(best, tuple(image))
        if best == prefix:
            out.append(prefix)
    return out


def _search_chunk(args) -> tuple[int, list[int] | None, int]:
    prob, prefixes, best_in, prune = args
    best, witness, nodes = best_in, None, 0
    for prefix in prefixes:
        value, choice, n = _ll_search(
            np.array(prefix, dtype=np.int64),
            prob.bob_trip,
            prob.alice_trip,
            prob.q_start,
            prob.q_alice,
            prob.q_pa,
            prob.q_pb,
            prob.remaining,
            best,
            prune,
        )
        nodes += n
        if value > best:
            best, witness = int(value), [int(c) for c in choice]
    return best, witness, nodes


def _alice_best_response(prob: _LLProblem, bob_choice: Sequence[int]) -> tuple[int, list[int]]:
    cnt = np.zeros((len(prob.alice_lines), 4), dtype=np.int64)
    for d, c in enumerate(bob_choice):
        for q in range(prob.q_start[d], prob.q_start[d + 1]):
            la = prob.q_alice[q]
            bb = prob.bob_trip[d, c, prob.q_pb[q]]
            cnt[la] += prob.alice_trip[la, :, prob.q_pa[q]] == bb
    return int(cnt.max(axis=1).sum()), [int(t) for t in cnt.argmax(axis=1)]


def solve_ll(
    config: Configuration,
    symmetry: bool = True,
    prune: bool = True,
    workers: int = 1,
    prefix_depth: int = 3,
    progress: Callable[[int, int], None] | None = None,
) -> ClassicalSolution:
    """Exact LL value by search over Bob's tables.

    ``symmetry`` restricts Bob's first ``prefix_depth`` lines to orbit
    representatives under :func:`sign_flip_masks`; ``prune`` enables the
    bound "current best responses + every unassigned question won".  Neither
    changes the optimum.  ``workers > 1`` fans prefixes out over processes.
    """
    t0 = time.perf_counter()
    prob = _ll_problem(config)
    depth = min(prefix_depth, len(prob.bob_lines))
    if symmetry:
        prefixes = _canonical_prefixes(prob, config, depth)
    else:
        prefixes = list(itertools.product(range(4), repeat=depth))

    # the all-zero table is a valid starting witness
    seed_choice = [0] * len(prob.bob_lines)
    best, _ = _alice_best_response(prob, seed_choice)
    witness = seed_choice
    nodes = 0

    chunks = [prefixes[i::max(workers, 1)] for i in range(max(workers, 1))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_search_chunk, [(prob, c, best, prune) for c in chunks]))
    else:
        results = []
        for i, prefix in enumerate(prefixes):
            results.append(_search_chunk((prob, [prefix], best, prune)))
            if results[-1][0] > best:
                best, witness = results[-1][0], results[-1][1]
            if progress is not None:
                progress(i + 1, len(prefixes))
    for value, choice, n in results:
        nodes += n
        # max-reduction; ties keep the earlier witness so the result is order-free
        if choice is not None and value > best:
            best, witness = value, choice

    wins, alice_choice = _alice_best_response(prob, witness)
    assert wins == best
    bob_tables = {
        l: bits_to_values(prob.bob_trip[d, c]) for d, (l, c) in enumerate(zip(prob.bob_lines, witness))
    }
    alice_tables = {
        l: bits_to_values(prob.alice_trip[i, t]) for i, (l, t) in enumerate(zip(prob.alice_lines, alice_choice))
    }
    assert score_ll(config, alice_tables, bob_tables) == wins
    return ClassicalSolution(
        "ll",
        wins,
        prob.n_questions,
        alice_lines=alice_tables,
        bob_lines=bob_tables,
        stats={
            "solver": "bob-tables-branch-and-bound",
            "prefixes": len(prefixes),
            "symmetry": symmetry,
            "prune": prune,
            "nodes": nodes,
            "seconds": round(time.perf_counter() - t0, 3),
        },
    )


# ---------------------------------------------------------------------------


def solve(config: Configuration, scenario: str, **kwargs: Any) -> ClassicalSolution:
    scenario = scenario.lower()
    if scenario == "pl":
        return solve_pl(config)
    if scenario != "ll":
        raise ValueError(f"unknown scenario {scenario!r}")
    if config.kind is Kind.GRID:
        return solve_grid_ll(config)
    return solve_ll(config, **kwargs)


@lru_cache(maxsize=None)
def _cached_value(config: Configuration, scenario: str) -> tuple[int, int]:
    sol = solve(config, scenario)
    return sol.wins, sol.questions


def classical_value(config: Configuration, scenario: str) -> Fraction:
    """Exact optimal classical winning probability under uniform questions."""
    wins, total = _cached_value(config, scenario.lower())
    return Fraction(wins, total)
