"""Point-line geometries labelled by two-qubit Pauli observables.

Two configurations are supported: the 3x3 Mermin-Peres grid (GQ(2,1)) and
the doily (GQ(2,2)), whose 15 points are the nontrivial two-qubit Paulis and
whose 15 lines are the commuting triples.  Lines are *ordered* triples of
point ids; the order decides which observables a player measures first.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence, Union

from .pauli import (
    NonCommuting,
    NotAContext,
    PauliObservable,
    all_paulis,
    commutes,
    context_sign,
    format_pauli,
    multiply,
    parse,
)


LabelLike = Union[PauliObservable, str]


def _as_pauli(x: LabelLike) -> PauliObservable:
    return parse(x) if isinstance(x, str) else x


class Kind(str, enum.Enum):
    GRID = "grid"
    DOILY = "doily"


class GeometryError(ValueError):
    pass


class InvalidContext(GeometryError):
    pass


class SameLine(GeometryError):
    pass


@dataclass(frozen=True)
class Line:
    points: tuple[int, int, int]
    sign: int

    def __post_init__(self) -> None:
        if len(set(self.points)) != 3:
            raise GeometryError(f"line points must be distinct, got {self.points}")
        if self.sign not in (1, -1):
            raise GeometryError(f"line sign must be ±1, got {self.sign}")

    @property
    def key(self) -> frozenset[int]:
        """Order-independent identity of the line."""
        return frozenset(self.points)

    def position(self, point: int) -> int:
        return self.points.index(point)

    def __contains__(self, point: object) -> bool:
        return point in self.points


@dataclass(frozen=True)
class Context:
    """An ordered line with its labels resolved: what a player actually measures."""

    ops: tuple[PauliObservable, ...]
    sign: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(_as_pauli(o) for o in self.ops))
        if len(self.ops) != 3:
            raise GeometryError("a context has three observables")
        try:
            sign = context_sign(self.ops)
        except (NonCommuting, NotAContext) as exc:
            raise InvalidContext(str(exc)) from exc
        if sign != self.sign:
            raise InvalidContext(f"context {self} has sign {sign}, not {self.sign}")

    @classmethod
    def of(cls, *ops: PauliObservable | str) -> Context:
        """Build a context from its observables, computing the sign."""
        ops = tuple(_as_pauli(o) for o in ops)
        try:
            return cls(ops, context_sign(ops))
        except (NonCommuting, NotAContext) as exc:
            raise InvalidContext(str(exc)) from exc

    def position(self, op: PauliObservable) -> int:
        return self.ops.index(op)

    def __contains__(self, op: object) -> bool:
        return op in self.ops

    def __str__(self) -> str:
        return "(" + " ".join(format_pauli(o) for o in self.ops) + f"){'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class Configuration:
    labels: tuple[PauliObservable, ...]
    lines: tuple[Line, ...]
    kind: Kind

    @property
    def num_points(self) -> int:
        return len(self.labels)

    def label(self, point: int) -> PauliObservable:
        return self.labels[point]

    def observables(self, line: Line) -> tuple[PauliObservable, ...]:
        return tuple(self.labels[p] for p in line.points)

    def context(self, line: Line) -> Context:
        return Context(self.observables(line), line.sign)

    def lines_through(self, point: int) -> list[int]:
        return [i for i, ln in enumerate(self.lines) if point in ln]

    def line_index(self, line: Line) -> int:
        """Index of the stored line with the same point set as ``line``."""
        for i, ln in enumerate(self.lines):
            if ln.key == line.key:
                return i
        raise GeometryError(f"line {line.points} is not part of this configuration")

    def point_of(self, label: PauliObservable | str) -> int:
        if isinstance(label, str):
            label = parse(label)
        return self.labels.index(label)

    def negative_lines(self) -> list[int]:
        return [i for i, ln in enumerate(self.lines) if ln.sign < 0]

    def rows(self) -> tuple[Line, ...]:
        self._require_grid()
        return self.lines[:3]

    def columns(self) -> tuple[Line, ...]:
        self._require_grid()
        return self.lines[3:]

    def _require_grid(self) -> None:
        if self.kind is not Kind.GRID:
            raise GeometryError("rows/columns only exist in a grid")


def make_line(labels: Sequence[PauliObservable], points: Sequence[int], what: str = "line") -> Line:
    ops = [labels[p] for p in points]
    try:
        sign = context_sign(ops)
    except (NonCommuting, NotAContext) as exc:
        raise InvalidContext(f"{what} {[str(o) for o in ops]} is not a context: {exc}") from exc
    return Line(tuple(points), sign)


def build_grid(labels: Sequence[Sequence[LabelLike]]) -> Configuration:
    """Build a Mermin-Peres grid from a 3x3 array of labels.

    Points are numbered row-major.  The six lines are the three rows
    (left to right) followed by the three columns (top to bottom).
    """
    if len(labels) != 3 or any(len(row) != 3 for row in labels):
        raise GeometryError("grid labels must be a 3x3 array")
    flat = tuple(_as_pauli(x) for row in labels for x in row)
    if len(set(flat)) != 9:
        raise GeometryError("grid labels must be distinct")
    lines = []
    for r in range(3):
        lines.append(make_line(flat, [3 * r, 3 * r + 1, 3 * r + 2], f"row {r + 1}"))
    for c in range(3):
        lines.append(make_line(flat, [c, c + 3, c + 6], f"column {c + 1}"))
    return Configuration(flat, tuple(lines), Kind.GRID)


def build_doily() -> Configuration:
    labels = tuple(all_paulis(2))
    lines = []
    for i, j in itertools.combinations(range(15), 2):
        if not commutes(labels[i], labels[j]):
            continue
        k = labels.index(multiply(labels[i], labels[j]).unsigned())
        if k > j:
            lines.append(make_line(labels, (i, j, k)))
    doily = Configuration(labels, tuple(lines), Kind.DOILY)
    assert len(doily.lines) == 15
    assert all(len(doily.lines_through(p)) == 3 for p in range(15))
    assert len(doily.negative_lines()) == 3
    return doily


def intersect(l1: Line, l2: Line) -> tuple[int, int] | None:
    """Positions of the shared point in ``l1`` and ``l2``, or None if disjoint."""
    if l1.key == l2.key:
        raise SameLine(f"{l1.points} and {l2.points} are the same line")
    shared = l1.key & l2.key
    if not shared:
        return None
    assert len(shared) == 1, "two distinct lines of a generalized quadrangle meet at most once"
    (p,) = shared
    return l1.position(p), l2.position(p)


def shared_point(l1: Line, l2: Line) -> int | None:
    pos = intersect(l1, l2)
    return None if pos is None else l1.points[pos[0]]


def line_orderings(line: Line) -> list[Line]:
    return [Line(perm, line.sign) for perm in itertools.permutations(line.points)]


def enumerate_grids(doily: Configuration) -> list[Configuration]:
    """All Mermin grids embedded in the doily.

    A grid is two classes of three pairwise-disjoint lines in which every
    line of one class meets every line of the other.  The class holding the
    lowest-indexed line becomes the rows.
    """
    if doily.kind is not Kind.DOILY:
        raise GeometryError("enumerate_grids expects a doily")
    lines = doily.lines
    n = len(lines)
    meets = [[i != j and bool(lines[i].key & lines[j].key) for j in range(n)] for i in range(n)]
    found: dict[frozenset[int], tuple[tuple[int, ...], tuple[int, ...]]] = {}
    for rows in itertools.combinations(range(n), 3):
        if any(meets[a][b] for a, b in itertools.combinations(rows, 2)):
            continue
        cols = tuple(c for c in range(n) if all(meets[c][r] for r in rows))
        if len(cols) != 3 or any(meets[a][b] for a, b in itertools.combinations(cols, 2)):
            continue
        key = frozenset(rows + cols)
        if key not in found:
            found[key] = (rows, cols) if min(rows) < min(cols) else (cols, rows)
    grids = []
    for rows, cols in sorted(found.values()):
        arr = [[doily.labels[shared_point(lines[r], lines[c])] for c in cols] for r in rows]
        grids.append(build_grid(arr))
    return grids


def questions_LL(config: Configuration) -> list[tuple[Line, Line]]:
    """Line-line questions: (Alice's line, Bob's line)."""
    if config.kind is Kind.GRID:
        return [(r, c) for r in config.rows() for c in config.columns()]
    out = []
    for l1 in config.lines:
        for l2 in config.lines:
            if l1.key != l2.key and l1.key & l2.key:
                out.append((l1, l2))
    return out


def questions_PL(config: Configuration) -> list[tuple[int, Line]]:
    """Point-line questions: (Alice's point, Bob's line), for every incidence."""
    return [(p, ln) for ln in config.lines for p in ln.points]


def grid_labels(config: Configuration) -> list[list[str]]:
    if config.kind is not Kind.GRID:
        raise GeometryError("not a grid")
    return [[format_pauli(config.labels[3 * r + c]) for c in range(3)] for r in range(3)]


def to_text(config: Configuration) -> str:
    """One line per context: the ordered labels followed by the sign."""
    out = [f"# {config.kind.value}: {config.num_points} points, {len(config.lines)} lines"]
    for ln in config.lines:
        names = " ".join(format_pauli(o) for o in config.observables(ln))
        out.append(f"{names} {'+' if ln.sign > 0 else '-'}")
    return "\n".join(out) + "\n"


def to_dot(config: Configuration) -> str:
    """Graphviz description: points as nodes, each line as a coloured 3-clique."""
    out = [f"graph {config.kind.value} {{"]
    for p, lab in enumerate(config.labels):
        out.append(f'  p{p} [label="{format_pauli(lab)}"];')
    for i, ln in enumerate(config.lines):
        color = "blue" if ln.sign < 0 else "black"
        a, b, c = ln.points
        out.append(f'  p{a} -- p{b} -- p{c} [color={color}, label="L{i}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def mermin_square() -> Configuration:
    """The grid with rows (YZ ZY XX), (ZX XZ YY), (XY YX ZZ)."""
    return build_grid([["YZ", "ZY", "XX"], ["ZX", "XZ", "YY"], ["XY", "YX", "ZZ"]])


def mermin_test_grid() -> Configuration:
    """The grid with rows (IX XI XX), (ZI IZ ZZ), (ZX XZ YY)."""
    return build_grid([["IX", "XI", "XX"], ["ZI", "IZ", "ZZ"], ["ZX", "XZ", "YY"]])
