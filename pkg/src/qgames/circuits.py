"""Quantum strategies as circuits: the eigenbasis (unitary) and delegation methods.

Register layout, shared by every builder:

* qubits 0, 1: Alice's halves of the two Bell pairs
* qubits 2, 3: Bob's halves (qubit 0 is paired with 2, qubit 1 with 3)
* qubit 4 (and 5 in line-line delegation): delegation registers

Each builder attaches a :class:`MeasurementPlan` under ``circuit.metadata["plan"]``
describing how measured bits turn into the players' ±1 answers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .geometry import Context
from .pauli import PauliObservable, format_pauli, is_symmetric, to_matrix
from .simulator import UNITARY_TOL, Circuit, Gate, prepare_psi_AB

ALICE = "alice"
BOB = "bob"
ALICE_QUBITS = (0, 1)
BOB_QUBITS = (2, 3)


class CircuitError(ValueError):
    pass


class PointLineUnsupported(CircuitError):
    """The eigenbasis method cannot play the point-line scenario.

    Alice holds a single observable, so the shared state is neither an
    eigenstate of her measurement combined with Bob's basis change nor does
    the construction force agreement at the common position.
    """


class PointNotOnLine(CircuitError):
    pass


class NonIntersectingLines(CircuitError):
    pass


class DegenerateIntersection(CircuitError):
    pass


def bit_to_outcome(bit: int) -> int:
    """Measured bit 0 -> +1, bit 1 -> -1."""
    return 1 - 2 * int(bit)


def _phase_sign(op: PauliObservable) -> int:
    if op.phase_exp not in (0, 2):
        raise CircuitError(f"{op} is not Hermitian")
    return 1 if op.phase_exp == 0 else -1


# ---------------------------------------------------------------------------
# answer post-processing


def complete_triplet(first: int, second: int, sign: int) -> tuple[int, int, int]:
    return first, second, sign * first * second


def apply_skew_flips(outcomes: Sequence[int], context: Context, player: str) -> tuple[int, ...]:
    """Alice negates the outcome of every skew observable; Bob reports as measured."""
    if player == BOB:
        return tuple(outcomes)
    if player != ALICE:
        raise CircuitError(f"unknown player {player!r}")
    return tuple(o if is_symmetric(op) else -o for o, op in zip(outcomes, context.ops))


@dataclass(frozen=True)
class Readout:
    """How one observable's ±1 value is read from measured bits.

    The value is ``phase * (-1) ** (parity of bits at positions)``, where
    positions index the circuit's measured-qubit list.
    """

    positions: tuple[int, ...]
    phase: int = 1

    def value(self, bits: Sequence[int]) -> int:
        parity = sum(int(bits[i]) for i in self.positions) & 1
        return self.phase * bit_to_outcome(parity)

    def to_dict(self) -> dict[str, Any]:
        return {"positions": list(self.positions), "phase": self.phase}


@dataclass(frozen=True)
class PlayerPlan:
    """A player's decoding: a full context (two readouts + parity) or a single point."""

    player: str
    observables: tuple[PauliObservable, ...]
    readouts: tuple[Readout, ...]
    sign: int = 1
    routes: tuple[str, ...] = ()

    @property
    def is_point(self) -> bool:
        return len(self.observables) == 1

    def decode(self, bits: Sequence[int]) -> tuple[int, ...]:
        """Raw answer before skew flips: a triple, or a 1-tuple for a point."""
        vals = [r.value(bits) for r in self.readouts]
        if self.is_point:
            return (vals[0],)
        return complete_triplet(vals[0], vals[1], self.sign)

    def skew_mask(self) -> tuple[bool, ...]:
        if self.player != ALICE:
            return (False,) * len(self.observables)
        return tuple(not is_symmetric(op) for op in self.observables)

    def answer(self, bits: Sequence[int]) -> tuple[int, ...]:
        raw = self.decode(bits)
        return tuple(-v if flip else v for v, flip in zip(raw, self.skew_mask()))

    def to_dict(self) -> dict[str, Any]:
        return {
            "player": self.player,
            "observables": [format_pauli(o) for o in self.observables],
            "sign": self.sign,
            "readouts": [r.to_dict() for r in self.readouts],
            "routes": list(self.routes),
            "skew_flips": list(self.skew_mask()),
        }


@dataclass(frozen=True)
class MeasurementPlan:
    method: str
    alice: PlayerPlan
    bob: PlayerPlan
    delegation: dict[str, int]

    def answers(self, bits: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.alice.answer(bits), self.bob.answer(bits)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "alice": self.alice.to_dict(),
            "bob": self.bob.to_dict(),
            "delegation": dict(self.delegation),
        }


# ---------------------------------------------------------------------------
# eigenbasis method


@dataclass(frozen=True)
class EigenbasisUnitary:
    """Joint eigenbasis of a context.

    Column ``2*b1 + b2`` is the eigenvector with eigenvalue ``(-1)**b1`` for
    the first observable and ``(-1)**b2`` for the second.  The circuit applies
    the conjugate transpose, which maps that eigenvector to ``|b1 b2>``.
    """

    matrix: np.ndarray
    context: Context

    @property
    def transform(self) -> np.ndarray:
        return self.matrix.conj().T


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.flatnonzero(np.abs(v) > 1e-9)[0])
    return v * (abs(v[k]) / v[k])


def common_eigenbasis(context: Context) -> EigenbasisUnitary:
    o1, o2 = (to_matrix(op) for op in context.ops[:2])
    dim = o1.shape[0]
    eye = np.eye(dim)
    cols = []
    for b1, b2 in itertools.product((0, 1), repeat=2):
        proj = (eye + (-1) ** b1 * o1) @ (eye + (-1) ** b2 * o2) / 4
        rank = np.trace(proj).real
        if abs(rank - 1) > 1e-9:
            raise DegenerateIntersection(f"eigenspace ({b1},{b2}) of {context} has dimension {rank:.3g}")
        j = int(np.argmax(np.linalg.norm(proj, axis=0)))
        v = proj[:, j] / np.linalg.norm(proj[:, j])
        cols.append(_fix_phase(v))
    mat = np.column_stack(cols)
    assert np.allclose(mat.conj().T @ mat, eye, atol=UNITARY_TOL)
    return EigenbasisUnitary(mat, context)


def _shared_op(a: Context, b: Context) -> PauliObservable:
    common = [op for op in a.ops if op in b.ops]
    if not common:
        raise NonIntersectingLines(f"{a} and {b} share no observable")
    return common[0]


def _reject_points(*args: object) -> None:
    if any(isinstance(a, PauliObservable) for a in args):
        raise PointLineUnsupported(
            "the unitary method needs a context for both players; "
            "use the delegation method for point-line questions"
        )


def build_unitary_circuit(alice: Context, bob: Context) -> Circuit:
    """Shared state, then each player's eigenbasis transform, then measure qubits 0-3."""
    _reject_points(alice, bob)
    _shared_op(alice, bob)
    ua, ub = common_eigenbasis(alice), common_eigenbasis(bob)
    prep = prepare_psi_AB()
    gates = list(prep.gates) + [
        Gate("U2", ALICE_QUBITS, ua.transform),
        Gate("U2", BOB_QUBITS, ub.transform),
    ]
    plan = MeasurementPlan(
        "unitary",
        PlayerPlan(ALICE, alice.ops, (Readout((0,)), Readout((1,))), alice.sign, ("basis", "basis", "parity")),
        PlayerPlan(BOB, bob.ops, (Readout((2,)), Readout((3,))), bob.sign, ("basis", "basis", "parity")),
        {},
    )
    return Circuit(4, gates, (0, 1, 2, 3), {"plan": plan})


# ---------------------------------------------------------------------------
# delegation method


def basis_change_gates(factor: str, qubit: int) -> list[Gate]:
    """Gates rotating the eigenbasis of a one-qubit Pauli onto the Z basis."""
    factor = factor.upper()
    if factor in ("Z", "I"):
        return []
    if factor == "X":
        return [Gate("H", (qubit,))]
    if factor == "Y":
        return [Gate("SDG", (qubit,)), Gate("H", (qubit,))]
    raise CircuitError(f"not a Pauli factor: {factor!r}")


def _basis_change(op: PauliObservable, qubits: Sequence[int]) -> list[Gate]:
    return [g for k, q in enumerate(qubits) for g in basis_change_gates(op.factor(k), q)]


def _support(op: PauliObservable, qubits: Sequence[int]) -> list[int]:
    return [q for k, q in enumerate(qubits) if op.factor(k) != "I"]


def _delegate(op: PauliObservable, qubits: Sequence[int], ancilla: int) -> list[Gate]:
    """Copy the parity of ``op`` onto ``ancilla`` and restore the data qubits.

    CNOTs run from the highest data qubit down; identity factors get none.
    """
    change = _basis_change(op, qubits)
    cnots = [Gate("CX", (q, ancilla)) for q in reversed(_support(op, qubits))]
    undo = [g.inverse() for g in reversed(change)]
    return change + cnots + undo


def _positions(measured: Sequence[int], qubits: Sequence[int]) -> tuple[int, ...]:
    return tuple(measured.index(q) for q in qubits)


def _direct_readout(op: PauliObservable, qubits: Sequence[int], measured: Sequence[int]) -> Readout:
    return Readout(_positions(measured, _support(op, qubits)), _phase_sign(op))


def _context_block(ctx: Context, qubits: Sequence[int], ancilla: int) -> list[Gate]:
    return _delegate(ctx.ops[0], qubits, ancilla) + _basis_change(ctx.ops[1], qubits)


def _context_plan(player: str, ctx: Context, qubits: Sequence[int], ancilla: int, measured: Sequence[int]) -> PlayerPlan:
    first = Readout(_positions(measured, [ancilla]), _phase_sign(ctx.ops[0]))
    second = _direct_readout(ctx.ops[1], qubits, measured)
    return PlayerPlan(player, ctx.ops, (first, second), ctx.sign, ("delegated", "direct", "parity"))


def build_delegation_circuit_PL(point: PauliObservable, line: Context) -> Circuit:
    """Alice measures ``point`` directly; Bob delegates his first observable to qubit 4."""
    if point not in line:
        raise PointNotOnLine(f"{format_pauli(point)} is not on {line}")
    measured = (0, 1, 2, 3, 4)
    gates = list(prepare_psi_AB().gates)
    gates += _basis_change(point, ALICE_QUBITS)
    gates += _context_block(line, BOB_QUBITS, 4)
    plan = MeasurementPlan(
        "delegation",
        PlayerPlan(ALICE, (point,), (_direct_readout(point, ALICE_QUBITS, measured),), 1, ("direct",)),
        _context_plan(BOB, line, BOB_QUBITS, 4, measured),
        {BOB: 4},
    )
    return Circuit(5, gates, measured, {"plan": plan})


def build_delegation_circuit_LL(alice: Context, bob: Context) -> Circuit:
    """Both players delegate their first observable (Alice to 4, Bob to 5)."""
    if isinstance(alice, PauliObservable) or isinstance(bob, PauliObservable):
        raise CircuitError("use build_delegation_circuit_PL for point-line questions")
    _shared_op(alice, bob)
    measured = (0, 1, 2, 3, 4, 5)
    gates = list(prepare_psi_AB().gates)
    gates += _context_block(alice, ALICE_QUBITS, 4)
    gates += _context_block(bob, BOB_QUBITS, 5)
    plan = MeasurementPlan(
        "delegation",
        _context_plan(ALICE, alice, ALICE_QUBITS, 4, measured),
        _context_plan(BOB, bob, BOB_QUBITS, 5, measured),
        {ALICE: 4, BOB: 5},
    )
    return Circuit(6, gates, measured, {"plan": plan})


def plan_of(circuit: Circuit) -> MeasurementPlan:
    return circuit.metadata["plan"]
