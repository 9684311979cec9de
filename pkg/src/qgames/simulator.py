"""Dense state-vector simulation with Pauli-trajectory noise and readout error.

Bit ``k`` of a basis index, counted from the most significant end, is qubit
``k``; ``|0101>`` therefore has qubits 1 and 3 set.  A measured bit ``b``
corresponds to the observable outcome ``(-1)**b``.

Noisy runs are Monte-Carlo trajectories: every shot draws its own error
pattern (which gate is followed by which Pauli).  Shots that drew the same
pattern share one state-vector evolution, so cost scales with the number of
distinct patterns rather than with the number of shots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .pauli import PauliObservable

UNITARY_TOL = 1e-10
NORM_TOL = 1e-9
STATE_TOL = 1e-8
DEFAULT_BATCH = 1 << 16

_S2 = 1 / math.sqrt(2)
_FIXED = {
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "S": np.diag([1, 1j]).astype(complex),
    "SDG": np.diag([1, -1j]).astype(complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "I": np.eye(2, dtype=complex),
    "CX": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}
_ARITY = {"H": 1, "S": 1, "SDG": 1, "X": 1, "Y": 1, "Z": 1, "I": 1, "U1": 1,
          "CX": 2, "SWAP": 2, "U2": 2}
_INVERSE = {"H": "H", "S": "SDG", "SDG": "S", "X": "X", "Y": "Y", "Z": "Z", "I": "I",
            "CX": "CX", "SWAP": "SWAP"}

# Error code c in 1..3 -> single-qubit Pauli; c in 1..15 -> (first, second) pair.
_PAULI1 = ["I", "X", "Y", "Z"]


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """A gate acting on one or two qubits.

    ``kind`` is one of H, S, SDG, X, Y, Z, I, CX, SWAP, U1, U2.  CX targets
    are ``(control, target)``.  ``matrix`` is only used for U1/U2 and does
    not take part in equality.
    """

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        kind = self.kind.upper()
        if kind == "CNOT":
            kind = "CX"
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if kind not in _ARITY:
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != _ARITY[kind]:
            raise SimulationError(f"{kind} needs {_ARITY[kind]} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise SimulationError(f"{kind} targets must be distinct, got {self.targets}")
        if kind in ("U1", "U2"):
            if self.matrix is None:
                raise SimulationError(f"{kind} requires a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            dim = 2 ** len(self.targets)
            if m.shape != (dim, dim):
                raise SimulationError(f"{kind} matrix must be {dim}x{dim}")
            if not np.allclose(m.conj().T @ m, np.eye(dim), atol=UNITARY_TOL):
                raise SimulationError(f"{kind} matrix is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @property
    def arity(self) -> int:
        return len(self.targets)

    def unitary(self) -> np.ndarray:
        return self.matrix if self.kind in ("U1", "U2") else _FIXED[self.kind]

    def inverse(self) -> Gate:
        if self.kind in ("U1", "U2"):
            return Gate(self.kind, self.targets, self.matrix.conj().T)
        return Gate(_INVERSE[self.kind], self.targets)

    def relabel(self, mapping: Mapping[int, int] | Sequence[int]) -> Gate:
        return Gate(self.kind, tuple(mapping[t] for t in self.targets), self.matrix)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    measured: tuple[int, ...] = ()
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "measured", tuple(int(q) for q in self.measured))
        for g in self.gates:
            if any(not 0 <= t < self.n_qubits for t in g.targets):
                raise SimulationError(f"gate {g.kind}{g.targets} outside {self.n_qubits} qubits")
        if any(not 0 <= q < self.n_qubits for q in self.measured):
            raise SimulationError("measured qubit out of range")
        if len(set(self.measured)) != len(self.measured):
            raise SimulationError("measured qubits must be distinct")

    def two_qubit_count(self) -> int:
        """Two-qubit gate count with each SWAP costed as three CNOTs."""
        return sum(3 if g.kind == "SWAP" else 1 for g in self.gates if g.arity == 2)

    def gates_on(self, qubit: int) -> list[Gate]:
        return [g for g in self.gates if qubit in g.targets]


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing probability after each 1q/2q gate plus readout flip probability.

    ``readout_overrides`` maps a qubit index to its own flip probability.
    """

    p1: float = 0.0
    p2: float = 0.0
    readout: float = 0.0
    readout_overrides: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = [self.p1, self.p2, self.readout, *self.readout_overrides.values()]
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise SimulationError(f"noise probabilities must lie in [0, 1]: {values}")
        object.__setattr__(self, "readout_overrides", dict(self.readout_overrides))

    def readout_for(self, qubit: int) -> float:
        return self.readout_overrides.get(qubit, self.readout)

    @property
    def is_trivial(self) -> bool:
        return self.p1 == 0 and self.p2 == 0 and self.readout == 0 and not any(
            self.readout_overrides.values()
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "p1": self.p1,
            "p2": self.p2,
            "readout": self.readout,
            "readout_overrides": {str(k): v for k, v in sorted(self.readout_overrides.items())},
        }


@dataclass(frozen=True)
class ShotCounts:
    """Histogram of measured bitstrings (first measured qubit leftmost)."""

    counts: dict[str, int]
    shots: int

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.shots:
            raise SimulationError("counts do not sum to the shot total")

    def probabilities(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}


# ---------------------------------------------------------------------------
# state-vector kernels


def zero_state(n_qubits: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(bits: str) -> np.ndarray:
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def _n_of(state: np.ndarray) -> int:
    n = int(state.shape[-1]).bit_length() - 1
    if 2**n != state.shape[-1]:
        raise SimulationError("state length is not a power of two")
    return n


def _apply_batched(states: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply ``u`` to ``targets`` of every row of ``states`` (shape (B, 2**n))."""
    k = len(targets)
    b = states.shape[0]
    t = states.reshape((b,) + (2,) * n)
    ut = u.reshape((2,) * (2 * k))
    axes = [q + 1 for q in targets]
    out = np.tensordot(t, ut, axes=(axes, list(range(k, 2 * k))))
    # tensordot puts the new gate axes last; move them back into place
    out = np.moveaxis(out, list(range(n + 1 - k, n + 1)), axes)
    return out.reshape(b, 2**n)


def apply_gate(state: np.ndarray, gate: Gate) -> np.ndarray:
    n = _n_of(state)
    if any(not 0 <= t < n for t in gate.targets):
        raise SimulationError(f"gate {gate.kind}{gate.targets} outside {n} qubits")
    return _apply_batched(state[None, :], gate.unitary(), gate.targets, n)[0]


def apply_pauli(state: np.ndarray, op: PauliObservable, qubits: Sequence[int]) -> np.ndarray:
    if op.n != len(qubits):
        raise SimulationError(f"{op} acts on {op.n} qubits, got qubit list {list(qubits)}")
    n = _n_of(state)
    if any(not 0 <= q < n for q in qubits):
        raise SimulationError("observable qubits outside the state")
    out = state[None, :]
    for k, q in enumerate(qubits):
        letter = op.factor(k)
        if letter != "I":
            out = _apply_batched(out, _FIXED[letter], [q], n)
    return op.phase * out[0]


def final_state(circuit: Circuit, initial: np.ndarray | None = None) -> np.ndarray:
    psi = zero_state(circuit.n_qubits) if initial is None else np.array(initial, dtype=complex)
    for g in circuit.gates:
        psi = apply_gate(psi, g)
    return psi


def expectation(
    state: np.ndarray, observable: PauliObservable, qubits: Sequence[int] | None = None
) -> float:
    """``<state| observable |state>`` with the observable placed on ``qubits``."""
    if qubits is None:
        qubits = range(observable.n)
    return tensor_expectation(state, [(observable, qubits)])


def tensor_expectation(
    state: np.ndarray, parts: Sequence[tuple[PauliObservable, Sequence[int]]]
) -> float:
    """Expectation of a tensor product of observables on disjoint qubit subsets.

    ``tensor_expectation(psi, [(O, (0, 1)), (O, (2, 3))])`` is ``<psi|O⊗O|psi>``.
    """
    used = [q for _, qs in parts for q in qs]
    if len(set(used)) != len(used):
        raise SimulationError("observable factors overlap")
    phi = state
    for op, qs in parts:
        phi = apply_pauli(phi, op, list(qs))
    val = np.vdot(state, phi)
    if abs(val.imag) > 1e-10:
        raise SimulationError(f"expectation is not real: {val}")
    return float(val.real)


def states_equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = STATE_TOL) -> bool:
    if a.shape != b.shape:
        raise SimulationError("states have different dimensions")
    return abs(np.vdot(a, b)) >= 1 - tol


def marginal_probabilities(state: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Born probabilities over ``qubits`` (first listed qubit is the leading bit)."""
    return _marginals(np.abs(state[None, :]) ** 2, qubits, _n_of(state))[0]


def _marginals(probs: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    b = probs.shape[0]
    t = probs.reshape((b,) + (2,) * n)
    others = tuple(q + 1 for q in range(n) if q not in qubits)
    if others:
        t = t.sum(axis=others)
    kept = sorted(qubits)
    order = [kept.index(q) + 1 for q in qubits]
    t = np.transpose(t, [0] + order)
    return t.reshape(b, 2 ** len(qubits))


# ---------------------------------------------------------------------------
# shot sampling


def prepare_psi_AB() -> Circuit:
    """Two Bell pairs shared as (Alice1, Bob1) and (Alice2, Bob2) on qubits 0..3."""
    return Circuit(4, (Gate("H", (0,)), Gate("H", (1,)), Gate("CX", (0, 2)), Gate("CX", (1, 3))))


def psi_AB() -> np.ndarray:
    return final_state(prepare_psi_AB())


def _lower(gates: Sequence[Gate]) -> list[Gate]:
    out = []
    for g in gates:
        if g.kind == "SWAP":
            a, b = g.targets
            out += [Gate("CX", (a, b)), Gate("CX", (b, a)), Gate("CX", (a, b))]
        else:
            out.append(g)
    return out


def child_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(batch,)))


def _error_paulis(code: int, arity: int) -> list[str]:
    if arity == 1:
        return [_PAULI1[code]]
    return [_PAULI1[code // 4], _PAULI1[code % 4]]


def _run_batch(
    gates: list[Gate],
    n: int,
    measured: tuple[int, ...],
    shots: int,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> np.ndarray:
    g_count = len(gates)
    codes = np.zeros((shots, g_count), dtype=np.int8)
    for j, g in enumerate(gates):
        if g.kind == "I":
            continue
        p = noise.p1 if g.arity == 1 else noise.p2
        if p <= 0:
            continue
        hit = rng.random(shots) < p
        high = 4 if g.arity == 1 else 16
        codes[:, j] = np.where(hit, rng.integers(1, high, size=shots), 0)

    noisy_cols = np.flatnonzero(codes.any(axis=0))
    if noisy_cols.size:
        patterns, inverse = np.unique(codes[:, noisy_cols], axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
    else:
        patterns = np.zeros((1, 0), dtype=np.int8)
        inverse = np.zeros(shots, dtype=np.intp)
    col_of = {int(c): i for i, c in enumerate(noisy_cols)}

    states = np.zeros((patterns.shape[0], 2**n), dtype=complex)
    states[:, 0] = 1.0
    for j, g in enumerate(gates):
        states = _apply_batched(states, g.unitary(), g.targets, n)
        if j not in col_of:
            continue
        col = patterns[:, col_of[j]]
        for code in np.unique(col):
            if code == 0:
                continue
            rows = np.flatnonzero(col == code)
            sub = states[rows]
            for letter, q in zip(_error_paulis(int(code), g.arity), g.targets):
                if letter != "I":
                    sub = _apply_batched(sub, _FIXED[letter], [q], n)
            states[rows] = sub

    probs = _marginals(np.abs(states) ** 2, measured, n)
    probs[probs < 1e-14] = 0.0
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    r = rng.random(shots)
    outcome = (r[:, None] >= cdf[inverse]).sum(axis=1)
    m = len(measured)
    outcome = np.minimum(outcome, 2**m - 1)

    flip_p = np.array([noise.readout_for(q) for q in measured])
    if np.any(flip_p > 0):
        flips = rng.random((shots, m)) < flip_p
        weights = 1 << np.arange(m - 1, -1, -1)
        outcome = outcome ^ (flips @ weights)
    return np.bincount(outcome, minlength=2**m)


def run_histogram(
    circuit: Circuit,
    shots: int,
    noise: NoiseModel | None = None,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
) -> np.ndarray:
    """Like :func:`run` but returns a dense count array indexed by outcome integer."""
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    if not circuit.measured:
        raise SimulationError("circuit measures no qubits")
    noise = noise or NoiseModel()
    gates = _lower(circuit.gates)
    total = np.zeros(2 ** len(circuit.measured), dtype=np.int64)
    for k, start in enumerate(range(0, shots, batch_size)):
        n_batch = min(batch_size, shots - start)
        total += _run_batch(gates, circuit.n_qubits, circuit.measured, n_batch, noise, child_rng(seed, k))
    return total


def run(
    circuit: Circuit,
    shots: int,
    noise: NoiseModel | None = None,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH,
) -> ShotCounts:
    """Sample ``shots`` measurement records of ``circuit``.

    Shots are processed in batches of ``batch_size``; batch ``k`` draws from a
    generator seeded by ``(seed, k)``, so results do not depend on how the
    batches are scheduled.
    """
    hist = run_histogram(circuit, shots, noise, seed, batch_size)
    m = len(circuit.measured)
    counts = {format(i, f"0{m}b"): int(c) for i, c in enumerate(hist) if c}
    return ShotCounts(counts, shots)


# ---------------------------------------------------------------------------
# OpenQASM export

_QASM_NAMES = {"H": "h", "S": "s", "SDG": "sdg", "X": "x", "Y": "y", "Z": "z", "I": "id",
               "CX": "cx", "SWAP": "swap"}


def _fmt_complex(z: complex) -> str:
    re_, im = (0.0 if abs(v) < 1e-15 else v for v in (z.real, z.imag))
    return f"{re_:.12g}" if im == 0 else f"{re_:.12g}{im:+.12g}i"


def to_qasm(circuit: Circuit) -> str:
    """OpenQASM 2.0 text.  U1/U2 gates become opaque gates with their matrix in a comment."""
    head = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    body = []
    opaque = 0
    for g in circuit.gates:
        args = ",".join(f"q[{t}]" for t in g.targets)
        if g.kind in _QASM_NAMES:
            body.append(f"{_QASM_NAMES[g.kind]} {args};")
            continue
        name = f"unitary{opaque}"
        opaque += 1
        params = ",".join(chr(ord("a") + i) for i in range(g.arity))
        head.append(f"opaque {name} {params};")
        rows = "; ".join(" ".join(_fmt_complex(z) for z in row) for row in g.matrix)
        body.append(f"// {name} matrix: [{rows}]")
        body.append(f"{name} {args};")
    head.append(f"qreg q[{circuit.n_qubits}];")
    if circuit.measured:
        head.append(f"creg c[{len(circuit.measured)}];")
    for j, q in enumerate(circuit.measured):
        body.append(f"measure q[{q}] -> c[{j}];")
    return "\n".join(head + body) + "\n"
