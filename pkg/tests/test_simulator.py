import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgames.pauli import all_paulis, parse, y_count
from qgames.simulator import (
    Circuit,
    Gate,
    NoiseModel,
    SimulationError,
    apply_gate,
    basis_state,
    expectation,
    final_state,
    marginal_probabilities,
    psi_AB,
    run,
    run_histogram,
    states_equal_up_to_global_phase,
    tensor_expectation,
    to_qasm,
    zero_state,
)

# dense oracle: qubit 0 is the most significant bit
_I = np.eye(2)
_ONE = {
    "H": np.array([[1, 1], [1, -1]]) / math.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "I": _I,
}


def dense(gate: Gate, n: int) -> np.ndarray:
    if gate.arity == 1:
        mats = [_ONE[gate.kind] if q == gate.targets[0] else _I for q in range(n)]
        return reduce(np.kron, mats)
    # permutation-style construction for CX / SWAP, column by column
    u = np.zeros((2**n, 2**n), dtype=complex)
    a, b = gate.targets
    for col in range(2**n):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        if gate.kind == "CX" and bits[a]:
            bits[b] ^= 1
        elif gate.kind == "SWAP":
            bits[a], bits[b] = bits[b], bits[a]
        u[int("".join(map(str, bits)), 2), col] = 1
    return u


gate_kinds = st.sampled_from(["H", "S", "SDG", "X", "Y", "Z", "CX", "SWAP"])


@st.composite
def circuits(draw, n=3, max_gates=12):
    gates = []
    for _ in range(draw(st.integers(0, max_gates))):
        kind = draw(gate_kinds)
        if kind in ("CX", "SWAP"):
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            gates.append(Gate(kind, (a, b)))
        else:
            gates.append(Gate(kind, (draw(st.integers(0, n - 1)),)))
    return Circuit(n, gates, tuple(range(n)))


class TestGates:
    @pytest.mark.parametrize("kind", ["H", "S", "SDG", "X", "Y", "Z"])
    def test_inverse(self, kind):
        g = Gate(kind, (0,))
        s = apply_gate(apply_gate(basis_state("1"), Gate("H", (0,))), g)
        back = apply_gate(s, g.inverse())
        assert np.allclose(back, apply_gate(basis_state("1"), Gate("H", (0,))))

    def test_cnot_alias(self):
        assert Gate("cnot", (0, 1)) == Gate("CX", (0, 1))

    @pytest.mark.parametrize("bad", [("CX", (0,)), ("H", (0, 1)), ("CX", (1, 1)), ("FOO", (0,))])
    def test_bad_gates(self, bad):
        with pytest.raises(SimulationError):
            Gate(*bad)

    def test_non_unitary_rejected(self):
        with pytest.raises(SimulationError):
            Gate("U1", (0,), np.array([[1, 1], [0, 1]]))

    def test_custom_unitary(self):
        u = np.array([[0, 1j], [1j, 0]])
        s = apply_gate(zero_state(1), Gate("U1", (0,), u))
        assert np.allclose(s, [0, 1j])

    def test_out_of_range(self):
        with pytest.raises(SimulationError):
            Circuit(2, [Gate("H", (2,))])

    def test_swap_counts_three(self):
        c = Circuit(3, [Gate("SWAP", (0, 1)), Gate("CX", (1, 2)), Gate("H", (0,))])
        assert c.two_qubit_count() == 4


class TestStates:
    @given(circuits())
    @settings(max_examples=60, deadline=None)
    def test_against_dense_oracle(self, circuit):
        expect = zero_state(3)
        for g in circuit.gates:
            expect = dense(g, 3) @ expect
        got = final_state(circuit)
        assert np.allclose(got, expect, atol=1e-12)
        assert abs(np.linalg.norm(got) - 1) < 1e-12

    def test_basis_ordering(self):
        s = final_state(Circuit(3, [Gate("X", (0,))]))
        assert np.argmax(np.abs(s)) == 0b100

    def test_psi_ab_amplitudes(self):
        s = psi_AB()
        expect = np.zeros(16)
        expect[[0b0000, 0b0101, 0b1010, 0b1111]] = 0.5
        assert np.allclose(s, expect)

    @pytest.mark.parametrize("op", [p.letters for p in all_paulis(2)])
    def test_bell_rule(self, op):
        o = parse(op)
        val = tensor_expectation(psi_AB(), [(o, (0, 1)), (o, (2, 3))])
        assert abs(val - (-1) ** y_count(o)) < 1e-10

    def test_single_expectation(self):
        plus = final_state(Circuit(1, [Gate("H", (0,))]))
        assert abs(expectation(plus, parse("X"), (0,)) - 1) < 1e-12
        assert abs(expectation(plus, parse("Z"), (0,))) < 1e-12

    def test_global_phase(self):
        s = psi_AB()
        assert states_equal_up_to_global_phase(s, 1j * s)
        assert not states_equal_up_to_global_phase(s, basis_state("0000"))

    def test_marginals(self):
        p = marginal_probabilities(psi_AB(), (0, 2))
        assert np.allclose(p, [0.5, 0, 0, 0.5])


class TestSampling:
    def test_born_rule(self):
        # amplitudes cos/sin of a rotated qubit plus an entangled pair
        theta = 0.7
        u = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        c = Circuit(3, [Gate("U1", (0,), u), Gate("H", (1,)), Gate("CX", (1, 2))], (0, 1, 2))
        shots = 100_000
        hist = run_histogram(c, shots, seed=11)
        probs = np.abs(final_state(c)) ** 2
        for k in range(8):
            sd = math.sqrt(max(probs[k] * (1 - probs[k]), 1e-12) / shots)
            assert abs(hist[k] / shots - probs[k]) <= 4 * sd + 1e-12

    def test_zero_probability_never_sampled(self):
        c = Circuit(2, [Gate("H", (0,)), Gate("CX", (0, 1))], (0, 1))
        counts = run(c, 50_000, seed=3).counts
        assert set(counts) <= {"00", "11"}

    def test_counts_order_and_total(self):
        c = Circuit(2, [Gate("X", (0,))], (0, 1))
        sc = run(c, 100, seed=0)
        assert sc.counts == {"10": 100}
        assert sc.probabilities() == {"10": 1.0}

    def test_measured_order(self):
        c = Circuit(2, [Gate("X", (0,))], (1, 0))
        assert run(c, 10).counts == {"01": 10}

    def test_deterministic(self):
        c = Circuit(2, [Gate("H", (0,)), Gate("H", (1,))], (0, 1))
        noise = NoiseModel(0.1, 0.1, 0.05)
        a = run_histogram(c, 20_000, noise, seed=5, batch_size=4096)
        b = run_histogram(c, 20_000, noise, seed=5, batch_size=4096)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, run_histogram(c, 20_000, noise, seed=6, batch_size=4096))

    def test_trivial_noise_matches_noiseless(self):
        c = Circuit(2, [Gate("H", (0,)), Gate("CX", (0, 1))], (0, 1))
        assert np.array_equal(run_histogram(c, 5000, None, 9), run_histogram(c, 5000, NoiseModel(0, 0, 0), 9))

    def test_no_measurement(self):
        with pytest.raises(SimulationError):
            run(Circuit(1, [Gate("H", (0,))]), 10)


def within(count, shots, p, k=4.0):
    sd = math.sqrt(max(p * (1 - p), 1e-12) / shots)
    return abs(count / shots - p) <= k * sd


class TestNoise:
    shots = 200_000

    def test_single_qubit_depolarizing(self):
        # X then measure: an X or Y error (2 of 3) flips the result
        p = 0.06
        hist = run_histogram(Circuit(1, [Gate("X", (0,))], (0,)), self.shots, NoiseModel(p1=p), seed=1)
        assert within(hist[0], self.shots, 2 * p / 3)

    def test_two_qubit_depolarizing(self):
        # CX on |00>: control flips for 8 of the 15 Paulis (X or Y on the first factor)
        p = 0.09
        c = Circuit(2, [Gate("CX", (0, 1))], (0, 1))
        hist = run_histogram(c, self.shots, NoiseModel(p2=p), seed=2)
        assert within(hist[0b10] + hist[0b11], self.shots, 8 * p / 15)
        assert within(hist[0b01] + hist[0b11], self.shots, 8 * p / 15)
        assert within(hist[0b11], self.shots, 4 * p / 15)

    def test_readout(self):
        c = Circuit(2, [Gate("X", (0,))], (0, 1))
        hist = run_histogram(c, self.shots, NoiseModel(readout=0.05, readout_overrides={1: 0.2}), seed=3)
        assert within(hist[0b00] + hist[0b01], self.shots, 0.05)
        assert within(hist[0b01] + hist[0b11], self.shots, 0.2)

    def test_swap_noise_is_three_cnots(self):
        # SWAP on |10>: each of the three CNOTs may flip qubit 1 after the swap
        p = 0.05
        c = Circuit(2, [Gate("X", (0,)), Gate("SWAP", (0, 1))], (0, 1))
        hist = run_histogram(c, self.shots, NoiseModel(p2=p), seed=4)
        ideal = hist[0b01] / self.shots
        assert ideal < 1 - 2 * p  # more loss than one two-qubit gate would give
        assert ideal > (1 - p) ** 3 - 0.01

    @pytest.mark.parametrize("p", [1e-3, 1e-4, 0.0])
    def test_vanishing_noise_converges(self, p):
        c = Circuit(3, [Gate("H", (0,)), Gate("CX", (0, 1)), Gate("CX", (1, 2)), Gate("S", (2,))], (0, 1, 2))
        shots = 100_000
        ideal = np.abs(final_state(c)) ** 2
        hist = run_histogram(c, shots, NoiseModel(p, p, p), seed=8)
        tv = 0.5 * np.abs(hist / shots - ideal).sum()
        # sampling noise (~0.004 at 1e5 shots) plus at most the error rate times gates
        assert tv <= 0.01 + 8 * p

    def test_invalid_probability(self):
        with pytest.raises(SimulationError):
            NoiseModel(p1=1.5)


def test_qasm_export():
    c = Circuit(2, [Gate("H", (0,)), Gate("CX", (0, 1)), Gate("U1", (1,), np.eye(2))], (0, 1))
    text = to_qasm(c)
    assert text.startswith("OPENQASM 2.0;")
    assert "cx q[0],q[1];" in text
    assert "opaque unitary0 a;" in text
    assert "measure q[1] -> c[1];" in text
