import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qetlab.errors import InvalidState, InvalidUnitary
from qetlab.linalg import (BUILTIN_GATES, QState, Unitary, apply_unitary, measure_prob,
                           post_measure, projector_part, random_state, random_unitary, tensor)

H, CNOT = BUILTIN_GATES["H"], BUILTIN_GATES["CNOT"]
S2 = 1 / math.sqrt(2)


def state(**amps):
    n = len(next(iter(amps))) - 1
    v = np.zeros(2 ** n, dtype=complex)
    for bits, a in amps.items():
        v[int(bits[1:], 2)] = a
    return QState(n, v)


PSI = state(b001=0.5, b011=S2, b100=0.5)
THIRDS = state(b00=1 / math.sqrt(3), b10=1 / math.sqrt(3), b11=1 / math.sqrt(3))


def test_tensor_basis():
    assert tensor(QState.basis("0"), QState.basis("1")) == QState.basis("01")


def test_tensor_padding_interleaves_zeros():
    out = tensor(PSI, QState.basis("0"))
    assert np.allclose(out.amplitudes[::2], PSI.amplitudes)
    assert np.allclose(out.amplitudes[1::2], 0)


def test_tensor_plus_plus():
    plus = QState(1, [S2, S2])
    assert np.allclose(tensor(plus, plus).amplitudes, [0.5, 0.5, 0.5, 0.5])


def test_hadamard_on_zero():
    assert apply_unitary(H, QState.basis("0")) == QState(1, [S2, S2])


def test_hadamard_acts_on_first_qubit():
    assert apply_unitary(H, QState.basis("100")) == state(b000=S2, b100=-S2)


def test_wide_gate_on_narrow_state_is_identity():
    assert apply_unitary(CNOT, QState.basis("1")) == QState.basis("1")


def test_measurement_values():
    assert measure_prob(1, THIRDS) == pytest.approx(2 / 3, abs=1e-12)
    assert post_measure(1, THIRDS) == state(b10=S2, b11=S2)
    assert measure_prob(0, PSI) == pytest.approx(0.75, abs=1e-12)
    assert post_measure(1, PSI) == QState.basis("100")
    assert measure_prob(0, QState.basis("0")) == 1.0


def test_zero_probability_collapse_is_identity():
    one = QState.basis("1")
    assert post_measure(0, one) is one


def test_invalid_states_rejected():
    with pytest.raises(InvalidState):
        QState(1, [1, 1])
    with pytest.raises(InvalidState):
        QState(1, [np.nan, 1])
    with pytest.raises(InvalidState):
        QState(2, [1, 0])
    with pytest.raises(InvalidState):
        QState.from_amplitudes([1, 0, 0])


def test_invalid_unitary_rejected():
    with pytest.raises(InvalidUnitary):
        Unitary.from_matrix("B", [[1, 1], [0, 1]])
    with pytest.raises(InvalidUnitary):
        Unitary.from_matrix("B", np.eye(3))


@pytest.mark.parametrize("name", sorted(BUILTIN_GATES))
def test_builtin_gates_unitary(name):
    u = BUILTIN_GATES[name]
    assert np.allclose(u.matrix @ u.matrix.conj().T, np.eye(2 ** u.n_qubits), atol=1e-12)


qubits = st.integers(1, 4)
seeds = st.integers(0, 2 ** 32 - 1)


@given(qubits, seeds)
def test_probabilities_sum_to_one(n, seed):
    s = random_state(np.random.default_rng(seed), n)
    assert measure_prob(0, s) + measure_prob(1, s) == pytest.approx(1, abs=1e-9)


@given(qubits, seeds, st.sampled_from([0, 1]))
def test_collapse_normalised(n, seed, i):
    s = random_state(np.random.default_rng(seed), n)
    if measure_prob(i, s) > 0:
        assert np.linalg.norm(post_measure(i, s).amplitudes) == pytest.approx(1, abs=1e-9)


@given(qubits, st.integers(1, 3), seeds)
def test_unitaries_preserve_norm(n, k, seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, n)
    for u in [random_unitary(rng, k), *BUILTIN_GATES.values()]:
        assert np.linalg.norm(apply_unitary(u, s).amplitudes) == pytest.approx(1, abs=1e-9)


@given(seeds)
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_state(rng, n) for n in (1, 2, 1))
    assert tensor(tensor(a, b), c).allclose(tensor(a, tensor(b, c)), 1e-12)


@given(qubits, seeds)
def test_reconstruction(n, seed):
    s = random_state(np.random.default_rng(seed), n)
    parts = []
    for i in (0, 1):
        p = measure_prob(i, s)
        collapsed = post_measure(i, s).amplitudes if p > 1e-12 else np.zeros_like(s.amplitudes)
        assert np.allclose(math.sqrt(p) * collapsed, projector_part(i, s), atol=1e-9)
        parts.append(projector_part(i, s))
    assert np.allclose(parts[0] + parts[1], s.amplitudes, atol=1e-12)
