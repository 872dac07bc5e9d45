import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randlab.errors import NotNormalized
from randlab.qsim import (
    GateMatrix,
    HADAMARD,
    QubitState,
    apply_gate,
    hadamard,
    measure,
    qrng_bit,
    qrng_bit_block,
    qubit_one,
    qubit_zero,
)

INV_ROOT2 = 1.0 / math.sqrt(2.0)


def constant_provider(u):
    return lambda: u


class SequenceProvider:
    def __init__(self, values):
        self.values = list(values)

    def __call__(self):
        return self.values.pop(0)


def test_hadamard_is_unitary():
    assert HADAMARD.is_unitary(tol=1e-12)
    product = HADAMARD.matrix @ HADAMARD.matrix.conj().T
    assert np.max(np.abs(product - np.eye(2))) <= 1e-12


def test_non_unitary_matrix_detected():
    assert not GateMatrix(np.array([[1, 1], [0, 1]], dtype=complex)).is_unitary()


def test_hadamard_maps_zero_to_plus():
    state = hadamard(qubit_zero())
    assert state.amp0 == INV_ROOT2
    assert state.amp1 == INV_ROOT2


def test_hadamard_maps_one_to_minus():
    state = hadamard(qubit_one())
    assert state.amp0 == INV_ROOT2
    assert state.amp1 == -INV_ROOT2


def test_hadamard_self_inverse():
    state = hadamard(hadamard(qubit_zero()))
    assert abs(state.amp0 - 1.0) <= 1e-12
    assert abs(state.amp1) <= 1e-12


@given(st.floats(0.01, 0.99), st.floats(0.0, 2.0 * math.pi))
def test_norm_conserved_for_arbitrary_states(p, phase):
    amp0 = math.sqrt(p)
    amp1 = math.sqrt(1.0 - p) * complex(math.cos(phase), math.sin(phase))
    rotated = hadamard(QubitState(amp0, amp1))
    assert abs(rotated.norm_sq() - 1.0) <= 1e-12


def test_not_normalized_raised_past_tolerance():
    with pytest.raises(NotNormalized):
        hadamard(QubitState(1.0 + 0.0j, 1.0 + 0.0j))
    with pytest.raises(NotNormalized):
        measure(QubitState(0.9, 0.0j), constant_provider(0.5))


def test_tiny_norm_error_tolerated():
    amp = math.sqrt(0.5 + 4e-10)
    state = QubitState(amp, INV_ROOT2)
    hadamard(state)  # must not raise


def test_measure_basis_states_are_certain():
    for u in (0.0, 0.3, 0.999):
        bit, post = measure(qubit_zero(), constant_provider(u))
        assert bit == 0
        assert (post.amp0, post.amp1) == (1.0, 0.0)
        bit, post = measure(qubit_one(), constant_provider(u))
        assert bit == 1
        assert (post.amp0, post.amp1) == (0.0, 1.0)


def test_measure_threshold_rule():
    plus = hadamard(qubit_zero())
    assert measure(plus, constant_provider(0.25))[0] == 1
    assert measure(plus, constant_provider(0.75))[0] == 0


def test_collapse_is_idempotent():
    plus = hadamard(qubit_zero())
    for u in (0.1, 0.6, 0.9):
        bit, post = measure(plus, constant_provider(u))
        for u2 in (0.0, 0.5, 0.999):
            bit2, post2 = measure(post, constant_provider(u2))
            assert bit2 == bit
            assert (post2.amp0, post2.amp1) == (post.amp0, post.amp1)


def test_measure_collapses_exactly():
    bit, post = measure(hadamard(qubit_zero()), constant_provider(0.2))
    assert bit == 1
    assert post.amp1 == 1.0 and post.amp0 == 0.0


def test_qrng_bit_threshold_examples():
    assert qrng_bit(constant_provider(0.25)) == 1
    assert qrng_bit(constant_provider(0.75)) == 0


def test_qrng_bit_deterministic_given_provider():
    draws = [0.1, 0.9, 0.4999, 0.5001, 0.2]
    first = [qrng_bit(p) for p in map(constant_provider, draws)]
    second = [qrng_bit(p) for p in map(constant_provider, draws)]
    assert first == second == [1, 0, 1, 0, 1]


def test_block_matches_repeated_single_bits():
    values = [0.1, 0.7, 0.5, 0.49999999, 0.2, 0.88, 0.0, 0.9999]
    singles = [qrng_bit(SequenceProvider([v])) for v in values]
    block = qrng_bit_block(SequenceProvider(values), len(values))
    assert list(block) == singles


def test_frequency_law_small():
    rng = np.random.default_rng(0)
    values = rng.random(10_000)
    bits = qrng_bit_block(SequenceProvider(list(values)), len(values))
    ones = bits.mean()
    assert 0.48 < ones < 0.52  # +/- 4 sigma band


def test_gate_application_is_linear_matrix_product():
    state = QubitState(0.6, 0.8j)
    rotated = apply_gate(HADAMARD, state)
    expected = HADAMARD.matrix @ np.array([0.6, 0.8j])
    assert abs(rotated.amp0 - expected[0]) <= 1e-15
    assert abs(rotated.amp1 - expected[1]) <= 1e-15
