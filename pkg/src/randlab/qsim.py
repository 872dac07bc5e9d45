"""Minimal single-qubit statevector simulator.

The whole program is: prepare |0>, apply the Hadamard gate, measure.
Measurement needs a source of classical uniformity to pick an outcome;
callers inject that as a `physical` provider, a no-arg callable
returning floats in [0, 1). Given the same provider stream the whole
pipeline is deterministic, which is what makes replay testing possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from randlab.errors import NotNormalized

# Invariants (unitarity, norm conservation) hold to INVARIANT_TOL;
# inputs are rejected as NotNormalized only past the looser NORM_TOL.
INVARIANT_TOL = 1e-12
NORM_TOL = 1e-9


@dataclass(frozen=True)
class QubitState:
    """Complex amplitudes over the |0>, |1> basis."""

    amp0: complex
    amp1: complex

    def norm_sq(self):
        return abs(self.amp0) ** 2 + abs(self.amp1) ** 2

    def prob1(self):
        """Probability of observing 1 on measurement."""
        return abs(self.amp1) ** 2


@dataclass(frozen=True, eq=False)
class GateMatrix:
    """A 2x2 complex matrix expected to be unitary."""

    matrix: np.ndarray

    def is_unitary(self, tol=INVARIANT_TOL):
        product = self.matrix @ self.matrix.conj().T
        return bool(np.all(np.abs(product - np.eye(2)) <= tol))


def qubit_zero():
    return QubitState(1.0 + 0.0j, 0.0 + 0.0j)


def qubit_one():
    return QubitState(0.0 + 0.0j, 1.0 + 0.0j)


def hadamard_gate():
    inv_root2 = 1.0 / math.sqrt(2.0)
    return GateMatrix(
        np.array([[inv_root2, inv_root2], [inv_root2, -inv_root2]], dtype=complex)
    )


HADAMARD = hadamard_gate()


def _check_normalized(state):
    if abs(state.norm_sq() - 1.0) > NORM_TOL:
        raise NotNormalized(
            f"squared amplitudes sum to {state.norm_sq()!r}, expected 1"
        )


def apply_gate(gate, state):
    """Apply a gate matrix to a normalized state."""
    _check_normalized(state)
    m = gate.matrix
    return QubitState(
        m[0, 0] * state.amp0 + m[0, 1] * state.amp1,
        m[1, 0] * state.amp0 + m[1, 1] * state.amp1,
    )


def hadamard(state):
    """H maps |0> to (|0>+|1>)/sqrt(2) and |1> to (|0>-|1>)/sqrt(2)."""
    return apply_gate(HADAMARD, state)


def measure(state, physical):
    """Measure in the computational basis.

    Returns (bit, collapsed_state): bit is 1 when the provider's uniform
    draw falls below |amp1|^2, and the post-state is exactly the
    observed basis state.
    """
    _check_normalized(state)
    u = float(physical())
    if u < state.prob1():
        return 1, qubit_one()
    return 0, qubit_zero()


def qrng_bit(physical):
    """One full generator round: prepare |0>, Hadamard, measure."""
    bit, _ = measure(hadamard(qubit_zero()), physical)
    return bit


def qrng_bit_block(physical, count):
    """`count` qrng_bit rounds at once.

    Bit-for-bit identical to calling qrng_bit `count` times on the same
    provider: each round consumes one uniform and compares it against
    the |1> probability of the Hadamard-rotated |0> state. Providers
    exposing a vectorized `block(count)` (see SplitMixProvider) are used
    directly; anything else is looped.
    """
    threshold = hadamard(qubit_zero()).prob1()
    if hasattr(physical, "block"):
        draws = physical.block(count)
    else:
        draws = np.array([float(physical()) for _ in range(count)])
    return (draws < threshold).astype(np.uint8)
