"""Entropy sources and bit-stream plumbing.

Three source kinds share one interface: a pseudorandom source built on
SplitMix64, a quantum-simulated source that measures a Hadamard-rotated
qubit per bit (see :mod:`randlab.qsim`), and a replay source that plays
back a recorded bit sequence. Everything downstream (weight init, split
selection, bagging, shuffles) draws through this interface only, so any
consumer can be rerun bit-for-bit from a recording.

Bit order is MSB-first: the first bit drawn for an n-bit integer is its
most significant bit, i.e. the integer equals the drawn bit string read
as a binary numeral.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from randlab import qsim
from randlab.errors import (
    FormatError,
    InvalidBounds,
    InvalidParams,
    InvalidWidth,
    ReplayExhausted,
)

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Salt applied to the physical-provider seed inside the quantum-simulated
# source, so QuantumSim(seed=s) and Pseudo(seed=s) never share a stream.
_PROVIDER_SALT = 0xD1B54A32D192ED03

_UINT32_MAX = 2**32 - 1


def pseudo_next_word(state):
    """Advance a SplitMix64 state by one step.

    Returns (new_state, word). Reference values: from state 0 the first
    three words are 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
    0x06C45D188009454F.
    """
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def _pseudo_word_block(state, count):
    """Vectorized SplitMix64: `count` words in one shot.

    Matches `count` repeated calls of pseudo_next_word exactly.
    """
    steps = np.arange(1, count + 1, dtype=np.uint64)
    states = np.uint64(state) + steps * np.uint64(_GAMMA)
    z = states
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return int(states[-1]), z


def _words_to_bits(words):
    """Unpack 64-bit words into a bit array, MSB of each word first."""
    return np.unpackbits(words.astype(">u8").view(np.uint8))


class EntropyKind(Enum):
    PSEUDO = "Pseudo"
    QUANTUM_SIM = "QuantumSim"
    REPLAY = "Replay"


@dataclass
class EntropyConfig:
    """Which source to build and how to seed it.

    `run_index` follows the convention that model i in a batch runs with
    seed i; when `seed` is left unset it defaults to `run_index`.
    """

    kind: EntropyKind
    seed: int | None = None
    run_index: int = 1

    def __post_init__(self):
        if self.run_index < 1:
            raise InvalidParams("run_index must be >= 1")
        if self.seed is None:
            self.seed = self.run_index
        if not 0 <= self.seed <= _MASK64:
            raise InvalidParams("seed must fit in 64 unsigned bits")


@dataclass
class BitRecord:
    """A recorded bit sequence plus where it came from."""

    bits: np.ndarray
    source_kind: EntropyKind
    created_at: float = field(default_factory=time.time)
    source_seed: int | None = None

    def __len__(self):
        return len(self.bits)


class EntropySource:
    """Base class: buffers bits and serves them in draw order.

    Subclasses implement _refill() to extend the buffer. All draws are
    deterministic given (kind, seed).
    """

    kind: EntropyKind

    def __init__(self):
        self._buffer = np.empty(0, dtype=np.uint8)
        self._pos = 0

    def _refill(self):
        raise NotImplementedError

    def _take(self, count):
        while len(self._buffer) - self._pos < count:
            self._refill()
        out = self._buffer[self._pos : self._pos + count]
        self._pos += count
        return out

    def next_bit(self):
        """Return the next bit (0 or 1)."""
        if self._pos >= len(self._buffer):
            self._refill()
        bit = int(self._buffer[self._pos])
        self._pos += 1
        return bit

    def next_uint(self, n_bits):
        """Draw exactly n_bits bits and pack them MSB-first."""
        if not isinstance(n_bits, int) or isinstance(n_bits, bool):
            raise InvalidWidth(f"n_bits must be an integer, got {n_bits!r}")
        if not 1 <= n_bits <= 64:
            raise InvalidWidth(f"n_bits must be in 1..64, got {n_bits}")
        bits = self._take(n_bits)
        packed = np.packbits(bits)  # pads on the right with zeros
        value = int.from_bytes(packed.tobytes(), "big")
        return value >> (8 * len(packed) - n_bits)

    def next_bounded(self, lo, hi):
        """Uniform real in [lo, hi], endpoints included.

        Consumes exactly 32 bits; integer 0 maps to lo and 2**32 - 1
        maps to hi exactly.
        """
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise InvalidBounds(f"bounds must be finite, got ({lo}, {hi})")
        if lo >= hi:
            raise InvalidBounds(f"need lo < hi, got ({lo}, {hi})")
        word = self.next_uint(32)
        if word == 0:
            return float(lo)
        if word == _UINT32_MAX:
            return float(hi)
        value = lo + (word / _UINT32_MAX) * (hi - lo)
        # guard against float rounding pushing past an endpoint
        return min(max(value, lo), hi)

    def record_bits(self, count):
        """Draw `count` bits and return them as a replayable BitRecord."""
        if count < 0:
            raise InvalidParams("count must be >= 0")
        bits = self._take(count).copy()
        return BitRecord(
            bits=bits,
            source_kind=self.kind,
            source_seed=getattr(self, "seed", None),
        )


class PseudoSource(EntropySource):
    """SplitMix64-backed source; bits are its words unpacked MSB-first."""

    kind = EntropyKind.PSEUDO
    _BLOCK_WORDS = 512

    def __init__(self, seed):
        super().__init__()
        self.seed = seed & _MASK64
        self._state = self.seed

    def _refill(self):
        self._state, words = _pseudo_word_block(self._state, self._BLOCK_WORDS)
        fresh = _words_to_bits(words)
        if self._pos < len(self._buffer):
            fresh = np.concatenate([self._buffer[self._pos :], fresh])
        self._buffer = fresh
        self._pos = 0


class SplitMixProvider:
    """Uniform reals in [0, 1) from a SplitMix64 stream (53-bit mantissa).

    One word is consumed per real, in both the scalar and block paths,
    so the two paths are interchangeable mid-stream.
    """

    def __init__(self, seed):
        self._state = seed & _MASK64

    def __call__(self):
        self._state, word = pseudo_next_word(self._state)
        return (word >> 11) * 2.0**-53

    def block(self, count):
        self._state, words = _pseudo_word_block(self._state, count)
        return (words >> np.uint64(11)).astype(np.float64) * 2.0**-53


class QuantumSimSource(EntropySource):
    """Simulated QRNG: each bit measures a Hadamard-rotated |0> qubit.

    Software cannot host true quantum indeterminacy, so measurement
    consumes an injected uniform-real provider. The default provider is
    a SplitMix64 stream seeded from `seed` XOR a fixed salt, keeping it
    decorrelated from any PseudoSource under test with the same seed.

    The buffer refill batches whole blocks of measurements through
    qsim.qrng_bit_block; that helper is property-tested to agree bit for
    bit with repeated single-bit qrng_bit calls on a shared provider.
    """

    kind = EntropyKind.QUANTUM_SIM
    _BLOCK_BITS = 4096

    def __init__(self, seed, provider=None):
        super().__init__()
        self.seed = seed & _MASK64
        if provider is None:
            provider = SplitMixProvider(self.seed ^ _PROVIDER_SALT)
        self._provider = provider

    def _refill(self):
        fresh = qsim.qrng_bit_block(self._provider, self._BLOCK_BITS)
        if self._pos < len(self._buffer):
            fresh = np.concatenate([self._buffer[self._pos :], fresh])
        self._buffer = fresh
        self._pos = 0


class ReplaySource(EntropySource):
    """Plays back a BitRecord; raises ReplayExhausted past its end."""

    kind = EntropyKind.REPLAY

    def __init__(self, record):
        super().__init__()
        if isinstance(record, BitRecord):
            bits = record.bits
        else:
            bits = record
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or (len(bits) and bits.max() > 1):
            raise InvalidParams("a replay record must be a flat 0/1 sequence")
        self._buffer = bits
        self._length = len(bits)

    def _refill(self):
        raise ReplayExhausted(
            f"replay record exhausted after {self._length} bits"
        )

    def remaining(self):
        return self._length - self._pos


def make_source(config, record=None):
    """Build the source a config describes.

    Replay configs require the `record` argument.
    """
    if config.kind is EntropyKind.PSEUDO:
        return PseudoSource(config.seed)
    if config.kind is EntropyKind.QUANTUM_SIM:
        return QuantumSimSource(config.seed)
    if config.kind is EntropyKind.REPLAY:
        if record is None:
            raise InvalidParams("Replay kind requires an attached BitRecord")
        return ReplaySource(record)
    raise InvalidParams(f"unknown entropy kind {config.kind!r}")


def save_record(record, path):
    """Write a BitRecord: a `#kind=... seed=...` header plus one bit line."""
    seed = record.source_seed if record.source_seed is not None else 0
    bits = "".join("1" if b else "0" for b in record.bits)
    with open(path, "w") as fh:
        fh.write(f"#kind={record.source_kind.value} seed={seed}\n")
        fh.write(bits + "\n")


def load_record(path):
    """Read a bit-record file written by save_record."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#kind="):
        raise FormatError(f"{path}: missing '#kind=... seed=...' header")
    header = lines[0][1:]
    fields = dict(
        part.split("=", 1) for part in header.split() if "=" in part
    )
    if "kind" not in fields or "seed" not in fields:
        raise FormatError(f"{path}: header must carry kind and seed")
    try:
        kind = EntropyKind(fields["kind"])
    except ValueError:
        raise FormatError(f"{path}: unknown kind {fields['kind']!r}") from None
    try:
        seed = int(fields["seed"])
    except ValueError:
        raise FormatError(f"{path}: seed is not an integer") from None
    bit_text = lines[1] if len(lines) > 1 else ""
    if set(bit_text) - {"0", "1"}:
        raise FormatError(f"{path}: bit line may contain only 0 and 1")
    bits = np.frombuffer(bit_text.encode(), dtype=np.uint8) - ord("0")
    return BitRecord(bits=bits, source_kind=kind, source_seed=seed)
