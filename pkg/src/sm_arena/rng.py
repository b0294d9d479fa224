"""Deterministic random streams.

Everything stochastic in a run flows from one 64-bit master seed. Streams
for repetitions and sweep tasks are derived by hashing (seed, key...) so
results do not depend on scheduling order. The generator is splitmix64,
implemented with plain integer arithmetic so the compiled kernel and the
pure-Python reference stepper consume identical sequences.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next state, output word)."""
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    z ^= z >> 31
    return state, z


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into a seed; order-sensitive, collision-resistant enough
    for stream separation."""
    state = seed & MASK64
    for k in keys:
        state, out = mix64(state ^ ((k & MASK64) * _GAMMA & MASK64))
        state = out
    _, out = mix64(state)
    return out


def hash_key(text: str) -> int:
    """FNV-1a over UTF-8 bytes; stable across runs and platforms."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


class Stream:
    """splitmix64 stream with the draw helpers the simulator needs."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, out = mix64(self.state)
        return out

    def next_double(self) -> float:
        # 53 uniform bits in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n: int) -> int:
        """Uniform index in [0, n). n must be >= 1."""
        i = int(self.next_double() * n)
        return n - 1 if i >= n else i
