"""Deterministic random number generation.

Every random decision in the toolkit flows through the generators in this
module so that outputs are reproducible bit-for-bit for a given seed,
independent of platform word size, process scheduling, or worker count.

The pipeline is splitmix64 for seed expansion, xoshiro256** for the raw
64-bit stream, and Box-Muller for Gaussian variates.  Bulk Gaussian noise
uses a bank of ``GAUSS_LANES`` xoshiro256** streams advanced in lockstep
with numpy and interleaved round-robin; the lane count is a fixed part of
the stream format, never a function of the machine.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Lane count of the vectorized Gaussian stream. Changing this changes the
# generated noise, so it is part of the output format.
GAUSS_LANES = 256


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state, returning (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 encoding of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def derive_seed(global_seed: int, utterance_id: str) -> int:
    """Per-utterance seed: mixes the global seed with a stable id hash.

    The result depends only on (global_seed, utterance_id), so augmenting a
    corpus yields the same bytes regardless of manifest order or parallelism.
    """
    _, scrambled = splitmix64_next(global_seed & _MASK64)
    _, seed = splitmix64_next(scrambled ^ fnv1a64(utterance_id))
    return seed


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """Scalar xoshiro256** generator, state seeded via splitmix64.

    Used for low-volume draws (mask positions, warp offsets, factor picks)
    where a pure-Python implementation is plenty fast.
    """

    def __init__(self, seed: int):
        s = seed & _MASK64
        state = []
        for _ in range(4):
            s, word = splitmix64_next(s)
            state.append(word)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def rand_below(self, n: int) -> int:
        """Integer in [0, n) via the 128-bit multiply-shift reduction."""
        if n <= 0:
            raise ValueError("rand_below needs a positive bound")
        return (self.next_u64() * n) >> 64

    def rand_inclusive(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.rand_below(hi - lo + 1)


def _lane_states(seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    # One splitmix64 stream fills all lane states: lane k gets words 4k..4k+3.
    s = seed & _MASK64
    words = np.empty(4 * GAUSS_LANES, dtype=np.uint64)
    for i in range(4 * GAUSS_LANES):
        s, word = splitmix64_next(s)
        words[i] = word
    lanes = words.reshape(GAUSS_LANES, 4)
    return (lanes[:, 0].copy(), lanes[:, 1].copy(),
            lanes[:, 2].copy(), lanes[:, 3].copy())


def uniform_u64(seed: int, n: int) -> np.ndarray:
    """First ``n`` values of the interleaved lane-bank xoshiro256** stream.

    Element ``i`` comes from lane ``i % GAUSS_LANES`` at step
    ``i // GAUSS_LANES``; each lane is an independent xoshiro256** stream.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.empty(0, dtype=np.uint64)
    s0, s1, s2, s3 = _lane_states(seed)
    steps = -(-n // GAUSS_LANES)
    out = np.empty((steps, GAUSS_LANES), dtype=np.uint64)
    five, nine = np.uint64(5), np.uint64(9)
    k7, k57 = np.uint64(7), np.uint64(57)
    k17, k45, k19 = np.uint64(17), np.uint64(45), np.uint64(19)
    with np.errstate(over="ignore"):
        for i in range(steps):
            r = s1 * five
            out[i] = ((r << k7) | (r >> k57)) * nine
            t = s1 << k17
            s2 = s2 ^ s0
            s3 = s3 ^ s1
            s1 = s1 ^ s2
            s0 = s0 ^ s3
            s2 = s2 ^ t
            s3 = (s3 << k45) | (s3 >> k19)
    return out.reshape(-1)[:n]


def gaussian(seed: int, n: int) -> np.ndarray:
    """``n`` standard-normal float64 samples from the lane-bank stream.

    Box-Muller on uniform pairs: u64 -> (0, 1] via the top 53 bits, then
    z0 = sqrt(-2 ln u1) cos(2 pi u2) and z1 = the sin twin.
    """
    if n == 0:
        return np.empty(0, dtype=np.float64)
    pairs = (n + 1) // 2
    raw = uniform_u64(seed, 2 * pairs)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    z = np.empty(2 * pairs, dtype=np.float64)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]
