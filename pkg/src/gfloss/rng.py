"""Portable seeded Gaussian noise: splitmix64 seeding, xoshiro256++, Box-Muller.

Pure integer arithmetic up to the final float conversion, so a given seed
yields the same stream on every platform.
"""

import math

import numpy as np

_MASK64 = (1 << 64) - 1


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK64


def splitmix64(state):
    """Advance a splitmix64 state. Returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class Xoshiro256pp:
    """xoshiro256++ generator seeded from a 64-bit integer via splitmix64."""

    def __init__(self, seed=0, state=None):
        if state is not None:
            if len(state) != 4 or not any(state):
                raise ValueError("xoshiro256++ needs four words, not all zero")
            self.s = [int(w) & _MASK64 for w in state]
            return
        sm = int(seed) & _MASK64
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self.s = words

    def next_u64(self):
        s0, s1, s2, s3 = self.s
        result = (_rotl((s0 + s3) & _MASK64, 23) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uniform(self):
        """Double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def normals(self, n):
        """``n`` standard normal samples; both Box-Muller outputs are used in order."""
        out = np.empty(n, dtype=np.float64)
        i = 0
        while i < n:
            u1 = 1.0 - self.uniform()  # (0, 1], keeps log finite
            u2 = self.uniform()
            r = math.sqrt(-2.0 * math.log(u1))
            theta = 2.0 * math.pi * u2
            out[i] = r * math.cos(theta)
            if i + 1 < n:
                out[i + 1] = r * math.sin(theta)
            i += 2
        return out


def gaussian_field(shape, seed, mu=0.0, sigma=1.0):
    """Array of i.i.d. N(mu, sigma^2) samples filled in C order of ``shape``."""
    n = int(np.prod(shape))
    z = Xoshiro256pp(seed).normals(n)
    return (mu + sigma * z).reshape(shape)
