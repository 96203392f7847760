"""Seed derivation. Stage and per-sentence streams come from the splitmix64 sequence."""
import random

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_finalize(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """The (index+1)-th splitmix64 output for a generator started at ``seed``."""
    return splitmix64_finalize(seed + (index + 1) * GOLDEN_GAMMA)


def substream(seed: int, *keys: int) -> random.Random:
    for k in keys:
        seed = derive_seed(seed, k)
    return random.Random(seed)
