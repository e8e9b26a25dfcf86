"""Reference Shapiro-Wilk values for the datasets built by `fixture_data` in
tests/shapiro_reference.rs and in the cli crate's acceptance suite. Both
sides generate data with the same splitmix64 stream, so only the recipe is
shared, not the numbers.

    python3 shapiro_reference.py
"""
import math

from scipy import stats

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def uniform(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def normal(self):
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def dataset(kind, n, seed):
    g = SplitMix64(seed)
    if kind == "normal":
        return [g.normal() for _ in range(n)]
    if kind == "lognormal":
        return [math.exp(0.5 * g.normal()) for _ in range(n)]
    if kind == "uniform":
        return [g.uniform() for _ in range(n)]
    raise ValueError(kind)


CASES = [
    ("normal", 7, 11),
    ("normal", 20, 4),
    ("normal", 50, 1),
    ("lognormal", 500, 2),
    ("normal", 500, 5),
    ("uniform", 5000, 3),
    ("normal", 5000, 6),
]

if __name__ == "__main__":
    for kind, n, seed in CASES:
        w, p = stats.shapiro(dataset(kind, n, seed))
        print(f'("{kind}", {n}, {seed}, {w!r}, {p!r}),')
