"""Portable integer PRNG for index permutations.

Permutations must be reproducible outside numpy, so shuffling uses a fixed,
fully specified generator instead of the library default:

* seeding: SplitMix64 applied to the user seed
  (``z += 0x9E3779B97F4A7C15; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
  z = (z ^ z>>27) * 0x94D049BB133111EB; z ^= z>>31``), all mod 2**64; a zero
  state is replaced by ``0x9E3779B97F4A7C15``.
* stream: xorshift64* (shifts 12, 25, 27; output multiplier
  ``0x2545F4914F6CDD1D``).
* bounded draws: ``next() % bound`` with rejection above the largest
  multiple of ``bound``.
* shuffle: Fisher-Yates, ``i`` from ``n-1`` down to 1, swap ``i`` with
  ``draw(i + 1)``, starting from the identity.

Bulk floating-point randomness (weight init, noise) uses numpy's PCG64 via
``numpy.random.default_rng`` seeded with :func:`derive_seed`.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# offsets fanning one global seed out into independent streams
STREAM_SPLIT = 1
STREAM_INIT = 2
STREAM_AUGMENT = 3
STREAM_BATCH = 4
STREAM_SYNTH = 5


def splitmix64(x):
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, stream, index=0):
    """Deterministic 63-bit child seed for ``(seed, stream, index)``."""
    s = splitmix64(seed & MASK64)
    s = splitmix64(s ^ (stream * GOLDEN & MASK64))
    s = splitmix64(s ^ (index & MASK64))
    return s >> 1


class XorShift64Star:
    def __init__(self, seed):
        self.state = splitmix64(seed & MASK64) or GOLDEN

    def next(self):
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def below(self, bound):
        limit = (1 << 64) - (1 << 64) % bound
        while True:
            v = self.next()
            if v < limit:
                return v % bound


def permutation(n, seed):
    rng = XorShift64Star(seed)
    p = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        p[i], p[j] = p[j], p[i]
    return p
