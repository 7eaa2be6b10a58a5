"""Deterministic random-stream derivation.

Every stochastic routine in the package draws from a Philox generator derived
from (master_seed, stream_label, counter).  The label is hashed so distinct
purposes ("gibbs.importance", "cauchy.mc", ...) get statistically independent
counter-based streams, and the same triple always reproduces the same draws
regardless of call order elsewhere in the program.
"""

import hashlib

import numpy as np


def stream_key(label):
    """Map a stream label to a stable 64-bit integer (first 8 sha256 bytes)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(seed, label, counter=0):
    """Return a numpy Generator for (seed, label, counter).

    Parameters
    ----------
    seed : int
        Master seed, 0 <= seed < 2**64.
    label : str
        Purpose of the stream, e.g. "field.sample".
    counter : int
        Optional index for families of streams under one label.
    """
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must fit in 64 bits")
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(stream_key(label), int(counter)))
    return np.random.Generator(np.random.Philox(ss))


def standard_complex(rng, size):
    """Standard complex Gaussians: E g = 0, E |g|^2 = 1, E g^2 = 0."""
    xy = rng.standard_normal(size=size + (2,) if isinstance(size, tuple)
                             else (size, 2))
    return (xy[..., 0] + 1j * xy[..., 1]) / np.sqrt(2.0)
