"""Seeded random streams.

All randomness in uomkit is drawn from numpy :class:`~numpy.random.Generator`
objects backed by the counter-based ``Philox`` bit generator. Seeds are
expanded through :class:`~numpy.random.SeedSequence`, and independent
streams are split off with its ``spawn_key`` mechanism:

* stream ``0`` is reserved for draws made by the caller itself (for
  example the multinomial split of a clustered sample), and
* stream ``l + 1`` belongs to cluster ``l``.

Because the split depends only on ``(seed, stream)`` the results of a
cluster never depend on how many other clusters exist or on the order
in which clusters are processed.
"""

from __future__ import annotations

from typing import Optional

import numpy as np


def make_rng(seed: int, stream: Optional[int] = None) -> np.random.Generator:
    """Return a Philox-backed generator for ``seed`` (and optional ``stream``)."""
    if stream is None:
        sequence = np.random.SeedSequence(int(seed))
    else:
        sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, stream: int) -> int:
    """Derive the integer sub-seed of ``stream`` from a parent ``seed``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
