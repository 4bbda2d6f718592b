"""Deterministic stream derivation for replicated Monte Carlo.

Every random quantity in the toolkit is drawn from a Philox generator whose
key is derived from (master seed, label path) through a SeedSequence.  Philox
is counter based, so replicate r's stream is fully determined by the tuple
(master, label, r) and never by execution order or worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Identifier echoed in the CLI manifest; bump when the derivation changes.
SCHEME = "philox4x64/seedseq-path/v1"

_U64 = np.uint64


def _encode(part) -> int:
    """Map a path component to a stable non-negative int."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"negative path component: {part}")
        return int(part)
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")
    raise TypeError(f"unsupported path component type: {type(part)!r}")


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for the stream named by ``path`` under ``seed``.

    Parameters
    ----------
    seed : int
        Master seed (u64 range).
    *path : int or str
        Stream labels, e.g. ``("innov",)`` or ``("delta", lag, replicate)``.
    """
    ss = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_encode(p) for p in path)
    )
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path) -> int:
    """Collapse (seed, path) into a fresh u64 master seed.

    Used when an operation hands a whole sub-computation (which derives its
    own substreams) to a replicate.
    """
    ss = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_encode(p) for p in path)
    )
    return int(ss.generate_state(1, _U64)[0])
