"""Deterministic seed fan-out.

One campaign seed is split into independent per-phase / per-template /
per-session streams, so artifacts are reproducible regardless of execution
order or worker count.
"""

from __future__ import annotations

import hashlib
import random


def split(seed: int, *labels: object) -> int:
    """Derive a child seed from `seed` and a label path."""
    text = str(seed) + "".join(f"|{lab}" for lab in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(seed: int, *labels: object) -> random.Random:
    return random.Random(split(seed, *labels))
