"""Deterministic seed derivation.

Every source of randomness in the pipeline is keyed off one master seed.
Sub-seeds are derived with a fixed mixing scheme so that results are
bit-reproducible and independent of scheduling or iteration order.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the splitmix64 mixer (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master: int, *tokens: object) -> int:
    """Derive a child seed from a master seed and a token path.

    Tokens may be strings or integers; they are folded through sha256 so
    the result is stable across platforms and Python versions, then mixed
    with splitmix64. Returns a non-negative 63-bit integer (safe for both
    numpy Generators and scikit-learn random_state after masking).
    """
    h = hashlib.sha256()
    h.update(int(master).to_bytes(16, "little", signed=True))
    for tok in tokens:
        h.update(b"\x1f")
        h.update(str(tok).encode("utf-8"))
    folded = int.from_bytes(h.digest()[:8], "little")
    return splitmix64(folded) >> 1


def sklearn_seed(seed: int) -> int:
    """Clamp a derived seed into scikit-learn's 32-bit random_state range."""
    return int(seed) & 0x7FFFFFFF
