"""Deterministic derivation of child seeds from a single master seed."""

import hashlib


def derive_seed(master: int, *path) -> int:
    """Derive a 63-bit child seed from ``master`` and a key path.

    The derivation hashes the master seed together with the path tokens
    (SHA-256, first 8 bytes), so every (dataset, repeat, fold, ...) unit
    gets an independent stream that does not depend on evaluation order,
    platform, or library version. All randomness in the experiment
    pipeline flows through this function.
    """
    key = ":".join([str(int(master))] + [str(p) for p in path])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
