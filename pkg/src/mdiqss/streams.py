"""Named, independent random streams derived from one master seed."""

from __future__ import annotations

import numpy as np

MAX_SEED = 2**64 - 1


def _key(name: str) -> tuple[int, ...]:
    return tuple(name.encode("utf-8"))


class SeedStreams:
    """Hands out one ``numpy.random.Generator`` per component name.

    The stream for a name depends only on ``(master_seed, name)``, so adding a
    new component never perturbs the draws of existing ones. Asking twice for
    the same name returns the same generator object.
    """

    def __init__(self, master_seed: int):
        if not 0 <= int(master_seed) <= MAX_SEED:
            raise ValueError(f"master seed must fit in 64 unsigned bits, got {master_seed}")
        self.master_seed = int(master_seed)
        self._streams: dict[str, np.random.Generator] = {}

    def __call__(self, name: str) -> np.random.Generator:
        gen = self._streams.get(name)
        if gen is None:
            seq = np.random.SeedSequence(self.master_seed, spawn_key=_key(name))
            gen = self._streams[name] = np.random.Generator(np.random.PCG64(seq))
        return gen


def derive_seed(master_seed: int, *path: int | str) -> int:
    """A 64-bit child seed for sweep cells and repeated trials."""
    key: list[int] = []
    for part in path:
        key.extend(_key(part) if isinstance(part, str) else (int(part) & 0xFFFFFFFF, 0x100))
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(key))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
