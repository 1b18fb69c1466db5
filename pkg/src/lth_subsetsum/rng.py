"""Seed derivation.

Every random draw in the toolkit comes from a generator built by
:func:`derive_rng`, keyed on ``(seed, label, index...)``. Two runs with the
same root seed produce identical draws no matter how work is scheduled.
"""
import zlib

import numpy as np


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def derive_rng(seed: int, label: str = "", *index: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, _label_key(label)]
    key.extend(int(i) for i in index)
    return np.random.default_rng(np.random.SeedSequence(key))
