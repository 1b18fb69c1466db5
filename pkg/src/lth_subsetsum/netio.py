"""Text serialization of networks and mask sets.

Grammar (JSON)::

    network := {"format": "dense-network", "depth": l,
                "widths": [d0, ..., dl], "layers": [layer_1, ..., layer_l]}
    masks   := {"format": "mask-set", "depth": l,
                "widths": [d0, ..., dl], "layers": [layer_1, ..., layer_l]}
    layer_k := flat row-major list of d_k * d_{k-1} numbers

Layer ``k`` has shape ``(widths[k], widths[k-1])``. Network entries are written
with 17 significant digits so every float64 survives a round trip; mask
entries are the integers 0 and 1. Output is byte-stable for equal inputs.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .tensor import DenseNetwork, MaskSet

NETWORK_FORMAT = "dense-network"
MASK_FORMAT = "mask-set"


class FormatError(ValueError):
    """Malformed network or mask file."""


def _fmt(v: float) -> str:
    s = format(float(v), ".17g")
    # JSON reads "-0" as the integer 0 and would drop the sign
    return "-0.0" if s == "-0" else s


def _dump(kind: str, widths, layers, fmt) -> str:
    lines = [
        "{",
        f'  "format": "{kind}",',
        f'  "depth": {len(layers)},',
        f'  "widths": [{", ".join(str(int(w)) for w in widths)}],',
        '  "layers": [',
    ]
    body = ["    [" + ", ".join(fmt(v) for v in np.asarray(m).ravel()) + "]" for m in layers]
    lines.append(",\n".join(body))
    lines += ["  ]", "}", ""]
    return "\n".join(lines)


def dumps_network(net: DenseNetwork) -> str:
    return _dump(NETWORK_FORMAT, net.widths, net.layers, _fmt)


def dumps_masks(masks: MaskSet, widths) -> str:
    return _dump(MASK_FORMAT, widths, masks.masks, lambda v: str(int(v)))


def _parse(text: str, kind: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    for key in ("format", "depth", "widths", "layers"):
        if key not in doc:
            raise FormatError(f"missing field {key!r}")
    if doc["format"] != kind:
        raise FormatError(f"expected format {kind!r}, found {doc['format']!r}")
    widths, layers = doc["widths"], doc["layers"]
    if doc["depth"] != len(layers) or len(widths) != len(layers) + 1:
        raise FormatError("depth, widths and layers disagree")
    out = []
    for k, flat in enumerate(layers):
        shape = (int(widths[k + 1]), int(widths[k]))
        if len(flat) != shape[0] * shape[1]:
            raise FormatError(f"layer {k + 1} has {len(flat)} entries, expected {shape[0] * shape[1]}")
        out.append(np.array(flat, dtype=np.float64).reshape(shape))
    return widths, out


def loads_network(text: str) -> DenseNetwork:
    _, layers = _parse(text, NETWORK_FORMAT)
    try:
        return DenseNetwork(layers)
    except (ShapeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def loads_masks(text: str) -> MaskSet:
    _, layers = _parse(text, MASK_FORMAT)
    try:
        return MaskSet(layers)
    except (ShapeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def save_network(net: DenseNetwork, path) -> None:
    Path(path).write_text(dumps_network(net))


def load_network(path) -> DenseNetwork:
    return loads_network(Path(path).read_text())


def save_masks(masks: MaskSet, widths, path) -> None:
    Path(path).write_text(dumps_masks(masks, widths))


def load_masks(path) -> MaskSet:
    return loads_masks(Path(path).read_text())
