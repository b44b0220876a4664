"""Weight-file plumbing: both stages plus their config in one artifact.

The container format (magic, version, length-prefixed config JSON, named
float32 tensor records) lives in :mod:`nisp.nn.serialize`; this module
binds it to the two-stage model so a file is always self-describing.
"""
from __future__ import annotations

import numpy as np

from ..errors import FormatError
from ..nn import read_weight_file, write_weight_file
from .model import CBUnetConfig, Stage1Net, Stage2Net, build_nets


def save_weights(path, config: CBUnetConfig, stage1: Stage1Net, stage2: Stage2Net) -> None:
    tensors = {name: p.data for name, p in {**stage1.params(), **stage2.params()}.items()}
    write_weight_file(path, config.to_json(), tensors)


def load_weights(path) -> tuple[CBUnetConfig, Stage1Net, Stage2Net]:
    """Rebuild both nets from a weight file, restoring every tensor bit-exactly."""
    config_json, tensors = read_weight_file(path)
    config = CBUnetConfig.from_json(config_json)
    stage1, stage2 = build_nets(config)
    expected = {**stage1.params(), **stage2.params()}
    missing = sorted(set(expected) - set(tensors))
    extra = sorted(set(tensors) - set(expected))
    if missing or extra:
        raise FormatError(
            f"weight records do not match config: missing {missing}, unexpected {extra}"
        )
    for name, param in expected.items():
        arr = tensors[name]
        if arr.shape != param.data.shape:
            raise FormatError(
                f"shape mismatch for {name!r}: file has {arr.shape}, config expects {param.data.shape}"
            )
        param.data = arr.astype(np.float32, copy=False)
    return config, stage1, stage2
