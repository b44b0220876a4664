"""Two-stage neural renderer: illuminant correction then brightness adjustment."""
from .model import (
    HIST_BINS,
    HIST_HIDDEN,
    PRESETS,
    CBUnetConfig,
    ConvBlock,
    LayerRow,
    Stage1Net,
    Stage2Net,
    UnetBackbone,
    build_nets,
)
from .pipeline import (
    RenderResult,
    pad_to_multiple,
    recolorize,
    render,
    stage1_apply,
    stage1_estimate,
    stage2_brightness,
)
from .weights import load_weights, save_weights

__all__ = [
    "CBUnetConfig",
    "ConvBlock",
    "HIST_BINS",
    "HIST_HIDDEN",
    "LayerRow",
    "PRESETS",
    "RenderResult",
    "Stage1Net",
    "Stage2Net",
    "UnetBackbone",
    "build_nets",
    "load_weights",
    "pad_to_multiple",
    "recolorize",
    "render",
    "save_weights",
    "stage1_apply",
    "stage1_estimate",
    "stage2_brightness",
]
