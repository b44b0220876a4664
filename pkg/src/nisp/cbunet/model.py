"""Two-stage renderer networks built on a small Unet backbone.

Stage 1 sees the uncorrected demosaiced frame and predicts the scene
illuminant as a positive unit 3-vector. Stage 2 sees the grayscale of the
color-corrected frame plus its 256-bin intensity histogram and predicts a
nonnegative brightness map of the same size.

Both stages share `UnetBackbone`: encoder levels of two 3x3 convs with
PReLU (optionally followed by channel attention), 2x max pooling between
levels, and a decoder that upsamples, halves channels, concatenates the
skip, and runs another conv block. Channel counts double per level from
`base_channels`.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, DimensionError
from ..nn import (
    abs_,
    Conv2d,
    Linear,
    Tensor,
    add,
    as_tensor,
    channel_attention,
    concat,
    global_avg_pool,
    l2_normalize,
    max_pool2,
    prelu,
    relu,
    reshape,
    softplus,
    upsample2,
)

PRESETS = {"tiny": (2, 8), "full": (4, 32)}

HIST_BINS = 256
HIST_HIDDEN = 64


@dataclass(frozen=True)
class CBUnetConfig:
    """Architecture knobs shared by both stages."""

    preset: str = "tiny"
    depth: int = 2
    base_channels: int = 8
    attention_enabled: bool = True
    histogram_branch_enabled: bool = True

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}, expected one of {sorted(PRESETS)}")
        if self.depth < 2:
            raise ConfigError(f"depth must be at least 2, got {self.depth}")
        if self.base_channels < 4:
            raise ConfigError(f"base_channels must be at least 4, got {self.base_channels}")

    @classmethod
    def tiny(cls, **overrides) -> "CBUnetConfig":
        depth, base = PRESETS["tiny"]
        return cls(preset="tiny", depth=depth, base_channels=base, **overrides)

    @classmethod
    def full(cls, **overrides) -> "CBUnetConfig":
        depth, base = PRESETS["full"]
        return cls(preset="full", depth=depth, base_channels=base, **overrides)

    @property
    def multiple(self) -> int:
        """Spatial dimensions fed to the nets must divide this."""
        return 2 ** self.depth

    @property
    def bottleneck_channels(self) -> int:
        return self.base_channels * (2 ** self.depth)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CBUnetConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config block is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config must be a JSON object, got {type(raw).__name__}")
        expected = {"preset", "depth", "base_channels", "attention_enabled", "histogram_branch_enabled"}
        if set(raw) != expected:
            raise ConfigError(
                f"config keys {sorted(raw)} do not match expected {sorted(expected)}"
            )
        return cls(**raw)


@dataclass(frozen=True)
class LayerRow:
    """One line of the analytic cost table: parameter and FLOP counts.

    Conventions: conv and fc count 2 FLOPs per multiply-accumulate with the
    bias excluded; `elementwise` rows (activations, attention scaling, the
    histogram broadcast add) cost 1 FLOP per output element. Pooling,
    upsampling, concatenation, padding, and normalizations are free.
    """

    name: str
    kind: str  # conv | fc | elementwise
    params: int
    flops: int


class ConvBlock:
    """Two 3x3 convs with PReLU, optionally closed by channel attention."""

    def __init__(self, cin: int, cout: int, attention: bool, rng: np.random.Generator):
        self.cin = cin
        self.cout = cout
        self.attention = attention
        self.conv1 = Conv2d(cin, cout, rng=rng)
        self.conv2 = Conv2d(cout, cout, rng=rng)
        if attention:
            self.hidden = max(cout // 4, 4)
            self.fc1 = Linear(cout, self.hidden, rng)
            self.fc2 = Linear(self.hidden, cout, rng)

    def __call__(self, x: Tensor) -> Tensor:
        x = prelu(self.conv1(x))
        x = prelu(self.conv2(x))
        if self.attention:
            x = channel_attention(x, self.fc1.w, self.fc1.b, self.fc2.w, self.fc2.b)
        return x

    def params(self, prefix: str) -> dict[str, Tensor]:
        out = {}
        out.update(self.conv1.params(f"{prefix}.conv1"))
        out.update(self.conv2.params(f"{prefix}.conv2"))
        if self.attention:
            out.update(self.fc1.params(f"{prefix}.ca1"))
            out.update(self.fc2.params(f"{prefix}.ca2"))
        return out

    def describe(self, prefix: str, h: int, w: int) -> list[LayerRow]:
        cin, cout = self.cin, self.cout
        rows = [
            LayerRow(f"{prefix}.conv1", "conv", 9 * cin * cout + cout, 18 * cin * cout * h * w),
            LayerRow(f"{prefix}.act1", "elementwise", 0, cout * h * w),
            LayerRow(f"{prefix}.conv2", "conv", 9 * cout * cout + cout, 18 * cout * cout * h * w),
            LayerRow(f"{prefix}.act2", "elementwise", 0, cout * h * w),
        ]
        if self.attention:
            hid = self.hidden
            rows += [
                LayerRow(f"{prefix}.ca1", "fc", cout * hid + hid, 2 * cout * hid),
                LayerRow(f"{prefix}.ca1_act", "elementwise", 0, hid),
                LayerRow(f"{prefix}.ca2", "fc", hid * cout + cout, 2 * hid * cout),
                LayerRow(f"{prefix}.ca2_act", "elementwise", 0, cout),
                LayerRow(f"{prefix}.ca_scale", "elementwise", 0, cout * h * w),
            ]
        return rows


class UnetBackbone:
    """Encoder/decoder stack with skip concatenation and a 3x3 conv head."""

    def __init__(self, cin: int, cout: int, config: CBUnetConfig, rng: np.random.Generator):
        ch = [config.base_channels * (2 ** i) for i in range(config.depth + 1)]
        att = config.attention_enabled
        self.config = config
        self.cin = cin
        self.cout = cout
        self.channels = ch
        self.enc = []
        prev = cin
        for i in range(config.depth):
            self.enc.append(ConvBlock(prev, ch[i], att, rng))
            prev = ch[i]
        self.bottleneck = ConvBlock(ch[config.depth - 1], ch[config.depth], att, rng)
        # Decoder runs from the deepest level back up to level 0.
        self.up = []
        self.dec = []
        for i in reversed(range(config.depth)):
            self.up.append(Conv2d(ch[i + 1], ch[i], rng=rng))
            self.dec.append(ConvBlock(2 * ch[i], ch[i], att, rng))
        self.head = Conv2d(ch[0], cout, rng=rng)

    def forward(self, x: Tensor, bottleneck_extra: Tensor | None = None) -> Tensor:
        if x.data.ndim != 4 or x.data.shape[1] != self.cin:
            raise DimensionError(
                f"backbone expects (N,{self.cin},H,W) input, got {x.data.shape}"
            )
        _, _, h, w = x.data.shape
        m = self.config.multiple
        if h % m or w % m or h == 0 or w == 0:
            raise DimensionError(f"spatial dims {h}x{w} must be positive multiples of {m}")
        skips = []
        for block in self.enc:
            x = block(x)
            skips.append(x)
            x = max_pool2(x)
        x = self.bottleneck(x)
        if bottleneck_extra is not None:
            x = add(x, bottleneck_extra)
        for upconv, block, skip in zip(self.up, self.dec, reversed(skips)):
            x = prelu(upconv(upsample2(x)))
            x = concat([skip, x], axis=1)
            x = block(x)
        return self.head(x)

    def params(self, prefix: str) -> dict[str, Tensor]:
        out = {}
        for i, block in enumerate(self.enc):
            out.update(block.params(f"{prefix}.enc{i}"))
        out.update(self.bottleneck.params(f"{prefix}.bottleneck"))
        for upconv, block, level in zip(self.up, self.dec, reversed(range(self.config.depth))):
            out.update(upconv.params(f"{prefix}.up{level}"))
            out.update(block.params(f"{prefix}.dec{level}"))
        out.update(self.head.params(f"{prefix}.head"))
        return out

    def describe(self, prefix: str, h: int, w: int) -> list[LayerRow]:
        m = self.config.multiple
        if h % m or w % m or h <= 0 or w <= 0:
            raise DimensionError(f"spatial dims {h}x{w} must be positive multiples of {m}")
        ch = self.channels
        rows = []
        for i, block in enumerate(self.enc):
            rows += block.describe(f"{prefix}.enc{i}", h >> i, w >> i)
        d = self.config.depth
        rows += self.bottleneck.describe(f"{prefix}.bottleneck", h >> d, w >> d)
        for level in reversed(range(d)):
            hh, ww = h >> level, w >> level
            rows += [
                LayerRow(f"{prefix}.up{level}", "conv",
                         9 * ch[level + 1] * ch[level] + ch[level],
                         18 * ch[level + 1] * ch[level] * hh * ww),
                LayerRow(f"{prefix}.up{level}_act", "elementwise", 0, ch[level] * hh * ww),
            ]
            rows += self.dec[d - 1 - level].describe(f"{prefix}.dec{level}", hh, ww)
        rows.append(LayerRow(f"{prefix}.head", "conv",
                             9 * ch[0] * self.cout + self.cout,
                             18 * ch[0] * self.cout * h * w))
        return rows


class Stage1Net:
    """Illuminant estimator: 3-plane input to a positive unit 3-vector."""

    def __init__(self, config: CBUnetConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.backbone = UnetBackbone(3, 3, config, rng or np.random.default_rng(0))

    def forward(self, x: Tensor) -> Tensor:
        """(N,3,H,W) -> (N,3) unit vectors with positive components."""
        pooled = global_avg_pool(self.backbone.forward(x))
        # softplus underflows to exact zero in float32 for very negative
        # inputs; the floor keeps every component strictly positive so the
        # normalized vector is always a valid illuminant
        floored = add(softplus(pooled), as_tensor(1e-6, like=pooled))
        return l2_normalize(floored, axis=-1)

    def params(self) -> dict[str, Tensor]:
        return self.backbone.params("stage1")

    def describe(self, h: int, w: int) -> list[LayerRow]:
        rows = self.backbone.describe("stage1", h, w)
        rows.append(LayerRow("stage1.softplus", "elementwise", 0, 3))
        return rows


class Stage2Net:
    """Brightness predictor over grayscale input with a histogram branch.

    The histogram branch is two fully connected layers with ReLU after
    each; its output vector is broadcast-added to the bottleneck feature
    map. With the branch disabled (or its weights zero) the net reduces to
    the plain backbone.
    """

    def __init__(self, config: CBUnetConfig, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        self.config = config
        self.backbone = UnetBackbone(1, 1, config, rng)
        if config.histogram_branch_enabled:
            self.hist_fc1 = Linear(HIST_BINS, HIST_HIDDEN, rng)
            self.hist_fc2 = Linear(HIST_HIDDEN, config.bottleneck_channels, rng)

    def forward(self, gray: Tensor, hist: Tensor) -> Tensor:
        """(N,1,H,W) grayscale + (N,256) histogram -> (N,1,H,W) brightness."""
        extra = None
        if self.config.histogram_branch_enabled:
            if hist.data.ndim != 2 or hist.data.shape[1] != HIST_BINS:
                raise DimensionError(f"histogram input must be (N,{HIST_BINS}), got {hist.data.shape}")
            feat = relu(self.hist_fc2(relu(self.hist_fc1(hist))))
            extra = reshape(feat, (feat.data.shape[0], feat.data.shape[1], 1, 1))
        # abs rather than softplus: the map must stay nonnegative, but a
        # softplus head goes gradient-dead when training drives its input
        # far negative on dark scenes, and the optimizer cannot pull the
        # prediction back up. abs reflects instead of saturating.
        return abs_(self.backbone.forward(gray, bottleneck_extra=extra))

    def params(self) -> dict[str, Tensor]:
        out = self.backbone.params("stage2")
        if self.config.histogram_branch_enabled:
            out.update(self.hist_fc1.params("stage2.hist1"))
            out.update(self.hist_fc2.params("stage2.hist2"))
        return out

    def describe(self, h: int, w: int) -> list[LayerRow]:
        rows = []
        if self.config.histogram_branch_enabled:
            bottom = self.config.bottleneck_channels
            d = self.config.depth
            rows += [
                LayerRow("stage2.hist1", "fc", HIST_BINS * HIST_HIDDEN + HIST_HIDDEN,
                         2 * HIST_BINS * HIST_HIDDEN),
                LayerRow("stage2.hist1_act", "elementwise", 0, HIST_HIDDEN),
                LayerRow("stage2.hist2", "fc", HIST_HIDDEN * bottom + bottom,
                         2 * HIST_HIDDEN * bottom),
                LayerRow("stage2.hist2_act", "elementwise", 0, bottom),
                LayerRow("stage2.hist_add", "elementwise", 0, bottom * (h >> d) * (w >> d)),
            ]
        rows += self.backbone.describe("stage2", h, w)
        rows.append(LayerRow("stage2.abs", "elementwise", 0, h * w))
        return rows


def build_nets(config: CBUnetConfig, seed: int = 0) -> tuple[Stage1Net, Stage2Net]:
    """Fresh nets for a config, deterministically initialized from one seed."""
    rng = np.random.default_rng(seed)
    return Stage1Net(config, rng), Stage2Net(config, rng)
