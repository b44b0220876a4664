"""Ablation harness: architecture flag rows and loss-term rows as CSV.

Desk-scale runs reproduce the row structure of the comparison tables,
not the absolute numbers. Each row trains its variant deterministically
under the given config and reports test PSNR plus analytic counts.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..cbunet import CBUnetConfig, LayerRow, UnetBackbone
from ..errors import ConfigError
from ..imaging import EncodedImage, LinearRgbImage, srgb_decode_u8, srgb_encode
from ..nn import ParamStore, Tape, Tensor, abs_, adam_step, l1_loss
from .dataset import SamplePair, split_dataset
from .metrics import count_flops, count_params, evaluate_pairs, psnr
from .train import TrainConfig, TrainLog, _crop_dims, _draw_batch, train_stage1, train_stage2, joint_finetune

CSV_HEADER = ("variant", "psnr_db", "params", "flops")

TABLE3_FLAGS = (
    (False, False, False),
    (True, False, False),
    (False, True, True),
    (True, True, True),
)

TABLE4_LOSSES = (
    ("l1",),
    ("l1", "hist"),
    ("l1", "hist", "angular"),
)


@dataclass(frozen=True)
class AblationSpec:
    channel_attention: bool
    two_stage: bool
    histogram_branch: bool

    def __post_init__(self):
        if self.histogram_branch and not self.two_stage:
            raise ConfigError("histogram branch requires the two-stage pipeline")

    @property
    def variant(self) -> str:
        if not self.two_stage:
            return "unet_ca" if self.channel_attention else "unet"
        name = "two_stage"
        if self.channel_attention:
            name += "_ca"
        if self.histogram_branch:
            name += "_hist"
        return name


class SingleStageNet:
    """Direct RGB regressor for the single-stage ablation rows."""

    def __init__(self, config: CBUnetConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.backbone = UnetBackbone(3, 3, config, rng or np.random.default_rng(0))

    def forward(self, x: Tensor) -> Tensor:
        # abs head for the same reason as Stage2Net: nonnegative output
        # without a saturating tail that can go gradient-dead on dark scenes.
        return abs_(self.backbone.forward(x))

    def params(self):
        return self.backbone.params("single")

    def describe(self, h: int, w: int) -> list[LayerRow]:
        rows = self.backbone.describe("single", h, w)
        rows.append(LayerRow("single.abs", "elementwise", 0, 3 * h * w))
        return rows


def _train_single_stage(
    data: list[SamplePair], config: TrainConfig, net_config: CBUnetConfig
) -> tuple[SingleStageNet, TrainLog]:
    """L1 regression from the uncorrected frame straight to display-linear RGB."""
    from ..imaging import demosaic_bilinear

    net = SingleStageNet(net_config, np.random.default_rng(config.seed))
    inputs = [demosaic_bilinear(p.raw).planes.astype(np.float32) for p in data]
    targets = [srgb_decode_u8(p.target).planes.astype(np.float32) for p in data]
    h, w = inputs[0].shape[1:]
    ch, cw = _crop_dims(config, h, w)
    store = ParamStore(net.params())
    rng = np.random.default_rng(config.seed + 5)
    n = len(data)
    steps_per_epoch = max(1, n // config.batch_size)
    log = TrainLog()
    for _ in range(config.stage2_epochs):
        for _ in range(steps_per_epoch):
            idx, ys, xs = _draw_batch(rng, n, config.batch_size, h, w, ch, cw)
            batch = np.stack(
                [inputs[i][:, y : y + ch, x : x + cw] for i, y, x in zip(idx, ys, xs)]
            )
            target = np.stack(
                [targets[i][:, y : y + ch, x : x + cw] for i, y, x in zip(idx, ys, xs)]
            )
            store.zero_grad()
            with Tape() as tape:
                loss = l1_loss(net.forward(Tensor(batch)), Tensor(target))
                tape.backward(loss)
            adam_step(store, config.lr)
            log.step_losses.append(float(loss.data))
        log.close_epoch(steps_per_epoch)
    return net, log


def _render_single_stage(net: SingleStageNet, pair: SamplePair) -> EncodedImage:
    from ..cbunet import pad_to_multiple
    from ..imaging import demosaic_bilinear

    planes = demosaic_bilinear(pair.raw).planes
    h, w = planes.shape[1:]
    padded = pad_to_multiple(planes, net.config.multiple)
    out = net.forward(Tensor(padded[np.newaxis])).data[0, :, :h, :w]
    return srgb_encode(LinearRgbImage(np.clip(out.astype(np.float64), 0.0, 1.0)))


def _split_pairs(data: list[SamplePair]) -> tuple[list[SamplePair], list[SamplePair]]:
    index = split_dataset([p.image_id for p in data], max(1, len(data) - 1))
    by_id = {p.image_id: p for p in data}
    return [by_id[i] for i in index.train_ids], [by_id[i] for i in index.test_ids]


def _row(variant: str, scores: list[float], nets, dims) -> dict:
    return {
        "variant": variant,
        "psnr_db": float(np.mean(scores)),
        "params": count_params(nets),
        "flops": count_flops(nets, dims),
    }


def run_ablation(spec: AblationSpec, data: list[SamplePair], config: TrainConfig) -> dict:
    """Train one architecture variant and report its test-split metrics row."""
    train_pairs, test_pairs = _split_pairs(data)
    dims = data[0].raw.data.shape
    base = config.net_config()
    net_config = CBUnetConfig(
        preset=base.preset,
        depth=base.depth,
        base_channels=base.base_channels,
        attention_enabled=spec.channel_attention,
        histogram_branch_enabled=spec.histogram_branch,
    )
    if not spec.two_stage:
        net, _ = _train_single_stage(train_pairs, config, net_config)
        scores = [psnr(_render_single_stage(net, p), EncodedImage(p.target)) for p in test_pairs]
        return _row(spec.variant, scores, net, dims)
    stage_config = replace(config, architecture=net_config)
    stage1, _ = train_stage1(train_pairs, stage_config)
    stage2, _ = train_stage2(train_pairs, stage1, stage_config)
    scores = [s for _, s in evaluate_pairs(test_pairs, stage1, stage2)]
    return _row(spec.variant, scores, [stage1, stage2], dims)


def run_loss_ablation(losses: tuple, data: list[SamplePair], config: TrainConfig) -> dict:
    """Train the full architecture under a loss subset; row name says which."""
    if "l1" not in losses or not set(losses) <= {"l1", "hist", "angular"}:
        raise ConfigError(f"unsupported loss combination {losses}")
    train_pairs, test_pairs = _split_pairs(data)
    dims = data[0].raw.data.shape
    stage1, _ = train_stage1(train_pairs, config)
    stage2_terms = ("l1", "hist") if "hist" in losses else ("l1",)
    stage2, _ = train_stage2(train_pairs, stage1, config, loss_terms=stage2_terms)
    if "angular" in losses:
        joint_finetune(train_pairs, stage1, stage2, config)
    scores = [s for _, s in evaluate_pairs(test_pairs, stage1, stage2)]
    return _row("loss_" + "_".join(losses), scores, [stage1, stage2], dims)


def run_table3(data: list[SamplePair], config: TrainConfig) -> list[dict]:
    return [run_ablation(AblationSpec(*flags), data, config) for flags in TABLE3_FLAGS]


def run_table4(data: list[SamplePair], config: TrainConfig) -> list[dict]:
    return [run_loss_ablation(losses, data, config) for losses in TABLE4_LOSSES]


def write_ablation_csv(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            out["psnr_db"] = f"{row['psnr_db']:.4f}"
            writer.writerow(out)


def run_full_ablation(data: list[SamplePair], config: TrainConfig, path) -> list[dict]:
    rows = run_table3(data, config) + run_table4(data, config)
    write_ablation_csv(rows, path)
    return rows
