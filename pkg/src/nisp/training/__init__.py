"""Datasets, desk-scale staged training, metrics, and the ablation harness."""
from .ablation import (
    CSV_HEADER,
    TABLE3_FLAGS,
    TABLE4_LOSSES,
    AblationSpec,
    SingleStageNet,
    run_ablation,
    run_full_ablation,
    run_loss_ablation,
    run_table3,
    run_table4,
    write_ablation_csv,
)
from .dataset import (
    ANNOTATION_DIR,
    RAW_DIR,
    TARGET_DIR,
    DatasetIndex,
    SamplePair,
    load_dataset,
    load_pair,
    scan_ids,
    split_dataset,
    validate_dataset,
)
from .metrics import (
    count_flops,
    count_params,
    evaluate_pairs,
    flops_breakdown,
    layer_rows,
    psnr,
)
from .synth import PATCH_VALUES, generate_synthetic_dataset, synthetic_meta
from .train import (
    TrainConfig,
    TrainLog,
    joint_finetune,
    train_stage1,
    train_stage2,
)

__all__ = [
    "ANNOTATION_DIR",
    "AblationSpec",
    "CSV_HEADER",
    "DatasetIndex",
    "PATCH_VALUES",
    "RAW_DIR",
    "SamplePair",
    "SingleStageNet",
    "TABLE3_FLAGS",
    "TABLE4_LOSSES",
    "TARGET_DIR",
    "TrainConfig",
    "TrainLog",
    "count_flops",
    "count_params",
    "evaluate_pairs",
    "flops_breakdown",
    "generate_synthetic_dataset",
    "joint_finetune",
    "layer_rows",
    "load_dataset",
    "load_pair",
    "psnr",
    "run_ablation",
    "run_full_ablation",
    "run_loss_ablation",
    "run_table3",
    "run_table4",
    "scan_ids",
    "split_dataset",
    "synthetic_meta",
    "train_stage1",
    "train_stage2",
    "validate_dataset",
    "write_ablation_csv",
]
