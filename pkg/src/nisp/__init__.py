"""Nighttime RAW-to-RGB rendering toolkit.

Subpackages:
    imaging   classical ISP stages and image/color domain types
    nn        minimal reverse-mode tensor engine, layers, losses, optimizer
    cbunet    the two-stage color/brightness compensation network
    training  datasets, training schedules, metrics, ablation harness
    service   HTTP annotation service backing the white-patch labeling UI
"""

__version__ = "0.1.0"
