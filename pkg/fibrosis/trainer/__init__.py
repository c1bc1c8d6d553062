from fibrosis.trainer.patches import PatchSet, sample_patches
from fibrosis.trainer.main import TrainConfig, TrainLog, train

__all__ = ["PatchSet", "TrainConfig", "TrainLog", "sample_patches", "train"]
