"""Run configuration: one flat JSON document of every hyperparameter.

Defaults follow the reference evaluation setup where one exists (512
clusters, distribution size 3, 5-step plans, 60 affinity epochs, 4-frame
batches, 70/30 split, every-6th-frame downsampling); the rest are desk-scale
choices.  Unknown keys are rejected so typos fail loudly, and command-line
flags win over file values.
"""

import dataclasses
import json
from dataclasses import dataclass

from .synth import SceneConfig


@dataclass
class RunConfig:
    seed: int = 0
    n: int = 64

    # motion-primitive library
    clusters: int = 512
    top_k: int = 3
    feature_kind: str = "hod"
    hod_bins: int = 32
    hog_bins: int = 9
    hog_cell: int = 8

    # plan recognition
    plan_len: int = 5
    plan_epochs: int = 60
    embed_dim: int = 32
    window: int = 2
    neg_samples: int = 5
    plan_lr: float = 0.05

    # pixel dynamics network
    lstm_hidden: int = 64
    pool_k: int = 16
    enc_dim: int = 32
    acf_size: int = 5
    z: float = 1.0
    calib_sweeps: int = 4
    calib_ridge: float = 1e-8

    # attention and glimpses
    lam: float = 1.0
    bua_sigma: float = 1.5
    glimpse_threshold: float = 0.5
    min_area: int = 9
    glimpse_dilate: int = 9
    tube_width: int = 14

    # classifier
    classes: int = 4
    classifier_hidden: int = 32
    proj_dim: int = 32
    pool_grid: int = 8
    classifier_epochs: int = 15
    classifier_lr: float = 0.2

    # data and evaluation
    scene_count: int = 160
    scene_frames: int = 9
    agent_size: int = 5
    batch_frames: int = 4
    train_split: float = 0.7
    frame_step: int = 6
    concentration_factor: float = 2.0
    threads: int = 1

    def __post_init__(self):
        if self.top_k < 1 or self.clusters < 2 or self.top_k > self.clusters:
            raise ValueError("need 1 <= top_k <= clusters and clusters >= 2")
        if not 0.0 < self.train_split < 1.0:
            raise ValueError("train_split must lie in (0, 1)")
        if self.batch_frames != 4:
            raise ValueError("the pipeline consumes 4-frame batches")
        if self.n % self.pool_grid:
            raise ValueError("n must be divisible by pool_grid")
        if self.acf_size % 2 == 0:
            raise ValueError("acf_size must be odd")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def scene_config(self, count=None):
        return SceneConfig(
            n=self.n,
            frames=self.scene_frames,
            batch=self.batch_frames,
            count=self.scene_count if count is None else count,
            agent_size=self.agent_size,
        )

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)

    def to_dict(self):
        return dataclasses.asdict(self)


_FIELDS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def load_config(path=None, overrides=None):
    """RunConfig from an optional JSON file plus overrides (flags win)."""
    values = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        unknown = sorted(set(data) - set(_FIELDS))
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
        values.update(data)
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        if value is not None:
            values[key] = value
    return RunConfig(**values)


def save_config(config, path):
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


#: desk-scale overrides for the synthetic benchmark: a small primitive
#: library (the scene repertoire is tiny), fewer affinity epochs, and a
#: glimpse threshold low enough that slower agents keep their component
#: (their smoothed difference peaks at ~0.7 of a faster agent's).
DESK_PRESET = {
    "clusters": 32,
    "plan_epochs": 20,
    "glimpse_threshold": 0.4,
    "classifier_epochs": 12,
}


def desk_config(**overrides):
    """RunConfig tuned for the synthetic desk-scale benchmark."""
    values = dict(DESK_PRESET)
    values.update(overrides)
    return RunConfig(**values)
