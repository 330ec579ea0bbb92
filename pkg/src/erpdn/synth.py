"""Synthetic surveillance scenes with scripted agents and known ground truth.

Each sample is a short square-frame sequence of colored square agents drifting
along horizontal corridors over a black floor, acting out one of four event
classes: approach (one agent heads for the goal marker ahead of it), meet (a
fast agent closes on a slower one), loiter (an agent jitters in place), and
disperse (the leading agent pulls away from the follower).  Horizontal motion
keeps every displacement an exact flat-index offset, which is the regime the
translation-pooling arithmetic represents without row wrap.  Agent colors all
share the same channel sum so the offset convolution sees the same drive
regardless of hue, and the manifest records every agent position, giving the
calibration and evaluation code exact future trajectories.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import fileformats
from .numerics import make_rng

CLASSES = ("approach", "meet", "loiter", "disperse")

AGENT_PALETTE = (
    (0.9, 0.3, 0.3),
    (0.3, 0.9, 0.3),
    (0.3, 0.3, 0.9),
    (0.8, 0.5, 0.2),
    (0.2, 0.5, 0.8),
)
GOAL_COLOR = (0.95, 0.95, 0.95)
BACKGROUND = 0.0
# two-column hop back and forth; the hop distance keeps the frame-difference
# footprint connected yet half the size of the slowest walking agent's
_LOITER_ORBIT = ((0, 0), (0, 2))


@dataclass
class SceneConfig:
    n: int = 64
    frames: int = 8
    batch: int = 4
    count: int = 40
    agent_size: int = 5

    def __post_init__(self):
        if self.n < 32 or self.frames < self.batch or self.batch != 4:
            raise ValueError(f"invalid scene config: {self}")
        if self.agent_size % 2 == 0:
            raise ValueError("agent_size must be odd")


@dataclass
class Agent:
    color: tuple
    size: int
    positions: list  # (row, col) center per frame


@dataclass
class EventSample:
    frames: np.ndarray  # (T, N, N, 3)
    label: int
    agents: list
    goal: tuple  # (row, col) or None
    batch_size: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.label >= len(CLASSES):
            raise ValueError(f"label {self.label} out of range")
        if self.frames.shape[0] < self.batch_size:
            raise ValueError("not enough frames for one batch")

    @property
    def n(self):
        return self.frames.shape[1]

    def batch(self):
        """The observed frame batch (always batch_size frames)."""
        return self.frames[: self.batch_size]

    def future_cells(self, dilate=0):
        """Cells at (or around) every agent's center over post-batch frames."""
        cells = set()
        for agent in self.agents:
            for row, col in agent.positions[self.batch_size :]:
                for dr in range(-dilate, dilate + 1):
                    for dc in range(-dilate, dilate + 1):
                        r, c = row + dr, col + dc
                        if 0 <= r < self.n and 0 <= c < self.n:
                            cells.add((r, c))
        return cells

    def agent_cells(self, t):
        """Footprint cells of every agent at frame t, as one per-agent list."""
        out = []
        half = None
        for agent in self.agents:
            half = agent.size // 2
            row, col = agent.positions[t]
            out.append(
                [
                    (r, c)
                    for r in range(max(row - half, 0), min(row + half + 1, self.n))
                    for c in range(max(col - half, 0), min(col + half + 1, self.n))
                ]
            )
        return out


def _draw_square(frame, row, col, half, color):
    n = frame.shape[0]
    r0, r1 = max(row - half, 0), min(row + half + 1, n)
    c0, c1 = max(col - half, 0), min(col + half + 1, n)
    frame[r0:r1, c0:c1] = color


def _render(config, agents, goal):
    frames = np.full((config.frames, config.n, config.n, 3), BACKGROUND)
    half = config.agent_size // 2
    for t in range(config.frames):
        if goal is not None:
            _draw_square(frames[t], goal[0], goal[1], half, GOAL_COLOR)
        for agent in agents:
            _draw_square(frames[t], *agent.positions[t], half, agent.color)
    return frames


def _walk(start, gait, frames):
    """Rightward drift following a cyclic per-frame step pattern.

    A None gait is the loiter orbit.  Gaits with rest frames give traces a
    periodic texture that keeps recognized plans step-dependent.
    """
    positions = [start]
    for t in range(1, frames):
        if gait is None:
            dc = _LOITER_ORBIT[t % len(_LOITER_ORBIT)][1]
            positions.append((start[0], start[1] + dc))
        else:
            prev = positions[-1]
            positions.append((prev[0], prev[1] + gait[(t - 1) % len(gait)]))
    return positions


# corridors far enough apart that dilated masking regions never reach a
# neighboring agent's pixels
ROW_SEPARATION = 20


def _agent_rows(rng, config, count):
    margin = config.agent_size // 2 + 2
    rows = [int(rng.integers(margin, config.n - margin))]
    while len(rows) < count:
        row = int(rng.integers(margin, config.n - margin))
        if all(abs(row - r) >= ROW_SEPARATION for r in rows):
            rows.append(row)
    return rows


WALK_GAIT = (3,)
RUN_GAIT = (4,)


def _script_agents(config, label, rng):
    """Scripted horizontal motion; the gait pattern is the class signature.

    approach: one walker with the goal marker ahead on its row.
    meet:     a runner behind a walker (the gap shrinks every frame).
    loiter:   one agent hop-jittering around its anchor column.
    disperse: a runner ahead of a walker (the gap grows every frame).
    """
    name = CLASSES[label]
    goal = None
    if name == "approach":
        gaits = [WALK_GAIT]
    elif name == "meet":
        gaits = [RUN_GAIT, WALK_GAIT]
    elif name == "loiter":
        gaits = [None]
    else:  # disperse
        gaits = [WALK_GAIT, RUN_GAIT]
    rows = _agent_rows(rng, config, len(gaits))
    agents = []
    col = int(rng.integers(6, 13))
    for idx, (gait, row) in enumerate(zip(gaits, rows)):
        # later agents start further right; motion never exits the frame
        start = (row, col + idx * int(rng.integers(12, 16)))
        agents.append(
            Agent(
                AGENT_PALETTE[idx % len(AGENT_PALETTE)],
                config.agent_size,
                _walk(start, gait, config.frames),
            )
        )
    if name == "approach":
        goal = (rows[0], agents[0].positions[0][1] + int(rng.integers(27, 31)))
    return agents, goal


def synth_generate(config, seed=0):
    """Deterministic dataset of EventSamples, class-balanced within one sample."""
    rng = make_rng(seed)
    per_class = [config.count // len(CLASSES)] * len(CLASSES)
    for i in range(config.count - sum(per_class)):
        per_class[i] += 1
    samples = []
    for label, amount in enumerate(per_class):
        for _ in range(amount):
            sample_seed = int(rng.integers(0, 2**63 - 1))
            agents, goal = _script_agents(config, label, make_rng(sample_seed))
            samples.append(
                EventSample(
                    frames=_render(config, agents, goal),
                    label=label,
                    agents=agents,
                    goal=goal,
                    batch_size=config.batch,
                    seed=sample_seed,
                )
            )
    return samples


def save_dataset(samples, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for idx, sample in enumerate(samples):
        sdir = os.path.join(out_dir, f"sample_{idx:04d}")
        os.makedirs(sdir, exist_ok=True)
        for t in range(sample.frames.shape[0]):
            fileformats.write_ppm(os.path.join(sdir, f"frame_{t}.ppm"), sample.frames[t])
        manifest = {
            "label": sample.label,
            "label_name": CLASSES[sample.label],
            "classes": list(CLASSES),
            "n": sample.n,
            "frames": int(sample.frames.shape[0]),
            "batch": sample.batch_size,
            "seed": sample.seed,
            "goal": list(sample.goal) if sample.goal is not None else None,
            "agents": [
                {
                    "color": list(a.color),
                    "size": a.size,
                    "positions": [list(p) for p in a.positions],
                }
                for a in sample.agents
            ],
        }
        with open(os.path.join(sdir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
            fh.write("\n")


def load_dataset(root):
    """Load sample dirs back; a manifest with a "labels" list is duplicated
    into one sample per label (multi-event frames count once per event)."""
    samples = []
    for entry in sorted(os.listdir(root)):
        sdir = os.path.join(root, entry)
        manifest_path = os.path.join(sdir, "manifest.json")
        if not os.path.isfile(manifest_path):
            continue
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        frames = np.stack(
            [
                fileformats.read_ppm(os.path.join(sdir, f"frame_{t}.ppm"))
                for t in range(manifest["frames"])
            ]
        )
        agents = [
            Agent(tuple(a["color"]), a["size"], [tuple(p) for p in a["positions"]])
            for a in manifest["agents"]
        ]
        goal = tuple(manifest["goal"]) if manifest.get("goal") else None
        labels = manifest.get("labels", [manifest["label"]] if "label" in manifest else [])
        if not labels:
            raise ValueError(f"{manifest_path}: no label")
        for label in labels:
            samples.append(
                EventSample(
                    frames=frames,
                    label=int(label),
                    agents=agents,
                    goal=goal,
                    batch_size=manifest["batch"],
                    seed=manifest.get("seed", 0),
                )
            )
    return samples
