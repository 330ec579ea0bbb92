"""Histogram features over frames and video tubes.

Two extractors feed the motion-primitive clustering: HOD (histogram of
per-pixel grayscale frame differences) and HOG (per-cell histograms of
gradient orientations weighted by magnitude).  Vectors are L2-normalized;
an all-zero vector stays zero rather than dividing by zero.
"""

import json
from dataclasses import dataclass

import numpy as np

HOD = "hod"
HOG = "hog"
HOD_HOG = "hod+hog"
KINDS = (HOD, HOG, HOD_HOG)

DEFAULT_HOD_BINS = 32
DEFAULT_HOG_BINS = 9
DEFAULT_HOG_CELL = 8


def validate_frame(frame):
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"frame must be (H, W, 3), got {frame.shape}")
    if frame.shape[0] < 8 or frame.shape[1] < 8:
        raise ValueError(f"frame too small: {frame.shape[:2]}, need at least 8x8")
    if frame.min() < 0.0 or frame.max() > 1.0:
        raise ValueError("frame values must lie in [0, 1]")
    return frame


def grayscale(frame):
    """Plain channel mean; no perceptual weighting."""
    return np.asarray(frame, dtype=np.float64).mean(axis=2)


def normalize(vec):
    norm = np.linalg.norm(vec)
    return vec if norm == 0.0 else vec / norm


@dataclass
class FeatureVector:
    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if np.any(self.values < -1e-12):
            raise ValueError("feature vector entries must be nonnegative")


@dataclass
class VideoTube:
    """A fixed rectangle (x, y, w, h) tracked through consecutive frames."""

    frames: list
    rect: tuple  # (x, y, w, h) with x = column, y = row

    def __post_init__(self):
        if len(self.frames) < 2:
            raise ValueError("a tube needs at least 2 frames")
        x, y, w, h = self.rect
        for fr in self.frames:
            fh, fw = np.asarray(fr).shape[:2]
            if not (0 <= x and 0 <= y and x + w <= fw and y + h <= fh and w > 0 and h > 0):
                raise ValueError(f"rect {self.rect} outside frame {fh}x{fw}")

    def crop(self, t):
        x, y, w, h = self.rect
        return np.asarray(self.frames[t], dtype=np.float64)[y : y + h, x : x + w]


def hod(frame_a, frame_b, bins=DEFAULT_HOD_BINS):
    """Histogram of grayscale differences frame_b - frame_a over [-1, 1], L2-normalized.

    Bucket i covers [-1 + 2i/bins, -1 + 2(i+1)/bins), the last bucket closed.
    """
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    diffs = grayscale(b) - grayscale(a)
    counts, _ = np.histogram(diffs, bins=bins, range=(-1.0, 1.0))
    return FeatureVector(normalize(counts.astype(np.float64)), HOD)


def _gradients(gray):
    """Central differences inside, one-sided at the borders."""
    gx = np.empty_like(gray)
    gy = np.empty_like(gray)
    gx[:, 1:-1] = (gray[:, 2:] - gray[:, :-2]) / 2.0
    gx[:, 0] = gray[:, 1] - gray[:, 0]
    gx[:, -1] = gray[:, -1] - gray[:, -2]
    gy[1:-1, :] = (gray[2:, :] - gray[:-2, :]) / 2.0
    gy[0, :] = gray[1, :] - gray[0, :]
    gy[-1, :] = gray[-1, :] - gray[-2, :]
    return gx, gy


def hog(frame, orientation_bins=DEFAULT_HOG_BINS, cell=DEFAULT_HOG_CELL):
    """Per-cell unsigned orientation histograms weighted by gradient magnitude.

    Angles are taken mod pi (unsigned gradients), binned over [0, pi); cell
    histograms are concatenated row-major and the whole vector L2-normalized.
    """
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape[:2]
    if h % cell or w % cell:
        raise ValueError(f"frame {h}x{w} not divisible by cell {cell}")
    gray = grayscale(frame)
    gx, gy = _gradients(gray)
    mag = np.hypot(gx, gy)
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    idx = np.minimum((angle / np.pi * orientation_bins).astype(int), orientation_bins - 1)
    out = np.zeros((h // cell, w // cell, orientation_bins))
    for ci in range(h // cell):
        for cj in range(w // cell):
            block_idx = idx[ci * cell : (ci + 1) * cell, cj * cell : (cj + 1) * cell]
            block_mag = mag[ci * cell : (ci + 1) * cell, cj * cell : (cj + 1) * cell]
            out[ci, cj] = np.bincount(
                block_idx.ravel(), weights=block_mag.ravel(), minlength=orientation_bins
            )
    return FeatureVector(normalize(out.ravel()), HOG)


@dataclass
class FeatureParams:
    hod_bins: int = DEFAULT_HOD_BINS
    hog_bins: int = DEFAULT_HOG_BINS
    hog_cell: int = DEFAULT_HOG_CELL

    def to_dict(self):
        return {"hod_bins": self.hod_bins, "hog_bins": self.hog_bins, "hog_cell": self.hog_cell}


def tube_features(tube, kind=HOD, params=FeatureParams()):
    """One feature vector per frame pair (HOD) or per frame (HOG) over the tube crop.

    The combined kind concatenates hod(t, t+1) with hog(t) per pair and
    renormalizes, so its length is the pair count.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown feature kind {kind!r}")
    crops = [tube.crop(t) for t in range(len(tube.frames))]
    if kind == HOG:
        return [hog(c, params.hog_bins, params.hog_cell) for c in crops]
    out = []
    for a, b in zip(crops, crops[1:]):
        if kind == HOD:
            out.append(hod(a, b, params.hod_bins))
        else:
            combined = np.concatenate(
                [
                    hod(a, b, params.hod_bins).values,
                    hog(a, params.hog_bins, params.hog_cell).values,
                ]
            )
            out.append(FeatureVector(normalize(combined), HOD_HOG))
    return out


def save_feature_sequence(tensor_path, sidecar_path, vectors, kind, params):
    """Persist a feature sequence as a PDNT matrix plus a JSON sidecar."""
    from . import fileformats

    matrix = np.stack([v.values for v in vectors])
    fileformats.save_tensor(tensor_path, matrix)
    with open(sidecar_path, "w") as fh:
        json.dump({"kind": kind, "count": len(vectors), **params.to_dict()}, fh, sort_keys=True)
        fh.write("\n")
