"""Pixel dynamics network: per-plan action filters, the mask-gated offset
convolution, translation pooling into state prediction maps, and their
summarization into a plan-driven attention map.

The network treats every pixel as carrying an object point.  A recognized
plan is decoded into motion-primitive vectors, each step is turned into a
small action filter, and convolving that filter with the masked image yields
a flat-index offset per pixel.  Translation pooling converts offsets into
"plus one at the shifted location" counts; a cell's count says how many
object points the action moved there.  `belief_update_oracle` recomputes the
same counts by exhaustive state enumeration (deterministic transitions,
uniform initial belief) and is the reference the fast path is tested against.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import fileformats
from .amp import decode_amp
from .numerics import (
    LstmParams,
    check_finite,
    conv2d,
    conv2d_filter_grad,
    conv2d_input_grad,
    dense_backward,
    kmax_pool,
    lstm_step,
    sigmoid,
    uniform_init,
)

#: weight of the fixed 1x1 summarization layer; not trainable by design
SUMMARY_WEIGHT = 1.0


@dataclass
class MaskedImage:
    """(N, N, 5) image: channel 0 flat location ids, 1 plan-mask codes, 2-4 RGB."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        n = self.data.shape[0]
        if self.data.shape != (n, n, 5):
            raise ValueError(f"masked image must be (N, N, 5), got {self.data.shape}")
        ids = np.arange(n * n, dtype=np.float64).reshape(n, n)
        if not np.array_equal(self.data[:, :, 0], ids):
            raise ValueError("channel 0 must equal the flat location-id grid")
        mask = self.data[:, :, 1]
        if not np.array_equal(mask, np.rint(mask)) or mask.min() < 0:
            raise ValueError("mask channel must hold nonnegative integers")

    @property
    def n(self):
        return self.data.shape[0]

    def ids(self):
        return self.data[:, :, 0]

    def mask(self):
        return self.data[:, :, 1]

    def rgb(self):
        return self.data[:, :, 2:5]


def build_masked_image(frame, regions):
    """Assemble a MaskedImage from an (N, N, 3) frame and (bool mask, m) regions.

    Region masks must be pairwise disjoint and plan indices a permutation of
    1..M; pixels outside every region get mask code 0.
    """
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.shape[0]
    if frame.shape != (n, n, 3):
        raise ValueError(f"frame must be square (N, N, 3), got {frame.shape}")
    mask = np.zeros((n, n))
    seen = set()
    for region, m in regions:
        m = int(m)
        if m < 1 or m > len(regions):
            raise ValueError(f"plan index {m} outside 1..{len(regions)}")
        if m in seen:
            raise ValueError(f"duplicate plan index {m}")
        seen.add(m)
        region = np.asarray(region, dtype=bool)
        if region.shape != (n, n):
            raise ValueError("region mask shape mismatch")
        if np.any(mask[region] != 0):
            raise ValueError("overlapping region masks")
        mask[region] = m
    data = np.zeros((n, n, 5))
    data[:, :, 0] = np.arange(n * n, dtype=np.float64).reshape(n, n)
    data[:, :, 1] = mask
    data[:, :, 2:5] = frame
    return MaskedImage(data)


@dataclass
class Acf:
    """One action filter: step k of plan m decoded to pixel-level dynamics."""

    values: np.ndarray
    plan_index: int
    step_index: int

    def __post_init__(self):
        self.values = check_finite(np.asarray(self.values, dtype=np.float64), "acf")
        f1, f2 = self.values.shape
        if f1 % 2 == 0 or f2 % 2 == 0:
            raise ValueError("action filters must have odd dims")


@dataclass
class PrdaMap:
    """Plan-driven attention: summed state prediction counts divided by z."""

    values: np.ndarray
    z: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.min() < 0.0 or not np.all(np.isfinite(self.values)):
            raise ValueError("attention values must be finite and nonnegative")


@dataclass
class PdnParams:
    """All network parameters for one image size.

    The location gate selects which part of each recurrent state applies to a
    local patch; k-max pooling condenses the gated state and the biased
    encode/decode pair reconstructs it into a filter.  offset_w / offset_b
    are the per-position weights and bias of the offset convolution.  The
    summarization layer weight is the module constant SUMMARY_WEIGHT.
    """

    lstm: LstmParams
    gate_w: np.ndarray
    gate_b: np.ndarray
    pool_k: int
    enc_w: np.ndarray
    enc_b: np.ndarray
    dec_w: np.ndarray
    dec_b: np.ndarray
    offset_w: np.ndarray
    offset_b: np.ndarray
    acf_shape: tuple

    def __post_init__(self):
        f1, f2 = self.acf_shape
        if f1 % 2 == 0 or f2 % 2 == 0:
            raise ValueError("acf_shape dims must be odd")
        if self.pool_k > self.lstm.hidden_size:
            raise ValueError("pool_k exceeds LSTM hidden size")
        if self.dec_w.shape[0] != f1 * f2:
            raise ValueError("decoder output does not match acf_shape")
        if self.enc_w.shape[1] != self.pool_k or self.dec_w.shape[1] != self.enc_w.shape[0]:
            raise ValueError("encoder/decoder shapes inconsistent")

    @property
    def n(self):
        return self.offset_w.shape[0]

    @classmethod
    def init(cls, rng, n, feat_dim, hidden=64, pool_k=16, enc_dim=16, acf_size=5):
        n2 = n * n
        window = acf_size * acf_size * 3  # terms feeding one offset value
        return cls(
            lstm=LstmParams.init(rng, feat_dim, hidden),
            gate_w=uniform_init(rng, (hidden, n2), n2),
            gate_b=uniform_init(rng, hidden, n2),
            pool_k=pool_k,
            enc_w=uniform_init(rng, (enc_dim, pool_k), pool_k),
            enc_b=uniform_init(rng, enc_dim, pool_k),
            dec_w=uniform_init(rng, (acf_size * acf_size, enc_dim), enc_dim),
            dec_b=uniform_init(rng, acf_size * acf_size, enc_dim),
            offset_w=uniform_init(rng, (n, n), 1),
            offset_b=uniform_init(rng, (n, n), window),
            acf_shape=(acf_size, acf_size),
        )


def location_gate(params, v):
    """Sigmoid gate over the flattened location grid; constant for a given N."""
    ids = v.ids().ravel()
    gate = sigmoid(params.gate_w @ ids + params.gate_b)
    if gate.shape[0] != params.lstm.hidden_size:
        raise ValueError("gate output does not match LSTM hidden size")
    return gate


def plan_step_states(params, plan_vectors, v):
    """Condensed per-step state vectors z_k for a plan's primitive vectors."""
    plan_vectors = np.asarray(plan_vectors, dtype=np.float64)
    gate = location_gate(params, v)
    h = np.zeros(params.lstm.hidden_size)
    c = np.zeros(params.lstm.hidden_size)
    states = []
    for vec in plan_vectors:
        h, c, _ = lstm_step(vec, h, c, params.lstm)
        states.append(kmax_pool(h * gate, params.pool_k))
    return states


def decode_filter(params, z):
    """Biased encode/decode from a condensed state to a flat filter.

    Returns (acf_flat, hidden) with the tanh hidden kept for the backward.
    """
    hidden = np.tanh(params.enc_w @ z + params.enc_b)
    return params.dec_w @ hidden + params.dec_b, hidden


def decode_filter_backward(params, z, hidden, dacf_flat):
    """Gradients of decode_filter w.r.t. encoder/decoder params and z."""
    ddec_w, ddec_b, dhidden = dense_backward(params.dec_w, hidden, dacf_flat)
    dpre = dhidden * (1.0 - hidden * hidden)
    denc_w, denc_b, dz = dense_backward(params.enc_w, z, dpre)
    return ddec_w, ddec_b, denc_w, denc_b, dz


def generate_acfs(params, plan_vectors, v, plan_index=1):
    """One action filter per plan step; earlier filters do not depend on later steps."""
    states = plan_step_states(params, plan_vectors, v)
    acfs = []
    for k, z in enumerate(states, start=1):
        flat, _ = decode_filter(params, z)
        acfs.append(Acf(flat.reshape(params.acf_shape), plan_index, k))
    return acfs


def drive_base(v, m):
    """Mask-gated channel-summed color signal: (mask == m) * (R + G + B)."""
    if m < 1:
        raise ValueError("plan index must be >= 1")
    return (v.mask() == m) * v.rgb().sum(axis=2)


def acf_convolve(v, acf, m, params):
    """Per-pixel offset map: window sum of filter x weighted colors where the
    mask matches plan m, zero-padded to N x N, plus the per-position bias."""
    values = acf.values if isinstance(acf, Acf) else np.asarray(acf, dtype=np.float64)
    if v.n != params.n:
        raise ValueError("image size does not match params")
    drive = drive_base(v, m) * params.offset_w
    return conv2d(drive, values, padding="same") + params.offset_b


def acf_convolve_backward(v, acf, m, params, dout):
    """Gradients of acf_convolve w.r.t. the filter, offset_w and offset_b."""
    values = acf.values if isinstance(acf, Acf) else np.asarray(acf, dtype=np.float64)
    base = drive_base(v, m)
    dacf = conv2d_filter_grad(base * params.offset_w, dout, values.shape)
    doffset_w = base * conv2d_input_grad(values, dout)
    return dacf, doffset_w, dout.copy()


def _round_half_toward_zero(x):
    return np.where(x >= 0.0, np.ceil(x - 0.5), np.floor(x + 0.5))


def translation_pool(offset_map):
    """Count, per cell, how many object points land there.

    Every source cell contributes one count at flat index id - round(offset),
    clamped into [0, N^2 - 1]; counts therefore always sum to N^2.
    """
    offset_map = check_finite(np.asarray(offset_map, dtype=np.float64), "offset map")
    n = offset_map.shape[0]
    if offset_map.shape != (n, n):
        raise ValueError("offset map must be square")
    ids = np.arange(n * n, dtype=np.int64)
    deltas = _round_half_toward_zero(offset_map.ravel()).astype(np.int64)
    targets = np.clip(ids - deltas, 0, n * n - 1)
    return np.bincount(targets, minlength=n * n).reshape(n, n)


def generate_prda(spms, z=1.0):
    """Elementwise sum of all state prediction maps divided by z.

    Realizes the fixed 1x1 summarization convolution: unit weights
    (SUMMARY_WEIGHT) across channels, stride one, nothing trainable.
    """
    if not spms:
        raise ValueError("no state prediction maps to summarize")
    if z <= 0.0:
        raise ValueError("z must be positive")
    shape = np.asarray(spms[0]).shape
    total = np.zeros(shape, dtype=np.float64)
    for spm in spms:
        spm = np.asarray(spm, dtype=np.float64)
        if spm.shape != shape:
            raise ValueError("state prediction maps differ in shape")
        total += SUMMARY_WEIGHT * spm
    return PrdaMap(total / z, z)


def pdn_forward(v, plans, lib, params, z=1.0):
    """Full pass: plans -> filters -> offset maps -> pooled counts -> attention."""
    if not plans:
        raise ValueError("at least one recognized plan is required")
    codes = set(np.unique(v.mask()).astype(int)) - {0}
    allowed = {plan.plan_index for plan in plans}
    if not codes <= allowed:
        raise ValueError(f"mask codes {sorted(codes - allowed)} have no recognized plan")
    spms = []
    for plan in plans:
        vectors = np.stack([decode_amp(s, lib) for s in plan.steps])
        for acf in generate_acfs(params, vectors, v, plan.plan_index):
            offsets = acf_convolve(v, acf, plan.plan_index, params)
            spms.append(translation_pool(offsets))
    return generate_prda(spms, z)


def belief_update_oracle(v, acf, m, params):
    """Exhaustive belief update over all object-point states.

    Transitions are deterministic (each state's successor comes from its
    offset under the filter) and the initial belief is uniform, so the
    unnormalized updated belief is an integer count per successor state.
    Every arithmetic step is written out longhand, independent of the
    vectorized path it verifies.
    """
    n = v.n
    if n > 6:
        raise ValueError("oracle enumerates all states; limited to N <= 6")
    if m < 1:
        raise ValueError("plan index must be >= 1")
    values = acf.values if isinstance(acf, Acf) else np.asarray(acf, dtype=np.float64)
    f1, f2 = values.shape
    c1, c2 = f1 // 2, f2 // 2
    mask = v.mask()
    mass = [0] * (n * n)
    for i in range(n):
        for j in range(n):
            offset = params.offset_b[i, j]
            for a in range(f1):
                for b in range(f2):
                    r = i + a - c1
                    c = j + b - c2
                    if 0 <= r < n and 0 <= c < n and mask[r, c] == m:
                        color_sum = (
                            v.data[r, c, 2] + v.data[r, c, 3] + v.data[r, c, 4]
                        )
                        offset += values[a, b] * color_sum * params.offset_w[r, c]
            if offset >= 0.0:
                delta = int(math.ceil(offset - 0.5))
            else:
                delta = int(math.floor(offset + 0.5))
            successor = i * n + j - delta
            if successor < 0:
                successor = 0
            if successor > n * n - 1:
                successor = n * n - 1
            mass[successor] += 1
    return np.array(mass, dtype=np.int64).reshape(n, n)


_PDN_FIELDS = ("gate_w", "gate_b", "enc_w", "enc_b", "dec_w", "dec_b", "offset_w", "offset_b")


def save_params(params, directory, name="pdn"):
    arrays = {f: getattr(params, f) for f in _PDN_FIELDS}
    for f in params.lstm.fields():
        arrays[f"lstm_{f}"] = getattr(params.lstm, f)
    meta = {"pool_k": params.pool_k, "acf_shape": list(params.acf_shape)}
    fileformats.save_bundle(directory, name, arrays, meta)


def load_params(directory, name="pdn"):
    arrays, meta = fileformats.load_bundle(directory, name)
    lstm = LstmParams(*[arrays[f"lstm_{f}"] for f in LstmParams.fields()])
    kwargs = {f: arrays[f] for f in _PDN_FIELDS}
    return PdnParams(
        lstm=lstm,
        pool_k=int(meta["pool_k"]),
        acf_shape=tuple(meta["acf_shape"]),
        **kwargs,
    )
