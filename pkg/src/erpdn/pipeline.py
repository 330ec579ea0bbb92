"""The event-recognition pipeline around the pixel dynamics network.

One step mirrors the system diagram: a frame batch yields a bottom-up
saliency map, its thresholded components become glimpses, each glimpse gets
its own recognized plan from motion-primitive distributions, the plans and
the masked frame drive the dynamics network into a plan-driven attention
map, and the combined attention modulates the features a small LSTM
classifier reads.  Ground-truth agent positions from the synthetic scenes
supervise an offset calibration of the filter-generation path, and
evaluation reports per-class average precision plus how strongly attention
concentrates on future trajectories.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import amp as amp_mod
from . import pdn as pdn_mod
from . import planrec
from .features import FeatureParams, VideoTube, grayscale, tube_features
from .numerics import (
    LstmParams,
    check_finite,
    conv2d,
    dense_backward,
    lstm_backward,
    lstm_forward,
    make_rng,
    softmax_cross_entropy,
    uniform_init,
)

log = logging.getLogger("erpdn")

EIGHT_CONNECTED = np.ones((3, 3), dtype=int)
FEATURE_FILTER = np.full((3, 3), 1.0 / 9.0)  # fixed smoothing feature map


def minmax(values):
    """Scale to [0, 1]; a constant map collapses to zeros."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def compute_bua(frame_t, frame_prev, sigma=1.5):
    """Bottom-up saliency: smoothed absolute grayscale difference, in [0, 1]."""
    a = np.asarray(frame_t, dtype=np.float64)
    b = np.asarray(frame_prev, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    diff = np.abs(grayscale(a) - grayscale(b))
    return check_finite(minmax(ndimage.gaussian_filter(diff, sigma)), "bua map")


def combine_attention(bua, prda_values, lam=1.0):
    """Additive combination, renormalized to [0, 1]."""
    bua = np.asarray(bua, dtype=np.float64)
    prda_values = np.asarray(prda_values, dtype=np.float64)
    if bua.shape != prda_values.shape:
        raise ValueError("attention map shapes differ")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    return check_finite(minmax(bua + lam * minmax(prda_values)), "combined attention")


@dataclass
class Glimpse:
    """One connected highlighted area plus its dilated masking region."""

    mask: np.ndarray  # bool core component
    region: np.ndarray  # bool mask used for the masked image (core + claimed ring)
    plan_index: int
    area: int
    bbox: tuple  # (x, y, w, h)


def segment_glimpses(att, threshold=0.5, min_area=9, dilate=0):
    """8-connected components of att >= threshold with area >= min_area.

    Components are ordered by descending area (ties by first flat index) and
    numbered 1..M in that order.  With dilate > 0 each glimpse also gets a
    grown masking region; rings are claimed in order so regions stay disjoint.
    """
    att = np.asarray(att, dtype=np.float64)
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    labels, count = ndimage.label(att >= threshold, structure=EIGHT_CONNECTED)
    comps = []
    for lab in range(1, count + 1):
        mask = labels == lab
        area = int(mask.sum())
        if area >= min_area:
            comps.append((area, int(np.argmax(mask)), mask))
    comps.sort(key=lambda t: (-t[0], t[1]))
    glimpses = []
    claimed = np.zeros(att.shape, dtype=bool)
    for _, _, mask in comps:
        claimed |= mask
    for m, (area, _, mask) in enumerate(comps, start=1):
        region = mask.copy()
        if dilate > 0:
            grown = ndimage.binary_dilation(mask, structure=EIGHT_CONNECTED, iterations=dilate)
            ring = grown & ~claimed
            region |= ring
            claimed |= ring
        rows, cols = np.nonzero(mask)
        bbox = (int(cols.min()), int(rows.min()),
                int(cols.max() - cols.min() + 1), int(rows.max() - rows.min() + 1))
        glimpses.append(Glimpse(mask, region, m, area, bbox))
    return glimpses


def glimpse_tube(frames, glimpse, config):
    """The glimpse's observation box, widened rightward to a fixed width so a
    drifting agent stays in view and the histogram's unchanged-pixel share
    stays comparable across scenes."""
    x, y, w, h = glimpse.bbox
    width = min(max(config.tube_width, w), config.n - x)
    return VideoTube(list(frames), (x, y, width, h))


def observed_trace(batch, glimpse, lib, config):
    """HOD distribution trace over the glimpse tube across the frame batch."""
    tube = glimpse_tube(batch, glimpse, config)
    params = FeatureParams(config.hod_bins, config.hog_bins, config.hog_cell)
    feats = tube_features(tube, kind=config.feature_kind, params=params)
    return [amp_mod.assign_distribution(f, lib, config.top_k) for f in feats]


@dataclass
class Models:
    """Everything a pipeline step needs besides the frames."""

    lib: object
    affinity: object
    pdn: object

    @property
    def feature_dim(self):
        return self.lib.centroids.shape[1]


@dataclass
class StepCache:
    bua: np.ndarray
    glimpses: list
    plans: list
    masked: object
    prda: object  # PrdaMap or None when no glimpse fired


def scene_step(sample, models, config, with_prda=True):
    """One full non-differentiable step: batch -> saliency -> glimpses ->
    per-glimpse plans -> masked image -> plan-driven attention."""
    batch = sample.batch()
    bua = compute_bua(batch[0], batch[1], config.bua_sigma)
    glimpses = segment_glimpses(
        bua, config.glimpse_threshold, config.min_area, config.glimpse_dilate
    )
    plans = []
    for glimpse in glimpses:
        trace = observed_trace(batch, glimpse, models.lib, config)
        plans.append(
            planrec.recognize(models.affinity, trace, config.plan_len, glimpse.plan_index)
        )
    masked = pdn_mod.build_masked_image(
        batch[-1], [(g.region, g.plan_index) for g in glimpses]
    )
    prda = None
    if plans and with_prda:
        prda = pdn_mod.pdn_forward(masked, plans, models.lib, models.pdn, config.z)
    return StepCache(bua, glimpses, plans, masked, prda)


# --- offset calibration -----------------------------------------------------

def _match_agents(sample, glimpse, config):
    """Agents whose last-batch-frame center falls inside the glimpse region."""
    t_last = sample.batch_size - 1
    matched = []
    for agent in sample.agents:
        row, col = agent.positions[t_last]
        if glimpse.region[row, col]:
            matched.append(agent)
    return matched


def calibration_tuples(samples, models, config):
    """Supervised offset targets from ground truth.

    Every matched agent's footprint cell should send its count to the agent's
    next-frame center: target offset = cell id - future center id.  The same
    one-step displacement field supervises every plan step; per-step horizons
    are not identifiable from a converged recurrence over a constant plan,
    and the summed attention map cannot tell them apart anyway.  Returns a
    list of dicts and the per-sample step caches.
    """
    tuples = []
    caches = []
    for sample in samples:
        cache = scene_step(sample, models, config, with_prda=False)
        caches.append(cache)
        n = sample.n
        t_last = sample.batch_size - 1
        for glimpse, plan in zip(cache.glimpses, cache.plans):
            agents = _match_agents(sample, glimpse, config)
            if not agents:
                continue
            vectors = np.stack([amp_mod.decode_amp(s, models.lib) for s in plan.steps])
            cells = []
            futures = []
            for agent in agents:
                half = agent.size // 2
                row, col = agent.positions[t_last]
                agent_cells = [
                    (r, c)
                    for r in range(max(row - half, 0), min(row + half + 1, n))
                    for c in range(max(col - half, 0), min(col + half + 1, n))
                    if glimpse.region[r, c]
                ]
                next_center = agent.positions[min(t_last + 1, len(agent.positions) - 1)]
                cells.append(agent_cells)
                futures.append([next_center] * config.plan_len)
            tuples.append(
                {
                    "masked": cache.masked,
                    "plan_index": glimpse.plan_index,
                    "vectors": vectors,
                    "cells": cells,
                    "futures": futures,
                }
            )
    return tuples, caches


def _calibration_rows(tuples, params):
    """Flatten tuples into per-cell regression rows.

    Each supervised cell yields its filter-window drive values (zero where the
    window leaves the image), the window's flat positions, the encoded state
    of its plan step, and the target offset minus the frozen bias.
    """
    f1, f2 = params.acf_shape
    c1, c2 = f1 // 2, f2 // 2
    slots = f1 * f2
    win_vals, win_pos, encodings, targets = [], [], [], []
    for tup in tuples:
        v = tup["masked"]
        n = v.n
        base = pdn_mod.drive_base(v, tup["plan_index"])
        states = pdn_mod.plan_step_states(params, tup["vectors"], v)
        for k, z in enumerate(states, start=1):
            henc = np.tanh(params.enc_w @ z + params.enc_b)
            for cells, future in zip(tup["cells"], tup["futures"]):
                fr, fc = future[k - 1]
                for r, c in cells:
                    vals = np.zeros(slots)
                    pos = np.full(slots, -1, dtype=np.int64)
                    for a in range(f1):
                        rr = r + a - c1
                        if not 0 <= rr < n:
                            continue
                        for b in range(f2):
                            cc = c + b - c2
                            if 0 <= cc < n:
                                vals[a * f2 + b] = base[rr, cc]
                                pos[a * f2 + b] = rr * n + cc
                    win_vals.append(vals)
                    win_pos.append(pos)
                    encodings.append(henc)
                    targets.append((r * n + c) - (fr * n + fc) - params.offset_b[r, c])
    if not win_vals:
        return None
    return (
        np.stack(win_vals),
        np.stack(win_pos),
        np.stack(encodings),
        np.asarray(targets),
    )


def _min_norm_solve(design, targets, cutoff=1e-10):
    """Min-norm least squares with a relative singular-value cutoff.

    The encoded plan states are heavily collinear (a converged recurrence),
    so a ridge would damp exactly the directions that separate plans; a thin
    SVD keeps them while discarding noise-level directions.
    """
    solution, *_ = np.linalg.lstsq(design, targets, rcond=cutoff)
    return solution


def calibrate_pdn(tuples, params, config):
    """Fit the filter decoder and offset weights to ground-truth offsets.

    The offset map is bilinear in (decoder params, per-position weights), and
    (filters * c, weights / c) is a gauge freedom whose random-weight basin
    is provably poor, so the solve fixes the gauge first: the weight field is
    reset to units, the decoder is solved once in closed form (min-norm with
    an eigenvalue cutoff; the encoded states of a converged recurrence are
    nearly collinear, which a ridge would damp), and remaining sweeps
    alternate weight-field and decoder refinements.  The offset bias stays
    frozen so unmasked cells keep their near-zero self offsets.  Mutates
    `params`; returns the loss trace.
    """
    import scipy.sparse as sparse
    import scipy.sparse.linalg as sparse_linalg

    rows = _calibration_rows(tuples, params)
    if rows is None:
        return []
    win_vals, win_pos, encodings, targets = rows
    n_rows, slots = win_vals.shape
    enc_dim = encodings.shape[1]
    n2 = params.n * params.n
    safe_pos = np.maximum(win_pos, 0)
    valid = (win_pos >= 0).ravel()
    rows_idx = np.repeat(np.arange(n_rows), slots)[valid]
    cols_idx = win_pos.ravel()[valid]

    w_field = np.ones(n2)
    dec_w, dec_b = params.dec_w, params.dec_b

    def loss():
        acfs = encodings @ dec_w.T + dec_b
        drive = win_vals * np.where(win_pos >= 0, w_field[safe_pos], 0.0)
        return float(np.mean((np.sum(acfs * drive, axis=1) - targets) ** 2))

    def solve_decoder():
        drive = win_vals * np.where(win_pos >= 0, w_field[safe_pos], 0.0)
        design = np.concatenate(
            [(drive[:, :, None] * encodings[:, None, :]).reshape(n_rows, slots * enc_dim), drive],
            axis=1,
        )
        theta = _min_norm_solve(design, targets)
        return theta[: slots * enc_dim].reshape(slots, enc_dim), theta[slots * enc_dim :]

    trace = [loss()]
    dec_w, dec_b = solve_decoder()
    trace.append(loss())
    for _ in range(config.calib_sweeps - 1):
        acfs = encodings @ dec_w.T + dec_b
        coeff = (acfs * win_vals).ravel()[valid]
        design_w = sparse.coo_matrix(
            (coeff, (rows_idx, cols_idx)), shape=(n_rows, n2)
        ).tocsr()
        ridge = config.calib_ridge * n_rows / n2
        gram_w = (design_w.T @ design_w + ridge * sparse.eye(n2)).tocsc()
        rhs = design_w.T @ targets + ridge * w_field
        w_field = sparse_linalg.spsolve(gram_w, rhs)
        trace.append(loss())
        dec_w, dec_b = solve_decoder()
        trace.append(loss())
    params.dec_w = dec_w
    params.dec_b = dec_b
    params.offset_w = w_field.reshape(params.n, params.n)
    return trace


# --- classifier --------------------------------------------------------------

@dataclass
class ClassifierParams:
    proj_w: np.ndarray
    proj_b: np.ndarray
    lstm: LstmParams
    out_w: np.ndarray
    out_b: np.ndarray

    @classmethod
    def init(cls, rng, pooled_dim, proj_dim, hidden, classes):
        return cls(
            proj_w=uniform_init(rng, (proj_dim, pooled_dim), pooled_dim),
            proj_b=uniform_init(rng, proj_dim, pooled_dim),
            lstm=LstmParams.init(rng, proj_dim, hidden),
            out_w=uniform_init(rng, (classes, hidden), hidden),
            out_b=uniform_init(rng, classes, hidden),
        )


def attended_features(att, frames, pool_grid):
    """Per-frame pooled attention-weighted smoothed features, flattened.

    Each frame's pooled vector is scaled to unit norm; the classifier should
    read the spatial pattern of attended mass, not its raw magnitude.
    """
    n = att.shape[0]
    if n % pool_grid:
        raise ValueError("image size must divide the pooling grid")
    block = n // pool_grid
    rows = []
    for frame in frames:
        feat = conv2d(grayscale(frame), FEATURE_FILTER, padding="same")
        pooled = (att * feat).reshape(pool_grid, block, pool_grid, block).mean(axis=(1, 3))
        flat = pooled.ravel()
        norm = np.linalg.norm(flat)
        rows.append(flat / norm if norm > 0 else flat)
    return np.stack(rows)


def classify_event(attended, params):
    """Class distribution for a sequence of attended feature vectors."""
    probs, _ = _classifier_forward(attended, params)
    return probs


def _classifier_forward(attended, params):
    attended = np.asarray(attended, dtype=np.float64)
    if attended.ndim != 2 or attended.shape[0] == 0:
        raise ValueError("attended sequence must be (T, D) with T >= 1")
    xs = attended @ params.proj_w.T + params.proj_b
    hs, caches = lstm_forward(xs, params.lstm)
    logits = params.out_w @ hs[-1] + params.out_b
    z = logits - logits.max()
    e = np.exp(z)
    probs = e / e.sum()
    return probs, (attended, xs, hs, caches, logits)


def _classifier_backward(cache, label, params, grads):
    """Cross-entropy gradients for one sample, accumulated into `grads`."""
    attended, xs, hs, caches, logits = cache
    loss, _, dlogits = softmax_cross_entropy(logits, label)
    dout_w, dout_b, dh_last = dense_backward(params.out_w, hs[-1], dlogits)
    grads["out_w"] += dout_w
    grads["out_b"] += dout_b
    dhs = np.zeros_like(hs)
    dhs[-1] = dh_last
    lstm_grads, dxs = lstm_backward(dhs, caches, params.lstm)
    for f in LstmParams.fields():
        setattr(grads["lstm"], f, getattr(grads["lstm"], f) + getattr(lstm_grads, f))
    grads["proj_w"] += dxs.T @ attended
    grads["proj_b"] += dxs.sum(axis=0)
    return loss


def train_classifier(feature_seqs, labels, config, seed=0):
    """Plain seeded SGD with cross-entropy over per-sample sequences."""
    if not feature_seqs:
        raise ValueError("empty training set")
    rng = make_rng(seed)
    params = ClassifierParams.init(
        rng, feature_seqs[0].shape[1], config.proj_dim,
        config.classifier_hidden, config.classes,
    )
    order = np.arange(len(feature_seqs))
    losses = []
    for _ in range(config.classifier_epochs):
        rng.shuffle(order)
        total = 0.0
        for idx in order:
            grads = {
                "proj_w": np.zeros_like(params.proj_w),
                "proj_b": np.zeros_like(params.proj_b),
                "lstm": params.lstm.zeros_like(),
                "out_w": np.zeros_like(params.out_w),
                "out_b": np.zeros_like(params.out_b),
            }
            _, cache = _classifier_forward(feature_seqs[idx], params)
            total += _classifier_backward(cache, labels[idx], params, grads)
            lr = config.classifier_lr
            params.proj_w -= lr * grads["proj_w"]
            params.proj_b -= lr * grads["proj_b"]
            params.out_w -= lr * grads["out_w"]
            params.out_b -= lr * grads["out_b"]
            for f in LstmParams.fields():
                arr = getattr(params.lstm, f)
                arr -= lr * getattr(grads["lstm"], f)
        losses.append(total / len(feature_seqs))
    return params, losses


# --- evaluation ---------------------------------------------------------------

def evaluate_map(scores, labels, n_classes=None):
    """Per-class average precision (all-point interpolation) and their mean.

    A class without positives is excluded with a warning; ranking ties break
    toward the earlier sample for determinism.
    """
    scores = check_finite(np.asarray(scores, dtype=np.float64), "scores")
    labels = np.asarray(labels, dtype=int)
    n_classes = scores.shape[1] if n_classes is None else n_classes
    per_class = {}
    for c in range(n_classes):
        positives = labels == c
        if not positives.any():
            log.warning("class %d has no positives; excluded from mean AP", c)
            continue
        ranked = np.argsort(-scores[:, c], kind="stable")
        hits = positives[ranked]
        cum_hits = np.cumsum(hits)
        precision = cum_hits / (np.arange(len(hits)) + 1)
        per_class[c] = float(precision[hits].mean())
    if not per_class:
        raise ValueError("no class has positive samples")
    mean_ap = float(np.mean(list(per_class.values())))
    return per_class, mean_ap


def concentration_ratio(prda, future_cells):
    """Mean attention on future-trajectory cells over mean elsewhere."""
    values = prda.values if hasattr(prda, "values") else np.asarray(prda)
    n = values.shape[0]
    traj = np.zeros(values.shape, dtype=bool)
    for r, c in future_cells:
        traj[r, c] = True
    if not traj.any() or traj.all():
        raise ValueError("degenerate trajectory cell set")
    on = float(values[traj].mean())
    off = float(values[~traj].mean())
    return on / off if off > 0 else np.inf


def concentration_stats(samples, caches):
    """Per-frame concentration ratios; a step without attention scores 0."""
    ratios = []
    for sample, cache in zip(samples, caches):
        if cache.prda is None:
            ratios.append(0.0)
            continue
        ratios.append(concentration_ratio(cache.prda, sample.future_cells()))
    return ratios


# --- end-to-end training ------------------------------------------------------

@dataclass
class TrainResult:
    models: Models
    classifier: ClassifierParams
    metrics: dict
    train_samples: list = field(default_factory=list)
    test_samples: list = field(default_factory=list)
    test_caches: list = field(default_factory=list)


def split_dataset(samples, train_fraction, seed):
    order = np.arange(len(samples))
    make_rng(seed).shuffle(order)
    cut = int(round(len(samples) * train_fraction))
    train = [samples[i] for i in order[:cut]]
    test = [samples[i] for i in order[cut:]]
    if not train or not test:
        raise ValueError(f"split leaves an empty side: {len(train)}/{len(test)}")
    return train, test


def build_models(train_samples, config, seed):
    """Fit the primitive library, the affinity model, and calibrate the
    dynamics network on the training split.  Returns (models, build metrics,
    per-train-sample step caches).

    Library features and affinity traces come from the same glimpse tubes the
    inference path observes, so recognition queries stay in-distribution.
    """
    fparams = FeatureParams(config.hod_bins, config.hog_bins, config.hog_cell)
    features = []
    traces_raw = []
    for sample in train_samples:
        batch = sample.batch()
        bua = compute_bua(batch[0], batch[1], config.bua_sigma)
        for glimpse in segment_glimpses(
            bua, config.glimpse_threshold, config.min_area, config.glimpse_dilate
        ):
            # tubes run past the batch so the affinity model learns what
            # follows the observed prefix inside the same box
            tube = glimpse_tube(sample.frames, glimpse, config)
            feats = tube_features(tube, config.feature_kind, fparams)
            features.extend(feats)
            traces_raw.append(feats)
    log.info("clustering %d tube features into %d primitives", len(features), config.clusters)
    lib = amp_mod.kmeans_fit(features, config.clusters, seed=seed + 1, kind=config.feature_kind)
    lib.top_k = config.top_k

    corpus = [
        [amp_mod.assign_distribution(f, lib, config.top_k) for f in feats]
        for feats in traces_raw
    ]
    log.info("training affinity model on %d traces", len(corpus))
    affinity = planrec.train_affinity(
        corpus, config.clusters, dim=config.embed_dim, window=config.window,
        epochs=config.plan_epochs, lr=config.plan_lr,
        neg_samples=config.neg_samples, seed=seed + 2,
    )

    params = pdn_mod.PdnParams.init(
        make_rng(seed + 3), config.n, lib.centroids.shape[1],
        hidden=config.lstm_hidden, pool_k=config.pool_k,
        enc_dim=config.enc_dim, acf_size=config.acf_size,
    )
    models = Models(lib, affinity, params)
    tuples, _ = calibration_tuples(train_samples, models, config)
    log.info("calibrating offsets on %d glimpse tuples", len(tuples))
    calib_losses = calibrate_pdn(tuples, params, config)
    # caches must reflect the calibrated params, so they are rebuilt
    caches = [scene_step(sample, models, config) for sample in train_samples]
    build_metrics = {
        "kmeans_inertia": lib.inertia_history,
        "plan_loss": affinity.loss_history,
        "calibration_loss": calib_losses,
    }
    return models, build_metrics, caches


def feature_batch(samples, caches, config, lam):
    out = []
    for sample, cache in zip(samples, caches):
        if cache.prda is None:
            att = cache.bua
        else:
            att = combine_attention(cache.bua, cache.prda.values, lam)
        out.append(attended_features(att, sample.batch(), config.pool_grid))
    return out


def train_er(dataset, config, seed=0):
    """Full training: split, fit models, calibrate, train the classifier,
    evaluate mean AP and attention concentration on the held-out split."""
    if not dataset:
        raise ValueError("empty dataset")
    train_samples, test_samples = split_dataset(dataset, config.train_split, seed + 5)
    models, build_metrics, train_caches = build_models(train_samples, config, seed)

    train_feats = feature_batch(train_samples, train_caches, config, config.lam)
    labels = [s.label for s in train_samples]
    classifier, clf_losses = train_classifier(train_feats, labels, config, seed=seed + 6)

    test_caches = [scene_step(sample, models, config) for sample in test_samples]
    test_feats = feature_batch(test_samples, test_caches, config, config.lam)
    scores = np.stack([classify_event(f, classifier) for f in test_feats])
    test_labels = np.asarray([s.label for s in test_samples])
    per_class, mean_ap = evaluate_map(scores, test_labels, config.classes)

    ratios = concentration_stats(test_samples, test_caches)
    passing = [r >= config.concentration_factor for r in ratios]
    metrics = {
        **build_metrics,
        "classifier_loss": clf_losses,
        "lambda": config.lam,
        "mean_ap": mean_ap,
        "per_class_ap": {str(k): v for k, v in per_class.items()},
        "concentration_ratios": ratios,
        "concentration_pass_fraction": float(np.mean(passing)) if ratios else 0.0,
    }
    return TrainResult(models, classifier, metrics, train_samples, test_samples, test_caches)


_CLF_FIELDS = ("proj_w", "proj_b", "out_w", "out_b")


def save_classifier(params, directory, name="classifier"):
    from . import fileformats

    arrays = {f: getattr(params, f) for f in _CLF_FIELDS}
    for f in LstmParams.fields():
        arrays[f"lstm_{f}"] = getattr(params.lstm, f)
    fileformats.save_bundle(directory, name, arrays)


def load_classifier(directory, name="classifier"):
    from . import fileformats

    arrays, _ = fileformats.load_bundle(directory, name)
    lstm = LstmParams(*[arrays[f"lstm_{f}"] for f in LstmParams.fields()])
    return ClassifierParams(
        proj_w=arrays["proj_w"], proj_b=arrays["proj_b"],
        lstm=lstm, out_w=arrays["out_w"], out_b=arrays["out_b"],
    )
