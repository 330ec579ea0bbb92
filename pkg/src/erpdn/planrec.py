"""Shallow plan recognition over motion-primitive distribution traces.

An affinity model is trained skip-gram style with negative sampling, except
that both the center and the context of a training pair are small index
distributions: a pair contributes the expected logistic loss
sum_i sum_j p_center(i) * p_context(j) * l(i, j).  Context windows look
forward only, so u_x . v_e learns "x tends to follow e"; recognition greedily
appends the candidate whose context embedding is most similar to the expected
input embeddings of the recent trace.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import fileformats
from .amp import AmpDistribution, RecognizedPlan
from .numerics import make_rng, sigmoid


@dataclass
class AffinityModel:
    emb_in: np.ndarray  # (vocab, dim) center/input embeddings
    emb_out: np.ndarray  # (vocab, dim) context/output embeddings
    window: int
    seed: int
    loss_history: list = field(default_factory=list)
    positive_loss_history: list = field(default_factory=list)

    def __post_init__(self):
        self.emb_in = np.asarray(self.emb_in, dtype=np.float64)
        self.emb_out = np.asarray(self.emb_out, dtype=np.float64)
        if self.emb_in.shape != self.emb_out.shape:
            raise ValueError("embedding matrices must share a shape")

    @property
    def vocab_size(self):
        return self.emb_in.shape[0]

    @property
    def dim(self):
        return self.emb_in.shape[1]


def _unigram_table(corpus, vocab_size, power=0.75):
    counts = np.zeros(vocab_size)
    for trace in corpus:
        for dist in trace:
            for i, p in zip(dist.indices, dist.probs):
                counts[i] += p
    weights = np.power(np.maximum(counts, 0.0), power)
    total = weights.sum()
    if total == 0.0:
        raise ValueError("empty corpus")
    return np.cumsum(weights / total)


def _pair_loss_and_grads(model, center, context, negatives):
    """Expected SGNS loss for one (center dist, context dist) pair.

    Returns (positive_loss, total_loss, dV (nI, D), dU_pos (nJ, D), dU_neg).
    Negatives that fall inside the context support are skipped.
    """
    ci = np.fromiter(center.indices, dtype=int)
    cp = np.fromiter(center.probs, dtype=np.float64)
    xi = np.fromiter(context.indices, dtype=int)
    xp = np.fromiter(context.probs, dtype=np.float64)
    v = model.emb_in[ci]
    u = model.emb_out[xi]

    scores = v @ u.T
    sig = sigmoid(scores)
    weights = np.outer(cp, xp)
    pos_loss = float(np.sum(weights * -np.log(np.maximum(sig, 1e-300))))
    coeff = weights * (sig - 1.0)
    dv = coeff @ u
    du_pos = coeff.T @ v

    total = pos_loss
    keep = [n for n in negatives if n not in context.support]
    du_neg = np.zeros((len(keep), model.dim))
    if keep:
        un = model.emb_out[keep]
        neg_scores = v @ un.T
        neg_sig = sigmoid(neg_scores)
        total += float(np.sum(cp[:, None] * -np.log(np.maximum(1.0 - neg_sig, 1e-300))))
        neg_coeff = cp[:, None] * neg_sig
        dv += neg_coeff @ un
        du_neg = neg_coeff.T @ v
    return pos_loss, total, ci, dv, xi, du_pos, np.asarray(keep, dtype=int), du_neg


def _iter_pairs(trace, window):
    for t in range(len(trace)):
        for delta in range(1, window + 1):
            if t + delta < len(trace):
                yield trace[t], trace[t + delta]


def train_affinity(corpus, vocab_size, dim=32, window=2, epochs=60, lr=0.05,
                   neg_samples=5, seed=0):
    """SGD over all forward (center, context) pairs of every trace.

    The learning rate decays linearly over the full schedule down to a 1e-4
    floor.  Single-threaded on purpose: the update order is part of the
    deterministic contract.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    if dim <= 0:
        raise ValueError("embedding dim must be positive")
    for trace in corpus:
        for dist in trace:
            if max(dist.indices) >= vocab_size:
                raise ValueError("trace index outside vocabulary")

    rng = make_rng(seed)
    emb_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(vocab_size, dim))
    emb_out = np.zeros((vocab_size, dim))
    model = AffinityModel(emb_in, emb_out, window=window, seed=int(seed))

    cumulative = _unigram_table(corpus, vocab_size)
    pairs_per_epoch = sum(1 for trace in corpus for _ in _iter_pairs(trace, window))
    if pairs_per_epoch == 0:
        raise ValueError("corpus has no context pairs; traces too short for window")
    total_steps = epochs * pairs_per_epoch
    step = 0

    for _ in range(epochs):
        pos_sum = 0.0
        loss_sum = 0.0
        for trace in corpus:
            for center, context in _iter_pairs(trace, window):
                alpha = lr * max(1.0 - step / total_steps, 1e-4)
                step += 1
                negatives = np.searchsorted(cumulative, rng.random(neg_samples))
                pos, total, ci, dv, xi, du_pos, ni, du_neg = _pair_loss_and_grads(
                    model, center, context, negatives
                )
                pos_sum += pos
                loss_sum += total
                np.subtract.at(model.emb_in, ci, alpha * dv)
                np.subtract.at(model.emb_out, xi, alpha * du_pos)
                if len(ni):
                    np.subtract.at(model.emb_out, ni, alpha * du_neg)
        model.positive_loss_history.append(pos_sum / pairs_per_epoch)
        model.loss_history.append(loss_sum / pairs_per_epoch)
    return model


def corpus_loss(model, corpus, neg_samples=5, seed=0):
    """Mean expected pair loss over a corpus with freshly seeded negatives."""
    rng = make_rng(seed)
    cumulative = _unigram_table(corpus, model.vocab_size)
    total = 0.0
    count = 0
    for trace in corpus:
        for center, context in _iter_pairs(trace, model.window):
            negatives = np.searchsorted(cumulative, rng.random(neg_samples))
            _, loss, *_ = _pair_loss_and_grads(model, center, context, negatives)
            total += loss
            count += 1
    if count == 0:
        raise ValueError("corpus has no context pairs")
    return total / count


def _expected_input_embedding(model, dist):
    probs = np.asarray(dist.probs)
    return probs @ model.emb_in[list(dist.indices)]


def context_similarity(model, center_index, candidate_index):
    """Cosine affinity for 'candidate follows center'.

    A candidate that never appeared as a context has no affinity at all and
    ranks below every observed one (-inf); unseen indices are out of scope.
    """
    u = model.emb_out[candidate_index]
    norm_u = np.linalg.norm(u)
    if norm_u == 0.0:
        return -np.inf
    v = model.emb_in[center_index]
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0:
        return -np.inf
    return float(u @ v / (norm_u * norm_v))


def recognize(model, observed, plan_len, plan_index=1):
    """Greedily extend an observed distribution trace by plan_len indices.

    Each step scores every vocabulary index by the mean cosine similarity
    between its context embedding and the expected input embeddings of the
    last `window` trace elements, then appends the argmax as a point mass.
    Indices never observed as a context rank below all observed ones; ties
    resolve to the lowest index.
    """
    if plan_len <= 0:
        raise ValueError("plan_len must be positive")
    trace = list(observed)
    if not trace:
        raise ValueError("empty observation")
    norms = np.linalg.norm(model.emb_out, axis=1)
    unit_out = model.emb_out / np.maximum(norms, 1e-300)[:, None]
    unseen = norms == 0.0
    steps = []
    for _ in range(plan_len):
        recent = trace[-model.window:]
        score = np.zeros(model.vocab_size)
        for dist in recent:
            expected = _expected_input_embedding(model, dist)
            nrm = np.linalg.norm(expected)
            if nrm > 0.0:
                score += unit_out @ (expected / nrm)
        score /= len(recent)
        if not unseen.all():
            score[unseen] = -np.inf
        choice = int(np.argmax(score))
        steps.append(choice)
        trace.append(AmpDistribution((choice,), (1.0,)))
    return RecognizedPlan(plan_index, tuple(steps))


def save_model(model, json_path, in_path, out_path):
    fileformats.save_tensor(in_path, model.emb_in)
    fileformats.save_tensor(out_path, model.emb_out)
    header = {
        "vocab": model.vocab_size,
        "dim": model.dim,
        "window": model.window,
        "seed": model.seed,
    }
    with open(json_path, "w") as fh:
        json.dump(header, fh, sort_keys=True)
        fh.write("\n")


def load_model(json_path, in_path, out_path):
    with open(json_path) as fh:
        header = json.load(fh)
    model = AffinityModel(
        fileformats.load_tensor(in_path),
        fileformats.load_tensor(out_path),
        window=header["window"],
        seed=header["seed"],
    )
    if model.vocab_size != header["vocab"] or model.dim != header["dim"]:
        raise ValueError("affinity header does not match tensor shapes")
    return model
