"""Dense numeric kernels shared by every stage: activations, dense and LSTM
layers with hand-derived backward passes, 2-D cross-correlation, k-max
pooling, and a central finite-difference gradient oracle.

Everything is float64 and purely functional; determinism comes from passing
explicit seeded generators (`make_rng`).
"""

from dataclasses import dataclass

import numpy as np


def make_rng(seed):
    """One seeded 64-bit PCG stream; identical seeds give identical streams."""
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def uniform_init(rng, shape, fan_in):
    """Uniform(-s, s) with s = 1/sqrt(fan_in)."""
    s = 1.0 / np.sqrt(float(fan_in))
    return rng.uniform(-s, s, size=shape)


def check_finite(arr, what="array"):
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {what}")
    return arr


def sigmoid(x):
    """Elementwise logistic function, numerically stable for large |x|."""
    x = check_finite(np.asarray(x, dtype=np.float64), "sigmoid input")
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_grad(y):
    """Derivative of sigmoid expressed through its output y."""
    return y * (1.0 - y)


def dense_forward(w, b, x):
    return w @ x + b


def dense_backward(w, x, dout):
    """Gradients of a dense layer `w @ x + b` given upstream dout."""
    dw = np.outer(dout, x)
    db = dout.copy()
    dx = w.T @ dout
    return dw, db, dx


def softmax(logits):
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def softmax_cross_entropy(logits, label):
    """Returns (loss, probs, dlogits) for one sample."""
    probs = softmax(logits)
    loss = -np.log(max(probs[label], 1e-300))
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    return loss, probs, dlogits


@dataclass
class LstmParams:
    """Gate weights/biases of one LSTM cell (input, forget, output, candidate)."""

    w_i: np.ndarray
    u_i: np.ndarray
    b_i: np.ndarray
    w_f: np.ndarray
    u_f: np.ndarray
    b_f: np.ndarray
    w_o: np.ndarray
    u_o: np.ndarray
    b_o: np.ndarray
    w_g: np.ndarray
    u_g: np.ndarray
    b_g: np.ndarray

    @classmethod
    def init(cls, rng, d_in, d_h):
        def w():
            return uniform_init(rng, (d_h, d_in), d_in)

        def u():
            return uniform_init(rng, (d_h, d_h), d_h)

        def b():
            return uniform_init(rng, d_h, d_in)

        return cls(w(), u(), b(), w(), u(), b(), w(), u(), b(), w(), u(), b())

    @property
    def hidden_size(self):
        return self.b_i.shape[0]

    @property
    def input_size(self):
        return self.w_i.shape[1]

    @staticmethod
    def fields():
        return [
            "w_i", "u_i", "b_i", "w_f", "u_f", "b_f",
            "w_o", "u_o", "b_o", "w_g", "u_g", "b_g",
        ]

    def zeros_like(self):
        return LstmParams(*[np.zeros_like(getattr(self, f)) for f in self.fields()])


def lstm_step(x, h, c, p):
    """One LSTM cell step; returns (h', c', cache) with cache for the backward."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.input_size,) or h.shape != (p.hidden_size,) or c.shape != (p.hidden_size,):
        raise ValueError(
            f"lstm_step dims: x{x.shape} h{h.shape} c{c.shape} vs "
            f"input {p.input_size}, hidden {p.hidden_size}"
        )
    i = sigmoid(p.w_i @ x + p.u_i @ h + p.b_i)
    f = sigmoid(p.w_f @ x + p.u_f @ h + p.b_f)
    o = sigmoid(p.w_o @ x + p.u_o @ h + p.b_o)
    g = np.tanh(p.w_g @ x + p.u_g @ h + p.b_g)
    c_new = f * c + i * g
    h_new = o * np.tanh(c_new)
    cache = (x, h, c, i, f, o, g, c_new)
    return h_new, c_new, cache


def lstm_step_backward(dh, dc, cache, p, grads):
    """Backward for one cell step.

    dh, dc are gradients flowing into h', c'.  Parameter gradients accumulate
    into `grads` (an LstmParams of the same shapes); returns (dx, dh_prev, dc_prev).
    """
    x, h, c, i, f, o, g, c_new = cache
    tc = np.tanh(c_new)
    do = dh * tc
    dc_total = dc + dh * o * (1.0 - tc * tc)
    di = dc_total * g
    df = dc_total * c
    dg = dc_total * i
    dc_prev = dc_total * f

    dai = di * sigmoid_grad(i)
    daf = df * sigmoid_grad(f)
    dao = do * sigmoid_grad(o)
    dag = dg * (1.0 - g * g)

    grads.w_i += np.outer(dai, x)
    grads.u_i += np.outer(dai, h)
    grads.b_i += dai
    grads.w_f += np.outer(daf, x)
    grads.u_f += np.outer(daf, h)
    grads.b_f += daf
    grads.w_o += np.outer(dao, x)
    grads.u_o += np.outer(dao, h)
    grads.b_o += dao
    grads.w_g += np.outer(dag, x)
    grads.u_g += np.outer(dag, h)
    grads.b_g += dag

    dx = p.w_i.T @ dai + p.w_f.T @ daf + p.w_o.T @ dao + p.w_g.T @ dag
    dh_prev = p.u_i.T @ dai + p.u_f.T @ daf + p.u_o.T @ dao + p.u_g.T @ dag
    return dx, dh_prev, dc_prev


def lstm_forward(xs, p):
    """Run the cell over a sequence (T, d_in) from zero state; returns (hs, caches)."""
    h = np.zeros(p.hidden_size)
    c = np.zeros(p.hidden_size)
    hs, caches = [], []
    for x in xs:
        h, c, cache = lstm_step(x, h, c, p)
        hs.append(h)
        caches.append(cache)
    return np.array(hs), caches


def lstm_backward(dhs, caches, p):
    """BPTT over a sequence given per-step gradients dhs (T, d_h).

    Returns (grads: LstmParams, dxs: (T, d_in)).
    """
    grads = p.zeros_like()
    dh_next = np.zeros(p.hidden_size)
    dc_next = np.zeros(p.hidden_size)
    dxs = [None] * len(caches)
    for t in range(len(caches) - 1, -1, -1):
        dx, dh_next, dc_next = lstm_step_backward(
            dhs[t] + dh_next, dc_next, caches[t], p, grads
        )
        dxs[t] = dx
    return grads, np.array(dxs)


def conv2d(image, filt, padding="valid"):
    """2-D cross-correlation (no filter flip).

    padding "valid" shrinks the output; "same" zero-pads so the output matches
    the input, which requires odd filter dims so the window can be centered.
    """
    image = check_finite(np.asarray(image, dtype=np.float64), "conv2d input")
    filt = check_finite(np.asarray(filt, dtype=np.float64), "conv2d filter")
    h, w = image.shape
    f1, f2 = filt.shape
    if padding == "same":
        if f1 % 2 == 0 or f2 % 2 == 0:
            raise ValueError("same-padding requires odd filter dims")
        image = np.pad(image, ((f1 // 2, f1 // 2), (f2 // 2, f2 // 2)))
        h, w = image.shape
    elif padding != "valid":
        raise ValueError(f"unknown padding {padding!r}")
    if f1 > h or f2 > w:
        raise ValueError(f"filter {filt.shape} larger than padded input {(h, w)}")
    out = np.zeros((h - f1 + 1, w - f2 + 1))
    for a in range(f1):
        for b in range(f2):
            out += filt[a, b] * image[a : a + out.shape[0], b : b + out.shape[1]]
    return out


def conv2d_filter_grad(image, dout, filter_shape):
    """Gradient of same-padded conv2d w.r.t. the filter, given upstream dout."""
    f1, f2 = filter_shape
    padded = np.pad(np.asarray(image, dtype=np.float64), ((f1 // 2, f1 // 2), (f2 // 2, f2 // 2)))
    h, w = dout.shape
    dfilt = np.zeros((f1, f2))
    for a in range(f1):
        for b in range(f2):
            dfilt[a, b] = np.sum(padded[a : a + h, b : b + w] * dout)
    return dfilt


def conv2d_input_grad(filt, dout):
    """Gradient of same-padded conv2d w.r.t. the input image."""
    # Cross-correlation transposes to correlation with the flipped filter.
    return conv2d(dout, filt[::-1, ::-1], padding="same")


def kmax_pool(v, k):
    """The k largest values of v in their original order; ties keep lowest index."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("kmax_pool expects a vector")
    if not 1 <= k <= v.shape[0]:
        raise ValueError(f"k={k} out of range for length {v.shape[0]}")
    order = np.argsort(-v, kind="stable")[:k]
    return v[np.sort(order)]


def finite_diff_grad(f, x, eps=1e-5):
    """Central-difference gradient of scalar f at x (same shape as x)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    xf = x.ravel()
    for idx in range(xf.size):
        orig = xf[idx]
        xf[idx] = orig + eps
        hi = f(x)
        xf[idx] = orig - eps
        lo = f(x)
        xf[idx] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise FloatingPointError("non-finite objective during finite differences")
        flat[idx] = (hi - lo) / (2.0 * eps)
    return grad


def rel_error(ga, gn):
    """Norm-based relative error between two gradients."""
    ga = np.asarray(ga, dtype=np.float64).ravel()
    gn = np.asarray(gn, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(ga), np.linalg.norm(gn), 1e-12)
    return np.linalg.norm(ga - gn) / denom
