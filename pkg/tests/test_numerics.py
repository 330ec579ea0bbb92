import numpy as np
import pytest

from erpdn import numerics as nm

from conftest import assert_bit_identical


def test_sigmoid_symmetry_point():
    assert nm.sigmoid(np.array([0.0]))[0] == 0.5


def test_sigmoid_saturation():
    assert abs(nm.sigmoid(np.array([50.0]))[0] - 1.0) <= 1e-15


def test_sigmoid_complement_identity():
    x = nm.make_rng(0).uniform(-30, 30, size=200)
    assert np.allclose(nm.sigmoid(x) + nm.sigmoid(-x), 1.0, atol=1e-12)


def test_sigmoid_rejects_nan():
    with pytest.raises(FloatingPointError):
        nm.sigmoid(np.array([np.nan]))


def test_lstm_zero_params_zero_state():
    p = nm.LstmParams.init(nm.make_rng(1), 3, 4)
    for f in p.fields():
        setattr(p, f, np.zeros_like(getattr(p, f)))
    h, c, _ = nm.lstm_step(np.ones(3), np.zeros(4), np.zeros(4), p)
    assert np.array_equal(h, np.zeros(4))
    assert np.array_equal(c, np.zeros(4))


def test_lstm_output_bounded():
    p = nm.LstmParams.init(nm.make_rng(2), 3, 4)
    h, c, _ = nm.lstm_step(np.full(3, 10.0), np.zeros(4), np.zeros(4), p)
    assert np.all(np.abs(h) < 1.0)


def test_lstm_dimension_mismatch():
    p = nm.LstmParams.init(nm.make_rng(3), 3, 4)
    with pytest.raises(ValueError):
        nm.lstm_step(np.zeros(5), np.zeros(4), np.zeros(4), p)


def test_lstm_constant_input_converges_monotone_tail():
    # oracle: iterate 100 steps, the step-to-step movement must shrink
    p = nm.LstmParams.init(nm.make_rng(4), 3, 6)
    x = nm.make_rng(5).uniform(-1, 1, size=3)
    h = np.zeros(6)
    c = np.zeros(6)
    diffs = []
    prev = h
    for _ in range(100):
        h, c, _ = nm.lstm_step(x, h, c, p)
        diffs.append(np.linalg.norm(h - prev))
        prev = h
    tail = diffs[20:]
    assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))


def _lstm_loss(p, x, h, c, rh, rc):
    hn, cn, _ = nm.lstm_step(x, h, c, p)
    return float(rh @ hn + rc @ cn)


def test_lstm_gradients_match_finite_differences():
    # every parameter of the cell, plus its inputs, at eps=1e-5 / rel 1e-4
    for draw in range(3):
        rng = nm.make_rng(100 + draw)
        p = nm.LstmParams.init(rng, 3, 4)
        x = rng.uniform(-1, 1, size=3)
        h = rng.uniform(-1, 1, size=4)
        c = rng.uniform(-1, 1, size=4)
        rh = rng.uniform(-1, 1, size=4)
        rc = rng.uniform(-1, 1, size=4)
        hn, cn, cache = nm.lstm_step(x, h, c, p)
        grads = p.zeros_like()
        dx, dh, dc = nm.lstm_step_backward(rh, rc, cache, p, grads)
        for f in p.fields():
            arr = getattr(p, f)

            def loss_of(v, f=f, arr=arr):
                old = arr.copy()
                arr[...] = v
                out = _lstm_loss(p, x, h, c, rh, rc)
                arr[...] = old
                return out

            num = nm.finite_diff_grad(loss_of, arr.copy(), eps=1e-5)
            assert nm.rel_error(getattr(grads, f), num) <= 1e-4, f
        num_x = nm.finite_diff_grad(lambda v: _lstm_loss(p, v, h, c, rh, rc), x.copy(), 1e-5)
        assert nm.rel_error(dx, num_x) <= 1e-4
        num_h = nm.finite_diff_grad(lambda v: _lstm_loss(p, x, v, c, rh, rc), h.copy(), 1e-5)
        assert nm.rel_error(dh, num_h) <= 1e-4
        num_c = nm.finite_diff_grad(lambda v: _lstm_loss(p, x, h, v, rh, rc), c.copy(), 1e-5)
        assert nm.rel_error(dc, num_c) <= 1e-4


def test_conv2d_delta_filter_identity():
    rng = nm.make_rng(6)
    image = rng.uniform(size=(7, 9))
    delta = np.zeros((3, 3))
    delta[1, 1] = 1.0
    assert np.allclose(nm.conv2d(image, delta, "same"), image)


def test_conv2d_constant_case():
    out = nm.conv2d(np.ones((3, 3)), np.ones((2, 2)), "valid")
    assert np.array_equal(out, np.full((2, 2), 4.0))


def test_conv2d_matches_loop_oracle():
    rng = nm.make_rng(7)
    image = rng.standard_normal((5, 5))
    filt = rng.standard_normal((3, 3))
    out = nm.conv2d(image, filt, "valid")
    expected = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for a in range(3):
                for b in range(3):
                    acc += image[i + a, j + b] * filt[a, b]
            expected[i, j] = acc
    assert np.array_equal(out, expected)


def test_conv2d_bilinearity():
    rng = nm.make_rng(8)
    x = rng.standard_normal((6, 6))
    y = rng.standard_normal((6, 6))
    f = rng.standard_normal((3, 3))
    a, b = 1.7, -0.3
    lhs = nm.conv2d(a * x + b * y, f, "same")
    rhs = a * nm.conv2d(x, f, "same") + b * nm.conv2d(y, f, "same")
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_conv2d_filter_too_large():
    with pytest.raises(ValueError):
        nm.conv2d(np.ones((2, 2)), np.ones((3, 3)), "valid")


def test_conv2d_filter_grad_matches_fd():
    rng = nm.make_rng(9)
    image = rng.standard_normal((6, 6))
    filt = rng.standard_normal((3, 3))
    r = rng.standard_normal((6, 6))

    def loss(f):
        return float(np.sum(nm.conv2d(image, f, "same") * r))

    grad = nm.conv2d_filter_grad(image, r, (3, 3))
    num = nm.finite_diff_grad(loss, filt.copy(), 1e-5)
    assert nm.rel_error(grad, num) <= 1e-6


def test_conv2d_input_grad_matches_fd():
    rng = nm.make_rng(10)
    image = rng.standard_normal((5, 5))
    filt = rng.standard_normal((3, 3))
    r = rng.standard_normal((5, 5))

    def loss(img):
        return float(np.sum(nm.conv2d(img, filt, "same") * r))

    grad = nm.conv2d_input_grad(filt, r)
    num = nm.finite_diff_grad(loss, image.copy(), 1e-5)
    assert nm.rel_error(grad, num) <= 1e-6


def test_kmax_pool_basic():
    assert np.array_equal(nm.kmax_pool(np.array([3.0, 1.0, 2.0]), 2), [3.0, 2.0])


def test_kmax_pool_ties_prefer_earliest():
    assert np.array_equal(nm.kmax_pool(np.full(5, 7.0), 2), [7.0, 7.0])
    # earliest-index tie-break: order of equal values keeps the first two slots
    v = np.array([1.0, 5.0, 5.0, 5.0])
    assert np.array_equal(nm.kmax_pool(v, 2), [5.0, 5.0])


def test_kmax_pool_matches_sort_oracle():
    rng = nm.make_rng(11)
    v = rng.standard_normal(20)
    out = nm.kmax_pool(v, 7)
    threshold = np.sort(v)[-7:]
    assert sorted(out) == sorted(threshold)
    # original order preserved
    idx = [int(np.nonzero(v == val)[0][0]) for val in out]
    assert idx == sorted(idx)


def test_kmax_pool_is_sub_multiset():
    rng = nm.make_rng(12)
    v = rng.integers(0, 5, size=15).astype(float)
    out = list(nm.kmax_pool(v, 6))
    pool = list(v)
    for val in out:
        pool.remove(val)  # raises if not contained with multiplicity


def test_kmax_pool_k_out_of_range():
    with pytest.raises(ValueError):
        nm.kmax_pool(np.ones(3), 4)


def test_finite_diff_quadratic():
    grad = nm.finite_diff_grad(lambda v: float(np.sum(v * v)), np.array([1.0, 2.0]))
    assert np.allclose(grad, [2.0, 4.0], atol=1e-6)


def test_finite_diff_constant():
    grad = nm.finite_diff_grad(lambda v: 3.0, np.ones(4))
    assert np.array_equal(grad, np.zeros(4))


def test_finite_diff_matches_analytic_sigmoid():
    rng = nm.make_rng(13)
    x = rng.uniform(-2, 2, size=5)
    r = rng.uniform(-1, 1, size=5)

    def loss(v):
        return float(r @ nm.sigmoid(v))

    num = nm.finite_diff_grad(loss, x.copy())
    analytic = r * nm.sigmoid_grad(nm.sigmoid(x))
    assert nm.rel_error(analytic, num) <= 1e-7


def test_finite_diff_rejects_non_finite_objective():
    with pytest.raises(FloatingPointError):
        nm.finite_diff_grad(lambda v: float("nan"), np.ones(2))


def test_seeded_rng_determinism():
    a = nm.make_rng(99).standard_normal(16)
    b = nm.make_rng(99).standard_normal(16)
    assert_bit_identical(a, b)


def test_dense_backward_matches_fd():
    rng = nm.make_rng(14)
    w = rng.standard_normal((4, 3))
    b = rng.standard_normal(4)
    x = rng.standard_normal(3)
    r = rng.standard_normal(4)
    dout = r * nm.sigmoid_grad(nm.sigmoid(nm.dense_forward(w, b, x)))
    dw, db, dx = nm.dense_backward(w, x, dout)

    def loss_w(v):
        return float(r @ nm.sigmoid(v @ x + b))

    assert nm.rel_error(dw, nm.finite_diff_grad(loss_w, w.copy())) <= 1e-6
