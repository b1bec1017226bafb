import numpy as np
import pytest

from qfx.nn_core import (
    AdamState,
    DenseLayer,
    ParamLayout,
    RmspropState,
    adam_step,
    init_dense,
    load_checkpoint,
    param_count,
    rmsprop_step,
    save_checkpoint,
    sigmoid,
    softmax,
    tanh,
    weighted_cross_entropy,
)


def test_dense_identity():
    layer = DenseLayer(weights=np.eye(3), bias=np.zeros(3))
    x = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(layer.forward(x), x)


def test_dense_zero_upstream():
    layer = DenseLayer(weights=np.ones((2, 3)), bias=np.ones(2))
    dw, db, dx = layer.backward(np.array([1.0, 2.0, 3.0]), np.zeros(2))
    assert not dw.any() and not db.any() and not dx.any()


def test_dense_backward_matches_finite_differences():
    rng = np.random.default_rng(1)
    layer = init_dense(rng, 8, 10)
    x = rng.normal(size=10)
    upstream = rng.normal(size=8)
    dw, db, dx = layer.backward(x, upstream)

    h = 1e-6

    def loss(weights, bias, xv):
        return float(np.dot(weights @ xv + bias, upstream))

    for idx in np.ndindex(layer.weights.shape):
        wp, wm = layer.weights.copy(), layer.weights.copy()
        wp[idx] += h
        wm[idx] -= h
        fd = (loss(wp, layer.bias, x) - loss(wm, layer.bias, x)) / (2 * h)
        assert abs(dw[idx] - fd) < 1e-6
    for i in range(10):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fd = (loss(layer.weights, layer.bias, xp) - loss(layer.weights, layer.bias, xm)) / (2 * h)
        assert abs(dx[i] - fd) < 1e-6
    assert np.allclose(db, upstream)


def test_dense_batch_agrees_with_single():
    rng = np.random.default_rng(2)
    layer = init_dense(rng, 4, 6)
    xs = rng.normal(size=(5, 6))
    ups = rng.normal(size=(5, 4))
    yb = layer.forward_batch(xs)
    dwb, dbb, dxb = layer.backward_batch(xs, ups)
    dw_sum = np.zeros_like(layer.weights)
    db_sum = np.zeros_like(layer.bias)
    for i in range(5):
        assert np.allclose(yb[i], layer.forward(xs[i]))
        dw, db, dx = layer.backward(xs[i], ups[i])
        dw_sum += dw
        db_sum += db
        assert np.allclose(dxb[i], dx)
    assert np.allclose(dwb, dw_sum)
    assert np.allclose(dbb, db_sum)


def test_dense_shape_mismatch():
    layer = DenseLayer(weights=np.eye(2), bias=np.zeros(2))
    with pytest.raises(ValueError):
        layer.backward(np.zeros(2), np.zeros(3))


def test_activation_fixed_points():
    assert sigmoid(0.0) == 0.5
    assert tanh(0.0) == 0.0


def test_softmax_symmetry_and_stability():
    assert np.allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])
    big = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(big))
    assert big[0] > 0.999
    for v in [np.array([1e4, -1e4, 0.0]), np.array([-1e4, -1e4, -1e4])]:
        p = softmax(v)
        assert np.all(np.isfinite(p))
        assert abs(p.sum() - 1.0) < 1e-9


def test_softmax_random_sums_to_one():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = softmax(rng.uniform(-1e4, 1e4, size=5))
        assert abs(p.sum() - 1.0) < 1e-9
        assert not np.any(np.isnan(p))


def test_cross_entropy_confident_correct():
    loss, _ = weighted_cross_entropy(np.array([1.0, 0.0]), 0, np.ones(2))
    assert abs(loss) < 1e-9


def test_cross_entropy_weighted_value():
    # the 1e-12 log clip shifts the exact 2*ln2 by ~4e-12
    loss, _ = weighted_cross_entropy(np.array([0.5, 0.5]), 1, np.array([1.0, 2.0]))
    assert abs(loss - 2 * np.log(2)) < 1e-10


def test_cross_entropy_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    logits = rng.normal(size=4)
    weights = rng.uniform(0.5, 2.0, size=4)
    label = 2
    probs = softmax(logits)
    _, grad = weighted_cross_entropy(probs, label, weights)
    h = 1e-6
    for i in range(4):
        lp, lm = logits.copy(), logits.copy()
        lp[i] += h
        lm[i] -= h
        fp, _ = weighted_cross_entropy(softmax(lp), label, weights)
        fm, _ = weighted_cross_entropy(softmax(lm), label, weights)
        assert abs(grad[i] - (fp - fm) / (2 * h)) < 1e-6


def test_cross_entropy_bad_label():
    with pytest.raises(ValueError):
        weighted_cross_entropy(np.array([0.5, 0.5]), 2, np.ones(2))


def test_optimizers_zero_gradient_noop():
    p1 = np.array([1.0, -2.0])
    rmsprop_step(p1, np.zeros(2), RmspropState.zeros(2))
    assert np.array_equal(p1, [1.0, -2.0])
    p2 = np.array([1.0, -2.0])
    adam_step(p2, np.zeros(2), AdamState.zeros(2))
    assert np.array_equal(p2, [1.0, -2.0])


def test_optimizers_zero_lr_identity():
    rng = np.random.default_rng(5)
    p = rng.normal(size=4)
    ref = p.copy()
    rmsprop_step(p, rng.normal(size=4), RmspropState.zeros(4), lr=0.0)
    adam_step(p, rng.normal(size=4), AdamState.zeros(4), lr=0.0)
    assert np.array_equal(p, ref)


def test_optimizers_descend_against_gradient_sign():
    for step_fn, state in [
        (rmsprop_step, RmspropState.zeros(1)),
        (adam_step, AdamState.zeros(1)),
    ]:
        p = np.array([0.0])
        for _ in range(200):
            step_fn(p, np.array([3.0]), state, 1e-3)
        assert p[0] < 0


def test_rmsprop_matches_scalar_recurrence_on_quadratic_bowl():
    # f(w) = w^2 from w=1, gradient 2w. Oracle: the textbook recurrence run
    # by hand. It dips below 1e-3 at step 326, then settles into a +-lr/2
    # limit cycle, so "reaches below 1e-3" is asserted on the trajectory.
    w = np.array([1.0])
    state = RmspropState.zeros(1)
    ow, osq = 1.0, 0.0
    min_abs = 1.0
    for _ in range(10_000):
        rmsprop_step(w, 2.0 * w, state, lr=5e-3)
        g = 2.0 * ow
        osq = 0.99 * osq + 0.01 * g * g
        ow = ow - 5e-3 * g / (np.sqrt(osq) + 1e-8)
        assert abs(w[0] - ow) < 1e-12 + 1e-9 * abs(ow)
        ow = w[0]  # resync so ulp noise does not compound across 10k steps
        osq = state.sq_avg[0]
        min_abs = min(min_abs, abs(w[0]))
    assert min_abs < 1e-3


def test_optimizers_skip_non_finite():
    p = np.array([1.0])
    st = AdamState.zeros(1)
    ok = adam_step(p, np.array([np.nan]), st)
    assert not ok and st.skipped == 1 and p[0] == 1.0
    st2 = RmspropState.zeros(1)
    ok = rmsprop_step(p, np.array([np.inf]), st2)
    assert not ok and st2.skipped == 1 and p[0] == 1.0


def test_param_count_single_dense():
    rng = np.random.default_rng(6)
    layer = init_dense(rng, 8, 10)
    assert param_count(dense_layers=[layer]) == (0, 88, 88)


def test_param_count_vqc_angles():
    assert param_count(angle_arrays=[np.zeros((2, 8))]) == (16, 0, 16)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    params = rng.normal(size=37)
    header = {"kind": "test", "shapes": {"w": [5, 7], "b": [2]}, "seed": 3}
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, header, params)
    loaded_header, loaded = load_checkpoint(path)
    assert np.array_equal(loaded, params)
    assert loaded_header["kind"] == "test"
    assert loaded_header["n_params"] == 37
    raw = path.read_bytes()
    assert raw[:4] == b"QFX1"


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_param_layout_roundtrip():
    layout = ParamLayout([("w", (2, 3)), ("b", (3,))])
    rng = np.random.default_rng(8)
    arrays = {"w": rng.normal(size=(2, 3)), "b": rng.normal(size=3)}
    vec = layout.flatten(arrays)
    assert vec.size == layout.size == 9
    back = layout.unflatten(vec)
    assert np.array_equal(back["w"], arrays["w"])
    assert np.array_equal(back["b"], arrays["b"])
    with pytest.raises(ValueError):
        layout.unflatten(np.zeros(8))
