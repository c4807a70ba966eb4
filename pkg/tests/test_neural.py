"""Network tests: forward pass against a per-neuron reference evaluation,
analytic gradients against central finite differences, and the checkpoint
format."""

import math

import numpy as np
import pytest

from aoicache.neural import (
    AdamState,
    MlpParameters,
    adam_step,
    assign_flat,
    backward,
    batch_loss_and_grads,
    clip_grads_,
    clone,
    clone_into,
    deserialize_params,
    flatten_params,
    forward,
    init_params,
    load_params,
    save_params,
    serialize_params,
    sgd_step,
)


def reference_forward(params, x):
    """Independent oracle: plain per-neuron loops, no vectorization."""
    a = [float(v) for v in x]
    last = len(params.weights) - 1
    for li, (w, b) in enumerate(zip(params.weights, params.biases)):
        out = []
        for j in range(w.shape[1]):
            s = float(b[j])
            for i in range(w.shape[0]):
                s += a[i] * float(w[i, j])
            out.append(s)
        if li < last:
            out = [v if v > 0.0 else 0.0 for v in out]
        a = out
    return np.array(a)


def finite_diff_grads(params, state, action, target, h=1e-5):
    """Central differences of the selected-head squared error."""

    def loss_at(flat):
        assign_flat(params, flat)
        q = forward(params, state)[action]
        return (target - q) ** 2

    base = flatten_params(params)
    grads = np.zeros_like(base)
    for i in range(base.size):
        probe = base.copy()
        probe[i] = base[i] + h
        up = loss_at(probe)
        probe[i] = base[i] - h
        down = loss_at(probe)
        grads[i] = (up - down) / (2.0 * h)
    assign_flat(params, base)
    return grads


def max_relative_error(analytic, numeric, floor=1e-8):
    err = 0.0
    for a, n in zip(analytic, numeric):
        if abs(a) < floor and abs(n) < floor:
            continue
        err = max(err, abs(a - n) / max(abs(a), abs(n)))
    return err


# ---------------------------------------------------------------------------
# forward


def test_forward_zero_params_gives_zero_output():
    params = init_params((4, 6, 3), np.random.default_rng(0))
    for w in params.weights:
        w[:] = 0.0
    out = forward(params, np.random.default_rng(1).normal(size=4))
    np.testing.assert_array_equal(out, np.zeros(3))


def test_forward_identity_single_layer():
    params = MlpParameters(layer_sizes=(3, 3), weights=[np.eye(3)], biases=[np.zeros(3)])
    x = np.array([0.3, -2.0, 1.5])
    np.testing.assert_array_equal(forward(params, x), x)


def test_forward_matches_reference_evaluation():
    rng = np.random.default_rng(7)
    params = init_params((5, 8, 4, 3), rng)
    for _ in range(10):
        x = rng.normal(size=5)
        np.testing.assert_allclose(forward(params, x), reference_forward(params, x),
                                   rtol=0.0, atol=1e-12)


def test_forward_batch_matches_single():
    rng = np.random.default_rng(3)
    params = init_params((6, 10, 4), rng)
    xs = rng.normal(size=(7, 6))
    batch = forward(params, xs)
    for i in range(7):
        # gemm vs gemv BLAS paths may differ in the last bit
        np.testing.assert_allclose(batch[i], forward(params, xs[i]), rtol=1e-12, atol=1e-15)


def test_forward_rejects_wrong_width():
    params = init_params((4, 3), np.random.default_rng(0))
    with pytest.raises(ValueError):
        forward(params, np.zeros(5))


# ---------------------------------------------------------------------------
# backward


def test_backward_zero_loss_at_fixed_point():
    rng = np.random.default_rng(11)
    params = init_params((4, 6, 3), rng)
    state = rng.normal(size=4)
    target = float(forward(params, state)[1])
    loss, grads = backward(params, state, 1, target)
    assert loss == 0.0
    for g in grads.weights + grads.biases:
        np.testing.assert_array_equal(g, np.zeros_like(g))


def test_backward_matches_finite_differences_small_net():
    rng = np.random.default_rng(5)
    params = init_params((8, 16, 5), rng)
    state = rng.normal(size=8)
    target = 1.7
    _, grads = backward(params, state, 2, target)
    analytic = np.concatenate([np.concatenate([w.ravel(), b.ravel()])
                               for w, b in zip(grads.weights, grads.biases)])
    numeric = finite_diff_grads(params, state, 2, target)
    assert max_relative_error(analytic, numeric) <= 1e-4


def test_backward_error_scaling_is_linear():
    rng = np.random.default_rng(13)
    params = init_params((4, 6, 3), rng)
    state = rng.normal(size=4)
    q = float(forward(params, state)[0])
    _, g1 = backward(params, state, 0, q - 1.0)
    _, g3 = backward(params, state, 0, q - 3.0)
    for a, b in zip(g1.weights + g1.biases, g3.weights + g3.biases):
        np.testing.assert_allclose(3.0 * a, b, rtol=1e-12, atol=1e-15)


def test_batch_loss_is_mean_of_per_sample_losses():
    rng = np.random.default_rng(19)
    params = init_params((4, 6, 3), rng)
    states = rng.normal(size=(5, 4))
    actions = rng.integers(0, 3, size=5)
    targets = rng.normal(size=5)
    batch_loss, _ = batch_loss_and_grads(params, states, actions, targets)
    singles = [backward(params, states[i], int(actions[i]), float(targets[i]))[0]
               for i in range(5)]
    assert batch_loss == pytest.approx(np.mean(singles), rel=1e-14)


# ---------------------------------------------------------------------------
# updates


def test_sgd_zero_gradient_leaves_params_unchanged():
    params = init_params((3, 4, 2), np.random.default_rng(0))
    before = flatten_params(params).copy()
    state = np.random.default_rng(1).normal(size=3)
    target = float(forward(params, state)[0])
    _, grads = backward(params, state, 0, target)
    sgd_step(params, grads, 0.1)
    np.testing.assert_array_equal(flatten_params(params), before)


def test_sgd_single_parameter_hand_computation():
    # Q = w*x + b with w=2, b=0, x=1, target 0: loss 4, dL/dw = dL/db = 4
    params = MlpParameters(layer_sizes=(1, 1), weights=[np.array([[2.0]])],
                           biases=[np.array([0.0])])
    loss, grads = backward(params, np.array([1.0]), 0, 0.0)
    assert loss == 4.0
    assert grads.weights[0][0, 0] == 4.0
    assert grads.biases[0][0] == 4.0
    sgd_step(params, grads, 0.1)
    assert params.weights[0][0, 0] == pytest.approx(1.6)
    assert params.biases[0][0] == pytest.approx(-0.4)


def test_sgd_converges_on_convex_quadratic():
    # fitting a single scalar sample is convex; lr below 1/curvature converges
    params = MlpParameters(layer_sizes=(1, 1), weights=[np.array([[5.0]])],
                           biases=[np.array([1.0])])
    state, target = np.array([1.0]), -0.5
    losses = []
    for _ in range(200):
        loss, grads = backward(params, state, 0, target)
        losses.append(loss)
        sgd_step(params, grads, 0.1)
    assert losses[-1] < 1e-12
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))


def test_one_small_step_strictly_decreases_loss():
    rng = np.random.default_rng(23)
    params = init_params((4, 8, 3), rng)
    state = rng.normal(size=4)
    loss0, grads = backward(params, state, 1, 2.5)
    assert loss0 > 0.0
    sgd_step(params, grads, 1e-4)
    loss1, _ = backward(params, state, 1, 2.5)
    assert loss1 < loss0


def test_adam_step_decreases_loss():
    rng = np.random.default_rng(29)
    params = init_params((4, 8, 3), rng)
    opt = AdamState.for_params(params)
    state = rng.normal(size=4)
    loss0, _ = backward(params, state, 0, 3.0)
    for _ in range(50):
        _, grads = backward(params, state, 0, 3.0)
        adam_step(params, grads, opt, 0.01)
    loss1, _ = backward(params, state, 0, 3.0)
    assert loss1 < loss0 * 0.1


def test_clip_grads_enforces_global_norm():
    rng = np.random.default_rng(31)
    params = init_params((4, 8, 3), rng)
    _, grads = backward(params, rng.normal(size=4), 0, 100.0)
    norm = clip_grads_(grads, 1.0)
    assert norm > 1.0
    clipped = math.sqrt(sum(float(np.sum(g * g)) for g in grads.weights + grads.biases))
    assert clipped == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# cloning and initialization


def test_clone_into_isolates_copies():
    rng = np.random.default_rng(0)
    src = init_params((3, 5, 2), rng)
    dst = init_params((3, 5, 2), np.random.default_rng(1))
    clone_into(src, dst)
    x = rng.normal(size=3)
    np.testing.assert_array_equal(forward(src, x), forward(dst, x))
    src.weights[0][0, 0] += 1.0
    assert dst.weights[0][0, 0] != src.weights[0][0, 0]
    clone_into(src, dst)
    clone_into(src, dst)  # idempotent
    np.testing.assert_array_equal(flatten_params(src), flatten_params(dst))


def test_clone_into_rejects_shape_mismatch():
    a = init_params((3, 5, 2), np.random.default_rng(0))
    b = init_params((3, 4, 2), np.random.default_rng(0))
    with pytest.raises(ValueError):
        clone_into(a, b)


def test_init_params_seeded_and_bounded():
    a = init_params((10, 20, 5), np.random.default_rng(42))
    b = init_params((10, 20, 5), np.random.default_rng(42))
    c = init_params((10, 20, 5), np.random.default_rng(43))
    np.testing.assert_array_equal(flatten_params(a), flatten_params(b))
    assert not np.array_equal(flatten_params(a), flatten_params(c))
    for (fan_in, _), w, bias in zip(((10, 20), (20, 5)), a.weights, a.biases):
        assert np.all(np.abs(w) <= math.sqrt(6.0 / fan_in))
        np.testing.assert_array_equal(bias, np.zeros_like(bias))


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_round_trip(tmp_path):
    params = init_params((4, 7, 3), np.random.default_rng(8))
    path = tmp_path / "net.ckpt"
    save_params(params, path)
    loaded = load_params(path, expected_sizes=(4, 7, 3))
    assert loaded.layer_sizes == params.layer_sizes
    np.testing.assert_array_equal(flatten_params(loaded), flatten_params(params))


def test_checkpoint_rejects_bad_inputs():
    params = init_params((4, 7, 3), np.random.default_rng(8))
    blob = serialize_params(params)
    with pytest.raises(ValueError, match="magic"):
        deserialize_params(b"NOTMAGIC" + blob[8:])
    bad_version = blob[:8] + (99).to_bytes(4, "little") + blob[12:]
    with pytest.raises(ValueError, match="version"):
        deserialize_params(bad_version)
    with pytest.raises(ValueError, match="layer sizes"):
        deserialize_params(blob, expected_sizes=(4, 7, 2))
    with pytest.raises(ValueError, match="trailing"):
        deserialize_params(blob + b"\x00" * 8)


def test_parameter_shape_validation():
    with pytest.raises(ValueError):
        MlpParameters(layer_sizes=(3, 2), weights=[np.zeros((3, 3))], biases=[np.zeros(2)])
    with pytest.raises(ValueError):
        MlpParameters(layer_sizes=(3,), weights=[], biases=[])
