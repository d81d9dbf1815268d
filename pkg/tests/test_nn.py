import numpy as np
import pytest

from helpers import band_gap, grad_close, mlp_analytic, mlp_param_fd
from hfdistill.errors import ContractViolationError, InvalidInputError, TrainingDivergedError
from hfdistill.geometry import factorize_grid
from hfdistill.losses import LossWeights, ce_loss, detail_loss, kd_loss
from hfdistill.nn import (
    PARAM_NAMES,
    MlpGrads,
    MlpParams,
    SgdConfig,
    backward,
    checkpoint_bytes,
    file_digest,
    forward,
    init_params,
    load_checkpoint,
    predict,
    save_checkpoint,
    sgd_step,
)


def zeros_like_grads(params):
    return MlpGrads(*(np.zeros_like(getattr(params, n)) for n in PARAM_NAMES))


def const_grads(params, value):
    return MlpGrads(*(np.full_like(getattr(params, n), value) for n in PARAM_NAMES))


def test_init_is_deterministic():
    a, b = init_params(7, 5, 3, seed=42), init_params(7, 5, 3, seed=42)
    assert checkpoint_bytes(a) == checkpoint_bytes(b)
    c = init_params(7, 5, 3, seed=43)
    assert not np.array_equal(a.w1, c.w1)


def test_init_biases_and_momentum_zero():
    p = init_params(7, 5, 3, seed=1)
    assert np.all(p.b1 == 0) and np.all(p.b2 == 0)
    assert all(np.all(v == 0) for v in p.velocity.values())


def test_init_shapes():
    p = init_params(7, 5, 3, seed=1)
    assert p.w1.shape == (5, 7) and p.w2.shape == (3, 5)
    assert (p.input_dim, p.hidden_dim, p.num_classes) == (7, 5, 3)


def test_init_scale_statistics():
    d = 10
    p = init_params(d, 10_000, 1, seed=7)  # 1e5 draws of w1
    sigma = np.sqrt(2.0 / d)
    assert abs(p.w1.mean()) <= 3 * sigma / np.sqrt(p.w1.size)
    assert p.w1.std() == pytest.approx(sigma, rel=0.02)


@pytest.mark.parametrize("dims", [(0, 3, 3), (3, 0, 3), (3, 3, 0), (2.5, 3, 3)])
def test_init_rejects_bad_dims(dims):
    with pytest.raises(InvalidInputError):
        init_params(*dims, seed=0)


def test_zero_params_give_zero_logits():
    p = MlpParams(np.zeros((4, 3)), np.zeros(4), np.zeros((2, 4)), np.zeros(2))
    assert np.all(predict(p, np.array([1.0, -2.0, 3.0])) == 0)


def test_identity_construction():
    d, c = 5, 3
    p = MlpParams(np.eye(d), np.zeros(d), np.eye(d)[:c], np.zeros(c))
    x = np.array([0.5, 2.0, 0.0, 3.0, 1.0])
    np.testing.assert_array_equal(predict(p, x), x[:c])


def test_forward_matches_formula():
    p = init_params(4, 6, 3, seed=2)
    x = np.random.default_rng(0).normal(size=4)
    want = p.w2 @ np.maximum(p.w1 @ x + p.b1, 0) + p.b2
    np.testing.assert_allclose(predict(p, x), want, atol=1e-14)


def test_forward_batch_matches_rows():
    p = init_params(4, 6, 3, seed=2)
    x = np.random.default_rng(1).normal(size=(5, 4))
    batch = predict(p, x)
    for i in range(5):
        np.testing.assert_allclose(batch[i], predict(p, x[i]), atol=1e-14)


def test_forward_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        forward(init_params(4, 6, 3, seed=2), np.zeros(5))


def test_zero_upstream_grad():
    p = init_params(4, 6, 3, seed=3)
    _, cache = forward(p, np.ones(4))
    g = backward(p, cache, np.zeros(3))
    assert all(np.all(t == 0) for t in g.tensors().values())


def test_ce_at_uniform_logits_b2_grad():
    c = 4
    p = MlpParams(np.ones((3, 2)), np.zeros(3), np.zeros((c, 3)), np.zeros(c))
    logits, cache = forward(p, np.array([1.0, 1.0]))
    lv = ce_loss(logits, 1)
    g = backward(p, cache, lv.grad)
    np.testing.assert_allclose(g.b2, np.full(c, 1 / c) - np.eye(c)[1], atol=1e-15)


def test_relu_subgradient_at_zero():
    p = MlpParams(np.array([[1.0, -1.0]]), np.zeros(1), np.ones((2, 1)), np.zeros(2))
    _, cache = forward(p, np.array([2.0, 2.0]))  # pre-activation exactly 0
    g = backward(p, cache, np.ones(2))
    assert np.all(g.w1 == 0) and np.all(g.b1 == 0)


def test_fd_every_parameter_4_6_3():
    rng = np.random.default_rng(4)
    p = init_params(4, 6, 3, seed=5)
    x = rng.normal(size=4)
    y = 2

    def loss(z):
        return ce_loss(z, y).value

    num = mlp_param_fd(p, x, loss)
    ana = mlp_analytic(p, x, lambda z: (ce_loss(z, y).value, ce_loss(z, y).grad))
    for name in PARAM_NAMES:
        assert np.max(np.abs(ana[name] - num[name])) <= 1e-5


def _relu_safe(p, x, margin=1e-3):
    pre = np.atleast_2d(x) @ p.w1.T + p.b1
    return np.min(np.abs(pre)) > margin


@pytest.mark.parametrize("kind", ["ce", "kd", "detail"])
def test_end_to_end_gradcheck(kind):
    rng = np.random.default_rng({"ce": 10, "kd": 11, "detail": 12}[kind])
    fact = factorize_grid(6)
    w = LossWeights()
    done = 0
    while done < 20:
        p = init_params(5, 7, 6, seed=int(rng.integers(2**31)))
        p.b2[:] = rng.normal(size=6)
        x = rng.normal(size=(3, 5))
        t = rng.normal(size=(3, 6)) * 2
        y = rng.integers(6, size=3)
        if not _relu_safe(p, x):
            continue
        if kind == "ce":
            f = lambda z: ce_loss(z, y)
        elif kind == "kd":
            f = lambda z: kd_loss(t, z, w, y)
        else:
            f = lambda z: detail_loss(t, z, fact)
            if band_gap(t - predict(p, x), fact) < 1e-3:
                continue
        total = lambda z: float(np.sum(f(z).value))
        ana = mlp_analytic(p, x, lambda z: (None, f(z).grad))
        num = mlp_param_fd(p, x, total)
        ok, worst = grad_close(ana, num)
        assert ok, worst
        done += 1


def test_stale_cache_rejected():
    p = init_params(4, 6, 3, seed=6)
    _, cache = forward(p, np.ones(4))
    sgd_step(p, zeros_like_grads(p), SgdConfig(learning_rate=0.1))
    with pytest.raises(ContractViolationError):
        backward(p, cache, np.zeros(3))
    other = init_params(4, 6, 3, seed=6)
    _, cache = forward(other, np.ones(4))
    with pytest.raises(ContractViolationError):
        backward(p, cache, np.zeros(3))


def test_cache_grad_shape_mismatch():
    p = init_params(4, 6, 3, seed=6)
    _, cache = forward(p, np.ones((2, 4)))
    with pytest.raises(ContractViolationError):
        backward(p, cache, np.zeros(3))


def test_vanilla_sgd():
    p = init_params(3, 4, 2, seed=7)
    before = {n: a.copy() for n, a in p.tensors().items()}
    sgd_step(p, const_grads(p, 0.5), SgdConfig(learning_rate=0.1, momentum=0.0, weight_decay=0.0))
    for n in PARAM_NAMES:
        np.testing.assert_allclose(getattr(p, n), before[n] - 0.05, atol=1e-15)


def test_pure_weight_decay():
    p = init_params(3, 4, 2, seed=8)
    before = p.w1.copy()
    sgd_step(p, zeros_like_grads(p), SgdConfig(learning_rate=0.1, momentum=0.0, weight_decay=0.01))
    np.testing.assert_allclose(p.w1, before * (1 - 0.1 * 0.01), rtol=1e-15)


def test_two_momentum_steps():
    p = init_params(3, 4, 2, seed=9)
    before = p.w2.copy()
    cfg = SgdConfig(learning_rate=0.1, momentum=0.9, weight_decay=0.0)
    for _ in range(2):
        sgd_step(p, const_grads(p, 1.0), cfg)
    np.testing.assert_allclose(before - p.w2, 0.1 * (1.0 + 1.9), rtol=1e-14)
    assert p.step == 2


def test_divergence_raises_and_leaves_params():
    p = init_params(3, 4, 2, seed=10)
    before = checkpoint_bytes(p)
    with pytest.raises(TrainingDivergedError):
        sgd_step(p, const_grads(p, np.inf), SgdConfig())
    assert checkpoint_bytes(p) == before


@pytest.mark.parametrize("kw", [dict(learning_rate=0), dict(momentum=1.0), dict(weight_decay=-1)])
def test_sgd_config_validated(kw):
    with pytest.raises(InvalidInputError):
        SgdConfig(**kw)


def test_checkpoint_round_trip_bit_exact(tmp_path):
    p = init_params(5, 7, 3, seed=11)
    x = np.random.default_rng(0).normal(size=(4, 5))
    logits, cache = forward(p, x)
    sgd_step(p, backward(p, cache, ce_loss(logits, np.array([0, 1, 2, 0])).grad), SgdConfig())
    digest = save_checkpoint(p, tmp_path / "m.json", meta={"seed": 11})
    q, meta = load_checkpoint(tmp_path / "m.json")
    assert meta == {"seed": 11}
    assert digest == file_digest(tmp_path / "m.json")
    for n in PARAM_NAMES:
        assert getattr(q, n).tobytes() == getattr(p, n).tobytes()
        assert q.velocity[n].tobytes() == p.velocity[n].tobytes()
    assert (q.seed, q.step) == (p.seed, p.step)
    assert checkpoint_bytes(q, {"seed": 11}) == checkpoint_bytes(p, {"seed": 11})


def test_checkpoint_rejects_garbage(tmp_path):
    (tmp_path / "bad.json").write_text('{"format": "other"}')
    with pytest.raises(InvalidInputError):
        load_checkpoint(tmp_path / "bad.json")
    with pytest.raises(InvalidInputError):
        load_checkpoint(tmp_path / "missing.json")


def test_identical_training_is_bit_identical():
    rng = np.random.default_rng(12)
    x, y = rng.normal(size=(20, 4)), rng.integers(3, size=20)

    def run():
        p = init_params(4, 6, 3, seed=13)
        for _ in range(30):
            logits, cache = forward(p, x)
            sgd_step(p, backward(p, cache, ce_loss(logits, y).grad / 20), SgdConfig())
        return checkpoint_bytes(p)

    assert run() == run()


def test_full_batch_ce_strictly_decreases():
    rng = np.random.default_rng(14)
    centers = np.array([[4.0, 0.0], [-2.0, 3.5], [-2.0, -3.5]])
    y = np.repeat(np.arange(3), 20)
    x = centers[y] + 0.3 * rng.normal(size=(60, 2))
    p = init_params(2, 16, 3, seed=15)
    cfg = SgdConfig(learning_rate=0.1, momentum=0.0, weight_decay=0.0)
    losses = []
    for _ in range(50):
        logits, cache = forward(p, x)
        lv = ce_loss(logits, y)
        losses.append(float(np.mean(lv.value)))
        sgd_step(p, backward(p, cache, lv.grad / len(y)), cfg)
    assert all(b < a for a, b in zip(losses, losses[1:]))
