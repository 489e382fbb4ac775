import numpy as np
import pytest

from dronerem import mlp


def _relative_error(a, b):
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-8)


def numeric_grad(params, X, y, h=1e-5):
    out = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            up, _ = mlp.loss_and_grad(params, X, y)
            p[i] = old - h
            down, _ = mlp.loss_and_grad(params, X, y)
            p[i] = old
            g[i] = (up - down) / (2 * h)
        out[name] = g
    return out


def random_point(rng, n_in=5, n_hidden=6, n=10):
    X = rng.normal(size=(n, n_in))
    y = rng.normal(-75, 8, size=n)
    params = mlp.init_params(n_in, n_hidden, rng, output_bias=float(rng.normal(-75, 5)))
    for name in params:
        params[name] = params[name] + rng.normal(scale=0.5, size=params[name].shape)
    return params, X, y


def test_gradient_matches_finite_differences():
    params, X, y = random_point(np.random.default_rng(11))
    _, g = mlp.loss_and_grad(params, X, y)
    num = numeric_grad(params, X, y)
    for name in params:
        assert _relative_error(g[name], num[name]).max() < 1e-4, name


def test_sigmoid_is_stable_at_extremes():
    z = np.array([-1000.0, -30.0, 0.0, 30.0, 1000.0])
    s = mlp.sigmoid(z)
    assert np.all(np.isfinite(s))
    assert s[2] == 0.5 and s[0] == 0.0 and s[-1] == 1.0


def test_zero_weights_predict_output_bias():
    params = mlp.init_params(4, 16, np.random.default_rng(0), output_bias=-71.5)
    for name in ("W1", "b1", "W2"):
        params[name][...] = 0.0
    pred, _ = mlp.forward(params, np.random.default_rng(1).normal(size=(8, 4)))
    assert np.all(pred == -71.5)


def test_glorot_limits():
    params = mlp.init_params(10, 16, np.random.default_rng(0))
    assert np.abs(params["W1"]).max() <= np.sqrt(6 / 26)
    assert np.all(params["b1"] == 0)


def test_adam_first_step_is_learning_rate_sized():
    # bias correction makes the first update lr * sign(grad)
    p = {"w": np.array([1.0, -2.0, 0.5])}
    g = {"w": np.array([0.3, -40.0, 1e-3])}
    opt = mlp.Adam(learning_rate=0.01)
    opt.step(p, g)
    np.testing.assert_allclose(p["w"], [0.99, -1.99, 0.49], rtol=0, atol=1e-7)


def test_adam_minimizes_a_quadratic():
    p = {"w": np.array([3.0, -2.0])}
    opt = mlp.Adam(learning_rate=0.05)
    for _ in range(2000):
        opt.step(p, {"w": 2 * p["w"]})
    assert np.abs(p["w"]).max() < 1e-2


def test_overfits_ten_samples():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 1, size=(10, 4))
    y = -75 + 10 * np.sin(3 * X[:, 0]) + 5 * X[:, 1]
    params, hist = mlp.train(X, y, n_hidden=16, epochs=3000, batch_size=10, seed=0,
                             learning_rate=0.01)
    pred, _ = mlp.forward(params, X)
    assert np.sqrt(np.mean((pred - y) ** 2)) < 1.0
    assert hist["train_mse"][-1] < hist["train_mse"][0]


def test_training_is_seeded():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(40, 3)), rng.normal(-70, 5, size=40)
    a, _ = mlp.train(X, y, epochs=5, seed=4)
    b, _ = mlp.train(X, y, epochs=5, seed=4)
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_validation_history_tracks_best_epoch():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(40, 3)), rng.normal(-70, 5, size=40)
    _, hist = mlp.train(X, y, epochs=7, X_val=X[:10], y_val=y[:10])
    assert len(hist["val_mse"]) == 7
    assert 1 <= hist["best_epoch"] <= 7


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    X = np.ones((4, 2))
    y = np.array([np.inf, 0, 0, 0])
    with pytest.raises(FloatingPointError):
        mlp.train(X, y, epochs=1)
