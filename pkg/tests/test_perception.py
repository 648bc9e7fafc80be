import numpy as np
import pytest
from sklearn.base import clone

from cabl.datasets import (
    SyntheticDatasetSpec,
    bayes_accuracy,
    class_means,
    dump_dataset,
    generate_dataset,
    load_dataset,
)
from cabl.perception import NonFiniteLossError, SoftmaxConceptClassifier, eval_concept_accuracy


def _model(n_classes=3, n_features=4, scale=0.5, seed=0, lr=0.1):
    return SoftmaxConceptClassifier(n_classes=n_classes, init_scale=scale, random_state=seed, learning_rate=lr).initialize(n_features)


# --------------------------------------------------------------------------- predictions


def test_two_logit_softmax():
    m = _model(2, 1, scale=0.0)
    m.intercept_[:] = [1.0, 0.0]
    np.testing.assert_allclose(m.predict_proba([[0.0]])[0], [0.7311, 0.2689], atol=5e-5)


def test_zero_model_is_uniform():
    m = _model(10, 16, scale=0.0)
    np.testing.assert_allclose(m.predict_proba(np.ones((3, 16))), np.full((3, 10), 0.1))


def test_saturated_logit():
    m = _model(3, 1, scale=0.0)
    m.intercept_[:] = [1e4, 0.0, 0.0]
    np.testing.assert_allclose(m.predict_proba([[0.0]])[0], [1.0, 0.0, 0.0])


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="features"):
        _model(3, 4).predict_proba(np.ones((1, 5)))


def test_needs_two_classes():
    with pytest.raises(ValueError):
        SoftmaxConceptClassifier(n_classes=1).initialize(3)


def test_zero_model_ties_go_to_label_zero():
    assert list(_model(5, 2, scale=0.0).predict(np.random.default_rng(0).normal(size=(20, 2)))) == [0] * 20


# --------------------------------------------------------------------------- gradients


def _numeric_grad(m, X, y, h=1e-4):
    def loss():
        return m.loss_and_grad(X, y)[0]

    out = []
    for param in (m.coef_, m.intercept_):
        g = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + h
            up = loss()
            param[idx] = old - h
            down = loss()
            param[idx] = old
            g[idx] = (up - down) / (2 * h)
        out.append(g)
    return out


def _relative_error(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(1)
    worst = 0.0
    for k in range(100):
        n_classes, n_features = int(rng.integers(2, 6)), int(rng.integers(1, 5))
        m = _model(n_classes, n_features, scale=1.0, seed=k)
        X = rng.normal(size=(int(rng.integers(1, 4)), n_features))
        y = rng.integers(0, n_classes, size=len(X))
        _, g_coef, g_bias = m.loss_and_grad(X, y)
        n_coef, n_bias = _numeric_grad(m, X, y)
        worst = max(worst, _relative_error(g_coef, n_coef), _relative_error(g_bias, n_bias))
    assert worst < 1e-5


def test_gradient_is_outer_product_of_residual_and_input():
    m = _model(3, 2, scale=1.0)
    x, y = np.array([[0.5, -2.0]]), np.array([2])
    residual = m.predict_proba(x)[0] - np.eye(3)[2]
    _, g_coef, g_bias = m.loss_and_grad(x, y)
    np.testing.assert_allclose(g_coef, np.outer(residual, x[0]))
    np.testing.assert_allclose(g_bias, residual)


# --------------------------------------------------------------------------- training steps


def test_zero_learning_rate_changes_nothing():
    m = _model(3, 4, lr=0.0)
    before = m.coef_.copy(), m.intercept_.copy()
    m.train_step(np.ones((2, 4)), np.array([0, 1]))
    np.testing.assert_array_equal(m.coef_, before[0])
    np.testing.assert_array_equal(m.intercept_, before[1])


def test_loss_decreases_on_one_example():
    m = _model(4, 3)
    x, y = np.array([[1.0, -1.0, 0.5]]), np.array([2])
    losses = [m.train_step(x, y) for _ in range(50)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_probabilities_stay_normalized():
    m = _model(5, 3, lr=0.5)
    rng = np.random.default_rng(3)
    for _ in range(200):
        X = rng.normal(size=(4, 3))
        m.train_step(X, rng.integers(0, 5, size=4))
        p = m.predict_proba(X)
        assert np.all(p >= 0) and np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_empty_batch_is_rejected():
    with pytest.raises(ValueError, match="empty"):
        _model().train_step(np.zeros((0, 4)), np.zeros(0, dtype=int))


def test_non_finite_loss_aborts():
    m = _model(2, 1)
    m.coef_[:] = np.nan
    with pytest.raises(NonFiniteLossError, match="non-finite"):
        m.train_step(np.ones((1, 1)), np.array([0]))


def test_trajectory_is_deterministic():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(30, 4)), rng.integers(0, 3, size=30)
    a = _model(seed=9)
    b = _model(seed=9)
    for k in range(20):
        a.train_step(X[k : k + 1], y[k : k + 1])
        b.train_step(X[k : k + 1], y[k : k + 1])
    assert a.coef_.tobytes() == b.coef_.tobytes()


def test_sklearn_fit_and_clone():
    rng = np.random.default_rng(5)
    means = class_means(3, 4, 6.0)
    y = rng.integers(0, 3, size=300)
    X = means[y] + 0.3 * rng.normal(size=(300, 4))
    est = SoftmaxConceptClassifier(max_iter=200, learning_rate=0.5).fit(X, y)
    assert est.score(X, y) > 0.99
    assert clone(est).get_params() == est.get_params()


def test_partial_fit_initialises_lazily():
    est = SoftmaxConceptClassifier().partial_fit(np.ones((2, 3)), [0, 1], classes=[0, 1, 2])
    assert est.coef_.shape == (3, 3) and est.n_steps_ == 1


# --------------------------------------------------------------------------- evaluation


def test_perfect_and_zero_models():
    rng = np.random.default_rng(6)
    means = class_means(4, 4, 50.0)
    concepts = rng.integers(0, 4, size=(100, 2))
    concepts[0] = [0, 1]
    concepts[1] = [2, 3]
    feats = means[concepts] + 0.01 * rng.normal(size=(100, 2, 4))
    fitted = SoftmaxConceptClassifier(max_iter=300, learning_rate=0.5).fit(
        feats.reshape(-1, 4), concepts.reshape(-1)
    )
    assert eval_concept_accuracy(fitted, feats, concepts, "abcd") == {k: 1.0 for k in "abcd"}
    zero = _model(4, 4, scale=0.0)
    assert eval_concept_accuracy(zero, feats, concepts, "abcd") == {"a": 1.0, "b": 0.0, "c": 0.0, "d": 0.0}


def test_random_model_is_near_chance():
    rng = np.random.default_rng(8)
    n, k = 4000, 5
    concepts = rng.integers(0, k, size=(n, 1))
    feats = rng.normal(size=(n, 1, 6))
    est = _model(k, 6, scale=3.0, seed=2)
    per = eval_concept_accuracy(est, feats, concepts, range(k))
    # each label's accuracy is the share of its inputs that land in its own region, so
    # only the mean over labels is pinned to 1/k; allow three binomial sigmas on the pooled count
    assert abs(np.mean(list(per.values())) - 1 / k) < 3 * np.sqrt((1 / k) * (1 - 1 / k) / n) + 0.02


def test_missing_label_is_an_error():
    with pytest.raises(ValueError, match="no validation occurrences"):
        eval_concept_accuracy(_model(3, 2), np.zeros((2, 1, 2)), np.zeros((2, 1), dtype=int), "abc")


# --------------------------------------------------------------------------- datasets


def test_means_form_a_regular_simplex():
    means = class_means(10, 16, 3.0)
    d = np.linalg.norm(means[:, None] - means[None], axis=2)
    np.testing.assert_allclose(d[~np.eye(10, dtype=bool)], 3.0)


def test_feature_dim_too_small():
    with pytest.raises(ValueError):
        class_means(10, 8, 3.0)


def test_bayes_accuracy_in_the_informative_band():
    # independent oracle: nearest-mean error for equidistant means at distance 3, sigma 1
    acc = bayes_accuracy(10, SyntheticDatasetSpec(), samples=50_000)
    assert 0.60 < acc < 0.99


def test_zero_noise_is_separable(add10):
    spec = SyntheticDatasetSpec(noise_sigma=0.0, train_size=50, val_size=50)
    assert bayes_accuracy(10, spec, samples=2000) == 1.0
    train, _ = generate_dataset(spec, add10)
    means = class_means(10, 16, 3.0)
    np.testing.assert_array_equal(train.features, means[train.concepts])


def test_dataset_is_deterministic_and_targets_are_sums(add10):
    spec = SyntheticDatasetSpec(train_size=100, val_size=20, seed=3)
    a, _ = generate_dataset(spec, add10)
    b, _ = generate_dataset(spec, add10)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.targets == [int(z[0] + z[1]) for z in a.concepts]


def test_invalid_specs():
    with pytest.raises(ValueError):
        SyntheticDatasetSpec(class_separation=0)
    with pytest.raises(ValueError):
        SyntheticDatasetSpec(train_size=0)


@pytest.mark.parametrize("fixture", ["add10", "chess"])
def test_csv_round_trip(tmp_path, request, fixture):
    task = request.getfixturevalue(fixture)
    train, _ = generate_dataset(SyntheticDatasetSpec(train_size=15, val_size=5), task)
    path, sidecar = dump_dataset(train, task.concepts, tmp_path / "train.csv")
    assert sidecar.name == "train.targets.csv"
    back = load_dataset(path, task.concepts)
    np.testing.assert_array_equal(back.features, train.features)
    np.testing.assert_array_equal(back.concepts, train.concepts)
    assert back.targets == train.targets
    assert back.contexts == train.contexts
