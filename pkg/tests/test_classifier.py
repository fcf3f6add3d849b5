"""LSMR solver and ridge detector tests."""

import numpy as np
import pytest

from planeguard import (
    LabeledFeatureSet,
    RidgeModel,
    cv_lambda,
    decision_scores,
    evaluate,
    load_model,
    lsmr_solve,
    predict,
    save_model,
    train,
)
from planeguard.classifier import STOP_REASONS, label_name, labels_to_values
from planeguard.errors import (
    DataFormatError,
    InvalidArgumentError,
    InvalidInputError,
    InvalidTrainingSetError,
)


def _normal_equations(A, b, damp):
    n = A.shape[1]
    return np.linalg.solve(A.T @ A + damp * damp * np.eye(n), A.T @ b)


def test_lsmr_identity(rng):
    b = rng.standard_normal(5)
    res = lsmr_solve(np.eye(5), b)
    assert res.converged
    assert np.linalg.norm(res.x - b) < 1e-10


def test_lsmr_damped_least_squares(rng):
    A = rng.standard_normal((20, 10))
    b = rng.standard_normal(20)
    res = lsmr_solve(A, b, damp=0.5)
    assert res.converged
    ref = _normal_equations(A, b, 0.5)
    assert np.linalg.norm(res.x - ref) <= 1e-6 * np.linalg.norm(ref)


def test_lsmr_oracle_sweep(rng):
    for _ in range(6):
        m = int(rng.integers(20, 51))
        n = int(rng.integers(5, 21))
        A = rng.standard_normal((m, n))
        b = rng.standard_normal(m)
        for damp in (0.0, 0.5, 2.0):
            res = lsmr_solve(A, b, damp=damp, atol=1e-12, btol=1e-12)
            assert res.converged, (res.istop, res.reason)
            ref = _normal_equations(A, b, damp)
            assert np.linalg.norm(res.x - ref) <= 1e-6 * max(np.linalg.norm(ref), 1e-30)


def test_lsmr_heavy_damping_shrinks_solution(rng):
    A = rng.standard_normal((15, 6))
    b = rng.standard_normal(15)
    res = lsmr_solve(A, b, damp=1e6)
    assert np.linalg.norm(res.x) <= 1e-6 * np.linalg.norm(A.T @ b)


def test_lsmr_zero_rhs():
    res = lsmr_solve(np.eye(4), np.zeros(4))
    assert res.istop == 0 and res.iterations == 0
    assert res.converged
    assert not res.x.any()
    assert res.reason == STOP_REASONS[0]


def test_lsmr_iteration_limit(rng):
    A = rng.standard_normal((30, 10))
    b = rng.standard_normal(30)
    res = lsmr_solve(A, b, max_iter=1)
    assert res.istop == 7
    assert not res.converged
    assert res.iterations == 1


def test_lsmr_negated_rhs_negates_solution(rng):
    A = rng.standard_normal((12, 7))
    b = rng.standard_normal(12)
    x1 = lsmr_solve(A, b).x
    x2 = lsmr_solve(A, -b).x
    assert np.array_equal(x1, -x2)


def test_lsmr_input_validation(rng):
    with pytest.raises(InvalidInputError):
        lsmr_solve(np.eye(3), np.zeros(4))
    bad = np.eye(3)
    bad[0, 0] = np.nan
    with pytest.raises(InvalidInputError):
        lsmr_solve(bad, np.zeros(3))
    with pytest.raises(InvalidArgumentError):
        lsmr_solve(np.eye(3), np.zeros(3), damp=-1)
    with pytest.raises(InvalidArgumentError):
        lsmr_solve(np.eye(3), np.zeros(3), max_iter=0)


# ---------------------------------------------------------------------------
# labeled sets and training


def _gaussian_clusters(rng, n_per_class=100):
    auth = rng.standard_normal((n_per_class, 2)) + (-3.0, -3.0)
    tamp = rng.standard_normal((n_per_class, 2)) + (3.0, 3.0)
    X = np.vstack([auth, tamp])
    y = np.concatenate([np.full(n_per_class, -1.0), np.full(n_per_class, 1.0)])
    return X, y


def test_labeled_set_validation(rng):
    with pytest.raises(InvalidInputError):
        LabeledFeatureSet(np.zeros((3, 2)), np.array([-1.0, 1.0]))
    with pytest.raises(InvalidInputError):
        LabeledFeatureSet(np.zeros((2, 2)), np.array([0.0, 1.0]))
    X = np.zeros((2, 2))
    X[0, 0] = np.inf
    with pytest.raises(InvalidInputError):
        LabeledFeatureSet(X, np.array([-1.0, 1.0]))


def test_label_helpers():
    assert labels_to_values(["authentic", "tampered"]).tolist() == [-1.0, 1.0]
    with pytest.raises(InvalidInputError):
        labels_to_values(["fake"])
    assert label_name(1.0) == "tampered"
    assert label_name(-1.0) == "authentic"


def test_train_separates_gaussian_clusters(rng):
    X, y = _gaussian_clusters(rng)
    hold = np.zeros(len(y), bool)
    hold[::5] = True
    model = train(LabeledFeatureSet(X[~hold], y[~hold]), lam=1.0)
    assert evaluate(model, LabeledFeatureSet(X[~hold], y[~hold])) >= 0.99
    assert evaluate(model, LabeledFeatureSet(X[hold], y[hold])) >= 0.95


def test_duplicated_column_matches_normal_equations(rng):
    X1 = rng.standard_normal((40, 3))
    y = np.where(X1 @ np.array([1.0, 2.0, -1.0]) > 0, 1.0, -1.0)
    assert 2 <= (y > 0).sum() <= 38
    X2 = np.hstack([X1, X1[:, :1]])
    lam = 1.0
    model = train(LabeledFeatureSet(X2, y), lam=lam)

    means = X2.mean(axis=0)
    stds = np.maximum(X2.std(axis=0), 1e-8)
    Z = (X2 - means) / stds
    offset = y.mean()
    w = np.linalg.solve(Z.T @ Z + lam * np.eye(4), Z.T @ (y - offset))
    oracle_scores = Z @ w + offset
    assert np.allclose(decision_scores(model, X2), oracle_scores, atol=1e-6)


def test_flipped_labels_negate_weights(rng):
    X, y = _gaussian_clusters(rng, 20)
    m1 = train(LabeledFeatureSet(X, y), lam=0.5)
    m2 = train(LabeledFeatureSet(X, -y), lam=0.5)
    assert np.array_equal(m1.weights, -m2.weights)
    assert m1.label_offset == -m2.label_offset


def test_mean_vector_scores_at_offset(rng):
    X, y = _gaussian_clusters(rng, 30)
    y[:10] = 1.0  # unbalanced so the offset is nonzero
    model = train(LabeledFeatureSet(X, y), lam=1.0)
    assert model.label_offset != 0.0
    score, _ = predict(model, model.means)
    assert score == model.label_offset


def test_balanced_labels_zero_offset(rng):
    X, y = _gaussian_clusters(rng, 10)
    model = train(LabeledFeatureSet(X, y), lam=1.0)
    assert model.label_offset == 0.0


def test_train_rejects_degenerate_sets(rng):
    X = rng.standard_normal((3, 2))
    with pytest.raises(InvalidTrainingSetError):
        train(LabeledFeatureSet(X, np.array([1.0, 1.0, -1.0])))
    X, y = _gaussian_clusters(rng, 5)
    with pytest.raises(InvalidArgumentError):
        train(LabeledFeatureSet(X, y), lam=-0.1)


def test_predict_tie_counts_as_tampered():
    model = RidgeModel(np.array([1.0]), np.array([0.0]), np.array([1.0]), 0.0, 0.0)
    score, label = predict(model, np.array([0.0]))
    assert score == 0.0 and label == "tampered"
    assert predict(model, np.array([-2.0]))[1] == "authentic"


def test_evaluate_perfect_and_empty():
    model = RidgeModel(np.array([1.0]), np.array([0.0]), np.array([1.0]), 0.0, 0.0)
    data = LabeledFeatureSet(np.array([[5.0], [-5.0]]), np.array([1.0, -1.0]))
    assert evaluate(model, data) == 1.0
    with pytest.raises(InvalidInputError):
        evaluate(model, LabeledFeatureSet(np.zeros((0, 1)), np.zeros(0)))


def test_decision_scores_dimension_check():
    model = RidgeModel(np.ones(2), np.zeros(2), np.ones(2), 0.0, 0.0)
    with pytest.raises(InvalidInputError):
        decision_scores(model, np.zeros((3, 5)))


def test_cv_lambda_smoke(rng):
    X, y = _gaussian_clusters(rng, 25)
    lam, table = cv_lambda(LabeledFeatureSet(X, y), grid=(0.1, 1.0), folds=3, seed=7)
    assert lam in (0.1, 1.0)
    assert len(table) == 2
    assert all(0.0 <= acc <= 1.0 for _, acc in table)


def test_cv_lambda_validation(rng):
    X, y = _gaussian_clusters(rng, 4)
    with pytest.raises(InvalidTrainingSetError):
        cv_lambda(LabeledFeatureSet(X, y), folds=5)
    with pytest.raises(InvalidArgumentError):
        cv_lambda(LabeledFeatureSet(X, y), folds=1)


# ---------------------------------------------------------------------------
# model file round trip


def test_model_round_trip(tmp_path, rng):
    X, y = _gaussian_clusters(rng, 20)
    model = train(LabeledFeatureSet(X, y), lam=2.0)
    p = tmp_path / "model.txt"
    save_model(p, model)
    back = load_model(p)
    assert np.array_equal(back.weights, model.weights)
    assert np.array_equal(back.means, model.means)
    assert np.array_equal(back.stds, model.stds)
    assert back.label_offset == model.label_offset
    assert back.lam == model.lam
    probe = rng.standard_normal((5, 2))
    assert np.array_equal(decision_scores(back, probe), decision_scores(model, probe))


def _write_model_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")


def test_load_model_errors(tmp_path):
    p = tmp_path / "m.txt"

    _write_model_lines(p, ["dim x", "lambda 1", "label_offset 0", "means", "0", "stds", "1", "weights", "0"])
    with pytest.raises(DataFormatError, match="m.txt:1"):
        load_model(p)

    _write_model_lines(p, ["dim 1", "lambda oops", "label_offset 0", "means", "0", "stds", "1", "weights", "0"])
    with pytest.raises(DataFormatError, match="m.txt:2"):
        load_model(p)

    _write_model_lines(p, ["dim 1", "lambda 1", "label_offset 0", "wrong", "0", "stds", "1", "weights", "0"])
    with pytest.raises(DataFormatError, match="means"):
        load_model(p)

    _write_model_lines(p, ["dim 2", "lambda 1", "label_offset 0", "means", "0", "stds", "1", "weights", "0"])
    with pytest.raises(DataFormatError):
        load_model(p)

    _write_model_lines(p, ["dim 1", "lambda 1", "label_offset 0", "means", "0", "stds", "1", "weights", "0", "extra"])
    with pytest.raises(DataFormatError, match="trailing"):
        load_model(p)

    _write_model_lines(p, ["dim 1", "lambda 1", "label_offset 0", "means", "zzz", "stds", "1", "weights", "0"])
    with pytest.raises(DataFormatError, match="m.txt:5"):
        load_model(p)
