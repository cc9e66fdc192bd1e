import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tct.exceptions import ArgumentError, DataError
from tct.pct import (
    PrincipalComponentThermography,
    ScoreScaler,
    fix_signs,
    load_features_csv,
    load_pca_json,
    save_features_csv,
    save_pca_json,
    select_k,
)


def covariance_eigenvalues(X):
    """Oracle: eigenvalues of the centered scatter matrix, descending."""
    Xc = X - X.mean(axis=0)
    return np.linalg.eigvalsh(Xc.T @ Xc)[::-1]


def test_rank_one_explains_everything():
    rng = np.random.default_rng(1)
    curve = rng.standard_normal(6)
    X = rng.standard_normal(15)[:, None] * curve
    pca = PrincipalComponentThermography(1).fit(X)
    assert pca.explained_variance_ratio_[0] == pytest.approx(1.0, abs=1e-9)


def test_diagonal_case():
    X = np.array([[1.0, 1.0], [-1.0, -1.0], [2.0, 2.0], [-2.0, -2.0]])
    pca = PrincipalComponentThermography(1).fit(X)
    np.testing.assert_allclose(pca.loadings_[:, 0], [2 ** -0.5, 2 ** -0.5], atol=1e-12)


def test_two_by_two_characteristic_polynomial():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((7, 2))
    Xc = X - X.mean(axis=0)
    (a, b), (_, d) = Xc.T @ Xc
    disc = np.sqrt((a - d) ** 2 + 4 * b * b)
    expected = [(a + d + disc) / 2, (a + d - disc) / 2]
    pca = PrincipalComponentThermography(2).fit(X)
    np.testing.assert_allclose(pca.singular_values_ ** 2, expected, rtol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 20), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_oracle_equivalence(m, n, seed):
    X = np.random.default_rng(seed).standard_normal((m, n))
    pca = PrincipalComponentThermography(min(m, n)).fit(X)
    oracle = covariance_eigenvalues(X)[: min(m, n)]
    top = oracle[0]
    # the centered matrix has rank <= m-1, so the last value may be ~0
    np.testing.assert_allclose(pca.singular_values_ ** 2, oracle, rtol=1e-8, atol=1e-8 * top)
    gram = pca.loadings_.T @ pca.loadings_
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 200), st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_orthonormal_and_diagonal_covariance(m, n, seed):
    X = np.random.default_rng(seed).standard_normal((m, n))
    k = min(m, n)
    pca = PrincipalComponentThermography(k).fit(X)
    gram = pca.loadings_.T @ pca.loadings_
    assert np.max(np.abs(gram - np.eye(k))) <= 1e-8
    scores = pca.transform(X)
    cov = np.cov(scores, rowvar=False).reshape(k, k)
    off = cov - np.diag(np.diag(cov))
    assert np.max(np.abs(off)) <= 1e-8 * np.max(np.diag(cov))
    assert np.all(np.diff(pca.singular_values_) <= 0)
    assert pca.explained_variance_ratio_all_.sum() == pytest.approx(1.0, abs=1e-9)


def test_sign_rule_and_determinism():
    X = np.random.default_rng(5).standard_normal((30, 6))
    a = PrincipalComponentThermography(4).fit(X)
    b = PrincipalComponentThermography(4).fit(X)
    assert np.array_equal(a.loadings_, b.loadings_)
    for col in a.loadings_.T:
        assert col[np.argmax(np.abs(col))] > 0
    # flipping the data's sign flips the scores, not the basis
    c = PrincipalComponentThermography(4).fit(-X)
    np.testing.assert_allclose(c.loadings_, a.loadings_, atol=1e-12)


def test_fix_signs_tie_goes_to_lowest_index():
    out = fix_signs(np.array([[-1.0], [1.0]]))
    assert out[:, 0].tolist() == [1.0, -1.0]


def test_transform_examples():
    X = np.random.default_rng(7).standard_normal((12, 5))
    pca = PrincipalComponentThermography(5).fit(X)
    assert np.all(pca.transform(np.tile(pca.mean_, (3, 1))) == 0)
    recon = pca.inverse_transform(pca.transform(X))
    assert np.linalg.norm(recon - X) <= 1e-6 * np.linalg.norm(X)
    with pytest.raises(ArgumentError):
        pca.transform(np.zeros((3, 4)))


def test_reconstruction_error_nonincreasing_in_k():
    X = np.random.default_rng(8).standard_normal((25, 8))
    errors = []
    for k in range(1, 9):
        pca = PrincipalComponentThermography(k).fit(X)
        errors.append(np.linalg.norm(pca.inverse_transform(pca.transform(X)) - X))
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


def test_fit_errors():
    with pytest.raises(ArgumentError):
        PrincipalComponentThermography(5).fit(np.random.default_rng(0).standard_normal((3, 4)))
    with pytest.raises(ArgumentError):
        PrincipalComponentThermography(1).fit(np.ones((1, 4)))
    with pytest.raises(DataError):
        PrincipalComponentThermography(1).fit(np.ones((4, 4)))
    bad = np.ones((4, 4))
    bad[0, 0] = np.nan
    with pytest.raises(DataError):
        PrincipalComponentThermography(1).fit(bad)


def test_select_k_examples():
    assert select_k([0.6, 0.3, 0.06, 0.04], 0.95) == 3
    assert select_k([1.0], 0.95) == 1
    assert select_k([0.5, 0.3], 0.95) == 2
    with pytest.raises(ArgumentError):
        select_k([], 0.95)


def test_automatic_k():
    X = np.random.default_rng(9).standard_normal((40, 6)) * [10, 5, 1, 0.1, 0.1, 0.1]
    pca = PrincipalComponentThermography(None, 0.95).fit(X)
    assert pca.n_components_ == select_k(pca.explained_variance_ratio_all_, 0.95)


def test_standardize_examples():
    Z = ScoreScaler().fit_transform(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    np.testing.assert_allclose(Z[:, 0], [-1, 0, 1], atol=1e-15)
    assert Z[:, 1].tolist() == [0.0, 0.0, 0.0]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_standardize_moments_and_idempotence(m, k, seed):
    X = np.random.default_rng(seed).standard_normal((m, k)) * 7 + 3
    Z = ScoreScaler().fit_transform(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1, atol=1e-9)
    np.testing.assert_allclose(ScoreScaler().fit_transform(Z), Z, atol=1e-12)


def test_json_and_csv_round_trip(tmp_path):
    X = np.random.default_rng(10).standard_normal((20, 6))
    pca = PrincipalComponentThermography(3).fit(X)
    save_pca_json(pca, tmp_path / "p.json")
    back = load_pca_json(tmp_path / "p.json")
    assert np.array_equal(back.transform(X), pca.transform(X))
    scores = pca.transform(X)
    save_features_csv(scores, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "pc1,pc2,pc3"
    assert np.array_equal(load_features_csv(tmp_path / "f.csv"), scores)
