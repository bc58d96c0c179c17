import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xsim import (
    IndexSpec,
    ValidationError,
    cca,
    cka,
    cosine_parallel,
    cosine_permuted,
    pwcca,
    svcca,
)
from xsim.simindex import derangement

from oracles import cca_score_oracle, cka_hsic_oracle, pwcca_score_oracle


def rand_orthogonal(rng, d):
    return np.linalg.qr(rng.normal(size=(d, d)))[0]


# ---------------------------------------------------------------- cca

def test_cca_identity(rng):
    x = rng.normal(size=(100, 5))
    assert cca(x, x).score == pytest.approx(1.0, abs=1e-8)


def test_cca_invertible_map(rng):
    x = rng.normal(size=(100, 5))
    a = rng.normal(size=(5, 5))
    assert np.linalg.matrix_rank(a) == 5
    assert cca(x, x @ a).score == pytest.approx(1.0, abs=1e-6)


def test_cca_independent_views_match_eig_oracle(rng):
    x = rng.normal(size=(1000, 2))
    y = rng.normal(size=(1000, 2))
    assert cca(x, y).score == pytest.approx(cca_score_oracle(x, y), abs=1e-8)


def test_cca_result_invariants(rng):
    x = rng.normal(size=(60, 8))
    y = rng.normal(size=(60, 5))
    r = cca(x, y)
    assert np.all(np.diff(r.correlations) <= 1e-12)
    assert np.all((r.correlations >= 0) & (r.correlations <= 1))
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= r.score <= 1.0 + 1e-12
    assert r.effective_rank == (8, 5)
    assert len(r.correlations) == 5


def test_cca_symmetry(rng):
    x = rng.normal(size=(80, 6))
    y = rng.normal(size=(80, 4))
    assert cca(x, y).score == pytest.approx(cca(y, x).score, abs=1e-8)


def test_cca_row_mismatch():
    with pytest.raises(ValidationError, match="row-count mismatch"):
        cca(np.zeros((3, 2)) + np.eye(3, 2), np.eye(4, 2))


def test_cca_zero_variance(rng):
    x = rng.normal(size=(10, 3))
    with pytest.raises(ValidationError, match="zero variance"):
        cca(x, np.ones((10, 3)))


def test_cca_warns_when_underdetermined(rng):
    x = rng.normal(size=(5, 8))
    with pytest.warns(UserWarning, match="fewer samples"):
        cca(x, rng.normal(size=(5, 8)))


def test_cca_rank_deficient_view(rng):
    # duplicated column: effective rank drops, score stays in [0, 1]
    x = rng.normal(size=(50, 3))
    x = np.hstack([x, x[:, :1]])
    r = cca(x, rng.normal(size=(50, 4)))
    assert r.effective_rank[0] == 3
    assert 0.0 <= r.score <= 1.0


def test_cca_ridge_regularization(rng):
    x = rng.normal(size=(50, 4))
    y = rng.normal(size=(50, 4))
    plain = cca(x, y).score
    ridged = cca(x, y, IndexSpec(kind="cca", regularization=1e-3)).score
    assert ridged <= plain + 1e-12
    assert cca(x, y, IndexSpec(kind="cca", regularization=1e-12)).score == \
        pytest.approx(plain, abs=1e-6)


# ---------------------------------------------------------------- svcca

def test_svcca_identity(rng):
    x = rng.normal(size=(100, 30))
    assert svcca(x, x, IndexSpec(kind="svcca", svcca_components=20)).score == \
        pytest.approx(1.0, abs=1e-8)


def test_svcca_full_rank_equals_cca(rng):
    x = rng.normal(size=(100, 6))
    y = rng.normal(size=(100, 6))
    full = svcca(x, y, IndexSpec(kind="svcca", svcca_components=6))
    assert full.score == pytest.approx(cca(x, y).score, abs=1e-6)


def test_svcca_default_components():
    assert IndexSpec(kind="svcca").svcca_components == 20


def test_svcca_clamps_components(rng):
    x = rng.normal(size=(30, 4))
    with pytest.warns(UserWarning, match="clamping"):
        r = svcca(x, rng.normal(size=(30, 4)), IndexSpec(kind="svcca", svcca_components=20))
    assert len(r.correlations) == 4


def test_svcca_truncation_changes_score(rng):
    # low-variance directions carry the only correlated signal; truncation drops it
    n = 200
    shared = rng.normal(size=(n, 1))
    x = np.hstack([rng.normal(size=(n, 3)) * 100, shared * 0.01])
    y = np.hstack([rng.normal(size=(n, 3)) * 100, shared * 0.01])
    trunc = svcca(x, y, IndexSpec(kind="svcca", svcca_components=2)).score
    full = cca(x, y).score
    assert trunc < full


# ---------------------------------------------------------------- pwcca

def test_pwcca_identity(rng):
    x = rng.normal(size=(100, 5))
    assert pwcca(x, x).score == pytest.approx(1.0, abs=1e-8)


def test_pwcca_translation_scaling_invariance(rng):
    x = rng.normal(size=(100, 5))
    y = rng.normal(size=(100, 5))
    c = rng.normal(size=5)
    assert pwcca(x, 3.0 * y + c).score == pytest.approx(pwcca(x, y).score, abs=1e-8)


def test_pwcca_matches_naive_oracle(rng):
    x = rng.normal(size=(50, 6))
    y = rng.normal(size=(50, 4))
    assert pwcca(x, y).score == pytest.approx(pwcca_score_oracle(x, y), abs=1e-8)


def test_pwcca_asymmetric_and_symmetric_mean(rng):
    x = rng.normal(size=(60, 6))
    y = rng.normal(size=(60, 4))
    ab = pwcca(x, y).score
    ba = pwcca(y, x).score
    assert ab != pytest.approx(ba, abs=1e-12)
    sym = IndexSpec(kind="pwcca", pwcca_reference="symmetric_mean")
    assert pwcca(x, y, sym).score == pytest.approx(0.5 * (ab + ba), abs=1e-10)
    assert pwcca(x, y, sym).score == pytest.approx(pwcca(y, x, sym).score, abs=1e-10)


def test_pwcca_weights_normalized(rng):
    r = pwcca(rng.normal(size=(40, 5)), rng.normal(size=(40, 3)))
    assert np.all(r.weights >= 0)
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- cka

def test_cka_identity(rng):
    x = rng.normal(size=(50, 7))
    assert cka(x, x) == pytest.approx(1.0, abs=1e-10)


def test_cka_orthogonal_invariance(rng):
    x = rng.normal(size=(50, 7))
    q = rand_orthogonal(rng, 7)
    c = rng.normal(size=7)
    assert cka(x, x @ q + c) == pytest.approx(1.0, abs=1e-8)


def test_cka_matches_hsic_oracle(rng):
    x = rng.normal(size=(50, 7))
    y = rng.normal(size=(50, 7))
    assert cka(x, y) == pytest.approx(cka_hsic_oracle(x, y), abs=1e-8)


def test_cka_symmetry_and_range(rng):
    x = rng.normal(size=(40, 6))
    y = rng.normal(size=(40, 9))
    v = cka(x, y)
    assert v == pytest.approx(cka(y, x), abs=1e-12)
    assert 0.0 <= v <= 1.0


def test_cka_zero_variance(rng):
    with pytest.raises(ValidationError, match="denominator 0"):
        cka(rng.normal(size=(10, 2)), np.ones((10, 2)))


# ---------------------------------------------------------------- cosine

def test_cosine_parallel_extremes(rng):
    x = rng.normal(size=(20, 4))
    assert cosine_parallel(x, x) == pytest.approx(1.0)
    assert cosine_parallel(x, -x) == pytest.approx(-1.0)


def test_cosine_zero_norm_row(rng):
    x = rng.normal(size=(3, 4))
    y = x.copy()
    y[1] = 0.0
    with pytest.raises(ValidationError, match="zero-norm row 1"):
        cosine_parallel(x, y)


def test_cosine_permuted_near_zero_against_mc_oracle():
    rng = np.random.default_rng(0)
    n, d = 1000, 768
    x = rng.normal(size=(n, d))
    y = rng.normal(size=(n, d))
    observed = cosine_permuted(x, y, seed=42)
    # Monte-Carlo oracle for the std of a mean cosine over n random pairs
    trials = [float(np.einsum("ij,ij->i",
                              x / np.linalg.norm(x, axis=1, keepdims=True),
                              (y / np.linalg.norm(y, axis=1, keepdims=True))[rng.permutation(n)]
                              ).mean()) for _ in range(200)]
    sigma = np.std(trials)
    assert abs(observed) <= 3 * sigma


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**32 - 1))
def test_derangement_has_no_fixed_points(n, seed):
    perm = derangement(n, seed)
    assert sorted(perm) == list(range(n))
    assert not np.any(perm == np.arange(n))


def test_derangement_deterministic():
    assert np.array_equal(derangement(100, 7), derangement(100, 7))
    assert not np.array_equal(derangement(100, 7), derangement(100, 8))


# ---------------------------------------------------------------- spec validation

def test_index_spec_rejects_bad_fields():
    with pytest.raises(ValidationError):
        IndexSpec(kind="bogus")
    with pytest.raises(ValidationError):
        IndexSpec(kind="svcca", svcca_components=0)
    with pytest.raises(ValidationError):
        IndexSpec(kind="cca", rank_tolerance=0.0)
    with pytest.raises(ValidationError):
        IndexSpec(kind="pwcca", pwcca_reference="both")
