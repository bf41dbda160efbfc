import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dimsc.corners import (
    ideal_cone_solution,
    kmeans,
    min_norm_point,
    one_class_svm,
    successive_projection,
    svm_cone,
)
from dimsc.errors import (
    ConeConditionError,
    CornerDeficiencyError,
    DegenerateConeError,
    DimensionError,
    InsufficientPointsError,
)
from dimsc.experiments import make_study_params
from dimsc.linalg import row_normalize, truncated_svd
from dimsc.model import population_matrix, sample_adjacency

from conftest import is_permutation_matrix


def random_cone(seed, K=3, d=3, n=40):
    """Unit rows that are nonnegative combinations of K random corners."""
    rng = np.random.default_rng(seed)
    while True:
        S_C = rng.normal(size=(K, d)) + 2.0
        S_C /= np.linalg.norm(S_C, axis=1, keepdims=True)
        try:
            ideal_cone_solution(S_C)
            break
        except ConeConditionError:
            continue
    Y = rng.dirichlet(np.ones(K), size=n)
    X = row_normalize(Y @ S_C)[0]
    return np.vstack([S_C, X]), S_C


# successive projection

def test_sp_simplex_vertices():
    X = np.array([[1.0, 0, 0], [0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]])
    assert sorted(successive_projection(X, 3)) == [0, 1, 2]


def test_sp_k1_picks_max_norm():
    X = np.array([[0.1, 0.2], [3.0, 0.0], [1.0, 1.0]])
    assert successive_projection(X, 1) == (1,)


def test_sp_ties_go_to_lowest_index():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert successive_projection(X, 1) == (0,)


def test_sp_residual_collapse():
    X = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    with pytest.raises(CornerDeficiencyError) as info:
        successive_projection(X, 2)
    assert info.value.picks == [2]


def test_sp_bad_k():
    with pytest.raises(DimensionError):
        successive_projection(np.eye(3), 4)


def test_sp_on_ideal_v_returns_pure_columns(seed_params, seed_svd):
    picks = successive_projection(seed_svd.V, 3)
    assert is_permutation_matrix(seed_params.Pi_c[list(picks)])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_sp_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    X = rng.dirichlet(np.ones(3), size=12) @ rng.normal(size=(3, 4))
    perm = rng.permutation(12)
    base = set(successive_projection(X, 3))
    moved = set(successive_projection(X[perm], 3))
    assert {int(perm[i]) for i in moved} == base


# one-class SVM

def test_svm_two_axes():
    sol = one_class_svm(np.eye(2))
    np.testing.assert_allclose(sol.w, [2 ** -0.5] * 2, atol=1e-12)
    assert abs(sol.b - 2 ** -0.5) < 1e-12


def test_svm_identical_rows():
    u = np.array([0.6, 0.8])
    sol = one_class_svm(np.tile(u, (5, 1)))
    np.testing.assert_allclose(sol.w, u, atol=1e-12)
    assert abs(sol.b - 1.0) < 1e-12


def test_svm_rejects_non_unit_rows():
    with pytest.raises(DimensionError):
        one_class_svm(np.array([[1.0, 0.0], [0.0, 2.0]]))


def test_svm_degenerate_cone():
    with pytest.raises(DegenerateConeError):
        one_class_svm(np.array([[1.0, 0.0], [-1.0, 0.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_svm_matches_closed_form_and_certificate(seed):
    S, S_C = random_cone(seed)
    sol = one_class_svm(S)
    ref = ideal_cone_solution(S_C)
    np.testing.assert_allclose(sol.w, ref.w, atol=1e-8)
    assert abs(sol.b - ref.b) < 1e-8
    assert (S @ sol.w).min() >= sol.b - 1e-8
    # b*w lies in the hull of the active rows
    active = np.flatnonzero(S @ sol.w <= sol.b + 1e-8)
    lam, *_ = np.linalg.lstsq(np.vstack([S[active].T, np.ones(len(active))]),
                              np.append(sol.b * sol.w, 1.0), rcond=None)
    x = lam @ S[active]
    assert np.linalg.norm(x - sol.b * sol.w) < 1e-8


def test_min_norm_point_simple():
    x, support, weights, gap = min_norm_point(np.array([[1.0, 1.0], [1.0, -1.0], [3.0, 0.0]]))
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
    assert sorted(support) == [0, 1] and gap < 1e-12


def test_closed_form_examples():
    for K in (1, 2, 4):
        sol = ideal_cone_solution(np.eye(K))
        assert abs(sol.b - K ** -0.5) < 1e-15
        np.testing.assert_allclose(sol.w, np.full(K, K ** -0.5))
    u = np.array([[0.6, 0.8]])
    sol = ideal_cone_solution(u)
    np.testing.assert_allclose(sol.w, u[0])
    assert abs(sol.b - 1) < 1e-15


def test_closed_form_condition_violation():
    # middle corner barely leaves the plane of the outer two
    eps = 0.05
    S_C = np.array([[1.0, 0.0, 0.0],
                    [np.cos(eps) / 2 ** 0.5, np.cos(eps) / 2 ** 0.5, np.sin(eps)],
                    [0.0, 1.0, 0.0]])
    with pytest.raises(ConeConditionError) as info:
        ideal_cone_solution(S_C)
    assert info.value.negative == [1]
    with pytest.raises(ConeConditionError):
        ideal_cone_solution(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_seed_instance_corners_on_hyperplane(seed_params, seed_ustar):
    I_r = [int(np.flatnonzero(seed_params.Pi_r[:, k] == 1)[0]) for k in range(3)]
    sol = ideal_cone_solution(seed_ustar[I_r])
    np.testing.assert_allclose(seed_ustar[I_r] @ sol.w, sol.b, atol=1e-10)


# k-means

def test_kmeans_each_point_own_cluster():
    X = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    labels, centers = kmeans(X, 3)
    assert len(set(labels.tolist())) == 3
    np.testing.assert_allclose(centers[labels], X)


def test_kmeans_two_pairs():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    labels, centers = kmeans(X, 2)
    assert labels[0] == labels[1] != labels[2] == labels[3]
    cost = np.sum((X - centers[labels]) ** 2)
    assert abs(cost - 4 * 0.25) < 1e-12


def test_kmeans_duplicates_coclustered_matches_exhaustive(seed_ustar, seed_params):
    I_r = [int(np.flatnonzero(seed_params.Pi_r[:, k] == 1)[0]) for k in range(3)]
    X = np.repeat(seed_ustar[I_r], [2, 3, 2], axis=0)
    labels, centers = kmeans(X, 3)
    best = min(
        (np.sum((X - np.array([X[np.array(a) == k].mean(0) for k in range(3)])[list(a)]) ** 2), a)
        for a in itertools.product(range(3), repeat=len(X)) if len(set(a)) == 3)
    assert np.isclose(np.sum((X - centers[labels]) ** 2), best[0], atol=1e-12)
    assert len({labels[0], labels[1]}) == 1 and len(set(labels[2:5])) == 1 and len(set(labels[5:])) == 1


def test_kmeans_too_few_points():
    with pytest.raises(InsufficientPointsError):
        kmeans(np.zeros((2, 2)), 3)


# cone hunting

def test_svm_cone_repeated_directions():
    S = np.repeat(np.eye(3), [3, 2, 4], axis=0)
    picks = svm_cone(S, 3)
    assert sorted({int(np.argmax(S[i])) for i in picks}) == [0, 1, 2]


def test_svm_cone_on_ideal_seed_instance(seed_params, seed_ustar):
    picks = svm_cone(seed_ustar, 3)
    assert picks == tuple(sorted(picks))
    assert is_permutation_matrix(seed_params.Pi_r[list(picks)])


def test_ideal_margins_zero_on_pure_positive_on_mixed(seed_params, seed_ustar):
    sol = one_class_svm(seed_ustar)
    m = seed_ustar @ sol.w - sol.b
    pure = seed_params.Pi_r.max(axis=1) >= 1 - 1e-12
    assert m.min() >= -1e-8
    assert np.abs(m[pure]).max() <= 1e-8
    assert m[~pure].min() > 1e-6


def test_svm_cone_sampled_picks_are_pure():
    p = make_study_params("sparsity", 1.0)
    Omega = population_matrix(p)
    pure = p.Pi_r.max(axis=1) >= 1 - 1e-12
    hits = 0
    for seed in range(50):
        U = truncated_svd(sample_adjacency(Omega, seed), 3).U
        picks = svm_cone(row_normalize(U)[0], 3, seed=seed)
        hits += bool(pure[list(picks)].all())
    assert hits >= 45
