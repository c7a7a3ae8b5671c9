import numpy as np
import pytest

from rpeclu.consensus import aggregate, as_membership, consensus_objective, dissimilarity, optimal_permutation
from rpeclu.errors import RpecluError
from rpeclu.evaluation import ari
from rpeclu.gmm import HardPartition

from oracles import brute_permutation, exhaustive_consensus, onehot


def test_identity_permutation(rng):
    u = onehot(rng.integers(1, 4, 10), 3)
    np.testing.assert_array_equal(optimal_permutation(u, u), [0, 1, 2])
    assert dissimilarity(u, u) == 0


def test_swapped_columns_recovered():
    u = onehot([1, 1, 2, 3, 2, 3], 3)
    swapped = u[:, [1, 0, 2]]
    perm = optimal_permutation(swapped, u)
    np.testing.assert_array_equal(perm, [1, 0, 2])
    assert dissimilarity(swapped, u) == 0


@pytest.mark.parametrize("seed", range(25))
def test_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    u = onehot(rng.integers(1, 5, 12), 4)
    p = rng.dirichlet(np.ones(4), size=12) if seed % 2 else onehot(rng.integers(1, 5, 12), 4)
    perm, val = brute_permutation(u, p)
    np.testing.assert_array_equal(optimal_permutation(u, p), perm)
    assert dissimilarity(u, p) == pytest.approx(val, abs=1e-12)


def test_lexicographic_tie_break():
    # every permutation is optimal against a uniform candidate
    u = onehot([1, 2, 3], 3)
    np.testing.assert_array_equal(optimal_permutation(u, np.full((3, 3), 1 / 3)), [0, 1, 2])


def test_dissimilarity_hand_example():
    # labels [1,1,2,2] vs [1,2,2,2]: best relabelling leaves one point in disagreement
    u = HardPartition(np.array([1, 1, 2, 2]), 2)
    p = onehot([1, 2, 2, 2], 2)
    assert dissimilarity(u, p) == pytest.approx(0.5)


def test_shape_mismatch():
    with pytest.raises(RpecluError):
        optimal_permutation(onehot([1, 2], 2), onehot([1, 2, 3], 3))
    with pytest.raises(RpecluError):
        aggregate([])


def test_single_partition_is_its_own_consensus():
    u = onehot([2, 1, 1, 2, 2], 2)
    state, final = aggregate([u])
    np.testing.assert_array_equal(state.p_mat, u)
    assert final.labels.tolist() == [2, 1, 1, 2, 2] and state.count == 1


def test_permuted_copies(rng):
    labels = rng.integers(1, 5, 30)
    base = onehot(labels, 4)
    copies = [base[:, rng.permutation(4)] for _ in range(10)]
    state, final = aggregate(copies)
    assert ari(final, labels) == 1.0
    assert state.count == 10


def test_matches_exhaustive_on_tiny_instance():
    members = [onehot(l, 2) for l in ([1, 1, 1, 2, 2, 2], [2, 2, 2, 1, 1, 1], [1, 1, 2, 2, 2, 2])]
    best, best_val = exhaustive_consensus(members, 2)
    state, final = aggregate(members)
    assert ari(final, best) == 1.0
    assert consensus_objective(members, final.membership()) == pytest.approx(best_val, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_label_switching_invariance(seed):
    # noisy copies of one partition, so optimal relabellings are unique
    rng = np.random.default_rng(seed)
    base = np.repeat([1, 2, 3], 8)
    members = []
    for _ in range(5):
        lab = base.copy()
        flip = rng.choice(24, 4, replace=False)
        lab[flip] = rng.integers(1, 4, 4)
        members.append(onehot(lab, 3))
    _, final = aggregate(members)
    relabelled = [u[:, rng.permutation(3)] for u in members]
    _, final2 = aggregate(relabelled)
    assert ari(final, final2) == 1.0


def test_rows_stay_stochastic(rng):
    members = [rng.dirichlet(np.ones(3), size=20) for _ in range(6)]
    state, _ = aggregate(members)
    np.testing.assert_allclose(state.p_mat.sum(axis=1), 1.0, atol=1e-10)


def test_membership_validation():
    with pytest.raises(RpecluError):
        as_membership(np.array([[0.7, 0.7]]))
    with pytest.raises(RpecluError):
        as_membership(np.array([[1.5, -0.5]]))
