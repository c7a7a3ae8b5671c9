"""Greedy sequential consensus of hard (or soft) partitions under label switching."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import RpecluError
from .gmm import HardPartition


@dataclass
class ConsensusState:
    """Running consensus candidate ``p_mat`` after absorbing ``count`` partitions."""

    p_mat: np.ndarray
    count: int
    permutations: list = field(default_factory=list)


def as_membership(u):
    """Coerce a :class:`HardPartition` or an n x G array into a membership matrix."""
    if isinstance(u, HardPartition):
        return u.membership()
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise RpecluError("membership matrix must be 2-d")
    if np.any(u < -1e-12) or np.any(u > 1 + 1e-12):
        raise RpecluError("membership entries must lie in [0, 1]")
    if not np.allclose(u.sum(axis=1), 1.0, rtol=0, atol=1e-10):
        raise RpecluError("membership rows must sum to 1")
    return u


def _check_shapes(u, p_mat):
    if u.shape != p_mat.shape:
        raise RpecluError(f"shape mismatch: {u.shape} vs {p_mat.shape}")


def _assignment_value(gain, fixed):
    # best total gain given columns already pinned by ``fixed`` (dict target -> source)
    g = gain.shape[0]
    rows = [j for j in range(g) if j not in fixed]
    used = set(fixed.values())
    cols = [c for c in range(g) if c not in used]
    value = sum(gain[j, c] for j, c in fixed.items())
    if rows:
        sub = gain[np.ix_(rows, cols)]
        r, c = linear_sum_assignment(sub, maximize=True)
        value += sub[r, c].sum()
    return value


def optimal_permutation(u, p_mat):
    """Column permutation ``perm`` minimising ``mean_i ||u[i, perm] - p_mat[i]||^2``.

    Returned 0-based: column ``j`` of the relabelled matrix is ``u[:, perm[j]]``.
    Among equally good permutations the lexicographically smallest is chosen.
    """
    u = as_membership(u)
    p_mat = np.asarray(p_mat, dtype=float)
    _check_shapes(u, p_mat)
    # ||u[:, perm]||^2 does not depend on perm, so minimising distance maximises the overlap
    gain = p_mat.T @ u
    g = gain.shape[0]
    best = _assignment_value(gain, {})
    tol = 1e-9 * max(1.0, abs(best))
    fixed = {}
    for j in range(g):
        for c in range(g):
            if c in fixed.values():
                continue
            trial = dict(fixed)
            trial[j] = c
            if _assignment_value(gain, trial) >= best - tol:
                fixed = trial
                break
    return np.array([fixed[j] for j in range(g)], dtype=np.int64)


def dissimilarity(u, p_mat):
    """Permutation-minimised mean squared row distance between two membership matrices."""
    u = as_membership(u)
    p_mat = np.asarray(p_mat, dtype=float)
    perm = optimal_permutation(u, p_mat)
    return float(np.sum((u[:, perm] - p_mat) ** 2) / u.shape[0])


def consensus_objective(partitions, p_mat):
    """Mean dissimilarity between ``p_mat`` and each ensemble member."""
    return float(np.mean([dissimilarity(u, p_mat) for u in partitions]))


def hard_labels(p_mat):
    """Row-wise argmax of a consensus matrix, ties to the smallest cluster index."""
    p_mat = np.asarray(p_mat)
    return HardPartition(np.argmax(p_mat, axis=1) + 1, p_mat.shape[1])


def aggregate(partitions):
    """Absorb partitions in order, relabelling each optimally against the running candidate.

    The first partition initialises the candidate; partition b then enters as
    ``P = (b-1)/b * P + 1/b * relabel(U_b)``.

    Returns
    -------
    state : ConsensusState
    final : HardPartition
    """
    partitions = list(partitions)
    if not partitions:
        raise RpecluError("cannot aggregate an empty list of partitions")
    first = as_membership(partitions[0])
    state = ConsensusState(p_mat=first.copy(), count=1, permutations=[np.arange(first.shape[1])])
    for u in partitions[1:]:
        u = as_membership(u)
        _check_shapes(u, state.p_mat)
        perm = optimal_permutation(u, state.p_mat)
        b = state.count + 1
        state.p_mat = (b - 1) / b * state.p_mat + u[:, perm] / b
        state.count = b
        state.permutations.append(perm)
    return state, hard_labels(state.p_mat)
