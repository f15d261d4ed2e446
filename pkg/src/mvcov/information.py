"""Information matrices, state entropy and point-selection metrics.

The information matrix is accumulated over whitened observations on the
gauge-reduced state.  Point-selection metrics (information gain,
visibility filtering) are evaluated on the keyframe-pose block after
marginalizing the points out with a Schur complement, so that removing a
point removes both its observations and its parameters.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularInformation
from .estimator import (
    BAProblem,
    BAState,
    compute_weights,
    evaluate_blocks,
    layout_of,
)

_GAIN_REGULARIZATION = 1e-9


@dataclass(frozen=True)
class InformationState:
    """Information (inverse-covariance) matrix with its entropy."""

    matrix: np.ndarray
    dimension: int
    entropy: float   # nats; +inf when the matrix is singular
    skipped_observations: int = 0


def entropy_of(matrix) -> float:
    """Differential entropy 0.5 ln((2 pi e)^k / det) of a Gaussian, nats.

    +inf when the matrix is (numerically) singular; singularity is
    decided on the eigenvalue spread rather than the determinant sign so
    that indefinite round-off noise cannot slip through.
    """
    matrix = np.asarray(matrix, dtype=float)
    k = matrix.shape[0]
    if k == 0:
        return 0.0
    eigs = np.linalg.eigvalsh(matrix)
    if eigs[0] <= 0 or eigs[0] <= 1e-12 * eigs[-1]:
        return math.inf
    return 0.5 * (k * math.log(2 * math.pi * math.e) - float(np.log(eigs).sum()))


def entropy(info: InformationState) -> float:
    if math.isinf(info.entropy):
        raise SingularInformation("information matrix is singular")
    return info.entropy


def nats_to_bits(nats: float) -> float:
    return nats / math.log(2.0)


def information_matrix(problem: BAProblem, state: BAState,
                       weights=None) -> InformationState:
    """Gauge-reduced J^T J over all usable observations."""
    if weights is None:
        weights = compute_weights(problem, state)
    blocks, dropped = evaluate_blocks(problem, state, weights)
    skipped = sum(1 for w in weights if w.dropped) + dropped
    layout = layout_of(problem)
    n = layout.n_params
    lam = np.zeros((n, n))
    for blk in blocks:
        parts = []
        cols = layout.pose_cols(blk.view_id)
        if cols is not None:
            parts.append((cols, blk.J_target))
        if blk.J_host is not None:
            hcols = layout.pose_cols(blk.host_view)
            if hcols is not None:
                parts.append((hcols, blk.J_host))
        pcols = layout.point_cols(blk.point_id)
        if pcols is not None:
            parts.append((pcols, blk.J_point))
        for ci, Ji in parts:
            for cj, Jj in parts:
                lam[ci, cj] += Ji.T @ Jj
    lam = 0.5 * (lam + lam.T)
    return InformationState(lam, n, entropy_of(lam), skipped)


def _pose_marginal(problem, state, weights, exclude_points=()):
    """Pose-block information after marginalizing all included points."""
    exclude = set(exclude_points)
    blocks, _ = evaluate_blocks(problem, state, weights)
    layout = layout_of(problem)
    nc = layout.n_pose_params
    U = np.zeros((nc, nc))
    V = {}
    W = {}
    for blk in blocks:
        if blk.point_id in exclude:
            continue
        parts = []
        cols = layout.pose_cols(blk.view_id)
        if cols is not None:
            parts.append((cols, blk.J_target))
        if blk.J_host is not None:
            hcols = layout.pose_cols(blk.host_view)
            if hcols is not None:
                parts.append((hcols, blk.J_host))
        for ci, Ji in parts:
            for cj, Jj in parts:
                U[ci, cj] += Ji.T @ Jj
        pid = blk.point_id
        if layout.point_cols(pid) is not None:
            d = blk.J_point.shape[1]
            V.setdefault(pid, np.zeros((d, d)))
            V[pid] += blk.J_point.T @ blk.J_point
            W.setdefault(pid, np.zeros((nc, d)))
            for ci, Ji in parts:
                W[pid][ci] += Ji.T @ blk.J_point
    for pid, Vj in V.items():
        try:
            U -= W[pid] @ np.linalg.solve(Vj, W[pid].T)
        except np.linalg.LinAlgError:
            U -= W[pid] @ np.linalg.solve(
                Vj + _GAIN_REGULARIZATION * np.eye(len(Vj)), W[pid].T
            )
    return 0.5 * (U + U.T)


def _regularized(matrix):
    """matrix + 1e-9 I, scaled up by the largest eigenvalue when needed.

    The relative scaling keeps the regularization meaningful for
    whitened information matrices whose entries can be many orders of
    magnitude above 1; the gauge-null directions it fills in are shared
    between the compared matrices, so they cancel in gain differences.
    """
    eigs = np.linalg.eigvalsh(matrix)
    scale = max(float(eigs[-1]), 1.0)
    return matrix + _GAIN_REGULARIZATION * scale * np.eye(len(matrix))


def _entropy_regularized(matrix):
    h = entropy_of(matrix)
    if math.isinf(h):
        return entropy_of(_regularized(matrix)), True
    return h, False


def point_information_gain(problem: BAProblem, state: BAState, point_id: int,
                           weights=None) -> float:
    """Pose-entropy reduction contributed by one point's observations.

    gain = entropy(poses without the point) - entropy(poses with it) >= 0.
    Singular reduced matrices are regularized (1e-9 I) for the comparison.
    """
    if not any(o.point_id == point_id for o in problem.observations):
        raise ValueError(f"point {point_id} has no observations")
    if weights is None:
        weights = compute_weights(problem, state)
    with_pt = _pose_marginal(problem, state, weights)
    without = _pose_marginal(problem, state, weights, exclude_points=(point_id,))
    h_with, reg_a = _entropy_regularized(with_pt)
    h_without, reg_b = _entropy_regularized(without)
    if reg_a != reg_b:
        # compare both on the regularized matrices
        h_with = entropy_of(_regularized(with_pt))
        h_without = entropy_of(_regularized(without))
    if math.isinf(h_with) or math.isinf(h_without):
        return 0.0
    return max(h_without - h_with, 0.0)


def visibility_filter(problem: BAProblem, state: BAState, threshold: float,
                      weights=None):
    """Greedy removal of points whose information gain is below threshold.

    Gains are recomputed after each removal batch; ties (and the removal
    order) are fixed by ascending point id.  Returns the sorted list of
    kept point ids.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if weights is None:
        weights = compute_weights(problem, state)
    observed = sorted({o.point_id for o in problem.observations})
    kept = list(observed)
    if math.isinf(threshold):
        return []
    if threshold == 0:
        return kept

    while kept:
        removed_ids = set(observed) - set(kept)
        base = _pose_marginal(problem, state, weights, exclude_points=removed_ids)
        h_base, _ = _entropy_regularized(base)
        to_remove = []
        for pid in kept:
            reduced = _pose_marginal(
                problem, state, weights, exclude_points=removed_ids | {pid}
            )
            h_red, _ = _entropy_regularized(reduced)
            if math.isinf(h_red) or math.isinf(h_base):
                gain = 0.0
            else:
                gain = max(h_red - h_base, 0.0)
            if gain < threshold:
                to_remove.append(pid)
        if not to_remove:
            break
        if len(to_remove) == len(kept):
            # keep the single most informative point from being removed
            # only if it also falls below threshold: remove everything
            kept = []
            break
        kept = [p for p in kept if p not in to_remove]
    return kept
