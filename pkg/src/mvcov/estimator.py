"""Covariance-weighted bundle adjustment (photometric and feature-based).

Levenberg-Marquardt over keyframe poses and point parameters with
per-residual whitening by the covariance model.  Poses are stored
world-to-camera and updated left-multiplicatively; the gauge is fixed by
eliminating pose 0 (and, in photometric mode, one inverse depth) from the
parameter vector.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .covariance import (
    NoiseParams,
    feature_residual_cov,
    photometric_residual_cov,
)
from .errors import (
    BackFacing,
    DegenerateWarp,
    MvcovError,
    NonPositiveDepth,
    OutOfBounds,
    SingularCovariance,
    SingularNormalEquations,
)
from .geometry import (
    CameraIntrinsics,
    PixelPoint,
    PoseSE3,
    bearing,
    project,
    projection_jacobian,
    so3_hat,
)
from .surface import SurfacePoint

_MIN_INV_DEPTH = 1e-6


@dataclass(frozen=True)
class Observation:
    """One sighting of a point in a (non-host) view.

    data holds the measured patch intensities (photometric mode, one per
    patch offset) or the measured keypoint (feature mode, 2-vector).
    """

    point_id: int
    view_id: int
    data: np.ndarray


@dataclass
class BAProblem:
    K: CameraIntrinsics
    mode: str                      # 'photometric' | 'feature'
    poses: List[PoseSE3]           # world-to-camera, initial values; poses[0] = identity
    points: List[SurfacePoint]     # anchors; inverse_depth holds the initial value
    observations: List[Observation]
    noise: NoiseParams = field(default_factory=NoiseParams)
    weighting: str = "model"       # 'model' | 'uniform'
    images: Optional[list] = None  # per-view images, photometric mode
    octave_scales: Optional[np.ndarray] = None  # per point, feature mode

    def __post_init__(self):
        if self.mode not in ("photometric", "feature"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.weighting not in ("model", "uniform"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.mode == "photometric" and self.images is None:
            raise ValueError("photometric mode needs per-view images")
        for obs in self.observations:
            if not (0 <= obs.point_id < len(self.points)):
                raise ValueError("observation references unknown point")
            if not (0 <= obs.view_id < len(self.poses)):
                raise ValueError("observation references unknown view")

    @property
    def n_views(self):
        return len(self.poses)

    @property
    def n_points(self):
        return len(self.points)


@dataclass
class BAState:
    """Optimizable state: poses (world-to-camera) plus point parameters."""

    poses: List[PoseSE3]
    inv_depths: Optional[np.ndarray] = None   # photometric
    points3d: Optional[np.ndarray] = None     # feature, world frame

    def copy(self):
        return BAState(
            poses=list(self.poses),
            inv_depths=None if self.inv_depths is None else self.inv_depths.copy(),
            points3d=None if self.points3d is None else self.points3d.copy(),
        )


def initial_state(problem: BAProblem) -> BAState:
    """State holding the problem's initial pose and point values."""
    poses = list(problem.poses)
    if problem.mode == "photometric":
        return BAState(poses, inv_depths=np.array(
            [sp.inverse_depth for sp in problem.points]
        ))
    pts = np.array([
        point_in_world(problem, i, sp.inverse_depth) for i, sp in enumerate(problem.points)
    ])
    return BAState(poses, points3d=pts)


def point_in_world(problem: BAProblem, point_id: int, inv_depth: float):
    sp = problem.points[point_id]
    b = bearing(problem.K, sp.host_pixel)
    return problem.poses[sp.host_view].inverse().act(b / inv_depth)


@dataclass
class StateLayout:
    """Column layout of the gauge-reduced parameter vector."""

    mode: str
    n_views: int
    n_points: int

    @property
    def point_dim(self):
        return 1 if self.mode == "photometric" else 3

    @property
    def n_pose_params(self):
        return 6 * (self.n_views - 1)

    def n_free_points(self):
        # one inverse depth is gauge-fixed in photometric mode
        return self.n_points - 1 if self.mode == "photometric" else self.n_points

    @property
    def n_params(self):
        return self.n_pose_params + self.point_dim * self.n_free_points()

    def pose_cols(self, view_id):
        if view_id == 0:
            return None
        start = 6 * (view_id - 1)
        return slice(start, start + 6)

    def point_cols(self, point_id):
        d = self.point_dim
        if self.mode == "photometric":
            if point_id == 0:
                return None
            idx = point_id - 1
        else:
            idx = point_id
        start = self.n_pose_params + d * idx
        return slice(start, start + d)


def layout_of(problem: BAProblem) -> StateLayout:
    return StateLayout(problem.mode, problem.n_views, problem.n_points)


def retract(problem: BAProblem, state: BAState, delta) -> BAState:
    """Apply a gauge-reduced increment to the state."""
    layout = layout_of(problem)
    new = state.copy()
    for v in range(1, problem.n_views):
        cols = layout.pose_cols(v)
        new.poses[v] = PoseSE3.exp(delta[cols]) @ state.poses[v]
    if problem.mode == "photometric":
        for j in range(1, problem.n_points):
            cols = layout.point_cols(j)
            new.inv_depths[j] = max(
                state.inv_depths[j] + delta[cols][0], _MIN_INV_DEPTH
            )
    else:
        for j in range(problem.n_points):
            cols = layout.point_cols(j)
            new.points3d[j] = state.points3d[j] + delta[cols]
    return new


# ---------------------------------------------------------------------------
# whitening weights


@dataclass
class ObservationWeight:
    """Whitening transform for one observation (None entries = dropped)."""

    inv_std: Optional[np.ndarray] = None   # photometric, per offset
    chol_inv: Optional[np.ndarray] = None  # feature, 2x2 L^{-1}
    dropped: bool = False


def _uniform_weight(problem, obs):
    if problem.mode == "photometric":
        n = len(problem.points[obs.point_id].patch)
        return ObservationWeight(inv_std=np.ones(n))
    return ObservationWeight(chol_inv=np.eye(2))


def compute_weights(problem: BAProblem, state: BAState):
    """Whitening weights for every observation at the given state."""
    weights = []
    for obs in problem.observations:
        if problem.weighting == "uniform":
            weights.append(_uniform_weight(problem, obs))
            continue
        sp = _surface_point_at(problem, state, obs.point_id)
        T = _relative_pose(problem, state, sp.host_view, obs.view_id)
        try:
            if problem.mode == "photometric":
                cov = photometric_residual_cov(
                    problem.K, T, sp,
                    problem.images[sp.host_view], problem.images[obs.view_id],
                    problem.noise,
                )
                var = np.maximum(cov.total, 1e-12)
                weights.append(ObservationWeight(inv_std=1.0 / np.sqrt(var)))
            else:
                scale = (
                    1.0 if problem.octave_scales is None
                    else float(problem.octave_scales[obs.point_id])
                )
                cov = feature_residual_cov(
                    problem.K, T, sp, problem.noise, octave_scale=scale
                )
                L = np.linalg.cholesky(cov.total)
                weights.append(ObservationWeight(chol_inv=np.linalg.inv(L)))
        except (BackFacing, DegenerateWarp, OutOfBounds, NonPositiveDepth,
                SingularCovariance, np.linalg.LinAlgError):
            weights.append(ObservationWeight(dropped=True))
    return weights


def covariance_refresh_policy(problem, state, iteration, refresh_every=0,
                              previous=None):
    """Frozen-by-default weight schedule.

    refresh_every = 0 freezes the weights computed at iteration 0;
    refresh_every = k recomputes them every k iterations.
    """
    if previous is None or iteration == 0:
        return compute_weights(problem, state)
    if refresh_every > 0 and iteration % refresh_every == 0:
        return compute_weights(problem, state)
    return previous


def _surface_point_at(problem, state, point_id):
    """Surface point carrying the current estimate of its depth."""
    sp = problem.points[point_id]
    if problem.mode == "photometric":
        rho = float(state.inv_depths[point_id])
    else:
        p_host = state.poses[sp.host_view].act(state.points3d[point_id])
        if p_host[2] <= _MIN_INV_DEPTH:
            raise NonPositiveDepth("point moved behind its host camera")
        rho = 1.0 / p_host[2]
    if abs(rho - sp.inverse_depth) < 1e-15:
        return sp
    return replace(sp, inverse_depth=rho)


def _relative_pose(problem, state, host, target):
    return state.poses[target] @ state.poses[host].inverse()


# ---------------------------------------------------------------------------
# residual / Jacobian evaluation


@dataclass
class ResidualBlock:
    """Whitened residual rows of one observation with their Jacobians."""

    obs_index: int
    point_id: int
    view_id: int
    host_view: int
    r: np.ndarray            # (k,)
    J_target: np.ndarray     # (k, 6)
    J_host: Optional[np.ndarray]  # (k, 6), None when host pose is view 0
    J_point: np.ndarray      # (k, d)


def _photometric_block(problem, state, obs, weight):
    sp = problem.points[obs.point_id]
    rho = float(state.inv_depths[obs.point_id])
    if rho <= _MIN_INV_DEPTH:
        raise NonPositiveDepth("inverse depth collapsed")
    h, t = sp.host_view, obs.view_id
    T_h, T_t = state.poses[h], state.poses[t]
    b = bearing(problem.K, sp.host_pixel)
    p_h = b / rho
    X_w = T_h.inverse().act(p_h)
    q = T_t.act(X_w)
    if q[2] <= _MIN_INV_DEPTH:
        raise NonPositiveDepth("point behind target camera")
    center = project(problem.K, q)
    Jpi = projection_jacobian(problem.K, q)
    R_th = T_t.rotation @ T_h.rotation.T

    dq_dxi_t = np.hstack([np.eye(3), -so3_hat(q)])
    dq_dxi_h = -R_th @ np.hstack([np.eye(3), -so3_hat(p_h)])
    dq_drho = R_th @ (-b / rho**2)

    image = problem.images[t]
    offsets = np.asarray(sp.patch.offsets, dtype=float)
    us = center.u + offsets[:, 0]
    vs = center.v + offsets[:, 1]
    m = 2.0
    if not (
        (us >= m).all() and (us <= problem.K.width - 1 - m).all()
        and (vs >= m).all() and (vs <= problem.K.height - 1 - m).all()
    ):
        raise OutOfBounds("patch pixel out of bounds")
    vals = np.asarray(image.sample(us, vs), dtype=float)
    grads = np.asarray(image.gradient(us, vs), dtype=float)  # (k, 2)
    w = weight.inv_std
    r = w * (vals - obs.data)
    gJpi = grads @ Jpi                      # (k, 3)
    J_t = w[:, None] * (gJpi @ dq_dxi_t)
    J_h = w[:, None] * (gJpi @ dq_dxi_h)
    J_p = (w * (gJpi @ dq_drho)).reshape(-1, 1)
    return ResidualBlock(
        obs_index=-1, point_id=obs.point_id, view_id=t, host_view=h,
        r=r, J_target=J_t, J_host=None if h == 0 else J_h, J_point=J_p,
    )


def _feature_block(problem, state, obs, weight):
    sp = problem.points[obs.point_id]
    t = obs.view_id
    T_t = state.poses[t]
    X_w = state.points3d[obs.point_id]
    q = T_t.act(X_w)
    if q[2] <= _MIN_INV_DEPTH:
        raise NonPositiveDepth("point behind target camera")
    z = project(problem.K, q)
    if not problem.K.in_bounds(z.u, z.v, margin=0):
        raise OutOfBounds("projection out of bounds")
    Jpi = projection_jacobian(problem.K, q)
    L = weight.chol_inv
    r = L @ (z.as_array() - obs.data)
    J_t = L @ Jpi @ np.hstack([np.eye(3), -so3_hat(q)])
    J_p = L @ Jpi @ T_t.rotation
    return ResidualBlock(
        obs_index=-1, point_id=obs.point_id, view_id=t, host_view=sp.host_view,
        r=r, J_target=J_t, J_host=None, J_point=J_p,
    )


def evaluate_blocks(problem: BAProblem, state: BAState, weights):
    """Per-observation whitened residual blocks; dropped observations counted."""
    blocks = []
    dropped = 0
    for idx, (obs, w) in enumerate(zip(problem.observations, weights)):
        if w.dropped:
            dropped += 1
            continue
        try:
            if problem.mode == "photometric":
                blk = _photometric_block(problem, state, obs, w)
            else:
                blk = _feature_block(problem, state, obs, w)
        except (OutOfBounds, NonPositiveDepth, DegenerateWarp):
            dropped += 1
            continue
        blk.obs_index = idx
        blocks.append(blk)
    return blocks, dropped


def evaluate_residuals(problem: BAProblem, state: BAState, weights=None):
    """Stacked whitened residual vector and dense Jacobian (gauge-reduced)."""
    if weights is None:
        weights = compute_weights(problem, state)
    blocks, dropped = evaluate_blocks(problem, state, weights)
    layout = layout_of(problem)
    n_rows = sum(len(b.r) for b in blocks)
    r = np.zeros(n_rows)
    J = np.zeros((n_rows, layout.n_params))
    row = 0
    for b in blocks:
        k = len(b.r)
        r[row:row + k] = b.r
        cols = layout.pose_cols(b.view_id)
        if cols is not None:
            J[row:row + k, cols] = b.J_target
        if b.J_host is not None:
            hcols = layout.pose_cols(b.host_view)
            if hcols is not None:
                J[row:row + k, hcols] += b.J_host
        pcols = layout.point_cols(b.point_id)
        if pcols is not None:
            J[row:row + k, pcols] = b.J_point
        row += k
    return r, J, dropped


def cost_of(blocks):
    return 0.5 * sum(float(b.r @ b.r) for b in blocks)


# ---------------------------------------------------------------------------
# normal equations with Schur elimination of the points


def _normal_equations(problem, blocks):
    layout = layout_of(problem)
    nc = layout.n_pose_params
    d = layout.point_dim
    nf = layout.n_free_points()
    U = np.zeros((nc, nc))
    b_c = np.zeros(nc)
    V = np.zeros((nf, d, d))
    b_p = np.zeros((nf, d))
    W = np.zeros((nc, nf * d))

    def free_point_index(point_id):
        if layout.mode == "photometric":
            return None if point_id == 0 else point_id - 1
        return point_id

    for blk in blocks:
        pose_parts = []
        cols = layout.pose_cols(blk.view_id)
        if cols is not None:
            pose_parts.append((cols, blk.J_target))
        if blk.J_host is not None:
            hcols = layout.pose_cols(blk.host_view)
            if hcols is not None:
                pose_parts.append((hcols, blk.J_host))
        for cols_i, J_i in pose_parts:
            b_c[cols_i] -= J_i.T @ blk.r
            for cols_j, J_j in pose_parts:
                U[cols_i, cols_j] += J_i.T @ J_j
        j = free_point_index(blk.point_id)
        if j is not None:
            V[j] += blk.J_point.T @ blk.J_point
            b_p[j] -= blk.J_point.T @ blk.r
            for cols_i, J_i in pose_parts:
                W[cols_i, j * d:(j + 1) * d] += J_i.T @ blk.J_point
    return U, W, V, b_c, b_p


def _damping(M, lam):
    """Marquardt scaling: lam times the diagonal, floored for stability."""
    diag = np.diag(M).copy()
    floor = max(diag.max(), 0.0) * 1e-12 + 1e-12
    return M + lam * np.diag(np.maximum(diag, floor))


def _solve_schur(U, W, V, b_c, b_p, lam):
    nc = U.shape[0]
    nf, d, _ = V.shape
    Ud = _damping(U, lam)
    Vinv = np.empty_like(V)
    for j in range(nf):
        Vinv[j] = np.linalg.inv(_damping(V[j], lam))
    WVinv = np.empty_like(W)
    for j in range(nf):
        cols = slice(j * d, (j + 1) * d)
        WVinv[:, cols] = W[:, cols] @ Vinv[j]
    S = Ud - WVinv @ W.T
    rhs = b_c - WVinv @ b_p.reshape(-1)
    delta_c = np.linalg.solve(S, rhs) if nc else np.zeros(0)
    delta_p = np.empty(nf * d)
    for j in range(nf):
        cols = slice(j * d, (j + 1) * d)
        delta_p[cols] = Vinv[j] @ (b_p[j] - W[:, cols].T @ delta_c)
    return np.concatenate([delta_c, delta_p])


# ---------------------------------------------------------------------------
# Levenberg-Marquardt


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 50
    lambda_init: float = 1e-4
    lambda_accept: float = 0.5
    lambda_reject: float = 4.0
    lambda_max: float = 1e6
    cost_tolerance: float = 1e-8
    step_tolerance: float = 1e-10
    refresh_every: int = 0        # 0 = weights frozen after iteration 0
    huber_delta: Optional[float] = None  # whitened units; None = plain LSQ


@dataclass
class SolveReport:
    iterations: int
    initial_cost: float
    final_cost: float
    cost_trace: List[float]
    converged: bool
    state: BAState
    information: np.ndarray  # gauge-reduced J^T J at the final state
    dropped_observations: int


def _apply_huber(blocks, delta):
    if delta is None:
        return blocks
    for blk in blocks:
        norm = np.linalg.norm(blk.r)
        if norm > delta and norm > 0:
            s = np.sqrt(delta / norm)
            blk.r *= s
            blk.J_target *= s
            if blk.J_host is not None:
                blk.J_host *= s
            blk.J_point *= s
    return blocks


def solve(problem: BAProblem, config: SolverConfig = SolverConfig()) -> SolveReport:
    """Levenberg-Marquardt with Schur elimination of the point parameters."""
    state = initial_state(problem)
    weights = covariance_refresh_policy(problem, state, 0,
                                        config.refresh_every)
    blocks, dropped = evaluate_blocks(problem, state, weights)
    blocks = _apply_huber(blocks, config.huber_delta)
    cost = cost_of(blocks)
    trace = [cost]
    lam = config.lambda_init
    converged = False
    iterations = 0

    for it in range(1, config.max_iterations + 1):
        iterations = it
        new_weights = covariance_refresh_policy(
            problem, state, it, config.refresh_every, previous=weights
        )
        if new_weights is not weights:
            weights = new_weights
            blocks, dropped = evaluate_blocks(problem, state, weights)
            blocks = _apply_huber(blocks, config.huber_delta)
            cost = cost_of(blocks)
        U, W, V, b_c, b_p = _normal_equations(problem, blocks)

        accepted = False
        while lam <= config.lambda_max:
            try:
                delta = _solve_schur(U, W, V, b_c, b_p, lam)
            except np.linalg.LinAlgError:
                lam *= config.lambda_reject
                continue
            trial = retract(problem, state, delta)
            trial_blocks, trial_dropped = evaluate_blocks(problem, trial, weights)
            trial_blocks = _apply_huber(trial_blocks, config.huber_delta)
            trial_cost = cost_of(trial_blocks)
            if np.isfinite(trial_cost) and trial_cost <= cost:
                rel_drop = (cost - trial_cost) / max(cost, 1e-300)
                step_norm = float(np.linalg.norm(delta))
                state, blocks, dropped = trial, trial_blocks, trial_dropped
                cost = trial_cost
                trace.append(cost)
                lam = max(lam * config.lambda_accept, 1e-12)
                accepted = True
                if rel_drop < config.cost_tolerance or step_norm < config.step_tolerance:
                    converged = True
                break
            lam *= config.lambda_reject
        if not accepted:
            try:
                _solve_schur(U, W, V, b_c, b_p, config.lambda_max)
            except np.linalg.LinAlgError:
                raise SingularNormalEquations(
                    f"normal equations singular at lambda >= {config.lambda_max}"
                )
            # no acceptable step at maximum damping: local minimum
            converged = True
        if converged:
            break

    _, J, _ = evaluate_residuals(problem, state, weights)
    info = J.T @ J
    return SolveReport(
        iterations=iterations,
        initial_cost=trace[0],
        final_cost=cost,
        cost_trace=trace,
        converged=converged,
        state=state,
        information=info,
        dropped_observations=dropped,
    )
