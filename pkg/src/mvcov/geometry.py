"""Pinhole camera geometry, SE(3) poses and plane-induced warps.

Conventions:
  * pixel (0, 0) is the center of the top-left pixel;
  * SE(3) tangent vectors are ordered (translation, rotation);
  * pose increments are applied left-multiplicatively, T <- exp(xi) * T;
  * planes are {x : normal^T x = d} with signed offset d (|d| > 0).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWarp, NonPositiveDepth

_DEPTH_EPS = 1e-9
_HOMOG_EPS = 1e-9
_SMALL_ANGLE = 1e-8


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def matrix(self):
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @property
    def matrix_inv(self):
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )

    def in_bounds(self, u, v, margin=0.0):
        return (
            margin <= u <= self.width - 1 - margin
            and margin <= v <= self.height - 1 - margin
        )


def so3_hat(w):
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def so3_exp(w):
    """Rodrigues' formula with a second-order Taylor fallback for small angles."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    S = so3_hat(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + S + 0.5 * (S @ S)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * S + b * (S @ S)


def so3_log(R):
    """Rotation vector of R; valid for angles < pi."""
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    theta = np.arccos(cos_theta)
    vee = 0.5 * np.array(
        [R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]
    )
    if theta < _SMALL_ANGLE:
        return vee * (1.0 + theta**2 / 6.0)
    return vee * theta / np.sin(theta)


def _so3_left_jacobian(w):
    theta = np.linalg.norm(w)
    S = so3_hat(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + 0.5 * S + (S @ S) / 6.0
    b = (1.0 - np.cos(theta)) / theta**2
    c = (theta - np.sin(theta)) / theta**3
    return np.eye(3) + b * S + c * (S @ S)


def _so3_left_jacobian_inv(w):
    theta = np.linalg.norm(w)
    S = so3_hat(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) - 0.5 * S + (S @ S) / 12.0
    cot_half = 1.0 / np.tan(0.5 * theta)
    c = (1.0 - 0.5 * theta * cot_half) / theta**2
    return np.eye(3) - 0.5 * S + c * (S @ S)


@dataclass(frozen=True)
class PoseSE3:
    """Rigid-body transform: x_out = rotation @ x_in + translation."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=float)
        )

    @staticmethod
    def identity():
        return PoseSE3()

    @staticmethod
    def exp(xi):
        """Exponential map; xi = (translation-part rho, rotation-part phi)."""
        xi = np.asarray(xi, dtype=float)
        rho, phi = xi[:3], xi[3:]
        R = so3_exp(phi)
        t = _so3_left_jacobian(phi) @ rho
        return PoseSE3(R, t)

    def log(self):
        phi = so3_log(self.rotation)
        rho = _so3_left_jacobian_inv(phi) @ self.translation
        return np.concatenate([rho, phi])

    def compose(self, other):
        return PoseSE3(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other):
        return self.compose(other)

    def inverse(self):
        Rt = self.rotation.T
        return PoseSE3(Rt, -Rt @ self.translation)

    def act(self, p):
        """Apply the transform to one point (3,) or many points (N, 3)."""
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.T + self.translation

    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T


@dataclass(frozen=True)
class PixelPoint:
    u: float
    v: float

    def as_array(self):
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class PlaneParams:
    """Plane {x : normal^T x = d} in the reference camera frame.

    d is a signed offset; the sign convention follows the supplied normal
    (a normal facing the camera gives d < 0 for points in front of it).
    """

    normal: np.ndarray
    d: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("plane normal must be unit length")
        if abs(self.d) < 1e-12:
            raise ValueError("plane through the camera center is not usable")
        object.__setattr__(self, "normal", n)

    def contains(self, p, tol=1e-9):
        return abs(float(self.normal @ np.asarray(p)) - self.d) <= tol


def project(K: CameraIntrinsics, p):
    """Pinhole projection of a camera-frame point."""
    p = np.asarray(p, dtype=float)
    if p[2] <= _DEPTH_EPS:
        raise NonPositiveDepth(f"z = {p[2]}")
    return PixelPoint(
        K.fx * p[0] / p[2] + K.cx,
        K.fy * p[1] / p[2] + K.cy,
    )


def backproject(K: CameraIntrinsics, x: PixelPoint, depth):
    """Camera-frame point at the given depth along the pixel's ray."""
    if depth <= _DEPTH_EPS:
        raise NonPositiveDepth(f"depth = {depth}")
    return np.array(
        [
            (x.u - K.cx) / K.fx * depth,
            (x.v - K.cy) / K.fy * depth,
            depth,
        ]
    )


def bearing(K: CameraIntrinsics, x: PixelPoint):
    """Unit-depth ray direction of a pixel, (bx, by, 1)."""
    return np.array([(x.u - K.cx) / K.fx, (x.v - K.cy) / K.fy, 1.0])


def plane_homography(K: CameraIntrinsics, T: PoseSE3, plane: PlaneParams):
    """Homography warping reference pixels of plane points into the target view.

    For X on the plane, T X = (R + t n^T / d) X, so
    H = K (R + t n^T / d) K^{-1}, scaled so H[2,2] = 1 when that entry is
    safely nonzero; otherwise left unnormalized.
    """
    R, t = T.rotation, T.translation
    H = K.matrix @ (R + np.outer(t, plane.normal) / plane.d) @ K.matrix_inv
    if abs(H[2, 2]) > _HOMOG_EPS:
        H = H / H[2, 2]
    return H


def warp_pixel(H, x: PixelPoint):
    """Apply a homography to one pixel and dehomogenize."""
    h = H @ np.array([x.u, x.v, 1.0])
    if abs(h[2]) < _HOMOG_EPS:
        raise DegenerateWarp(f"dehomogenizing coordinate {h[2]} at {x}")
    return PixelPoint(h[0] / h[2], h[1] / h[2])


def warp_jacobian(H, x: PixelPoint):
    """Differential A = dw/dx of the dehomogenized warp w at x (2x2)."""
    h = H @ np.array([x.u, x.v, 1.0])
    if abs(h[2]) < _HOMOG_EPS:
        raise DegenerateWarp(f"dehomogenizing coordinate {h[2]} at {x}")
    A = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            A[i, j] = (H[i, j] * h[2] - h[i] * H[2, j]) / h[2] ** 2
    return A


def projection_jacobian(K: CameraIntrinsics, p):
    """d(pixel)/d(point) of the pinhole projection, 2x3."""
    x, y, z = p
    if z <= _DEPTH_EPS:
        raise NonPositiveDepth(f"z = {z}")
    return np.array(
        [
            [K.fx / z, 0.0, -K.fx * x / z**2],
            [0.0, K.fy / z, -K.fy * y / z**2],
        ]
    )


def reprojection_jacobians(K: CameraIntrinsics, T: PoseSE3, p):
    """Jacobians of the target pixel of a reference-frame point p.

    The point projects as pi(K, T p).  Returns (J_pose, J_point) where
    J_pose (2x6) is with respect to a left-multiplicative tangent
    perturbation of T in (translation, rotation) order and J_point (2x3)
    is with respect to p.
    """
    q = T.act(p)
    Jpi = projection_jacobian(K, q)
    J_pose = np.hstack([Jpi, -Jpi @ so3_hat(q)])
    J_point = Jpi @ T.rotation
    return J_pose, J_point


def inverse_depth_jacobian(K: CameraIntrinsics, T: PoseSE3, x_host: PixelPoint, inv_depth):
    """d(target pixel)/d(inverse depth) for a point hosted at x_host, 2x1."""
    if inv_depth <= _DEPTH_EPS:
        raise NonPositiveDepth(f"inverse depth = {inv_depth}")
    b = bearing(K, x_host)
    p = b / inv_depth
    q = T.act(p)
    Jpi = projection_jacobian(K, q)
    dp_drho = -b / inv_depth**2
    return (Jpi @ (T.rotation @ dp_drho)).reshape(2, 1)
