"""Per-residual covariances combining geometric, photometric and
perspective-deformation noise sources.

Photometric residuals get one intensity variance per patch offset
(diagonal patch covariance: cross-offset correlations are dropped so the
weighted least-squares stays diagonal).  Feature residuals get a 2x2
pixel covariance.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .deformation import DeformationState, deformation_noise, deformation_state
from .errors import OutOfBounds, SingularCovariance
from .geometry import (
    CameraIntrinsics,
    PixelPoint,
    PoseSE3,
    inverse_depth_jacobian,
    plane_homography,
    reprojection_jacobians,
    warp_pixel,
)
from .surface import SurfacePoint, plane_from_point

VARIANCE_FLOOR = 1e-12
# descriptor footprint radius (pixels) at octave scale 1, used to convert
# patch deformation into an equivalent keypoint-localization covariance
DESCRIPTOR_PATCH_RADIUS = 4.0


@dataclass(frozen=True)
class NoiseParams:
    """Standard deviations of the modeled noise sources."""

    sigma_i: float = 2.0          # intensity noise, gray levels
    sigma_kp: float = 1.0         # keypoint detection noise, px per octave
    sigma_invdepth: float = 0.0   # inverse-depth noise, 1/m
    pose_cov: Optional[np.ndarray] = None  # 6x6 tangent covariance

    def __post_init__(self):
        if min(self.sigma_i, self.sigma_kp, self.sigma_invdepth) < 0:
            raise ValueError("noise stds must be non-negative")
        if self.pose_cov is not None:
            P = np.asarray(self.pose_cov, dtype=float)
            if P.shape != (6, 6) or not np.allclose(P, P.T, atol=1e-12):
                raise ValueError("pose_cov must be symmetric 6x6")
            object.__setattr__(self, "pose_cov", P)


@dataclass(frozen=True)
class PhotometricResidualCov:
    """Per-offset intensity variances, decomposed by source."""

    photometric: np.ndarray   # sensor noise in both images
    geometric: np.ndarray     # depth/pose uncertainty through the gradient
    deformation: np.ndarray   # perspective deformation through the gradient

    @property
    def total(self):
        return self.photometric + self.geometric + self.deformation


@dataclass(frozen=True)
class FeatureResidualCov:
    """2x2 reprojection-residual covariance, decomposed by source."""

    detection: np.ndarray
    geometric: np.ndarray
    deformation: np.ndarray

    @property
    def total(self):
        return self.detection + self.geometric + self.deformation


def geometric_pixel_cov(
    K: CameraIntrinsics, T: PoseSE3, sp: SurfacePoint, noise: NoiseParams
):
    """First-order pixel covariance from inverse-depth and pose noise."""
    p = sp.point(K)
    cov = np.zeros((2, 2))
    if noise.sigma_invdepth > 0:
        J_rho = inverse_depth_jacobian(K, T, sp.host_pixel, sp.inverse_depth)
        cov += noise.sigma_invdepth**2 * (J_rho @ J_rho.T)
    if noise.pose_cov is not None:
        J_pose, _ = reprojection_jacobians(K, T, p)
        cov += J_pose @ noise.pose_cov @ J_pose.T
    return 0.5 * (cov + cov.T)


def photometric_residual_cov(
    K: CameraIntrinsics,
    T: PoseSE3,
    sp: SurfacePoint,
    host_image,
    target_image,
    noise: NoiseParams,
    reading: str = "deterministic",
    deformation_reference: str = "translation",
) -> PhotometricResidualCov:
    """Intensity variance of each patch-offset residual.

    var(o) = 2 sigma_i^2 + g(o)^T Sigma_geo g(o) + deformation term, with
    g(o) the target-image gradient at the warped patch pixel.
    """
    plane = plane_from_point(sp, K)
    ds = deformation_state(K, T, plane, sp.host_pixel, reference=deformation_reference)
    H = plane_homography(K, T, plane)
    sigma_geo = geometric_pixel_cov(K, T, sp, noise)

    offsets = sp.patch.offsets
    n = len(offsets)
    photometric = np.full(n, 2.0 * noise.sigma_i**2)
    geometric = np.zeros(n)
    deformation = np.zeros(n)
    for i, o in enumerate(offsets):
        host_px = PixelPoint(sp.host_pixel.u + o[0], sp.host_pixel.v + o[1])
        if not K.in_bounds(host_px.u, host_px.v, margin=2):
            raise OutOfBounds(f"host patch pixel {host_px} outside margin")
        warped = warp_pixel(H, host_px)
        if not K.in_bounds(warped.u, warped.v, margin=2):
            raise OutOfBounds(f"warped patch pixel {warped} outside margin")
        g = np.asarray(target_image.gradient(warped.u, warped.v), dtype=float)
        geometric[i] = float(g @ sigma_geo @ g)
        deformation[i] = deformation_noise(ds, g, o, reading=reading)
    return PhotometricResidualCov(photometric, geometric, deformation)


def feature_residual_cov(
    K: CameraIntrinsics,
    T: PoseSE3,
    sp: SurfacePoint,
    noise: NoiseParams,
    octave_scale: float = 1.0,
    kappa: float = 1.0,
    patch_radius: float = DESCRIPTOR_PATCH_RADIUS,
    deformation_reference: str = "translation",
) -> FeatureResidualCov:
    """2x2 covariance of a feature reprojection residual.

    Detection noise scales with the octave; deformation of the descriptor
    footprint (disc of radius patch_radius * octave_scale, second moment
    r^2/4 I) maps to a keypoint-localization covariance through the
    non-translational part of the warp differential.
    """
    plane = plane_from_point(sp, K)
    ds = deformation_state(K, T, plane, sp.host_pixel, reference=deformation_reference)
    detection = noise.sigma_kp**2 * octave_scale**2 * np.eye(2)
    geometric = geometric_pixel_cov(K, T, sp, noise)
    r = patch_radius * octave_scale
    patch_moment = (r**2 / 4.0) * np.eye(2)
    D = ds.A - ds.reference
    deformation = kappa * D @ patch_moment @ D.T
    return FeatureResidualCov(
        detection, geometric, 0.5 * (deformation + deformation.T)
    )


def whiten(residual, cov):
    """Whiten a residual by its covariance.

    Scalar case: r / sigma.  2x2 case: L^{-1} r with L the lower Cholesky
    factor of the covariance.
    """
    if np.isscalar(cov) or np.asarray(cov).ndim == 0:
        var = float(cov)
        if var < VARIANCE_FLOOR:
            raise SingularCovariance(f"variance {var} below floor")
        return float(residual) / np.sqrt(var)
    cov = np.asarray(cov, dtype=float)
    eigvals = np.linalg.eigvalsh(cov)
    if eigvals[0] < 1e-12 * max(eigvals[-1], VARIANCE_FLOOR):
        raise SingularCovariance(f"eigenvalues {eigvals}")
    L = np.linalg.cholesky(cov)
    return np.linalg.solve(L, np.asarray(residual, dtype=float))
