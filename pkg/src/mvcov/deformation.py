"""Perspective deformation of local image patches between views.

A patch around a pixel x does not translate rigidly into another view of
the same surface: the plane-induced warp stretches, rotates and shears it.
To first order the warp acts on patch offsets through its differential A,
so a patch pixel at offset o lands at center + A o instead of center + o.
The displacement delta(o) = (A - S) o (S the reference transform, identity
by default) projected through the local image gradient becomes an
intensity-noise term for patch-based residuals.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BackFacing, DegenerateWarp
from .geometry import (
    CameraIntrinsics,
    PixelPoint,
    PlaneParams,
    PoseSE3,
    bearing,
    plane_homography,
    warp_jacobian,
    warp_pixel,
)

COND_LIMIT = 100.0


@dataclass(frozen=True)
class DeformationState:
    """First-order warp geometry of a patch at one pixel."""

    A: np.ndarray
    center_warp: PixelPoint
    reference: np.ndarray  # transform deformation is measured against

    def displacement(self, offset):
        """Deformation displacement delta(o) = (A - S) o, pixels."""
        return (self.A - self.reference) @ np.asarray(offset, dtype=float)

    @property
    def condition_number(self):
        s = np.linalg.svd(self.A, compute_uv=False)
        if s[1] <= 0:
            return np.inf
        return s[0] / s[1]

    @property
    def degenerate(self):
        return np.linalg.det(self.A) <= 0 or self.condition_number > COND_LIMIT


def _closest_similarity(A):
    """Nearest scaled rotation to A (polar factor times mean singular value)."""
    U, s, Vt = np.linalg.svd(A)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] *= -1
        R = U @ Vt
    return 0.5 * (s[0] + s[1]) * R


def deformation_state(
    K: CameraIntrinsics,
    T: PoseSE3,
    plane: PlaneParams,
    x: PixelPoint,
    reference: str = "translation",
) -> DeformationState:
    """Warp differential and deformation reference at a patch center.

    reference selects what counts as "no deformation": 'translation'
    (default, S = I) or 'similarity' (S = closest scaled rotation to A,
    leaving only shear/anisotropy as deformation).
    """
    # depth of the plane point along the host ray
    b = bearing(K, x)
    denom = float(plane.normal @ b)
    if abs(denom) < 1e-12:
        raise DegenerateWarp("viewing ray parallel to surface plane")
    depth = plane.d / denom
    if depth <= 1e-9:
        raise DegenerateWarp("plane point behind host camera")
    p_host = depth * b

    # the surface must face both cameras; rays point camera -> surface
    n_facing = plane.normal if plane.normal @ p_host < 0 else -plane.normal
    if n_facing @ p_host >= 0:
        raise BackFacing("surface back-facing in host view")
    p_target = T.act(p_host)
    if p_target[2] <= 1e-9:
        raise DegenerateWarp("plane point behind target camera")
    if (T.rotation @ n_facing) @ p_target >= 0:
        raise BackFacing("surface back-facing in target view")

    H = plane_homography(K, T, plane)
    A = warp_jacobian(H, x)
    center = warp_pixel(H, x)

    if reference == "translation":
        S = np.eye(2)
    elif reference == "similarity":
        S = _closest_similarity(A)
    else:
        raise ValueError(f"unknown deformation reference {reference!r}")
    return DeformationState(A=A, center_warp=center, reference=S)


def deformation_noise(ds: DeformationState, grad_target, offset, reading="deterministic"):
    """Intensity variance induced by patch deformation at one offset.

    'deterministic' treats the displacement as a bias and returns its
    squared projection (g . delta)^2; 'stochastic' treats delta as a
    zero-mean displacement with covariance delta delta^T and returns
    g^T Cov g.  The two coincide for a rank-one displacement covariance;
    both are kept as explicitly selectable readings.
    """
    g = np.asarray(grad_target, dtype=float)
    delta = ds.displacement(offset)
    if reading == "deterministic":
        return float(g @ delta) ** 2
    if reading == "stochastic":
        cov = np.outer(delta, delta)
        return float(g @ cov @ g)
    raise ValueError(f"unknown deformation-noise reading {reading!r}")
