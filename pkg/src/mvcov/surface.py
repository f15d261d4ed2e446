"""Local planar surface model around observed points."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit, InsufficientDepth
from .geometry import CameraIntrinsics, PixelPoint, PlaneParams, backproject, bearing

_PATTERNS = {
    # center plus 7 spread offsets inside a 5x5 footprint, as used by
    # direct odometry systems
    "spread8": (
        (0.0, 0.0),
        (0.0, -2.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-2.0, 0.0),
        (2.0, 0.0),
        (-1.0, 1.0),
        (0.0, 2.0),
    ),
    "dense3x3": tuple(
        (float(du), float(dv)) for dv in (-1, 0, 1) for du in (-1, 0, 1)
    ),
    "center": ((0.0, 0.0),),
}


@dataclass(frozen=True)
class PatchSpec:
    """Set of pixel offsets (relative to the patch center) forming a patch."""

    offsets: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        o = np.atleast_2d(np.asarray(self.offsets, dtype=float))
        if o.shape[1] != 2:
            raise ValueError("offsets must be 2-vectors")
        if len({tuple(row) for row in o}) != len(o):
            raise ValueError("offsets must be distinct")
        if sum(1 for row in o if tuple(row) == (0.0, 0.0)) != 1:
            raise ValueError("offsets must contain (0, 0) exactly once")
        object.__setattr__(self, "offsets", o)

    @staticmethod
    def by_name(name: str):
        if name not in _PATTERNS:
            raise KeyError(f"unknown patch pattern {name!r}")
        return PatchSpec(np.array(_PATTERNS[name]), name=name)

    def __len__(self):
        return len(self.offsets)


@dataclass(frozen=True)
class SurfacePoint:
    """3D point anchored in a host view with a local planar surface."""

    host_view: int
    host_pixel: PixelPoint
    inverse_depth: float
    normal: np.ndarray
    patch: PatchSpec = field(default_factory=lambda: PatchSpec.by_name("spread8"))

    def __post_init__(self):
        if self.inverse_depth <= 0:
            raise ValueError("inverse depth must be positive")
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("normal must be unit length")
        object.__setattr__(self, "normal", n)

    def point(self, K: CameraIntrinsics):
        """Host-frame 3D position."""
        return backproject(K, self.host_pixel, 1.0 / self.inverse_depth)


def plane_from_point(sp: SurfacePoint, K: CameraIntrinsics) -> PlaneParams:
    """Plane through the backprojected point with the point's own normal."""
    p = sp.point(K)
    return PlaneParams(sp.normal, float(sp.normal @ p))


def fit_normal_from_depthmap(depth, x: PixelPoint, K: CameraIntrinsics, window=5):
    """Total-least-squares surface normal from a depth-map window.

    Backprojects every valid pixel in the (window x window) neighborhood of
    x and fits a plane by SVD of the mean-centered points.  Invalid depth
    is encoded as 0.  The returned normal is oriented to face the camera
    (normal . viewing-ray < 0).
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape
    half = window // 2
    uc, vc = int(round(x.u)), int(round(x.v))

    points = []
    total = 0
    for v in range(vc - half, vc + half + 1):
        for u in range(uc - half, uc + half + 1):
            total += 1
            if not (0 <= u < w and 0 <= v < h):
                continue
            z = depth[v, u]
            if z <= 0:
                continue
            points.append(backproject(K, PixelPoint(float(u), float(v)), z))
    if len(points) < 0.5 * total or len(points) < 3:
        raise InsufficientDepth(
            f"{len(points)}/{total} valid depth pixels around ({uc}, {vc})"
        )

    pts = np.array(points)
    centered = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[1] <= 1e-9 * s[0]:
        raise DegenerateFit("window points nearly collinear")
    normal = vt[2]
    if normal @ bearing(K, x) > 0:
        normal = -normal
    return normal
