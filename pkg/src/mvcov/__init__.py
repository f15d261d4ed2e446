"""Multi-view visual residual covariances and weighted bundle adjustment.

Submodules:
  geometry     pinhole camera, SE(3) poses, plane-induced homographies
  surface      surface points, patches, plane/normal recovery
  deformation  perspective-deformation state and noise
  covariance   per-residual covariance models and whitening
  estimator    covariance-weighted bundle adjustment (LM + Schur)
  information  information matrices, entropy, point-selection metrics
  synthlab     synthetic scenes and Monte Carlo oracles
  images       raster image sampling
  dataset      RGB-D sequence ingestion
  config       experiment configuration
  experiments  experiment protocols and reporting
"""

from .covariance import (
    FeatureResidualCov,
    NoiseParams,
    PhotometricResidualCov,
    feature_residual_cov,
    geometric_pixel_cov,
    photometric_residual_cov,
    whiten,
)
from .deformation import DeformationState, deformation_noise, deformation_state
from .errors import MvcovError
from .estimator import (
    BAProblem,
    BAState,
    Observation,
    SolveReport,
    SolverConfig,
    solve,
)
from .geometry import (
    CameraIntrinsics,
    PixelPoint,
    PlaneParams,
    PoseSE3,
    plane_homography,
    warp_jacobian,
    warp_pixel,
)
from .information import (
    InformationState,
    entropy,
    entropy_of,
    information_matrix,
    point_information_gain,
    visibility_filter,
)
from .surface import PatchSpec, SurfacePoint
from .synthlab import SyntheticScene, make_ba_dataset, render, rng_stream

__all__ = [
    "BAProblem",
    "BAState",
    "CameraIntrinsics",
    "DeformationState",
    "FeatureResidualCov",
    "InformationState",
    "MvcovError",
    "NoiseParams",
    "Observation",
    "PatchSpec",
    "PhotometricResidualCov",
    "PixelPoint",
    "PlaneParams",
    "PoseSE3",
    "SolveReport",
    "SolverConfig",
    "SurfacePoint",
    "SyntheticScene",
    "deformation_noise",
    "deformation_state",
    "entropy",
    "entropy_of",
    "feature_residual_cov",
    "geometric_pixel_cov",
    "information_matrix",
    "make_ba_dataset",
    "photometric_residual_cov",
    "plane_homography",
    "point_information_gain",
    "render",
    "rng_stream",
    "solve",
    "visibility_filter",
    "warp_jacobian",
    "warp_pixel",
    "whiten",
]
