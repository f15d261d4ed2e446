"""Synthetic planar scenes and Monte Carlo oracles.

Scenes are collections of textured planes observed by a pinhole camera
along a trajectory.  Textures are evaluated analytically (band-limited
sinusoid sums, or a smooth corner for feature experiments), so images can
be sampled at arbitrary subpixel positions without interpolation error;
rasters for the renderer come from the same functions.

All randomness flows from explicit seeds through named substreams.
"""

import zlib
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .covariance import NoiseParams, feature_residual_cov, photometric_residual_cov
from .errors import MvcovError, OutOfBounds
from .estimator import BAProblem, Observation
from .geometry import (
    CameraIntrinsics,
    PixelPoint,
    PlaneParams,
    PoseSE3,
    bearing,
    plane_homography,
    project,
    so3_exp,
    warp_pixel,
)
from .surface import PatchSpec, SurfacePoint

TEXTURE_AMPLITUDE = 110.0  # peak-to-mean intensity swing, 8-bit scale
TEXTURE_OFFSET = 127.5


def rng_stream(seed, *names):
    """Deterministic named substream of a top-level seed."""
    keys = [int(seed)] + [zlib.crc32(str(n).encode()) for n in names]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(keys)))


@dataclass(frozen=True)
class SinusoidTexture:
    """Band-limited texture: sum of random-phase sinusoids on the plane."""

    amplitudes: np.ndarray   # intensity
    frequencies: np.ndarray  # (n, 2) cycles per meter in plane coords
    phases: np.ndarray

    def value(self, a, b):
        arg = (
            2 * np.pi * (
                np.multiply.outer(a, self.frequencies[:, 0])
                + np.multiply.outer(b, self.frequencies[:, 1])
            )
            + self.phases
        )
        return TEXTURE_OFFSET + np.sin(arg) @ self.amplitudes


@dataclass(frozen=True)
class CornerTexture:
    """Smooth checkerboard-style corner at the plane-coordinate origin."""

    width: float       # transition width, meters
    amplitude: float = 80.0

    def value(self, a, b):
        return TEXTURE_OFFSET + self.amplitude * np.tanh(
            np.asarray(a) / self.width
        ) * np.tanh(np.asarray(b) / self.width)


@dataclass(frozen=True)
class TexturedPlane:
    """World-frame plane with an anchored 2-D texture coordinate frame."""

    plane: PlaneParams
    anchor: np.ndarray          # point on the plane, texture origin
    axes: np.ndarray            # (2, 3) orthonormal in-plane directions
    texture: object

    def __post_init__(self):
        if abs(self.plane.normal @ self.anchor - self.plane.d) > 1e-9:
            raise ValueError("anchor must lie on the plane")


@dataclass(frozen=True)
class SyntheticScene:
    intrinsics: CameraIntrinsics
    planes: List[TexturedPlane]
    trajectory: List[PoseSE3]   # camera-to-world; view 0 is the world frame
    seed: int = 0

    def relative_pose(self, host, target) -> PoseSE3:
        """host-camera -> target-camera transform."""
        return self.trajectory[target].inverse() @ self.trajectory[host]

    def plane_in_view(self, plane_idx, view) -> PlaneParams:
        tp = self.planes[plane_idx]
        T = self.trajectory[view]  # camera-to-world
        n_c = T.rotation.T @ tp.plane.normal
        d_c = tp.plane.d - float(tp.plane.normal @ T.translation)
        return PlaneParams(n_c, d_c)


def random_sinusoid_texture(rng, K, reference_depth, n_waves=8,
                            min_wavelength_px=8.0, max_wavelength_px=24.0):
    """Texture whose wavelengths stay >= min_wavelength_px at the reference depth."""
    wavelengths_px = rng.uniform(min_wavelength_px, max_wavelength_px, n_waves)
    wavelengths_m = wavelengths_px * reference_depth / K.fx
    angles = rng.uniform(0, 2 * np.pi, n_waves)
    freqs = np.stack([np.cos(angles), np.sin(angles)], axis=1) / wavelengths_m[:, None]
    amps = rng.uniform(0.5, 1.0, n_waves)
    amps *= TEXTURE_AMPLITUDE / amps.sum()
    phases = rng.uniform(0, 2 * np.pi, n_waves)
    return SinusoidTexture(amps, freqs, phases)


def slanted_plane(K, depth, slant_deg, texture, azimuth_deg=0.0):
    """Plane at the given depth on the optical axis, tilted by slant_deg.

    The normal faces the camera at the world origin (view 0).
    """
    slant = np.deg2rad(slant_deg)
    az = np.deg2rad(azimuth_deg)
    tilt_axis = np.array([np.sin(az), np.cos(az), 0.0])
    n = so3_exp(slant * tilt_axis) @ np.array([0.0, 0.0, -1.0])
    anchor = np.array([0.0, 0.0, depth])
    d = float(n @ anchor)
    e1 = np.cross(n, np.array([0.0, 1.0, 0.0]))
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.cross(n, np.array([1.0, 0.0, 0.0]))
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return TexturedPlane(PlaneParams(n, d), anchor, np.stack([e1, e2]), texture)


class PlanarSceneImage:
    """Analytic image of a scene from one view: exact subpixel sampling."""

    def __init__(self, scene: SyntheticScene, view: int):
        self.scene = scene
        self.view = view
        T = scene.trajectory[view]
        self._R = T.rotation
        self._c = T.translation
        self._Kinv = scene.intrinsics.matrix_inv
        self.width = scene.intrinsics.width
        self.height = scene.intrinsics.height

    def _intersections(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        dirs_cam = np.stack(
            [np.broadcast_arrays(
                (u - self.scene.intrinsics.cx) / self.scene.intrinsics.fx,
                (v - self.scene.intrinsics.cy) / self.scene.intrinsics.fy,
                np.ones(np.broadcast(u, v).shape),
            )[i] for i in range(3)],
            axis=-1,
        )
        dirs_world = dirs_cam @ self._R.T
        best_s = np.full(dirs_world.shape[:-1], np.inf)
        best_idx = np.full(dirs_world.shape[:-1], -1, dtype=int)
        for i, tp in enumerate(self.scene.planes):
            n, d = tp.plane.normal, tp.plane.d
            denom = dirs_world @ n
            with np.errstate(divide="ignore", invalid="ignore"):
                s = (d - n @ self._c) / denom
            hit = (np.abs(denom) > 1e-12) & (s > 1e-9) & (s < best_s)
            best_s = np.where(hit, s, best_s)
            best_idx = np.where(hit, i, best_idx)
        return dirs_world, best_s, best_idx

    def depth(self, u, v):
        """z-depth of the nearest plane; 0 where no plane is hit."""
        _, s, idx = self._intersections(u, v)
        return np.where(idx >= 0, s, 0.0)

    def sample(self, u, v):
        dirs, s, idx = self._intersections(u, v)
        if np.any(idx < 0):
            raise OutOfBounds("ray misses every scene plane")
        out = np.zeros(dirs.shape[:-1])
        pts = self._c + dirs * s[..., None]
        for i, tp in enumerate(self.scene.planes):
            mask = idx == i
            if not np.any(mask):
                continue
            rel = pts[mask] - tp.anchor
            a = rel @ tp.axes[0]
            b = rel @ tp.axes[1]
            out[mask] = tp.texture.value(a, b)
        return out if out.shape else float(out)

    def gradient(self, u, v, step=1e-3):
        gu = (self.sample(u + step, v) - self.sample(u - step, v)) / (2 * step)
        gv = (self.sample(u, v + step) - self.sample(u, v - step)) / (2 * step)
        return np.stack([np.asarray(gu), np.asarray(gv)], axis=-1)


def render(scene: SyntheticScene, view: int):
    """Rasterize one view: (intensity, depth) arrays; depth 0 = no hit."""
    K = scene.intrinsics
    img = PlanarSceneImage(scene, view)
    u, v = np.meshgrid(np.arange(K.width, dtype=float),
                       np.arange(K.height, dtype=float))
    depth = img.depth(u, v)
    dirs, s, idx = img._intersections(u, v)
    intensity = np.zeros_like(depth)
    pts = img._c + dirs * s[..., None]
    for i, tp in enumerate(scene.planes):
        mask = idx == i
        if not np.any(mask):
            continue
        rel = pts[mask] - tp.anchor
        intensity[mask] = tp.texture.value(rel @ tp.axes[0], rel @ tp.axes[1])
    return intensity, depth


# ---------------------------------------------------------------------------
# batched noise draws


def _batch_so3_exp(W):
    """Rodrigues for a batch of rotation vectors (N, 3) -> (N, 3, 3)."""
    theta = np.linalg.norm(W, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(theta < 1e-8, 1.0 - theta**2 / 6.0, np.sin(theta) / theta)
        b = np.where(theta < 1e-8, 0.5 - theta**2 / 24.0,
                     (1.0 - np.cos(theta)) / theta**2)
    S = np.zeros((len(W), 3, 3))
    S[:, 0, 1], S[:, 0, 2] = -W[:, 2], W[:, 1]
    S[:, 1, 0], S[:, 1, 2] = W[:, 2], -W[:, 0]
    S[:, 2, 0], S[:, 2, 1] = -W[:, 1], W[:, 0]
    SS = S @ S
    return np.eye(3) + a[:, None, None] * S + b[:, None, None] * SS


def _batch_se3_exp(Xi):
    """SE(3) exp for (N, 6) tangents in (translation, rotation) order."""
    rho, phi = Xi[:, :3], Xi[:, 3:]
    R = _batch_so3_exp(phi)
    theta = np.linalg.norm(phi, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(theta < 1e-8, 0.5 - theta**2 / 24.0,
                     (1.0 - np.cos(theta)) / theta**2)
        c = np.where(theta < 1e-8, 1.0 / 6.0 - theta**2 / 120.0,
                     (theta - np.sin(theta)) / theta**3)
    S = np.zeros((len(Xi), 3, 3))
    S[:, 0, 1], S[:, 0, 2] = -phi[:, 2], phi[:, 1]
    S[:, 1, 0], S[:, 1, 2] = phi[:, 2], -phi[:, 0]
    S[:, 2, 0], S[:, 2, 1] = -phi[:, 1], phi[:, 0]
    V = np.eye(3) + b[:, None, None] * S + c[:, None, None] * (S @ S)
    t = np.einsum("nij,nj->ni", V, rho)
    return R, t


def _draw_pose_noise(rng, pose_cov, n):
    if pose_cov is None:
        return np.zeros((n, 3, 3)) + np.eye(3), np.zeros((n, 3))
    L = np.linalg.cholesky(pose_cov + 1e-18 * np.eye(6))
    xi = rng.standard_normal((n, 6)) @ L.T
    return _batch_se3_exp(xi)


@dataclass(frozen=True)
class EmpiricalCov:
    """Empirical moments of Monte Carlo residual draws."""

    n: int
    mean: np.ndarray
    covariance: np.ndarray      # unbiased, about the mean
    second_moment: np.ndarray   # about zero (captures deterministic bias)
    std_error: np.ndarray       # standard error of the second moment

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two samples")


class DegenerateDraws(MvcovError):
    """More than 1% of Monte Carlo draws degenerated; oracle aborted."""


def empirical_pixel_cov(K, T, sp: SurfacePoint, noise: NoiseParams, n=100_000,
                        seed=0) -> EmpiricalCov:
    """Monte Carlo scatter of the target-view projection under geometric noise."""
    rng = rng_stream(seed, "pixel-cov")
    b = bearing(K, sp.host_pixel)
    rhos = sp.inverse_depth + noise.sigma_invdepth * rng.standard_normal(n)
    Rn, tn = _draw_pose_noise(rng, noise.pose_cov, n)
    valid = rhos > 1e-9
    p = b[None, :] / np.where(valid, rhos, 1.0)[:, None]
    q = np.einsum("nij,nj->ni", Rn, p @ T.rotation.T + T.translation) + tn
    valid &= q[:, 2] > 1e-9
    if (~valid).mean() > 0.01:
        raise DegenerateDraws(f"{(~valid).sum()} degenerate draws")
    q = q[valid]
    px = np.stack([K.fx * q[:, 0] / q[:, 2] + K.cx,
                   K.fy * q[:, 1] / q[:, 2] + K.cy], axis=1)
    nominal = project(K, T.act(sp.point(K))).as_array()
    err = px - nominal
    mean = err.mean(axis=0)
    cov = np.cov(err.T)
    m2 = err.T @ err / len(err)
    se = np.sqrt(np.var((err - mean) ** 2, axis=0) / len(err))
    return EmpiricalCov(len(err), mean, cov, m2, se)


def empirical_photometric_cov(scene: SyntheticScene, sp: SurfacePoint,
                              target_view: int, noise: NoiseParams,
                              n=100_000, seed=0) -> EmpiricalCov:
    """Per-offset empirical residual statistics under the full noise model.

    Each draw perturbs the geometry (inverse depth, relative pose) and the
    intensities of both images, then evaluates the patch residual with the
    rigid-translation warp the estimator uses.  Deformation enters as the
    deterministic mismatch between that warp and the true one, so the
    model's per-offset variance is compared against the second moment
    about zero.
    """
    K = scene.intrinsics
    rng = rng_stream(seed, "photometric-cov", target_view)
    T = scene.relative_pose(sp.host_view, target_view)
    host_img = PlanarSceneImage(scene, sp.host_view)
    target_img = PlanarSceneImage(scene, target_view)

    b = bearing(K, sp.host_pixel)
    rhos = sp.inverse_depth + noise.sigma_invdepth * rng.standard_normal(n)
    Rn, tn = _draw_pose_noise(rng, noise.pose_cov, n)
    valid = rhos > 1e-9
    p = b[None, :] / np.where(valid, rhos, 1.0)[:, None]
    q = np.einsum("nij,nj->ni", Rn, p @ T.rotation.T + T.translation) + tn
    valid &= q[:, 2] > 1e-9
    if (~valid).mean() > 0.01:
        raise DegenerateDraws(f"{(~valid).sum()} degenerate draws")
    centers = np.stack([K.fx * q[:, 0] / q[:, 2] + K.cx,
                        K.fy * q[:, 1] / q[:, 2] + K.cy], axis=1)[valid]
    m = len(centers)

    offsets = sp.patch.offsets
    k = len(offsets)
    mean = np.empty(k)
    var = np.empty(k)
    m2 = np.empty(k)
    se = np.empty(k)
    for i, o in enumerate(offsets):
        host_val = host_img.sample(sp.host_pixel.u + o[0], sp.host_pixel.v + o[1])
        target_vals = target_img.sample(centers[:, 0] + o[0], centers[:, 1] + o[1])
        r = (
            target_vals + noise.sigma_i * rng.standard_normal(m)
            - host_val - noise.sigma_i * rng.standard_normal(m)
        )
        mean[i] = r.mean()
        var[i] = r.var(ddof=1)
        m2[i] = float(r @ r) / m
        se[i] = np.sqrt(np.var(r**2) / m)
    return EmpiricalCov(m, mean, var, m2, se)


@dataclass(frozen=True)
class DetectorSpec:
    """Subpixel corner re-detection by SSD template matching."""

    template_radius: int = 5
    search_radius: int = 3


def _quadratic_refine(resp, iy, ix):
    """Per-axis parabola refinement of a response-map minimum."""

    def refine(m, l, r):
        denom = l + r - 2 * m
        if abs(denom) < 1e-300:
            return 0.0
        return 0.5 * (l - r) / denom

    dx = refine(resp[iy, ix], resp[iy, ix - 1], resp[iy, ix + 1])
    dy = refine(resp[iy, ix], resp[iy - 1, ix], resp[iy + 1, ix])
    return dx, dy


def _retextured(scene: SyntheticScene, rng, texture_params):
    """Scene with freshly drawn sinusoid textures on every plane."""
    import dataclasses

    params = dict(texture_params or {})
    depth_ref = params.pop("reference_depth", 2.0)
    planes = [
        dataclasses.replace(
            tp,
            texture=random_sinusoid_texture(
                rng, scene.intrinsics, depth_ref, **params
            ),
        )
        for tp in scene.planes
    ]
    return dataclasses.replace(scene, planes=planes)


def _detect_batch(clean, template, eta, detector):
    """Subpixel SSD re-detections for a batch of noise fields.

    Returns (offsets relative to the grid center, diverged count).
    """
    rt, rs = detector.template_radius, detector.search_radius
    tpl_size = 2 * rt + 1
    n_shift = 2 * rs + 1
    n = len(eta)
    resp = np.empty((n, n_shift, n_shift))
    for sy in range(n_shift):
        for sx in range(n_shift):
            win = slice(sy, sy + tpl_size), slice(sx, sx + tpl_size)
            diff = clean[win] - template
            resp[:, sy, sx] = (
                float((diff**2).sum())
                + 2.0 * np.tensordot(eta[:, win[0], win[1]], diff,
                                     axes=([1, 2], [0, 1]))
                + (eta[:, win[0], win[1]] ** 2).sum(axis=(1, 2))
            )
    detections = []
    diverged = 0
    for i in range(n):
        r = resp[i]
        iy, ix = np.unravel_index(np.argmin(r), r.shape)
        if iy in (0, n_shift - 1) or ix in (0, n_shift - 1):
            diverged += 1
            continue
        dx, dy = _quadratic_refine(r, iy, ix)
        if abs(dx) > 1 or abs(dy) > 1:
            diverged += 1
            continue
        detections.append((i, (ix - rs) + dx, (iy - rs) + dy))
    return detections, diverged


def empirical_feature_cov(scene: SyntheticScene, sp: SurfacePoint,
                          target_view: int, noise: NoiseParams, n=1000,
                          detector: DetectorSpec = DetectorSpec(),
                          seed=0, n_textures=1,
                          texture_params=None) -> EmpiricalCov:
    """Empirical 2x2 scatter of keypoint re-detection in the target view.

    Per draw: intensity noise is added to the target patch, the keypoint
    is re-localized by quadratic refinement of the (negative-SSD) response
    against the noiseless host template, and the localization residual is
    taken against the projection predicted from the (noisy) geometry.

    With n_textures > 1 the plane textures are re-drawn every n/n_textures
    draws while the geometry stays fixed.  Pooling over the texture
    ensemble turns the texture-dependent deformation bias into scatter, so
    the second moment about zero is the statistic the covariance model
    predicts.
    """
    K = scene.intrinsics
    rng = rng_stream(seed, "feature-cov", target_view)
    T = scene.relative_pose(sp.host_view, target_view)

    rt, rs = detector.template_radius, detector.search_radius
    off = np.arange(-rt, rt + 1, dtype=float)
    tu, tv = np.meshgrid(off, off)
    grid_r = rt + rs
    gu, gv = np.meshgrid(np.arange(-grid_r, grid_r + 1, dtype=float),
                         np.arange(-grid_r, grid_r + 1, dtype=float))

    center = project(K, T.act(sp.point(K)))

    # predicted projections under geometric noise
    b = bearing(K, sp.host_pixel)
    rhos = sp.inverse_depth + noise.sigma_invdepth * rng.standard_normal(n)
    Rn, tn = _draw_pose_noise(rng, noise.pose_cov, n)
    p = b[None, :] / rhos[:, None]
    q = np.einsum("nij,nj->ni", Rn, p @ T.rotation.T + T.translation) + tn
    preds = np.stack([K.fx * q[:, 0] / q[:, 2] + K.cx,
                      K.fy * q[:, 1] / q[:, 2] + K.cy], axis=1)

    per_texture = max(n // max(n_textures, 1), 1)
    residuals = []
    diverged = 0
    draw = 0
    while draw < n:
        batch = min(per_texture, n - draw)
        current = scene if n_textures <= 1 else _retextured(scene, rng,
                                                            texture_params)
        host_img = PlanarSceneImage(current, sp.host_view)
        target_img = PlanarSceneImage(current, target_view)
        template = host_img.sample(sp.host_pixel.u + tu, sp.host_pixel.v + tv)
        clean = target_img.sample(center.u + gu, center.v + gv)
        eta = noise.sigma_i * rng.standard_normal((batch,) + clean.shape)
        detections, bad = _detect_batch(clean, template, eta, detector)
        diverged += bad
        for i, du, dv in detections:
            det = np.array([center.u + du, center.v + dv])
            residuals.append(det - preds[draw + i])
        draw += batch
    if diverged > 0.05 * n or len(residuals) < 2:
        raise DegenerateDraws(f"detector diverged on {diverged}/{n} draws")
    err = np.array(residuals)
    mean = err.mean(axis=0)
    cov = np.cov(err.T)
    m2 = err.T @ err / len(err)
    se = np.sqrt(np.var((err - mean) ** 2, axis=0) / len(err))
    return EmpiricalCov(len(err), mean, cov, m2, se)


# ---------------------------------------------------------------------------
# BA dataset generation


@dataclass(frozen=True)
class BAGroundTruth:
    poses: List[PoseSE3]        # world-to-camera
    inv_depths: np.ndarray
    points3d: np.ndarray


def _sample_scene_points(scene, rng, n_points, patch, margin=12):
    """Surface points on scene planes, hosts assigned round-robin."""
    K = scene.intrinsics
    points = []
    n_views = len(scene.trajectory)
    attempts = 0
    while len(points) < n_points and attempts < 50 * n_points:
        attempts += 1
        host = len(points) % n_views
        u = rng.uniform(margin, K.width - 1 - margin)
        v = rng.uniform(margin, K.height - 1 - margin)
        img = PlanarSceneImage(scene, host)
        _, s, idx = img._intersections(u, v)
        if idx < 0 or s <= 0.05:
            continue
        plane_c = scene.plane_in_view(int(idx), host)
        n_c = plane_c.normal
        ray = bearing(K, PixelPoint(u, v))
        if n_c @ ray >= -1e-3:
            n_c = -n_c
        if n_c @ ray >= -0.05:  # grazing, skip
            continue
        points.append(
            SurfacePoint(host, PixelPoint(u, v), 1.0 / float(s), n_c, patch)
        )
    if len(points) < n_points:
        raise MvcovError("could not sample enough scene points")
    return points


def make_ba_dataset(scene: SyntheticScene, noise: NoiseParams, seed: int,
                    mode: str = "photometric", n_points: int = 60,
                    patch: Optional[PatchSpec] = None,
                    noise_scale: float = 1.0):
    """Synthetic BA problem with model-consistent measurement noise.

    Measurements are the noiseless predictions at the ground-truth state
    plus Gaussian noise drawn from the model's own per-residual
    covariance, so model weighting is the exact whitening.  noise_scale
    scales the drawn noise (0 gives noiseless measurements while keeping
    the covariances used for weighting).

    Returns (problem, ground_truth); the problem's poses/points hold the
    ground-truth values, callers perturb them to build an initial guess.
    """
    if patch is None:
        patch = PatchSpec.by_name("spread8" if mode == "photometric" else "center")
    K = scene.intrinsics
    rng = rng_stream(seed, "ba-dataset", mode)
    n_views = len(scene.trajectory)
    poses_cw = [T.inverse() for T in scene.trajectory]
    # anchor the gauge at view 0
    T0 = poses_cw[0]
    poses_cw = [T @ T0.inverse() for T in poses_cw]

    points = _sample_scene_points(scene, rng, n_points, patch)
    images = [PlanarSceneImage(scene, v) for v in range(n_views)]
    octaves = 2.0 ** rng.integers(0, 3, n_points) if mode == "feature" else None

    # a photometric point is anchored in its host view, so one extra
    # sighting suffices; a free 3-D point needs two
    min_obs = 1 if mode == "photometric" else 2
    margin = 6
    kept_points = []
    kept_octaves = []
    observations = []
    for pid, sp in enumerate(points):
        obs_for_point = []
        for t in range(n_views):
            if t == sp.host_view:
                continue
            T = scene.relative_pose(sp.host_view, t)
            try:
                q = T.act(sp.point(K))
                if q[2] <= 0.05:
                    continue
                z = project(K, q)
                if not K.in_bounds(z.u, z.v, margin=margin):
                    continue
                if mode == "photometric":
                    cov = photometric_residual_cov(
                        K, T, sp, images[sp.host_view], images[t], noise
                    )
                    std = np.sqrt(cov.total)
                    data = np.array([
                        images[t].sample(z.u + o[0], z.v + o[1])
                        for o in patch.offsets
                    ])
                    data += noise_scale * std * rng.standard_normal(len(data))
                else:
                    cov = feature_residual_cov(
                        K, T, sp, noise, octave_scale=float(octaves[pid])
                    )
                    L = np.linalg.cholesky(cov.total)
                    data = z.as_array() + noise_scale * (
                        L @ rng.standard_normal(2)
                    )
                obs_for_point.append((t, data))
            except MvcovError:
                continue
        if len(obs_for_point) < min_obs:
            continue
        new_id = len(kept_points)
        kept_points.append(sp)
        if octaves is not None:
            kept_octaves.append(float(octaves[pid]))
        observations.extend(
            Observation(new_id, t, data) for t, data in obs_for_point
        )
    if len(kept_points) < max(4, n_points // 2):
        raise MvcovError("too few well-observed points in the scene")

    problem = BAProblem(
        K=K, mode=mode, poses=list(poses_cw), points=kept_points,
        observations=observations, noise=noise,
        images=images if mode == "photometric" else None,
        octave_scales=np.array(kept_octaves) if octaves is not None else None,
    )
    gt = BAGroundTruth(
        poses=list(poses_cw),
        inv_depths=np.array([sp.inverse_depth for sp in kept_points]),
        points3d=np.array([
            poses_cw[sp.host_view].inverse().act(sp.point(K))
            for sp in kept_points
        ]),
    )
    return problem, gt
