"""Experiment protocols and report generation.

Five experiments are provided: three Monte Carlo validation suites
(geometric, photometric, feature), a weighted-vs-uniform bundle
adjustment benchmark, and an information-metrics study.  Each returns
long-form report rows (experiment, seed, metric, value) plus a pass/fail
verdict against its tolerance.

Protocol constants (scene geometry, noise magnitudes, Monte Carlo
sample counts) are frozen here so that report output is reproducible;
the configuration selects the experiment, seeds, output location and
estimator options.
"""

import concurrent.futures
import copy
import dataclasses
import math
import os
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.stats import binomtest

from .config import ExperimentConfig, resolved_text
from .covariance import (
    NoiseParams,
    feature_residual_cov,
    geometric_pixel_cov,
    photometric_residual_cov,
)
from .errors import MvcovError, TooFewPoses
from .estimator import (
    BAProblem,
    Observation,
    SolverConfig,
    compute_weights,
    initial_state,
    solve,
)
from .geometry import (
    CameraIntrinsics,
    PixelPoint,
    PoseSE3,
    bearing,
    project,
    so3_exp,
)
from .information import point_information_gain, visibility_filter
from .surface import PatchSpec, SurfacePoint
from .synthlab import (
    PlanarSceneImage,
    SyntheticScene,
    empirical_feature_cov,
    empirical_photometric_cov,
    empirical_pixel_cov,
    make_ba_dataset,
    random_sinusoid_texture,
    rng_stream,
    slanted_plane,
)

Row = Tuple[str, int, str, float]


def standard_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(525.0, 525.0, 319.5, 239.5, 640, 480)


# ---------------------------------------------------------------------------
# trajectory error


def ate_rmse(estimated: List[PoseSE3], ground_truth: List[PoseSE3],
             mode: str = "feature") -> float:
    """Absolute trajectory error (RMSE, meters) after closed-form alignment.

    Poses are world-to-camera.  Alignment is rigid; in photometric mode a
    similarity is used instead, absorbing the monocular scale gauge.
    """
    if len(estimated) != len(ground_truth):
        raise ValueError("trajectories must have equal length")
    if len(estimated) < 2:
        raise TooFewPoses(f"{len(estimated)} poses")
    ce = np.array([-T.rotation.T @ T.translation for T in estimated])
    cg = np.array([-T.rotation.T @ T.translation for T in ground_truth])
    mu_e, mu_g = ce.mean(axis=0), cg.mean(axis=0)
    E, G = ce - mu_e, cg - mu_g
    U, S, Vt = np.linalg.svd(E.T @ G)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    R = (U @ D @ Vt).T
    denom = float((E**2).sum())
    if mode == "photometric" and denom > 0:
        s = float((S * np.diag(D)).sum()) / denom
    else:
        s = 1.0
    res = cg - (s * E @ R.T + mu_g)
    return float(np.sqrt((res**2).sum(axis=1).mean()))


# ---------------------------------------------------------------------------
# geometric covariance validation


def validate_geometric(cfg: ExperimentConfig):
    """Analytic vs Monte Carlo pixel covariance on random configurations."""
    K = standard_intrinsics()
    rng = rng_stream(cfg.seed, "validate-geometric")
    rows: List[Row] = []
    worst = 0.0
    n_configs = 10
    i = 0
    attempts = 0
    while i < n_configs and attempts < 20 * n_configs:
        attempts += 1
        depth = rng.uniform(1.5, 3.0)
        u = rng.uniform(80, K.width - 80)
        v = rng.uniform(60, K.height - 60)
        x = PixelPoint(float(u), float(v))
        ray = bearing(K, x)
        axis = rng.standard_normal(3)
        axis -= (axis @ ray) * ray / (ray @ ray)
        axis /= np.linalg.norm(axis)
        slant = rng.uniform(0, np.deg2rad(50))
        normal = so3_exp(slant * axis) @ (-ray / np.linalg.norm(ray))
        sp = SurfacePoint(0, x, 1.0 / depth, normal, PatchSpec.by_name("center"))
        w = rng.standard_normal(3)
        w *= rng.uniform(0, np.deg2rad(8)) / np.linalg.norm(w)
        t = rng.standard_normal(3)
        t *= rng.uniform(0.02, 0.10) * depth / np.linalg.norm(t)
        T = PoseSE3(so3_exp(w), t)
        noise = NoiseParams(
            sigma_i=0.0,
            sigma_invdepth=0.01 / depth,     # 1% relative depth noise
            pose_cov=np.diag([1e-3**2] * 3 + [5e-4**2] * 3),
        )
        try:
            analytic = geometric_pixel_cov(K, T, sp, noise)
            emp = empirical_pixel_cov(K, T, sp, noise, n=100_000,
                                      seed=cfg.seed * 1000 + i)
        except MvcovError:
            continue
        rel = float(
            np.linalg.norm(analytic - emp.second_moment)
            / np.linalg.norm(emp.second_moment)
        )
        rows.append(("validate-geometric", cfg.seed, f"config{i}_rel_frobenius", rel))
        worst = max(worst, rel)
        i += 1
    if i < n_configs:
        raise MvcovError("could not draw enough valid geometric configurations")
    passed = worst <= 0.05
    rows.append(("validate-geometric", cfg.seed, "worst_rel_frobenius", worst))
    summary = [
        f"geometric covariance: {n_configs} random configurations",
        f"worst relative Frobenius error: {worst:.4f} (tolerance 0.05)",
        f"verdict: {'PASS' if passed else 'FAIL'}",
    ]
    return rows, passed, summary


# ---------------------------------------------------------------------------
# photometric covariance validation

PHOTOMETRIC_SLANTS = (0.0, 15.0, 30.0, 45.0)
PHOTOMETRIC_BASELINES = (0.02, 0.05, 0.10)
_PHOTO_DEPTH = 2.0


def _photometric_setting(K, seed, slant_deg, baseline_rel):
    rng = rng_stream(seed, "photometric-grid", slant_deg, baseline_rel)
    texture = random_sinusoid_texture(rng, K, _PHOTO_DEPTH,
                                      min_wavelength_px=30, max_wavelength_px=52)
    plane = slanted_plane(K, _PHOTO_DEPTH, slant_deg, texture)
    b = baseline_rel * _PHOTO_DEPTH
    T_wc1 = PoseSE3(
        so3_exp(np.array([0.0, np.deg2rad(6.0), 0.02])),
        np.array([b, 0.3 * b, -0.6 * b]),
    )
    scene = SyntheticScene(K, [plane], [PoseSE3.identity(), T_wc1], seed=seed)
    host = PlanarSceneImage(scene, 0)
    x = PixelPoint(K.cx, K.cy)
    d0 = float(host.depth(x.u, x.v))
    n_c = scene.plane_in_view(0, 0).normal
    if n_c @ bearing(K, x) > 0:
        n_c = -n_c
    sp = SurfacePoint(0, x, 1.0 / d0, n_c, PatchSpec.by_name("spread8"))
    return scene, sp


def validate_photometric(cfg: ExperimentConfig):
    """Per-offset model variance vs Monte Carlo on a slant/baseline grid."""
    K = standard_intrinsics()
    noise = NoiseParams(sigma_i=1.0, sigma_invdepth=0.0025,
                        pose_cov=np.diag([3e-4**2] * 6))
    rows: List[Row] = []
    worst = 0.0
    for slant in PHOTOMETRIC_SLANTS:
        for brel in PHOTOMETRIC_BASELINES:
            scene, sp = _photometric_setting(K, cfg.seed, slant, brel)
            T = scene.relative_pose(0, 1)
            host = PlanarSceneImage(scene, 0)
            target = PlanarSceneImage(scene, 1)
            model = photometric_residual_cov(
                K, T, sp, host, target, noise,
                reading=cfg.deformation_reading,
                deformation_reference=cfg.deformation_reference,
            )
            emp = empirical_photometric_cov(scene, sp, 1, noise, n=100_000,
                                            seed=cfg.seed)
            tag = f"slant{slant:g}_baseline{brel:g}"
            for j, (mv, ev) in enumerate(zip(model.total, emp.second_moment)):
                rel = float((mv - ev) / ev)
                rows.append(("validate-photometric", cfg.seed,
                             f"{tag}_offset{j}_model_var", float(mv)))
                rows.append(("validate-photometric", cfg.seed,
                             f"{tag}_offset{j}_empirical_var", float(ev)))
                rows.append(("validate-photometric", cfg.seed,
                             f"{tag}_offset{j}_rel_error", rel))
                worst = max(worst, abs(rel))
    # deformation vanishes exactly at identity pose
    scene, sp = _photometric_setting(K, cfg.seed, 0.0, 0.0)
    ident = SyntheticScene(K, scene.planes,
                           [PoseSE3.identity(), PoseSE3.identity()],
                           seed=scene.seed)
    host = PlanarSceneImage(ident, 0)
    model0 = photometric_residual_cov(
        K, ident.relative_pose(0, 1), sp, host, PlanarSceneImage(ident, 1),
        noise,
    )
    def_at_identity = float(np.abs(model0.deformation).max())
    rows.append(("validate-photometric", cfg.seed,
                 "deformation_at_identity", def_at_identity))
    passed = worst <= 0.15 and def_at_identity == 0.0
    summary = [
        f"photometric covariance grid: slants {PHOTOMETRIC_SLANTS}, "
        f"baselines {PHOTOMETRIC_BASELINES} of depth",
        f"worst per-offset relative error: {worst:.4f} (tolerance 0.15)",
        f"deformation at identity pose: {def_at_identity}",
        f"verdict: {'PASS' if passed else 'FAIL'}",
    ]
    return rows, passed, summary


# ---------------------------------------------------------------------------
# feature covariance validation

_FEATURE_TEXTURE = {"reference_depth": 2.0, "min_wavelength_px": 7,
                    "max_wavelength_px": 16}
_FEATURE_SLANT_PAIR = (0.0, 25.0)
_FEATURE_SETTINGS = (
    ("A", np.array([0.0, np.deg2rad(15.0), 0.0]), np.array([0.45, 0.05, -0.15])),
    ("B", np.array([0.0, np.deg2rad(8.0), 0.03]), np.array([0.25, 0.0, -0.2])),
    ("C", np.array([np.deg2rad(-6.0), np.deg2rad(10.0), 0.0]),
     np.array([0.3, -0.1, 0.0])),
)
_FEATURE_N_DRAWS = 1600
_FEATURE_N_TEXTURES = 400


def _feature_scene(K, seed, slant_deg, T_wc1):
    rng = rng_stream(seed, "feature-scene", slant_deg)
    texture = random_sinusoid_texture(rng, K, 2.0, min_wavelength_px=7,
                                     max_wavelength_px=16)
    plane = slanted_plane(K, 2.0, slant_deg, texture)
    scene = SyntheticScene(K, [plane], [PoseSE3.identity(), T_wc1], seed=seed)
    x = PixelPoint(K.cx, K.cy)
    d0 = float(PlanarSceneImage(scene, 0).depth(x.u, x.v))
    n_c = scene.plane_in_view(0, 0).normal
    if n_c @ bearing(K, x) > 0:
        n_c = -n_c
    sp = SurfacePoint(0, x, 1.0 / d0, n_c, PatchSpec.by_name("center"))
    return scene, sp


def calibrate_feature_noise(cfg: ExperimentConfig):
    """(sigma_kp, kappa) calibrated from identity-pose and reference runs.

    sigma_kp is the isotropic re-detection scatter at identity pose;
    kappa scales the deformation term to match the excess scatter of a
    deformed-but-geometry-noise-free reference configuration.
    """
    K = standard_intrinsics()
    noise_id = NoiseParams(sigma_i=2.0)
    scene, sp = _feature_scene(K, cfg.seed, 0.0, PoseSE3.identity())
    emp = empirical_feature_cov(scene, sp, 1, noise_id, n=_FEATURE_N_DRAWS,
                                seed=cfg.seed + 11,
                                n_textures=_FEATURE_N_TEXTURES,
                                texture_params=_FEATURE_TEXTURE)
    sigma_kp = float(np.sqrt(emp.second_moment.trace() / 2.0))

    T_cal = PoseSE3(so3_exp(np.array([0.0, np.deg2rad(12.0), 0.0])),
                    np.array([0.35, 0.0, -0.1]))
    scene, sp = _feature_scene(K, cfg.seed, 0.0, T_cal)
    emp = empirical_feature_cov(scene, sp, 1, noise_id, n=_FEATURE_N_DRAWS,
                                seed=cfg.seed + 12,
                                n_textures=_FEATURE_N_TEXTURES,
                                texture_params=_FEATURE_TEXTURE)
    model = feature_residual_cov(
        K, scene.relative_pose(0, 1), sp,
        NoiseParams(sigma_i=2.0, sigma_kp=sigma_kp), kappa=1.0,
    )
    lam_emp = float(np.linalg.eigvalsh(emp.second_moment)[-1])
    lam_det = float(np.linalg.eigvalsh(model.detection)[-1])
    lam_def = float(np.linalg.eigvalsh(model.deformation)[-1])
    kappa = (lam_emp - lam_det) / lam_def
    return sigma_kp, kappa


def validate_feature(cfg: ExperimentConfig):
    """Model vs empirical keypoint scatter over paired slant configurations."""
    K = standard_intrinsics()
    sigma_kp, kappa = calibrate_feature_noise(cfg)
    noise = NoiseParams(sigma_i=2.0, sigma_kp=sigma_kp, sigma_invdepth=5e-4,
                        pose_cov=np.diag([2e-4**2] * 6))
    rows: List[Row] = [
        ("validate-feature", cfg.seed, "calibrated_sigma_kp", sigma_kp),
        ("validate-feature", cfg.seed, "calibrated_kappa", kappa),
    ]
    worst = 0.0
    orderings_ok = True
    for name, w, t in _FEATURE_SETTINGS:
        T_wc1 = PoseSE3(so3_exp(w), t)
        lam = {}
        for slant in _FEATURE_SLANT_PAIR:
            scene, sp = _feature_scene(K, cfg.seed, slant, T_wc1)
            emp = empirical_feature_cov(scene, sp, 1, noise,
                                        n=_FEATURE_N_DRAWS,
                                        seed=cfg.seed + 13,
                                        n_textures=_FEATURE_N_TEXTURES,
                                        texture_params=_FEATURE_TEXTURE)
            model = feature_residual_cov(K, scene.relative_pose(0, 1), sp,
                                         noise, kappa=kappa)
            le = float(np.linalg.eigvalsh(emp.second_moment)[-1])
            lm = float(np.linalg.eigvalsh(model.total)[-1])
            lam[slant] = (le, lm)
            rel = (lm - le) / le
            worst = max(worst, abs(rel))
            tag = f"setting{name}_slant{slant:g}"
            rows.append(("validate-feature", cfg.seed, f"{tag}_empirical_eig", le))
            rows.append(("validate-feature", cfg.seed, f"{tag}_model_eig", lm))
            rows.append(("validate-feature", cfg.seed, f"{tag}_rel_error", rel))
        lo, hi = _FEATURE_SLANT_PAIR
        agree = (lam[hi][0] > lam[lo][0]) == (lam[hi][1] > lam[lo][1])
        orderings_ok &= agree
        rows.append(("validate-feature", cfg.seed,
                     f"setting{name}_ordering_agree", float(agree)))
    passed = orderings_ok and worst <= 0.30
    summary = [
        f"feature covariance: calibrated sigma_kp={sigma_kp:.4f}, "
        f"kappa={kappa:.4f}",
        f"paired slant configurations: {len(_FEATURE_SETTINGS)}, "
        f"ordering agreement: {orderings_ok}",
        f"worst largest-eigenvalue relative error: {worst:.4f} "
        f"(tolerance 0.30)",
        f"verdict: {'PASS' if passed else 'FAIL'}",
    ]
    return rows, passed, summary


# ---------------------------------------------------------------------------
# bundle adjustment benchmark

_BA_N_VIEWS = 5
_BA_NOISE = {
    "photometric": NoiseParams(sigma_i=1.0, sigma_invdepth=0.02,
                               pose_cov=np.diag([3e-4**2] * 3 + [2e-4**2] * 3)),
    "feature": NoiseParams(sigma_i=2.0, sigma_kp=0.6, sigma_invdepth=0.01,
                           pose_cov=np.diag([1e-3**2] * 3 + [5e-4**2] * 3)),
}
_BA_N_POINTS = {"photometric": 40, "feature": 60}
_BA_POSE_PERTURB = 1e-4
_BA_DEPTH_PERTURB = 1e-3


def benchmark_scene(seed: int) -> SyntheticScene:
    """Two strongly slanted planes observed along a sideways sweep."""
    K = standard_intrinsics()
    rng = rng_stream(seed, "bench-scene")
    tex1 = random_sinusoid_texture(rng, K, 2.0, min_wavelength_px=16,
                                   max_wavelength_px=40)
    tex2 = random_sinusoid_texture(rng, K, 2.6, min_wavelength_px=16,
                                   max_wavelength_px=40)
    p1 = slanted_plane(K, 2.0, 55.0, tex1, azimuth_deg=90.0)
    p2 = slanted_plane(K, 2.6, -50.0, tex2, azimuth_deg=90.0)
    trajectory = [
        PoseSE3(so3_exp(np.array([0.0, -0.03 * i, 0.01 * i])),
                np.array([0.12 * i, 0.02 * i, 0.03 * i]))
        for i in range(_BA_N_VIEWS)
    ]
    return SyntheticScene(K, [p1, p2], trajectory, seed=seed)


def perturbed_problem(problem: BAProblem, gt, seed: int,
                      pose_sigma: float = _BA_POSE_PERTURB,
                      depth_rel: float = _BA_DEPTH_PERTURB) -> BAProblem:
    """Copy of the problem with noise on the initial poses and depths.

    The gauge-anchored parameters (pose 0; in photometric mode also the
    inverse depth of point 0) stay at their generated values.
    """
    rng = rng_stream(seed, "init-perturb")
    poses = [gt.poses[0]] + [
        PoseSE3.exp(pose_sigma * rng.standard_normal(6)) @ T
        for T in gt.poses[1:]
    ]
    points = []
    for i, sp in enumerate(problem.points):
        rho = float(gt.inv_depths[i] * (1 + depth_rel * rng.standard_normal()))
        if problem.mode == "photometric" and i == 0:
            rho = float(gt.inv_depths[0])
        points.append(dataclasses.replace(sp, inverse_depth=rho))
    p = copy.copy(problem)
    p.poses, p.points = poses, points
    return p


def _ba_seed_result(args):
    mode, seed, max_iterations, refresh_every, huber_delta = args
    scene = benchmark_scene(100 + seed)
    noise = _BA_NOISE[mode]
    problem, gt = make_ba_dataset(scene, noise, seed, mode=mode,
                                  n_points=_BA_N_POINTS[mode])
    solver = SolverConfig(max_iterations=max_iterations,
                          refresh_every=refresh_every,
                          huber_delta=huber_delta)
    out = {}
    for weighting in ("model", "uniform"):
        p = perturbed_problem(problem, gt, seed)
        p.weighting = weighting
        report = solve(p, solver)
        out[weighting] = ate_rmse(report.state.poses, gt.poses, mode)
    return mode, seed, out["model"], out["uniform"]


def ba_benchmark(cfg: ExperimentConfig):
    """Model vs uniform weighting over seeded problems in both modes."""
    tasks = [
        (mode, cfg.seed + s, cfg.max_iterations, cfg.refresh_every,
         cfg.huber_delta)
        for mode in ("feature", "photometric")
        for s in range(cfg.n_seeds)
    ]
    if cfg.threads > 1:
        with concurrent.futures.ProcessPoolExecutor(cfg.threads) as pool:
            results = list(pool.map(_ba_seed_result, tasks))
    else:
        results = [_ba_seed_result(t) for t in tasks]

    rows: List[Row] = []
    passed = True
    summary = []
    for mode in ("feature", "photometric"):
        pairs = [(m, u) for md, _, m, u in results if md == mode]
        for (md, seed, m, u) in results:
            if md != mode:
                continue
            rows.append(("ba-benchmark", seed, f"{mode}_model_ate_rmse", m))
            rows.append(("ba-benchmark", seed, f"{mode}_uniform_ate_rmse", u))
        med_m = float(np.median([m for m, _ in pairs]))
        med_u = float(np.median([u for _, u in pairs]))
        wins = sum(m < u for m, u in pairs)
        p_value = float(binomtest(wins, len(pairs), 0.5,
                                  alternative="greater").pvalue)
        mode_pass = med_m < med_u and p_value < 0.05
        passed &= mode_pass
        rows.append(("ba-benchmark", cfg.seed, f"{mode}_median_model", med_m))
        rows.append(("ba-benchmark", cfg.seed, f"{mode}_median_uniform", med_u))
        rows.append(("ba-benchmark", cfg.seed, f"{mode}_wins", float(wins)))
        rows.append(("ba-benchmark", cfg.seed, f"{mode}_sign_test_p", p_value))
        summary.append(
            f"{mode}: median ATE model {med_m:.6f} vs uniform {med_u:.6f}, "
            f"wins {wins}/{len(pairs)}, sign-test p={p_value:.2e} "
            f"-> {'PASS' if mode_pass else 'FAIL'}"
        )
    summary.append(f"verdict: {'PASS' if passed else 'FAIL'}")
    return rows, passed, summary


# ---------------------------------------------------------------------------
# information study


def _info_trajectory():
    return [
        PoseSE3.identity(),
        PoseSE3(so3_exp(np.array([0.0, np.deg2rad(8.0), 0.0])),
                np.array([0.25, 0.02, -0.05])),
        PoseSE3(so3_exp(np.array([np.deg2rad(4.0), np.deg2rad(-6.0), 0.0])),
                np.array([-0.2, 0.05, 0.05])),
        PoseSE3(so3_exp(np.array([np.deg2rad(-3.0), np.deg2rad(3.0), 0.02])),
                np.array([0.1, -0.15, 0.08])),
    ]


def _random_surface_point(rng, K, patch, slant_deg=0.0):
    u = rng.uniform(120, K.width - 120)
    v = rng.uniform(90, K.height - 90)
    x = PixelPoint(float(u), float(v))
    ray = bearing(K, x)
    n = -ray / np.linalg.norm(ray)
    if slant_deg:
        axis = np.cross(n, np.array([0.0, 1.0, 0.0]))
        axis /= np.linalg.norm(axis)
        n = so3_exp(np.deg2rad(slant_deg) * axis) @ n
    depth = rng.uniform(1.6, 2.8)
    return SurfacePoint(0, x, 1.0 / depth, n, patch)


def _info_problem(cfg: ExperimentConfig, slants=(0.0, 65.0), n_base=10):
    """Feature problem with paired same-position points of differing normal."""
    K = standard_intrinsics()
    rng = rng_stream(cfg.seed, "info-study")
    trajectory = _info_trajectory()
    noise = NoiseParams(sigma_i=2.0, sigma_kp=0.3, sigma_invdepth=2e-3,
                        pose_cov=np.diag([2e-4**2] * 6))
    patch = PatchSpec.by_name("center")
    points = [_random_surface_point(rng, K, patch) for _ in range(n_base)]
    # the pair: identical host pixel and depth, only the normal differs
    x0 = PixelPoint(K.cx + 40.0, K.cy - 30.0)
    ray0 = bearing(K, x0)
    base_n = -ray0 / np.linalg.norm(ray0)
    axis = np.cross(base_n, np.array([0.0, 1.0, 0.0]))
    axis /= np.linalg.norm(axis)
    pair_ids = []
    for slant in slants:
        n = so3_exp(np.deg2rad(slant) * axis) @ base_n
        pair_ids.append(len(points))
        points.append(SurfacePoint(0, x0, 0.5, n, patch))

    scene = SyntheticScene(K, [], trajectory)
    observations = []
    for pid, sp in enumerate(points):
        for view in range(1, len(trajectory)):
            T = scene.relative_pose(0, view)
            z = project(K, T.act(sp.point(K)))
            observations.append(Observation(pid, view, z.as_array()))
    poses_cw = [T.inverse() for T in trajectory]
    T0 = poses_cw[0]
    poses_cw = [T @ T0.inverse() for T in poses_cw]
    problem = BAProblem(K=K, mode="feature", poses=poses_cw, points=points,
                        observations=observations, noise=noise,
                        weighting=cfg.weighting)
    return problem, pair_ids


def information_study(cfg: ExperimentConfig):
    """Deformation-aware information gains and visibility filtering."""
    rows: List[Row] = []
    gains = {}
    for weighting in ("model", "uniform"):
        wcfg = dataclasses.replace(cfg, weighting=weighting)
        problem, (low_id, high_id) = _info_problem(wcfg)
        state = initial_state(problem)
        weights = compute_weights(problem, state)
        g_low = point_information_gain(problem, state, low_id, weights)
        g_high = point_information_gain(problem, state, high_id, weights)
        gains[weighting] = (g_low, g_high)
        rows.append(("information-study", cfg.seed,
                     f"{weighting}_gain_low_deformation", g_low))
        rows.append(("information-study", cfg.seed,
                     f"{weighting}_gain_high_deformation", g_high))

    # visibility filtering: half the points grazing, half fronto-parallel
    kept_frac = {}
    for weighting in ("model", "uniform"):
        wcfg = dataclasses.replace(cfg, weighting=weighting)
        problem, _ = _info_problem(wcfg, n_base=0)
        # ring of positionally equivalent points, alternating between
        # near-fronto and grazing (85 deg) surface normals
        K = problem.K
        patch = PatchSpec.by_name("center")
        points = []
        for k in range(12):
            theta = 2 * np.pi * k / 12
            x = PixelPoint(K.cx + 150 * np.cos(theta),
                           K.cy + 110 * np.sin(theta))
            ray = bearing(K, x)
            n = -ray / np.linalg.norm(ray)
            if k % 2 == 1:
                axis = np.cross(n, np.array([0.0, 1.0, 0.0]))
                axis /= np.linalg.norm(axis)
                n = so3_exp(np.deg2rad(85.0) * axis) @ n
            points.append(SurfacePoint(0, x, 0.5, n, patch))
        observations = []
        for pid, sp in enumerate(points):
            for view in range(1, len(problem.poses)):
                T = problem.poses[view] @ problem.poses[0].inverse()
                z = project(K, T.act(sp.point(K)))
                observations.append(Observation(pid, view, z.as_array()))
        filt_problem = BAProblem(K=K, mode="feature", poses=problem.poses,
                                 points=points, observations=observations,
                                 noise=problem.noise, weighting=weighting)
        state = initial_state(filt_problem)
        weights = compute_weights(filt_problem, state)
        # threshold between the grazing-point gain cluster under model
        # weighting (<= 0.64) and every other gain (>= 0.79)
        kept = visibility_filter(filt_problem, state, 0.714, weights)
        low_kept = sum(1 for pid in kept if pid % 2 == 0)
        high_kept = sum(1 for pid in kept if pid % 2 == 1)
        kept_frac[weighting] = (low_kept, high_kept)
        rows.append(("information-study", cfg.seed,
                     f"{weighting}_filter_low_slant_kept", float(low_kept)))
        rows.append(("information-study", cfg.seed,
                     f"{weighting}_filter_high_slant_kept", float(high_kept)))

    model_orders = gains["model"][1] < gains["model"][0]
    uniform_ties = math.isclose(gains["uniform"][0], gains["uniform"][1],
                                rel_tol=1e-9, abs_tol=1e-12)
    model_prefers_low = kept_frac["model"][0] > kept_frac["model"][1]
    uniform_indifferent = kept_frac["uniform"][0] <= kept_frac["uniform"][1]
    passed = model_orders and model_prefers_low and uniform_indifferent
    summary = [
        f"model gains: low-deformation {gains['model'][0]:.4f}, "
        f"high-deformation {gains['model'][1]:.4f} "
        f"(strictly smaller: {model_orders})",
        f"uniform gains equal for identical geometry: {uniform_ties}",
        f"visibility filter kept (low, high) slant points: "
        f"model {kept_frac['model']}, uniform {kept_frac['uniform']}",
        f"verdict: {'PASS' if passed else 'FAIL'}",
    ]
    return rows, passed, summary


# ---------------------------------------------------------------------------
# orchestration


_EXPERIMENTS = {
    "validate-geometric": validate_geometric,
    "validate-photometric": validate_photometric,
    "validate-feature": validate_feature,
    "ba-benchmark": ba_benchmark,
    "information-study": information_study,
}


def format_rows(rows: List[Row]) -> str:
    lines = ["experiment,seed,metric,value"]
    for experiment, seed, metric, value in sorted(rows):
        lines.append(f"{experiment},{seed},{metric},{value!r}")
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run one experiment and write report.csv/config.resolved/summary.txt.

    Returns 0 on success, 2 when the experiment ran but failed its
    tolerance, 1 on error.  Output files are only written after the
    experiment completes, so failures leave no partial artifacts.
    """
    try:
        rows, passed, summary = _EXPERIMENTS[cfg.kind](cfg)
        report = format_rows(rows)
        resolved = resolved_text(cfg)
        summary_text = "\n".join(summary) + "\n"
        os.makedirs(cfg.output_dir, exist_ok=True)
        for name, text in (("report.csv", report),
                           ("config.resolved", resolved),
                           ("summary.txt", summary_text)):
            with open(os.path.join(cfg.output_dir, name), "w") as f:
                f.write(text)
    except Exception as e:
        print(f"error while running {cfg.kind}: {e}")
        return 1
    print("\n".join(summary))
    return 0 if passed else 2


def point_info_text(cfg: ExperimentConfig, point_id: int) -> str:
    """Human-readable covariance/gain diagnostics for one point."""
    problem, _ = _info_problem(cfg)
    if not (0 <= point_id < len(problem.points)):
        raise MvcovError(
            f"point {point_id} out of range (0..{len(problem.points) - 1})"
        )
    state = initial_state(problem)
    weights = compute_weights(problem, state)
    sp = problem.points[point_id]
    lines = [
        f"point {point_id}: host view {sp.host_view}, "
        f"pixel ({sp.host_pixel.u:.1f}, {sp.host_pixel.v:.1f}), "
        f"inverse depth {sp.inverse_depth:.4f}",
    ]
    for obs in problem.observations:
        if obs.point_id != point_id:
            continue
        T = problem.poses[obs.view_id] @ problem.poses[sp.host_view].inverse()
        cov = feature_residual_cov(problem.K, T, sp, problem.noise,
                                   kappa=cfg.kappa)
        eigs = np.linalg.eigvalsh(cov.total)
        lines.append(
            f"  view {obs.view_id}: eig(cov) = [{eigs[0]:.5f}, {eigs[1]:.5f}]"
            f"  det={np.linalg.eigvalsh(cov.detection)[-1]:.5f}"
            f" geo={np.linalg.eigvalsh(cov.geometric)[-1]:.5f}"
            f" def={np.linalg.eigvalsh(cov.deformation)[-1]:.5f}"
        )
    gain = point_information_gain(problem, state, point_id, weights)
    lines.append(f"  information gain ({problem.weighting} weights): "
                 f"{gain:.6f} nats")
    return "\n".join(lines)
