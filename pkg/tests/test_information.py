import math

import numpy as np
import pytest

from mvcov.covariance import NoiseParams
from mvcov.errors import SingularInformation
from mvcov.estimator import compute_weights, initial_state
from mvcov.information import (
    InformationState,
    entropy,
    entropy_of,
    information_matrix,
    nats_to_bits,
    point_information_gain,
    visibility_filter,
)
from mvcov.synthlab import make_ba_dataset, rng_stream
from mvcov.geometry import PoseSE3, so3_exp
from mvcov.synthlab import (
    SyntheticScene,
    random_sinusoid_texture,
    slanted_plane,
)


def _problem(intrinsics, seed=0, n_views=3, n_points=12):
    rng = rng_stream(seed, "info-test-texture")
    t1 = random_sinusoid_texture(rng, intrinsics, 2.0)
    planes = [slanted_plane(intrinsics, 2.0, 25.0, t1, azimuth_deg=90.0)]
    trajectory = [
        PoseSE3(so3_exp([0.0, -0.05 * i, 0.0]),
                np.array([0.18 * i, 0.0, 0.02 * i]))
        for i in range(n_views)
    ]
    scene = SyntheticScene(intrinsics, planes, trajectory, seed=seed)
    noise = NoiseParams(sigma_kp=0.5, sigma_invdepth=1e-3)
    problem, _ = make_ba_dataset(scene, noise, seed=seed, mode="feature",
                                 n_points=n_points)
    return problem


def test_entropy_of_identity():
    k = 5
    # unit information = unit covariance: entropy is the Gaussian constant
    assert entropy_of(np.eye(k)) == pytest.approx(
        0.5 * k * math.log(2 * math.pi * math.e)
    )


def test_entropy_of_scaling():
    """Doubling the information of every direction loses k/2 ln 2 nats."""
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    lam = A @ A.T + np.eye(4)
    assert entropy_of(2 * lam) == pytest.approx(
        entropy_of(lam) - 2.0 * math.log(2.0)
    )


def test_entropy_of_singular_is_inf():
    assert entropy_of(np.zeros((3, 3))) == math.inf
    assert entropy_of(np.diag([1.0, 1.0, 0.0])) == math.inf
    # indefinite round-off noise must not slip through
    assert entropy_of(np.diag([1.0, -1e-18, -1e-18])) == math.inf


def test_entropy_of_empty():
    assert entropy_of(np.zeros((0, 0))) == 0.0


def test_entropy_accessor_raises_on_singular():
    info = InformationState(np.zeros((2, 2)), 2, math.inf)
    with pytest.raises(SingularInformation):
        entropy(info)


def test_nats_to_bits():
    assert nats_to_bits(math.log(2.0)) == pytest.approx(1.0)


def test_entropy_non_increasing_under_updates():
    """Adding observations (PSD updates) never increases entropy."""
    rng = np.random.default_rng(1)
    k = 6
    A = rng.standard_normal((k, k))
    lam = A @ A.T + np.eye(k)
    h = entropy_of(lam)
    for _ in range(300):
        J = rng.standard_normal((rng.integers(1, 4), k))
        lam = lam + J.T @ J
        h_new = entropy_of(lam)
        assert h_new <= h + 1e-9
        h = h_new


def test_information_matrix_shape_and_symmetry(intrinsics):
    problem = _problem(intrinsics)
    state = initial_state(problem)
    info = information_matrix(problem, state)
    n = 6 * (problem.n_views - 1) + 3 * problem.n_points
    assert info.matrix.shape == (n, n)
    np.testing.assert_allclose(info.matrix, info.matrix.T, atol=1e-9)
    assert info.skipped_observations == 0
    # monocular feature BA leaves the translation scale unobservable, so
    # the full information matrix is singular and the entropy is infinite
    assert info.entropy == np.inf


def test_information_matrix_equals_jtj(intrinsics):
    from mvcov.estimator import evaluate_residuals

    problem = _problem(intrinsics)
    state = initial_state(problem)
    weights = compute_weights(problem, state)
    info = information_matrix(problem, state, weights)
    _, J, _ = evaluate_residuals(problem, state, weights)
    np.testing.assert_allclose(info.matrix, J.T @ J, atol=1e-8)


def test_point_information_gain_positive(intrinsics):
    problem = _problem(intrinsics)
    state = initial_state(problem)
    weights = compute_weights(problem, state)
    for pid in range(min(problem.n_points, 5)):
        assert point_information_gain(problem, state, pid, weights) >= 0.0


def test_point_information_gain_unknown_point(intrinsics):
    problem = _problem(intrinsics)
    state = initial_state(problem)
    with pytest.raises(ValueError):
        point_information_gain(problem, state, 999)


def test_gain_invariant_to_observation_order(intrinsics):
    problem = _problem(intrinsics)
    state = initial_state(problem)
    weights = compute_weights(problem, state)
    g = point_information_gain(problem, state, 2, weights)

    import copy
    shuffled = copy.copy(problem)
    rng = np.random.default_rng(3)
    order = rng.permutation(len(problem.observations))
    shuffled.observations = [problem.observations[i] for i in order]
    w2 = [weights[i] for i in order]
    g2 = point_information_gain(shuffled, state, 2, w2)
    # summation order changes the floating-point accumulation slightly
    assert g2 == pytest.approx(g, rel=1e-6)


def test_visibility_filter_threshold_edges(intrinsics):
    problem = _problem(intrinsics)
    state = initial_state(problem)
    all_ids = sorted({o.point_id for o in problem.observations})
    assert visibility_filter(problem, state, 0.0) == all_ids
    assert visibility_filter(problem, state, math.inf) == []
    with pytest.raises(ValueError):
        visibility_filter(problem, state, -1.0)


def test_visibility_filter_removes_low_gain_points(intrinsics):
    problem = _problem(intrinsics)
    state = initial_state(problem)
    weights = compute_weights(problem, state)
    gains = {
        pid: point_information_gain(problem, state, pid, weights)
        for pid in range(problem.n_points)
    }
    threshold = float(np.median(list(gains.values())))
    kept = visibility_filter(problem, state, threshold, weights)
    # every kept point clears the threshold at the final kept set
    assert kept == sorted(kept)
    assert 0 < len(kept) <= problem.n_points
    # points far below threshold at the start cannot survive the first batch
    floor = min(gains.values())
    if floor < threshold:
        worst = min(gains, key=gains.get)
        assert worst not in kept


def test_linear_gaussian_posterior_covariance():
    """For a linear-Gaussian model the information matrix inverts to the
    exact posterior covariance."""
    rng = np.random.default_rng(4)
    n, m = 4, 40
    A = rng.standard_normal((m, n))
    sigma = 0.3
    prior_info = np.eye(n)
    lam = prior_info + A.T @ A / sigma**2
    # closed-form Bayes posterior for x ~ N(0, I), y = A x + N(0, sigma^2 I)
    posterior_cov = np.linalg.inv(prior_info + A.T @ A / sigma**2)
    np.testing.assert_allclose(np.linalg.inv(lam), posterior_cov, atol=1e-9)
    assert entropy_of(lam) == pytest.approx(
        0.5 * (n * math.log(2 * math.pi * math.e)
               + float(np.linalg.slogdet(posterior_cov)[1]))
    )
