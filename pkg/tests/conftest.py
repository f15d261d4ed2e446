"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from mvcov.geometry import CameraIntrinsics, PixelPoint, PoseSE3, so3_exp


@pytest.fixture
def intrinsics():
    return CameraIntrinsics(525.0, 525.0, 319.5, 239.5, 640, 480)


def random_rotation(rng, max_angle=np.pi / 4):
    w = rng.standard_normal(3)
    w *= rng.uniform(0, max_angle) / np.linalg.norm(w)
    return so3_exp(w)


def random_pose(rng, max_angle=np.pi / 6, max_trans=0.5):
    return PoseSE3(
        random_rotation(rng, max_angle),
        rng.uniform(-max_trans, max_trans, 3),
    )


def random_pixel(rng, K, margin=40.0):
    return PixelPoint(
        float(rng.uniform(margin, K.width - 1 - margin)),
        float(rng.uniform(margin, K.height - 1 - margin)),
    )


def assert_pose_close(a, b, atol=1e-9):
    np.testing.assert_allclose(a.rotation, b.rotation, atol=atol)
    np.testing.assert_allclose(a.translation, b.translation, atol=atol)
