import numpy as np
import pytest

from mvcov.errors import OutOfBounds
from mvcov.images import RasterImage, rgb_to_gray


def _ramp(h=20, w=30, a=2.0, b=3.0, c=5.0):
    v, u = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float),
                       indexing="ij")
    return a * u + b * v + c


def test_bilinear_exact_on_linear_ramp():
    img = RasterImage(_ramp())
    rng = np.random.default_rng(0)
    u = rng.uniform(0, 29, 50)
    v = rng.uniform(0, 19, 50)
    np.testing.assert_allclose(img.sample(u, v), 2.0 * u + 3.0 * v + 5.0,
                               atol=1e-10)


def test_sample_scalar_and_array_forms():
    img = RasterImage(_ramp())
    assert isinstance(img.sample(3.5, 4.5), float)
    out = img.sample(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    assert out.shape == (2,)


def test_sample_at_integer_pixels_matches_array():
    data = np.random.default_rng(1).uniform(0, 255, (15, 17))
    img = RasterImage(data)
    assert img.sample(5.0, 7.0) == pytest.approx(data[7, 5])
    assert img.width == 17 and img.height == 15


def test_out_of_bounds_raises():
    img = RasterImage(_ramp())
    with pytest.raises(OutOfBounds):
        img.sample(-0.1, 5.0)
    with pytest.raises(OutOfBounds):
        img.sample(5.0, 19.5)


def test_gradient_exact_on_linear_ramp():
    img = RasterImage(_ramp())
    g = img.gradient(10.0, 10.0)
    np.testing.assert_allclose(g, [2.0, 3.0], atol=1e-10)


def test_raster_rejects_non_2d():
    with pytest.raises(ValueError):
        RasterImage(np.zeros((4, 4, 3)))


def test_rgb_to_gray_luma():
    rgb = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=float)
    gray = rgb_to_gray(rgb)
    np.testing.assert_allclose(
        gray[0], np.rint([0.299 * 255, 0.587 * 255, 0.114 * 255])
    )
    white = rgb_to_gray(np.full((2, 2, 3), 255.0))
    np.testing.assert_allclose(white, 255.0)
