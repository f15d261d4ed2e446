"""Image sampling: bilinear interpolation and subpixel gradients.

Anything with sample(u, v) and gradient(u, v) works as an image for the
rest of the package; this module provides the raster-backed implementation
(synthlab adds an analytic, texture-backed one).
"""

import numpy as np

from .errors import OutOfBounds


class RasterImage:
    """Grayscale raster with bilinear subpixel access.

    Pixel (0, 0) is the center of the top-left array element.  Samples are
    valid for 0 <= u <= width-1, 0 <= v <= height-1.
    """

    def __init__(self, data):
        self.data = np.asarray(data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError("expected a 2-D grayscale array")

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def sample(self, u, v):
        """Bilinearly interpolated intensity at (u, v); accepts arrays."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if np.any(u < 0) or np.any(u > self.width - 1) or np.any(v < 0) or np.any(
            v > self.height - 1
        ):
            raise OutOfBounds("sample position outside image")
        u0 = np.clip(np.floor(u).astype(int), 0, self.width - 2)
        v0 = np.clip(np.floor(v).astype(int), 0, self.height - 2)
        a = u - u0
        b = v - v0
        d = self.data
        val = (
            (1 - a) * (1 - b) * d[v0, u0]
            + a * (1 - b) * d[v0, u0 + 1]
            + (1 - a) * b * d[v0 + 1, u0]
            + a * b * d[v0 + 1, u0 + 1]
        )
        return val if val.shape else float(val)

    def gradient(self, u, v, step=0.5):
        """Central-difference intensity gradient at subpixel (u, v)."""
        gu = (self.sample(u + step, v) - self.sample(u - step, v)) / (2 * step)
        gv = (self.sample(u, v + step) - self.sample(u, v - step)) / (2 * step)
        return np.stack([np.asarray(gu), np.asarray(gv)], axis=-1)


def rgb_to_gray(rgb):
    """ITU-R 601 luma conversion, rounded to nearest integer level."""
    rgb = np.asarray(rgb, dtype=float)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.rint(gray)
