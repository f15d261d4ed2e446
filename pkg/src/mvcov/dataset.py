"""RGB-D sequence ingestion (TUM-style directory layout).

An association file pairs color and depth images per line:

    rgb_timestamp rgb_path depth_timestamp depth_path

and an optional ground-truth file holds poses as

    timestamp tx ty tz qx qy qz qw

Ground-truth poses are interpolated to frame timestamps (linear in
translation, spherical-linear in rotation).  Depth images are 16-bit
with a configurable scale (default 5000 units per meter); 0 means
invalid.
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from PIL import Image
from scipy.spatial.transform import Rotation, Slerp

from .errors import MalformedLine, MissingFile
from .geometry import PoseSE3
from .images import rgb_to_gray

log = logging.getLogger(__name__)

DEFAULT_DEPTH_SCALE = 5000.0   # depth units per meter
MAX_GROUNDTRUTH_GAP = 0.5      # seconds


@dataclass(frozen=True)
class RgbdFrame:
    """One synchronized color+depth frame.

    intensity is 8-bit grayscale; depth is in meters with 0 = invalid;
    pose (camera-to-world), when present, is interpolated ground truth.
    """

    timestamp: float
    intensity: np.ndarray
    depth: np.ndarray
    pose: Optional[PoseSE3] = None


def _parse_columns(path, expected, comment="#"):
    """Whitespace-separated rows of a text file, with line numbers."""
    rows = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith(comment):
                continue
            parts = stripped.split()
            if len(parts) != expected:
                raise MalformedLine(
                    path, lineno, f"expected {expected} fields, got {len(parts)}"
                )
            rows.append((lineno, parts))
    return rows


def load_trajectory(path) -> tuple:
    """Ground-truth file -> (timestamps, translations, Rotation batch)."""
    if not os.path.isfile(path):
        raise MissingFile(path)
    stamps, trans, quats = [], [], []
    for lineno, parts in _parse_columns(path, 8):
        try:
            values = [float(p) for p in parts]
        except ValueError as e:
            raise MalformedLine(path, lineno, str(e))
        stamps.append(values[0])
        trans.append(values[1:4])
        quats.append(values[4:8])
    if not stamps:
        raise MalformedLine(path, 0, "ground-truth file holds no poses")
    order = np.argsort(stamps)
    return (
        np.asarray(stamps)[order],
        np.asarray(trans)[order],
        Rotation.from_quat(np.asarray(quats)[order]),
    )


def interpolate_pose(stamps, translations, rotations, t):
    """Ground-truth pose at time t, or None when t is outside a 0.5 s window.

    Translation is interpolated linearly, rotation spherical-linearly
    between the two bracketing samples.
    """
    i = int(np.searchsorted(stamps, t))
    lo, hi = max(i - 1, 0), min(i, len(stamps) - 1)
    if abs(stamps[lo] - t) > MAX_GROUNDTRUTH_GAP and abs(
        stamps[hi] - t
    ) > MAX_GROUNDTRUTH_GAP:
        return None
    if lo == hi or stamps[hi] == stamps[lo]:
        j = lo if abs(stamps[lo] - t) <= abs(stamps[hi] - t) else hi
        return PoseSE3(rotations[j].as_matrix(), translations[j])
    if stamps[hi] - stamps[lo] > MAX_GROUNDTRUTH_GAP:
        return None
    alpha = (t - stamps[lo]) / (stamps[hi] - stamps[lo])
    trans = (1 - alpha) * translations[lo] + alpha * translations[hi]
    slerp = Slerp(stamps[lo:hi + 1], rotations[lo:hi + 1])
    return PoseSE3(slerp(t).as_matrix(), trans)


def _load_intensity(path):
    img = np.asarray(Image.open(path))
    if img.ndim == 3:
        return rgb_to_gray(img)
    return img.astype(float)


def _load_depth(path, depth_scale):
    raw = np.asarray(Image.open(path)).astype(float)
    return raw / depth_scale


def load_rgbd_sequence(
    directory,
    association_file="associations.txt",
    groundtruth_file="groundtruth.txt",
    depth_scale=DEFAULT_DEPTH_SCALE,
) -> List[RgbdFrame]:
    """Frames of a TUM-layout sequence, sorted by timestamp.

    Frames whose nearest ground-truth samples are more than 0.5 s away
    are dropped with a warning when ground truth is present.
    """
    assoc_path = os.path.join(directory, association_file)
    if not os.path.isfile(assoc_path):
        raise MissingFile(assoc_path)
    trajectory = None
    gt_path = os.path.join(directory, groundtruth_file)
    if os.path.isfile(gt_path):
        trajectory = load_trajectory(gt_path)

    frames = []
    for lineno, parts in _parse_columns(assoc_path, 4):
        try:
            rgb_ts = float(parts[0])
            float(parts[2])
        except ValueError as e:
            raise MalformedLine(assoc_path, lineno, str(e))
        rgb_path = os.path.join(directory, parts[1])
        depth_path = os.path.join(directory, parts[3])
        for p in (rgb_path, depth_path):
            if not os.path.isfile(p):
                raise MissingFile(p)
        pose = None
        if trajectory is not None:
            pose = interpolate_pose(*trajectory, rgb_ts)
            if pose is None:
                log.warning(
                    "dropping frame at %s: nearest ground truth further "
                    "than %s s", rgb_ts, MAX_GROUNDTRUTH_GAP,
                )
                continue
        frames.append(
            RgbdFrame(
                timestamp=rgb_ts,
                intensity=_load_intensity(rgb_path),
                depth=_load_depth(depth_path, depth_scale),
                pose=pose,
            )
        )
    frames.sort(key=lambda f: f.timestamp)
    return frames
