import numpy as np
import pytest
from PIL import Image

from mvcov.dataset import (
    interpolate_pose,
    load_rgbd_sequence,
    load_trajectory,
)
from mvcov.errors import MalformedLine, MissingFile


def _write_png(path, array):
    Image.fromarray(array).save(path)


@pytest.fixture
def sequence_dir(tmp_path):
    """Minimal TUM-style sequence: 3 frames, ground truth, 16-bit depth."""
    (tmp_path / "rgb").mkdir()
    (tmp_path / "depth").mkdir()
    rng = np.random.default_rng(0)
    lines = []
    for i, ts in enumerate((10.0, 10.5, 11.0)):
        rgb = rng.integers(0, 255, (8, 10, 3), dtype=np.uint8)
        depth = np.full((8, 10), 5000 * (i + 1), dtype=np.uint16)  # i+1 meters
        depth[0, 0] = 0  # invalid pixel
        _write_png(tmp_path / "rgb" / f"{ts:.1f}.png", rgb)
        _write_png(tmp_path / "depth" / f"{ts:.1f}.png", depth)
        lines.append(
            f"{ts:.1f} rgb/{ts:.1f}.png {ts:.1f} depth/{ts:.1f}.png"
        )
    (tmp_path / "associations.txt").write_text(
        "# rgb_ts rgb depth_ts depth\n" + "\n".join(lines) + "\n"
    )
    (tmp_path / "groundtruth.txt").write_text(
        "# ts tx ty tz qx qy qz qw\n"
        "9.8 0 0 0 0 0 0 1\n"
        "10.2 0.4 0 0 0 0 0 1\n"
        "10.6 0.8 0 0 0 0 0 1\n"
        "11.0 1.0 0 0 0 0 0 1\n"
        "11.2 1.0 0.4 0 0 0 0 1\n"
    )
    return tmp_path


def test_load_sequence(sequence_dir):
    frames = load_rgbd_sequence(sequence_dir)
    assert len(frames) == 3
    assert [f.timestamp for f in frames] == [10.0, 10.5, 11.0]
    assert frames[0].intensity.shape == (8, 10)
    # 16-bit depth at the default scale of 5000 units per meter
    assert frames[0].depth[4, 4] == pytest.approx(1.0)
    assert frames[2].depth[4, 4] == pytest.approx(3.0)
    assert frames[0].depth[0, 0] == 0.0  # invalid stays 0


def test_depth_scale_override(sequence_dir):
    frames = load_rgbd_sequence(sequence_dir, depth_scale=1000.0)
    assert frames[0].depth[4, 4] == pytest.approx(5.0)


def test_pose_interpolation_midpoint(sequence_dir):
    frames = load_rgbd_sequence(sequence_dir)
    # t=10.0 is the midpoint of (9.8, 10.2): translation (0.2, 0, 0)
    np.testing.assert_allclose(frames[0].pose.translation, [0.2, 0.0, 0.0],
                               atol=1e-12)
    np.testing.assert_allclose(frames[0].pose.rotation, np.eye(3), atol=1e-12)


def test_slerp_rotation_interpolation(tmp_path):
    path = tmp_path / "gt.txt"
    # 90 degree yaw between the two samples (quaternions about z)
    half = np.sin(np.pi / 4)
    path.write_text(
        f"0.0 0 0 0 0 0 0 1\n0.4 0 0 0 0 0 {half} {np.cos(np.pi / 4)}\n"
    )
    stamps, trans, rots = load_trajectory(path)
    pose = interpolate_pose(stamps, trans, rots, 0.2)
    expected = np.array([[np.cos(np.pi / 4), -half, 0.0],
                         [half, np.cos(np.pi / 4), 0.0],
                         [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(pose.rotation, expected, atol=1e-12)


def test_interpolation_refuses_large_gaps(tmp_path):
    path = tmp_path / "gt.txt"
    path.write_text("0.0 0 0 0 0 0 0 1\n10.0 1 0 0 0 0 0 1\n")
    trajectory = load_trajectory(path)
    # far from every sample
    assert interpolate_pose(*trajectory, 5.0) is None
    # near a sample, but the bracketing gap is too wide to interpolate
    assert interpolate_pose(*trajectory, 0.1) is None
    # exactly on a sample
    pose = interpolate_pose(*trajectory, 0.0)
    np.testing.assert_allclose(pose.translation, [0.0, 0.0, 0.0], atol=1e-12)


def test_frames_outside_groundtruth_are_dropped(sequence_dir, caplog):
    gt = sequence_dir / "groundtruth.txt"
    # ground truth covering only the first frame
    gt.write_text("9.9 0 0 0 0 0 0 1\n10.1 0.1 0 0 0 0 0 1\n")
    with caplog.at_level("WARNING"):
        frames = load_rgbd_sequence(sequence_dir)
    # 10.5 is within 0.5 s of the last sample; 11.0 is not
    assert [f.timestamp for f in frames] == [10.0, 10.5]
    assert any("dropping frame" in r.message for r in caplog.records)


def test_sequence_without_groundtruth(sequence_dir):
    (sequence_dir / "groundtruth.txt").unlink()
    frames = load_rgbd_sequence(sequence_dir)
    assert len(frames) == 3
    assert all(f.pose is None for f in frames)


def test_malformed_association_line(sequence_dir):
    assoc = sequence_dir / "associations.txt"
    assoc.write_text(assoc.read_text() + "10.9 rgb/10.5.png depth/10.5.png\n")
    with pytest.raises(MalformedLine) as err:
        load_rgbd_sequence(sequence_dir)
    assert err.value.line_number == 5
    assert "expected 4 fields" in str(err.value)


def test_malformed_groundtruth_line(tmp_path):
    path = tmp_path / "gt.txt"
    path.write_text("0.0 0 0 0 0 0 0 1\nnot-a-number 0 0 0 0 0 0 1\n")
    with pytest.raises(MalformedLine) as err:
        load_trajectory(path)
    assert err.value.line_number == 2


def test_empty_groundtruth(tmp_path):
    path = tmp_path / "gt.txt"
    path.write_text("# only comments\n")
    with pytest.raises(MalformedLine):
        load_trajectory(path)


def test_missing_files(tmp_path, sequence_dir):
    with pytest.raises(MissingFile):
        load_rgbd_sequence(tmp_path / "nowhere")
    with pytest.raises(MissingFile):
        load_trajectory(tmp_path / "absent.txt")
    (sequence_dir / "rgb" / "10.0.png").unlink()
    with pytest.raises(MissingFile):
        load_rgbd_sequence(sequence_dir)
