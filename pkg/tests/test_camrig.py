import math

import numpy as np
import pytest

from realscale.camrig import (
    ViewPose,
    export_rig,
    generate_rig,
    load_rig,
    pose_to_position,
    pose_up_vector,
)


class TestGenerateRig:
    def test_default_rig_matches_protocol(self):
        poses = generate_rig([-45.0, 0.0, 45.0], 75, radius=2.5)
        assert len(poses) == 75
        polar_counts = {}
        for p in poses:
            polar_counts[p.polar_deg] = polar_counts.get(p.polar_deg, 0) + 1
        assert polar_counts == {-45.0: 25, 0.0: 25, 45.0: 25}
        step = 360.0 / 25  # 14.4 degrees
        for ring in range(3):
            ring_poses = poses[ring * 25 : (ring + 1) * 25]
            assert [p.azimuth_deg for p in ring_poses] == [j * step for j in range(25)]

    def test_single_ring_of_four(self):
        poses = generate_rig([0.0], 4, radius=1.0)
        assert [p.azimuth_deg for p in poses] == [0.0, 90.0, 180.0, 270.0]

    def test_non_divisible_count_rejected(self):
        with pytest.raises(ValueError, match="multiple"):
            generate_rig([-45.0, 0.0, 45.0], 74, radius=1.0)

    def test_view_indices_unique_and_ring_major(self):
        poses = generate_rig([-45.0, 0.0, 45.0], 75, radius=2.0)
        assert [p.view_index for p in poses] == list(range(75))

    def test_positions_on_sphere(self):
        poses = generate_rig([-45.0, 0.0, 45.0], 75, radius=3.7)
        for pose in poses:
            r = np.linalg.norm(pose_to_position(pose))
            assert r == pytest.approx(3.7, rel=1e-12)

    def test_invalid_radius(self):
        with pytest.raises(ValueError):
            generate_rig([0.0], 4, radius=-1.0)


class TestPoseToPosition:
    def test_equator_azimuth_zero(self):
        p = pose_to_position(ViewPose(0, 0.0, 0.0, 2.0))
        np.testing.assert_allclose(p, [2.0, 0.0, 0.0], atol=1e-15)

    def test_north_pole(self):
        p = pose_to_position(ViewPose(0, 90.0, 123.0, 1.0))
        np.testing.assert_allclose(p, [0.0, 0.0, 1.0], atol=1e-15)

    def test_polar45_azimuth90(self):
        p = pose_to_position(ViewPose(0, 45.0, 90.0, math.sqrt(2.0)))
        np.testing.assert_allclose(p, [0.0, 1.0, 1.0], atol=1e-15)

    def test_up_vector_pole_exception(self):
        assert pose_up_vector(ViewPose(0, 90.0, 0.0, 1.0)).tolist() == [1.0, 0.0, 0.0]
        assert pose_up_vector(ViewPose(0, 45.0, 0.0, 1.0)).tolist() == [0.0, 0.0, 1.0]


class TestExportRig:
    def test_round_trip(self, tmp_path):
        poses = generate_rig([-45.0, 0.0, 45.0], 75, radius=2.5)
        path = tmp_path / "poses.json"
        export_rig(poses, path)
        assert load_rig(path) == poses

    def test_record_count(self, tmp_path):
        import json

        poses = generate_rig([-45.0, 0.0, 45.0], 75, radius=2.5)
        path = tmp_path / "poses.json"
        export_rig(poses, path)
        records = json.loads(path.read_text())
        assert len(records) == 75
        assert records[0]["look_at"] == [0.0, 0.0, 0.0]
        assert records[0]["up"] == [0.0, 0.0, 1.0]

    def test_empty_rig_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_rig([], tmp_path / "poses.json")
