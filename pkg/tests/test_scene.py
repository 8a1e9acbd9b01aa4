# ruff: noqa: E402
"""Unit tests for the simulated scene: objects, trajectories and the camera oracle."""

import math
import os
import sys
import unittest

import numpy as np

parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

from src.controllers.scene_sim import (
    camera_pose,
    handover_waypoints,
    object_pose_at,
    observe,
    visible_mask,
)
from src.models.geometry import PointCloud, Pose
from src.models.scene import (
    CameraModel,
    FailureInterval,
    FailureKind,
    FailureSchedule,
    ObjectModel,
    ShapeKind,
    TrackingLoss,
    Trajectory,
    object_preset,
)

QUIET_CAMERA = CameraModel(noise_sigma=0.0, clutter_points=0)
AT_ORIGIN = Pose((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


class TestObjectModel(unittest.TestCase):
    def test_box_samples_on_surface(self):
        box = ObjectModel(ShapeKind.BOX, (0.06, 0.10, 0.08), 1000, seed=1)
        points, normals = box.surface_samples()
        ratio = np.max(np.abs(points) / (np.array(box.dimensions) / 2.0), axis=1)
        np.testing.assert_allclose(ratio, 1.0, atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-12)

    def test_sphere_samples_on_surface(self):
        ball = object_preset("ball", 500, seed=2)
        points, normals = ball.surface_samples()
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), ball.dimensions[0], atol=1e-9)
        np.testing.assert_allclose(points / ball.dimensions[0], normals, atol=1e-9)

    def test_cylinder_samples_on_surface(self):
        r, h = 0.035, 0.08
        cup = ObjectModel(ShapeKind.CYLINDER, (r, h), 1000, seed=3)
        points, _ = cup.surface_samples()
        radial = np.hypot(points[:, 0], points[:, 1])
        on_side = np.abs(radial - r) <= 1e-9
        on_cap = np.abs(np.abs(points[:, 2]) - h / 2.0) <= 1e-9
        self.assertTrue(np.all(on_side | on_cap))
        self.assertTrue(np.all(radial <= r + 1e-9))

    def test_samples_are_seeded(self):
        a = object_preset("mug", 300, seed=4).surface_samples()[0]
        b = object_preset("mug", 300, seed=4).surface_samples()[0]
        np.testing.assert_array_equal(a, b)

    def test_invalid_dimensions(self):
        with self.assertRaises(ValueError):
            ObjectModel(ShapeKind.BOX, (0.06, 0.0, 0.08))
        with self.assertRaises(ValueError):
            ObjectModel(ShapeKind.SPHERE, (0.03, 0.03))

    def test_unknown_preset(self):
        with self.assertRaises(ValueError) as ctx:
            object_preset("anvil")
        self.assertIn("anvil", str(ctx.exception))

    def test_contains(self):
        box = object_preset("box")
        self.assertTrue(box.contains([0.0, 0.0, 0.0])[0])
        self.assertFalse(box.contains([0.0, 0.0, 0.05])[0])


class TestTrajectory(unittest.TestCase):
    def test_linear_motion(self):
        traj = Trajectory.linear(Pose((0.1, 0.2, 0.3), (0, 0, 0)), (0.2, 0.0, 0.0))
        np.testing.assert_allclose(object_pose_at(traj, 1.0).translation, [0.3, 0.2, 0.3], atol=1e-12)
        np.testing.assert_allclose(object_pose_at(traj, 0.0).translation, [0.1, 0.2, 0.3], atol=0.0)

    def test_linear_start_delay(self):
        traj = Trajectory.linear(Pose((0, 0, 0), (0, 0, 0)), (0.0, 0.2, 0.0), start_delay_s=1.0)
        np.testing.assert_allclose(object_pose_at(traj, 0.5).translation, [0, 0, 0], atol=0.0)
        np.testing.assert_allclose(object_pose_at(traj, 1.5).translation, [0, 0.1, 0], atol=1e-12)

    def test_waypoint_midpoint_and_hold(self):
        traj = Trajectory.from_waypoints([
            (0.0, Pose((0, 0, 0), (0, 0, 0))),
            (2.0, Pose((0.4, 0, 0), (0, 0, 0.6))),
        ])
        mid = object_pose_at(traj, 1.0)
        np.testing.assert_allclose(mid.translation, [0.2, 0, 0], atol=1e-12)
        np.testing.assert_allclose(mid.orientation, [0, 0, 0.3], atol=1e-9)
        np.testing.assert_allclose(object_pose_at(traj, 5.0).translation, [0.4, 0, 0], atol=0.0)

    def test_waypoint_times_must_increase(self):
        with self.assertRaises(ValueError):
            Trajectory.from_waypoints([(1.0, AT_ORIGIN), (1.0, AT_ORIGIN)])

    def test_negative_time_rejected(self):
        traj = Trajectory.linear(AT_ORIGIN, (0, 0, 0))
        with self.assertRaises(ValueError):
            object_pose_at(traj, -0.1)

    def test_handover_decelerates_to_goal(self):
        start = Pose((0.6, -0.5, 0.15), (0, 0, 0))
        traj = handover_waypoints(start, (0.47, -0.38, 0.12), 3.0, seed=0, jitter=0.0)
        positions = np.array([pose.translation for _, pose in traj.waypoints])
        np.testing.assert_allclose(positions[-1], [0.47, -0.38, 0.12], atol=1e-12)
        steps = np.linalg.norm(np.diff(positions, axis=0), axis=1)
        self.assertTrue(np.all(np.diff(steps) < 0))
        self.assertAlmostEqual(traj.waypoints[-1][0], 3.0)


class TestFailureSchedule(unittest.TestCase):
    def test_overlap_rejected(self):
        with self.assertRaises(ValueError):
            FailureSchedule((
                FailureInterval(1.0, 2.0, FailureKind.TRACKING_LOSS),
                FailureInterval(1.5, 3.0, FailureKind.TRACKING_LOSS),
            ))

    def test_overlap_allowed_across_kinds(self):
        sched = FailureSchedule((
            FailureInterval(1.0, 2.0, FailureKind.TRACKING_LOSS),
            FailureInterval(1.5, 3.0, FailureKind.ICP_CORRUPTION),
        ))
        self.assertTrue(sched.active(1.7, FailureKind.TRACKING_LOSS))
        self.assertFalse(sched.active(2.0, FailureKind.TRACKING_LOSS))
        self.assertAlmostEqual(sched.total(FailureKind.ICP_CORRUPTION), 1.5)
        self.assertAlmostEqual(sched.total(FailureKind.ICP_CORRUPTION, until=2.0), 0.5)

    def test_interval_bounds(self):
        with self.assertRaises(ValueError):
            FailureInterval(2.0, 1.0, FailureKind.TRACKING_LOSS)


class TestObserve(unittest.TestCase):
    def setUp(self):
        self.ball = object_preset("ball", 2000, seed=5)
        self.ball_pose = Pose((0.0, 0.0, 1.0), (0, 0, 0))

    def test_sphere_on_axis_sees_near_hemisphere(self):
        cloud = observe(QUIET_CAMERA, AT_ORIGIN, self.ball, self.ball_pose, 0.0, FailureSchedule(), seed=0)
        self.assertIsInstance(cloud, PointCloud)
        center = self.ball_pose.translation
        rel = cloud.points - center
        np.testing.assert_allclose(np.linalg.norm(rel, axis=1), self.ball.dimensions[0], atol=1e-9)
        self.assertTrue(np.all(np.einsum("ij,ij->i", rel, cloud.points) < 0))
        self.assertTrue(np.all(cloud.points[:, 2] >= QUIET_CAMERA.min_depth))
        self.assertTrue(np.all(cloud.points[:, 2] <= QUIET_CAMERA.max_depth))

    def test_too_close_is_tracking_loss(self):
        near = Pose((0.0, 0.0, 0.05), (0, 0, 0))
        out = observe(QUIET_CAMERA, AT_ORIGIN, self.ball, near, 0.0, FailureSchedule(), seed=0)
        self.assertIsInstance(out, TrackingLoss)
        self.assertEqual(out.reason, "insufficient-points")

    def test_outside_frustum_is_tracking_loss(self):
        aside = Pose((2.0, 0.0, 0.5), (0, 0, 0))
        out = observe(QUIET_CAMERA, AT_ORIGIN, self.ball, aside, 0.0, FailureSchedule(), seed=0)
        self.assertIsInstance(out, TrackingLoss)

    def test_scheduled_loss(self):
        sched = FailureSchedule((FailureInterval(1.0, 2.0, FailureKind.TRACKING_LOSS),))
        out = observe(QUIET_CAMERA, AT_ORIGIN, self.ball, self.ball_pose, 1.5, sched, seed=0)
        self.assertIsInstance(out, TrackingLoss)
        self.assertEqual(out.reason, "scheduled")

    def test_deterministic_given_seed(self):
        camera = CameraModel()
        a = observe(camera, AT_ORIGIN, self.ball, self.ball_pose, 0.0, FailureSchedule(), seed=11)
        b = observe(camera, AT_ORIGIN, self.ball, self.ball_pose, 0.0, FailureSchedule(), seed=11)
        c = observe(camera, AT_ORIGIN, self.ball, self.ball_pose, 0.0, FailureSchedule(), seed=12)
        np.testing.assert_array_equal(a.points, b.points)
        self.assertFalse(np.array_equal(a.points, c.points))

    def test_clutter_lies_behind_object(self):
        camera = CameraModel(noise_sigma=0.0, clutter_points=30)
        cloud = observe(camera, AT_ORIGIN, self.ball, self.ball_pose, 0.0, FailureSchedule(), seed=0)
        quiet = observe(QUIET_CAMERA, AT_ORIGIN, self.ball, self.ball_pose, 0.0, FailureSchedule(), seed=0)
        self.assertEqual(len(cloud), len(quiet) + 30)
        self.assertTrue(np.all(cloud.points[-30:, 2] > np.median(quiet.points[:, 2]) + 0.2))

    def test_corruption_displaces_cloud(self):
        sched = FailureSchedule((FailureInterval(0.0, 1.0, FailureKind.ICP_CORRUPTION),))
        clean = observe(QUIET_CAMERA, AT_ORIGIN, self.ball, self.ball_pose, 0.5, FailureSchedule(), seed=0)
        bad = observe(QUIET_CAMERA, AT_ORIGIN, self.ball, self.ball_pose, 0.5, sched, seed=0)
        shift = np.linalg.norm(bad.centroid() - clean.centroid())
        self.assertAlmostEqual(shift, 0.15, places=9)

    def test_visible_count_monotone_in_min_depth(self):
        box = object_preset("box", 2000, seed=6)
        pose = Pose((0.02, 0.01, 0.6), (0.3, 0.2, 0.1))
        points, normals = box.surface_samples()
        pts = points @ pose.rotation.T + pose.translation
        nrm = normals @ pose.rotation.T
        counts = [
            int(visible_mask(CameraModel(min_depth=d), pts, nrm).sum())
            for d in (0.1, 0.5, 0.56, 0.58, 0.6, 0.62, 0.7)
        ]
        self.assertTrue(all(b <= a for a, b in zip(counts, counts[1:])))
        self.assertGreater(counts[0], 0)
        self.assertEqual(counts[-1], 0)

    def test_camera_mount_offset(self):
        hand = Pose((0.0, 0.0, 0.4), (math.pi, 0.0, 0.0))
        cam = camera_pose(hand, CameraModel())
        # palm z points down, so the camera sits above the palm
        np.testing.assert_allclose(cam.translation, [0.0, 0.0, 0.48], atol=1e-12)


if __name__ == "__main__":
    unittest.main()
