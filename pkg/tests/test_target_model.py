# ruff: noqa: E402
"""Unit tests for target model generation: filters, merge, encoding and the per-frame pipeline."""

import os
import sys
import tempfile
import unittest

import numpy as np

parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

from src.config.system_params import SystemParams
from src.controllers.scene_sim import observe
from src.controllers.target_model import (
    LatestValueSlot,
    ModelPointCloud,
    ModelStatus,
    TargetModelProcess,
    TargetModelState,
    bps_encode,
    epsilon_ball_filter,
    make_bps_basis,
    median_depth_filter,
    merge_and_downsample,
    step_target_model,
)
from src.models.geometry import PointCloud, Pose
from src.models.scene import CameraModel, FailureSchedule, TrackingLoss, object_preset

QUIET_CAMERA = CameraModel(noise_sigma=0.0, clutter_points=0)
CAMERA_AT_ORIGIN = Pose((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


def _brute_epsilon(cloud, buffer, eps):
    keep = []
    for p in cloud:
        keep.append(all(np.min(np.linalg.norm(past - p, axis=1)) < eps for past in buffer))
    return cloud[np.array(keep, dtype=bool)]


def _box_observation(offset=(0.0, 0.0, 0.0)):
    box = object_preset("box", 2000, seed=3)
    pose = Pose(np.array([0.0, 0.0, 0.5]) + np.asarray(offset), (0.0, 0.0, 0.0))
    return observe(QUIET_CAMERA, CAMERA_AT_ORIGIN, box, pose, 0.0, FailureSchedule(), seed=0)


def _tilted_observation(offset=(0.0, 0.0, 0.0)):
    """Box turned so several faces are visible, which pins down every translation axis."""
    box = object_preset("box", 2000, seed=3)
    pose = Pose(np.array([0.03, -0.02, 0.5]) + np.asarray(offset), (0.4, -0.3, 0.2))
    return observe(QUIET_CAMERA, CAMERA_AT_ORIGIN, box, pose, 0.0, FailureSchedule(), seed=0)


class TestMedianDepthFilter(unittest.TestCase):
    def test_flat_cloud_unchanged(self):
        pts = np.column_stack([np.linspace(0, 1, 20), np.zeros(20), np.full(20, 0.5)])
        out = median_depth_filter(PointCloud(pts), 0.1)
        np.testing.assert_array_equal(out.points, pts)

    def test_outliers_removed(self):
        rng = np.random.default_rng(0)
        inliers = np.column_stack([rng.uniform(size=(100, 2)), np.full(100, 0.5)])
        outliers = np.column_stack([rng.uniform(size=(3, 2)), np.full(3, 0.7)])
        out = median_depth_filter(PointCloud(np.vstack([inliers, outliers])), 0.1)
        self.assertEqual(len(out), 100)
        self.assertTrue(np.all(out.points[:, 2] == 0.5))

    def test_matches_definition(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(0.0, 1.0, size=(200, 3))
        out = median_depth_filter(PointCloud(pts), 0.2)
        expected = pts[np.abs(pts[:, 2] - np.median(pts[:, 2])) <= 0.2]
        np.testing.assert_array_equal(out.points, expected)

    def test_empty_rejected(self):
        with self.assertRaises(ValueError):
            median_depth_filter(PointCloud.empty(), 0.1)


class TestEpsilonBallFilter(unittest.TestCase):
    def test_identical_buffer_keeps_everything(self):
        cloud = PointCloud(np.random.default_rng(2).uniform(size=(30, 3)))
        out = epsilon_ball_filter(cloud, [cloud] * 5, 0.01, 5)
        np.testing.assert_array_equal(out.points, cloud.points)

    def test_displaced_point_removed(self):
        base = np.array([[0.0, 0.0, 0.5], [0.1, 0.0, 0.5]])
        cloud = PointCloud(np.vstack([base, [[0.3, 0.0, 0.5]]]))
        buffer = [PointCloud(np.vstack([base, [[0.32, 0.0, 0.5]]]))] * 5
        out = epsilon_ball_filter(cloud, buffer, 0.01, 5)
        np.testing.assert_array_equal(out.points, base)

    def test_warm_up_passes_through(self):
        cloud = PointCloud(np.random.default_rng(3).uniform(size=(10, 3)))
        out = epsilon_ball_filter(cloud, [PointCloud(np.zeros((1, 3)))] * 4, 0.01, 5)
        np.testing.assert_array_equal(out.points, cloud.points)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            cloud = rng.uniform(0.0, 0.03, size=(int(rng.integers(1, 51)), 3))
            buffer = [rng.uniform(0.0, 0.03, size=(int(rng.integers(1, 51)), 3)) for _ in range(5)]
            out = epsilon_ball_filter(PointCloud(cloud), [PointCloud(b) for b in buffer], 0.01, 5)
            expected = _brute_epsilon(cloud, buffer, 0.01)
            np.testing.assert_array_equal(out.points, expected.reshape(-1, 3))


class TestMergeAndDownsample(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(5)
        self.model_pts = rng.uniform(size=(1000, 3))
        self.obs_pts = rng.uniform(size=(2000, 3))
        self.model = ModelPointCloud(PointCloud(self.model_pts), anchor=(0.1, 0.2, 0.3))

    def test_empty_model_takes_observation(self):
        out = merge_and_downsample(None, PointCloud(self.obs_pts[:500]), 2048, seed=0)
        np.testing.assert_array_equal(out.points.points, self.obs_pts[:500])

    def test_below_cap_unchanged(self):
        out = merge_and_downsample(self.model, PointCloud(self.obs_pts[:500]), 2048, seed=0)
        self.assertEqual(len(out), 1500)
        np.testing.assert_array_equal(out.points.points, np.vstack([self.model_pts, self.obs_pts[:500]]))

    def test_cap_enforced_with_members_only(self):
        out = merge_and_downsample(self.model, PointCloud(self.obs_pts), 2048, seed=0)
        self.assertEqual(len(out), 2048)
        union = {tuple(p) for p in np.vstack([self.model_pts, self.obs_pts])}
        self.assertTrue(all(tuple(p) in union for p in out.points.points))
        np.testing.assert_array_equal(out.anchor, self.model.anchor)

    def test_seeded(self):
        a = merge_and_downsample(self.model, PointCloud(self.obs_pts), 2048, seed=9)
        b = merge_and_downsample(self.model, PointCloud(self.obs_pts), 2048, seed=9)
        np.testing.assert_array_equal(a.points.points, b.points.points)


class TestBpsEncoding(unittest.TestCase):
    def setUp(self):
        self.basis = make_bps_basis(256, 0.5, (0.0, 0.0, 0.5), seed=0)

    def test_basis_inside_ball(self):
        dist = np.linalg.norm(self.basis - np.array([0.0, 0.0, 0.5]), axis=1)
        self.assertTrue(np.all(dist <= 0.5 + 1e-12))

    def test_point_at_basis_point(self):
        model = ModelPointCloud(PointCloud(self.basis[7:8]), self.basis[7])
        enc = bps_encode(model, self.basis)
        self.assertEqual(len(enc), 256)
        self.assertEqual(enc.distances[7], 0.0)

    def test_single_point_distances(self):
        point = np.array([[0.1, -0.2, 0.4]])
        enc = bps_encode(ModelPointCloud(PointCloud(point), point[0]), self.basis)
        np.testing.assert_allclose(enc.distances, np.linalg.norm(self.basis - point, axis=1), atol=1e-12)

    def test_matches_brute_force(self):
        cloud = np.random.default_rng(6).uniform(-0.1, 0.1, size=(300, 3)) + [0, 0, 0.5]
        enc = bps_encode(ModelPointCloud(PointCloud(cloud), cloud[0]), self.basis)
        brute = np.min(np.linalg.norm(self.basis[:, None, :] - cloud[None, :, :], axis=2), axis=1)
        np.testing.assert_allclose(enc.distances, brute, atol=1e-12)


class TestStepTargetModel(unittest.TestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_first_frame_becomes_model(self):
        obs = _box_observation()
        state, status, reg = step_target_model(obs, 0.0, TargetModelState(), self.params)
        self.assertIs(status, ModelStatus.UPDATED)
        self.assertIsNone(reg)
        np.testing.assert_array_equal(state.model.points.points, median_depth_filter(obs, 0.1).points)

    def test_loss_keeps_state(self):
        state, _, _ = step_target_model(_box_observation(), 0.0, TargetModelState(), self.params)
        after, status, _ = step_target_model(TrackingLoss(1 / 30), 1 / 30, state, self.params)
        self.assertIs(status, ModelStatus.LOSS)
        self.assertIs(after, state)

    def test_static_fusion_grows_on_surface(self):
        state = TargetModelState()
        sizes = []
        for k in range(10):
            state, status, _ = step_target_model(_box_observation(), k / 30, state, self.params, seed=1)
            self.assertIs(status, ModelStatus.UPDATED)
            sizes.append(len(state.model))
        self.assertTrue(all(b >= a for a, b in zip(sizes, sizes[1:])))
        self.assertEqual(sizes[-1], self.params.max_model_points)
        half = np.array([0.06, 0.10, 0.08]) / 2.0
        rel = np.abs(state.model.points.points - np.array([0.0, 0.0, 0.5])) / half
        np.testing.assert_allclose(rel.max(axis=1), 1.0, atol=1e-9)

    def test_anchor_follows_registration(self):
        state, _, _ = step_target_model(_tilted_observation(), 0.0, TargetModelState(), self.params)
        before = np.array(state.model.anchor)
        shift = np.array([0.005, 0.0, 0.0])
        state, status, reg = step_target_model(_tilted_observation(shift), 1 / 30, state, self.params)
        self.assertIs(status, ModelStatus.UPDATED)
        self.assertTrue(reg.accepted)
        # the registration maps the current view onto the previous one
        np.testing.assert_allclose(reg.transform.translation, -shift, atol=1e-4)
        np.testing.assert_allclose(state.model.anchor, reg.transform.inverse().apply(before), atol=1e-9)
        np.testing.assert_allclose(state.model.anchor - before, shift, atol=1e-4)
        np.testing.assert_allclose(state.prev_transform.translation, shift, atol=1e-4)

    def test_fitness_measured_on_current_view(self):
        full = _tilted_observation()
        pts = full.points
        half = PointCloud(pts[pts[:, 0] > np.median(pts[:, 0])])
        state, _, _ = step_target_model(full, 0.0, TargetModelState(), self.params)
        state, status, reg = step_target_model(half, 1 / 30, state, self.params)
        self.assertIs(status, ModelStatus.UPDATED)
        self.assertEqual(reg.fitness, 1.0)

    def test_rejected_registration_keeps_model(self):
        state, _, _ = step_target_model(_box_observation(), 0.0, TargetModelState(), self.params)
        after, status, reg = step_target_model(_box_observation((0.2, 0.0, 0.0)), 1 / 30, state, self.params)
        self.assertIs(status, ModelStatus.DISCARDED)
        self.assertFalse(reg.accepted)
        self.assertIs(after.model, state.model)
        self.assertIs(after.prev_observation, state.prev_observation)
        self.assertEqual(after.tick, state.tick)
        self.assertEqual(after.rejections, 1)

    def test_restarts_after_repeated_rejections(self):
        params = SystemParams(max_rejections=2)
        state, _, _ = step_target_model(_box_observation(), 0.0, TargetModelState(), params)
        far = _box_observation((0.2, 0.0, 0.0))
        state, status, _ = step_target_model(far, 1 / 30, state, params)
        self.assertIs(status, ModelStatus.DISCARDED)
        state, status, reg = step_target_model(far, 2 / 30, state, params)
        self.assertIs(status, ModelStatus.UPDATED)
        self.assertFalse(reg.accepted)
        self.assertEqual((state.rejections, state.restarts), (0, 1))
        np.testing.assert_array_equal(state.model.points.points, median_depth_filter(far, 0.1).points)
        # the fresh view is now the registration target
        state, status, reg = step_target_model(far, 3 / 30, state, params)
        self.assertIs(status, ModelStatus.UPDATED)
        self.assertTrue(reg.accepted)

    def test_acceptance_clears_rejection_count(self):
        state, _, _ = step_target_model(_box_observation(), 0.0, TargetModelState(), self.params)
        state, _, _ = step_target_model(_box_observation((0.2, 0.0, 0.0)), 1 / 30, state, self.params)
        self.assertEqual(state.rejections, 1)
        state, status, _ = step_target_model(_box_observation(), 2 / 30, state, self.params)
        self.assertIs(status, ModelStatus.UPDATED)
        self.assertEqual(state.rejections, 0)

    def test_time_must_advance(self):
        state, _, _ = step_target_model(_box_observation(), 0.5, TargetModelState(), self.params)
        with self.assertRaises(ValueError):
            step_target_model(_box_observation(), 0.5, state, self.params)


class TestTargetModelProcess(unittest.TestCase):
    def test_slot_starts_empty(self):
        self.assertEqual(LatestValueSlot().read(), (0, None))

    def test_publishes_snapshots(self):
        params = SystemParams(bps_points=64)
        slot = LatestValueSlot()
        process = TargetModelProcess(params, seed=0, slot=slot)
        process.process(_box_observation(), 0.0, CAMERA_AT_ORIGIN)
        process.process(TrackingLoss(1 / 30), 1 / 30, CAMERA_AT_ORIGIN)
        version, snapshot = slot.read()
        self.assertEqual(version, 2)
        self.assertEqual(snapshot.tick, 2)
        self.assertIs(snapshot.status, ModelStatus.LOSS)
        self.assertIsNone(snapshot.model)
        self.assertEqual(process.counts[ModelStatus.UPDATED], 1)

    def test_dump_clouds(self):
        params = SystemParams(bps_points=64)
        with tempfile.TemporaryDirectory() as tmp:
            process = TargetModelProcess(params, seed=0, dump_dir=tmp)
            snapshot = process.process(_box_observation(), 0.0, CAMERA_AT_ORIGIN)
            self.assertEqual(len(snapshot.encoding), 64)
            path = os.path.join(tmp, "model_00001.xyz")
            with open(path, "r", encoding="utf-8") as f:
                header = f.readline().strip()
            self.assertEqual(header, "# tick 1 frame camera")
            data = np.loadtxt(path)
            self.assertEqual(data.shape, (len(snapshot.model), 3))


if __name__ == "__main__":
    unittest.main()
