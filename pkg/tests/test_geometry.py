"""Mirror-alignment geometry: examples, error paths, and invariants.

Derived expectations are checked against independent oracles: the
collinearity of (target - eye) and (q - eye) via an explicit cross
product, never via the code under test.
"""

import math

import numpy as np
import pytest

from lentimirror.errors import DegenerateGeometry, InvariantViolation, NotOnScreenPlane
from lentimirror.geometry import (
    EyePose,
    PixelCoord,
    ScreenMap,
    SpatialPoint,
    align_contour,
    align_point,
    reflect_point,
    sight_screen_intersection,
    to_screen_pixels,
)


def cross_norm(a: SpatialPoint, b: SpatialPoint, q: SpatialPoint) -> float:
    """|(b - a) x (q - a)|, the collinearity residual oracle."""
    u = np.array([b.x - a.x, b.y - a.y, b.z - a.z])
    v = np.array([q.x - a.x, q.y - a.y, q.z - a.z])
    return float(np.linalg.norm(np.cross(u, v)))


SCREEN = ScreenMap(
    camera_offset_x=0.15,
    camera_offset_y=0.0,
    theta_x=5000.0,
    theta_y=5000.0,
    width_px=1920,
    height_px=1080,
)


class TestReflectPoint:
    def test_sign_flip(self):
        assert reflect_point(SpatialPoint(1.0, 2.0, 3.0)) == SpatialPoint(1.0, 2.0, -3.0)

    def test_mirror_plane_fixed_point(self):
        assert reflect_point(SpatialPoint(0.1, 0.2, 0.0)) == SpatialPoint(0.1, 0.2, 0.0)

    def test_involution(self):
        p = SpatialPoint(0.4, -0.7, 1.3)
        assert reflect_point(reflect_point(p)) == p

    def test_involution_bit_for_bit(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            p = SpatialPoint(*rng.uniform(-2, 2, 3))
            q = reflect_point(reflect_point(p))
            assert q.x.hex() == p.x.hex()
            assert q.y.hex() == p.y.hex()
            assert q.z.hex() == p.z.hex()

    def test_rejects_non_finite(self):
        with pytest.raises(InvariantViolation):
            SpatialPoint(float("nan"), 0.0, 0.0)
        with pytest.raises(InvariantViolation):
            SpatialPoint(0.0, float("inf"), 0.0)


class TestSightScreenIntersection:
    def test_symmetric_midpoint(self):
        q = sight_screen_intersection(SpatialPoint(0.0325, 0, 0.5), SpatialPoint(0, 0, -0.5))
        assert q == SpatialPoint(0.01625, 0.0, 0.0)

    def test_target_already_on_plane(self):
        q = sight_screen_intersection(SpatialPoint(0, 0, 1.0), SpatialPoint(0.1, 0.2, 0))
        assert q == SpatialPoint(0.1, 0.2, 0.0)

    def test_general_point_collinear(self):
        eye = SpatialPoint(-0.03, 0.01, 0.6)
        target = SpatialPoint(0.05, -0.1, -0.4)
        q = sight_screen_intersection(eye, target)
        assert q.z == 0.0
        assert cross_norm(eye, target, q) < 1e-12

    def test_parallel_line_rejected(self):
        with pytest.raises(DegenerateGeometry):
            sight_screen_intersection(SpatialPoint(0, 0, 0.5), SpatialPoint(1, 1, 0.5))

    def test_eye_on_plane_rejected(self):
        with pytest.raises(DegenerateGeometry):
            sight_screen_intersection(SpatialPoint(0, 0, 0.0), SpatialPoint(1, 1, -0.5))

    def test_segment_not_reaching_plane_rejected(self):
        with pytest.raises(DegenerateGeometry):
            sight_screen_intersection(SpatialPoint(0, 0, 0.5), SpatialPoint(0.1, 0, 0.2))

    def test_collinearity_property(self):
        rng = np.random.default_rng(42)
        for _ in range(500):
            eye = SpatialPoint(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.01, 2))
            target = SpatialPoint(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, -0.01))
            q = sight_screen_intersection(eye, target)
            assert q.z == 0.0
            assert cross_norm(eye, target, q) < 1e-9


class TestAlignPoint:
    EYES = EyePose(SpatialPoint(-0.0325, 0, 0.5), SpatialPoint(0.0325, 0, 0.5))

    def test_symmetric_configuration(self):
        pair = align_point(self.EYES, SpatialPoint(0, 0, 0.5))
        # the left eye's line to the centred reflection crosses to negative x
        assert pair.q_left == SpatialPoint(-0.01625, 0.0, 0.0)
        assert pair.q_right == SpatialPoint(0.01625, 0.0, 0.0)

    def test_point_on_mirror_needs_no_parallax(self):
        p = SpatialPoint(0.1, 0.2, 0.0)
        pair = align_point(self.EYES, p)
        assert pair.q_left == p
        assert pair.q_right == p

    def test_rays_pass_through_reflection(self):
        eyes = EyePose(SpatialPoint(-0.030, 0.00, 0.60), SpatialPoint(0.035, 0.01, 0.62))
        pair = align_point(eyes, SpatialPoint(0.05, -0.10, 0.40))
        mirrored = SpatialPoint(0.05, -0.10, -0.40)
        assert cross_norm(eyes.left, mirrored, pair.q_left) < 1e-9
        assert cross_norm(eyes.right, mirrored, pair.q_right) < 1e-9

    def test_rejects_point_behind_mirror(self):
        with pytest.raises(DegenerateGeometry):
            align_point(self.EYES, SpatialPoint(0, 0, -0.1))

    def test_degenerate_eye_collapse(self):
        eye = SpatialPoint(0.02, -0.01, 0.7)
        eyes = EyePose(eye, eye)
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = SpatialPoint(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0, 1))
            pair = align_point(eyes, p)
            assert pair.q_left == pair.q_right

    def test_zero_parallax_plane_exact(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            eyes = EyePose(
                SpatialPoint(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.3, 1.5)),
                SpatialPoint(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.3, 1.5)),
            )
            p = SpatialPoint(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0)
            pair = align_point(eyes, p)
            assert pair.q_left == p
            assert pair.q_right == p

    def test_monotone_parallax_in_depth(self):
        eyes = EyePose(SpatialPoint(-0.0325, 0, 0.5), SpatialPoint(0.0325, 0, 0.5))
        parallax = []
        for z in np.linspace(0.05, 1.5, 30):
            pair = align_point(eyes, SpatialPoint(0.0, 0.0, float(z)))
            parallax.append(abs(pair.q_right.x - pair.q_left.x))
        assert all(b > a for a, b in zip(parallax, parallax[1:]))

    def test_eyes_behind_mirror_rejected(self):
        with pytest.raises(InvariantViolation):
            EyePose(SpatialPoint(0, 0, -0.5), SpatialPoint(0.065, 0, 0.5))


class TestToScreenPixels:
    def test_direct_arithmetic(self):
        px = to_screen_pixels(SpatialPoint(0.016, -0.2, 0.0), SCREEN)
        assert px.u == pytest.approx(830.0, abs=1e-9)
        assert px.v == pytest.approx(1000.0, abs=1e-9)

    def test_top_left_corner(self):
        px = to_screen_pixels(SpatialPoint(-0.15, 0.0, 0.0), SCREEN)
        assert px.u == pytest.approx(0.0, abs=1e-12)
        assert px.v == pytest.approx(0.0, abs=1e-12)

    def test_non_square_factors(self):
        screen = ScreenMap(0.15, 0.0, 4000.0, 4100.0, 1920, 1080)
        px = to_screen_pixels(SpatialPoint(0.0334, -0.05, 0.0), screen)
        assert px.u == pytest.approx(733.6, abs=1e-9)
        assert px.v == pytest.approx(205.0, abs=1e-9)

    def test_off_plane_rejected(self):
        with pytest.raises(NotOnScreenPlane):
            to_screen_pixels(SpatialPoint(0.0, 0.0, 1e-9), SCREEN)

    def test_screen_map_validation(self):
        with pytest.raises(InvariantViolation):
            ScreenMap(0.0, 0.0, -1.0, 1.0, 10, 10)
        with pytest.raises(InvariantViolation):
            ScreenMap(0.0, 0.0, 1.0, 1.0, 0, 10)


class TestAlignContour:
    EYES = EyePose(SpatialPoint(-0.0325, 0, 0.5), SpatialPoint(0.0325, 0, 0.5))

    def test_empty(self):
        assert align_contour(self.EYES, [], SCREEN) == []

    def test_single_point_matches_composition(self):
        p = SpatialPoint(0.03, -0.02, 0.4)
        [(left_px, right_px)] = align_contour(self.EYES, [p], SCREEN)
        pair = align_point(self.EYES, p)
        assert left_px == to_screen_pixels(pair.q_left, SCREEN)
        assert right_px == to_screen_pixels(pair.q_right, SCREEN)

    def test_batch_collinearity(self):
        rng = np.random.default_rng(11)
        points = [
            SpatialPoint(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0, 1))
            for _ in range(100)
        ]
        result = align_contour(self.EYES, points, SCREEN)
        assert len(result) == 100
        for p, (left_px, right_px) in zip(points, result):
            mirrored = reflect_point(p)
            # undo the pixel map to recover the screen points, then check collinearity
            for eye, px in ((self.EYES.left, left_px), (self.EYES.right, right_px)):
                q = SpatialPoint(
                    px.u / SCREEN.theta_x - SCREEN.camera_offset_x,
                    -(px.v / SCREEN.theta_y - SCREEN.camera_offset_y),
                    0.0,
                )
                assert cross_norm(eye, mirrored, q) < 1e-9

    def test_reports_failing_index(self):
        points = [SpatialPoint(0.0, 0.0, 0.4), SpatialPoint(0.0, 0.0, -0.2)]
        with pytest.raises(DegenerateGeometry) as err:
            align_contour(self.EYES, points, SCREEN)
        assert err.value.index == 1
        assert "point 1" in str(err.value)


def test_pixel_coord_is_plain_value():
    px = PixelCoord(-3.5, 10.25)
    assert px.u == -3.5 and px.v == 10.25
