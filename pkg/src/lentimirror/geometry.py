"""Mirror-reflection alignment geometry.

Coordinate frame: right-handed, metres, origin at the depth camera which
sits on the mirror plane. z points toward the viewer, y points up, so the
mirror (and the screen glued behind it) is the z=0 plane. Real objects
live at z > 0, their reflections appear at z < 0.

All operations are pure functions over immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateGeometry, InvariantViolation, NotOnScreenPlane

__all__ = [
    "SpatialPoint",
    "EyePose",
    "ScreenMap",
    "PixelCoord",
    "ScreenPair",
    "reflect_point",
    "sight_screen_intersection",
    "align_point",
    "to_screen_pixels",
    "align_contour",
]


@dataclass(frozen=True)
class SpatialPoint:
    """A 3D point in metres in the camera-origin frame."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise InvariantViolation(f"non-finite spatial point ({self.x}, {self.y}, {self.z})")


@dataclass(frozen=True)
class EyePose:
    """Tracked positions of both eyes at one instant.

    Eyes must be in front of the mirror (z > 0). Coincident eyes are
    permitted so degenerate poses can be constructed in tests.
    """

    left: SpatialPoint
    right: SpatialPoint
    timestamp_ms: float = 0.0

    def __post_init__(self):
        if self.left.z <= 0.0 or self.right.z <= 0.0:
            raise InvariantViolation("eye behind mirror plane (z must be > 0)")


@dataclass(frozen=True)
class ScreenMap:
    """Mapping from mirror-plane metres to screen pixels.

    camera_offset_x/y displace the camera origin to the screen's top-left
    corner; theta_x/theta_y are resolution conversion factors in pixels
    per metre. Rows count downward while spatial y points up.
    """

    camera_offset_x: float
    camera_offset_y: float
    theta_x: float
    theta_y: float
    width_px: int
    height_px: int

    def __post_init__(self):
        if self.theta_x <= 0 or self.theta_y <= 0:
            raise InvariantViolation("resolution factors must be positive")
        if self.width_px <= 0 or self.height_px <= 0:
            raise InvariantViolation("screen dimensions must be positive")


@dataclass(frozen=True)
class PixelCoord:
    """Real-valued pixel position; u rightward, v downward. May lie off-screen."""

    u: float
    v: float


@dataclass(frozen=True)
class ScreenPair:
    """The two screen points one content point splits into, both on z=0."""

    q_left: SpatialPoint
    q_right: SpatialPoint

    def __post_init__(self):
        if self.q_left.z != 0.0 or self.q_right.z != 0.0:
            raise NotOnScreenPlane("screen pair components must have z = 0")


def reflect_point(p: SpatialPoint) -> SpatialPoint:
    """Reflect a point in the mirror plane: (x, y, z) -> (x, y, -z)."""
    return SpatialPoint(p.x, p.y, -p.z)


def sight_screen_intersection(eye: SpatialPoint, target: SpatialPoint) -> SpatialPoint:
    """Intersect the sight segment eye->target with the screen plane z=0.

    Solves eye + t*(target - eye) for z = 0, i.e. t = -eye.z / (target.z - eye.z),
    and requires the crossing to happen on the segment (0 <= t <= 1). The
    returned point has z = 0 exactly.

    Raises:
        DegenerateGeometry: if the line is parallel to the screen
            (eye.z == target.z), the eye sits on the screen plane, or the
            segment does not reach the plane.
    """
    dz = target.z - eye.z
    if dz == 0.0:
        raise DegenerateGeometry("sight line parallel to the screen plane")
    if eye.z == 0.0:
        raise DegenerateGeometry("eye lies on the screen plane")
    t = -eye.z / dz
    if not 0.0 <= t <= 1.0:
        raise DegenerateGeometry(f"sight segment does not cross the screen plane (t={t:g})")
    # affine form keeps the endpoints exact at t=0 and t=1
    return SpatialPoint(
        (1.0 - t) * eye.x + t * target.x,
        (1.0 - t) * eye.y + t * target.y,
        0.0,
    )


def align_point(eyes: EyePose, p_real: SpatialPoint) -> ScreenPair:
    """Find where each eye's sight line to the reflection of p_real crosses the screen.

    p_real must lie in front of the mirror (z >= 0); its reflection sits at
    (x, y, -z) and each eye is connected to that reflection.
    """
    if p_real.z < 0.0:
        raise DegenerateGeometry("content point behind the mirror plane (z < 0)")
    mirrored = reflect_point(p_real)
    return ScreenPair(
        q_left=sight_screen_intersection(eyes.left, mirrored),
        q_right=sight_screen_intersection(eyes.right, mirrored),
    )


def to_screen_pixels(q: SpatialPoint, screen: ScreenMap) -> PixelCoord:
    """Convert a screen-plane point to (possibly fractional) pixel coordinates.

    u = (x + camera_offset_x) * theta_x
    v = (-y + camera_offset_y) * theta_y      (rows grow downward)
    """
    if q.z != 0.0:
        raise NotOnScreenPlane(f"point with z={q.z!r} is not on the screen plane")
    return PixelCoord(
        (q.x + screen.camera_offset_x) * screen.theta_x,
        (-q.y + screen.camera_offset_y) * screen.theta_y,
    )


def align_contour(
    eyes: EyePose,
    points: list[SpatialPoint],
    screen: ScreenMap,
) -> list[tuple[PixelCoord, PixelCoord]]:
    """Batch align_point + to_screen_pixels over an ordered polyline.

    Fails on the first degenerate vertex, reporting its index.
    """
    out = []
    for i, p in enumerate(points):
        try:
            pair = align_point(eyes, p)
        except DegenerateGeometry as exc:
            raise DegenerateGeometry(f"point {i}: {exc}", index=i) from exc
        out.append((to_screen_pixels(pair.q_left, screen), to_screen_pixels(pair.q_right, screen)))
    return out
