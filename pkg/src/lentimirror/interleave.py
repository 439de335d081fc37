"""Frame composition: per-eye rendering and stripe interleaving."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry, DimensionMismatch, InvariantViolation
from .geometry import EyePose, ScreenMap, SpatialPoint, align_point, to_screen_pixels
from .grating import Eye, GratingSpec, StripePlan, ViewerState, build_stripe_plan

__all__ = [
    "FrameBuffer",
    "Anchor",
    "Contour",
    "ArScene",
    "interleave",
    "render_eye_views",
    "compose_ar_frame",
]

RGB = tuple[int, int, int]


class FrameBuffer:
    """RGB8 raster stored as a (height, width, 3) uint8 array.

    meta carries non-pixel annotations (e.g. the crosstalk flag set by
    interleave); it never affects pixel equality.
    """

    def __init__(self, data: np.ndarray, meta: dict | None = None):
        data = np.asarray(data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise InvariantViolation(f"frame data must be (h, w, 3), got {data.shape}")
        if data.dtype != np.uint8:
            raise InvariantViolation(f"frame data must be uint8, got {data.dtype}")
        self.data = data
        self.meta = dict(meta) if meta else {}

    @classmethod
    def black(cls, width: int, height: int) -> "FrameBuffer":
        return cls(np.zeros((height, width, 3), dtype=np.uint8))

    @classmethod
    def filled(cls, width: int, height: int, color: RGB) -> "FrameBuffer":
        data = np.empty((height, width, 3), dtype=np.uint8)
        data[:] = np.asarray(color, dtype=np.uint8)
        return cls(data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def copy(self) -> "FrameBuffer":
        return FrameBuffer(self.data.copy(), self.meta)


@dataclass(frozen=True)
class Anchor:
    """A guidance point rendered as a filled disk."""

    point: SpatialPoint
    color: RGB = (255, 255, 255)
    radius_px: int = 3


@dataclass(frozen=True)
class Contour:
    """An ordered polyline of guidance points, drawn 1 px wide."""

    color: RGB
    points: tuple[SpatialPoint, ...]


@dataclass(frozen=True)
class ArScene:
    """Renderable overlay content anchored to real-space points (z >= 0)."""

    anchors: tuple[Anchor, ...] = field(default_factory=tuple)
    contours: tuple[Contour, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for a in self.anchors:
            if a.point.z < 0.0:
                raise InvariantViolation("anchor behind the mirror plane (z < 0)")
        for c in self.contours:
            for p in c.points:
                if p.z < 0.0:
                    raise InvariantViolation("contour point behind the mirror plane (z < 0)")


def interleave(left: FrameBuffer, right: FrameBuffer, plan: StripePlan) -> FrameBuffer:
    """Compose the two eye buffers into one frame along the stripe plan.

    Each entry copies its pixel columns [round(center - width/2), +width)
    from the matching eye's buffer; columns no stripe covers stay black.
    On crosstalk plans overlaps resolve deterministically: LEFT entries
    beat RIGHT entries, earlier plan entries beat later ones, and the
    output is flagged in meta["crosstalk"].
    """
    if left.width != right.width or left.height != right.height:
        raise DimensionMismatch(
            f"eye buffers differ: {left.width}x{left.height} vs {right.width}x{right.height}"
        )
    width = left.width
    out = np.zeros_like(left.data)
    source = {Eye.LEFT: left.data, Eye.RIGHT: right.data}
    # paint RIGHT then LEFT, each pass in reverse plan order, so the
    # first LEFT entry claiming a column wins
    for eye in (Eye.RIGHT, Eye.LEFT):
        for entry in reversed(plan.entries):
            if entry.eye is not eye or entry.width_px <= 0:
                continue
            start = round(entry.center_px - entry.width_px / 2.0)
            a = max(start, 0)
            b = min(start + entry.width_px, width)
            if a < b:
                out[:, a:b] = source[eye][:, a:b]
    meta = {"crosstalk": not plan.crosstalk_free}
    return FrameBuffer(out, meta)


def _draw_disk(data: np.ndarray, u: float, v: float, radius: int, color: RGB) -> None:
    h, w = data.shape[:2]
    lo_x = max(int(np.floor(u - radius)), 0)
    hi_x = min(int(np.ceil(u + radius)) + 1, w)
    lo_y = max(int(np.floor(v - radius)), 0)
    hi_y = min(int(np.ceil(v + radius)) + 1, h)
    if lo_x >= hi_x or lo_y >= hi_y:
        return
    ys, xs = np.mgrid[lo_y:hi_y, lo_x:hi_x]
    mask = (xs - u) ** 2 + (ys - v) ** 2 <= radius * radius
    data[lo_y:hi_y, lo_x:hi_x][mask] = color


def _draw_segment(data: np.ndarray, p0, p1, color: RGB) -> None:
    h, w = data.shape[:2]
    steps = int(max(abs(p1.u - p0.u), abs(p1.v - p0.v))) + 1
    ts = np.linspace(0.0, 1.0, steps + 1)
    us = np.rint(p0.u + ts * (p1.u - p0.u)).astype(int)
    vs = np.rint(p0.v + ts * (p1.v - p0.v)).astype(int)
    keep = (us >= 0) & (us < w) & (vs >= 0) & (vs < h)
    data[vs[keep], us[keep]] = color


def render_eye_views(
    scene: ArScene, eyes: EyePose, screen: ScreenMap
) -> tuple[FrameBuffer, FrameBuffer]:
    """Project the scene through each eye's sight lines into two buffers.

    Anchors become filled disks at their aligned screen positions,
    contours become 1 px polylines; pixels falling off-screen are
    clipped.
    """
    left = FrameBuffer.black(screen.width_px, screen.height_px)
    right = FrameBuffer.black(screen.width_px, screen.height_px)
    for i, anchor in enumerate(scene.anchors):
        try:
            pair = align_point(eyes, anchor.point)
        except DegenerateGeometry as exc:
            raise DegenerateGeometry(f"anchor {i}: {exc}", index=i) from exc
        pl = to_screen_pixels(pair.q_left, screen)
        pr = to_screen_pixels(pair.q_right, screen)
        _draw_disk(left.data, pl.u, pl.v, anchor.radius_px, anchor.color)
        _draw_disk(right.data, pr.u, pr.v, anchor.radius_px, anchor.color)
    for i, contour in enumerate(scene.contours):
        projected = []
        for j, p in enumerate(contour.points):
            try:
                pair = align_point(eyes, p)
            except DegenerateGeometry as exc:
                raise DegenerateGeometry(f"contour {i} point {j}: {exc}", index=j) from exc
            projected.append(
                (to_screen_pixels(pair.q_left, screen), to_screen_pixels(pair.q_right, screen))
            )
        if len(projected) == 1:
            (l0, r0) = projected[0]
            _draw_segment(left.data, l0, l0, contour.color)
            _draw_segment(right.data, r0, r0, contour.color)
        for (l0, r0), (l1, r1) in zip(projected, projected[1:]):
            _draw_segment(left.data, l0, l1, contour.color)
            _draw_segment(right.data, r0, r1, contour.color)
    return left, right


def compose_ar_frame(
    scene: ArScene,
    eyes: EyePose,
    spec: GratingSpec,
    screen: ScreenMap,
    e_mm: float | None = None,
) -> FrameBuffer:
    """End-to-end per-frame function: render both views and interleave them.

    e_mm optionally pins the interocular distance instead of measuring it
    from the tracked pose.
    """
    left, right = render_eye_views(scene, eyes, screen)
    view = ViewerState.from_eyes(eyes, e_mm=e_mm)
    plan = build_stripe_plan(view, spec, screen)
    return interleave(left, right, plan)
