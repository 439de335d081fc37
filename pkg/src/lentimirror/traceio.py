"""File ingestion and serialization: eye traces, scenes, configs, PPM images.

All text formats are line-oriented UTF-8 with a one-line versioned
header; values round-trip bit-exactly (floats are written with repr).
Formats:

    lentimirror-trace v1 SPATIAL        t_ms xL yL zL xR yR zR   (metres)
    lentimirror-trace v1 PIXEL_DEPTH    t_ms uL vL dL uR vR dR   (px, px, metres)
    lentimirror-scene v1                anchor x y z r g b radius_px
                                        contour r g b n x1 y1 z1 ... xn yn zn
    lentimirror-config v1               key value
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidDepth, InvariantViolation, ParseError, UnsupportedFormat
from .geometry import EyePose, ScreenMap, SpatialPoint
from .grating import GratingSpec
from .interleave import Anchor, ArScene, Contour, FrameBuffer

__all__ = [
    "CameraIntrinsics",
    "TraceMode",
    "EyeTrace",
    "deproject",
    "load_trace",
    "save_trace",
    "load_scene",
    "save_scene",
    "load_config",
    "save_config",
    "read_ppm",
    "write_ppm",
]

TRACE_HEADER = "lentimirror-trace v1"
SCENE_HEADER = "lentimirror-scene v1"
CONFIG_HEADER = "lentimirror-config v1"


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model of the depth camera (pixels)."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvariantViolation("focal lengths fx, fy must be positive")


class TraceMode(enum.Enum):
    SPATIAL = "SPATIAL"
    PIXEL_DEPTH = "PIXEL_DEPTH"


@dataclass(frozen=True)
class EyeTrace:
    """Time-ordered eye poses; timestamps strictly increasing."""

    poses: tuple[EyePose, ...]
    mode: TraceMode

    def __post_init__(self):
        if not self.poses:
            raise InvariantViolation("trace must contain at least one record")
        ts = [p.timestamp_ms for p in self.poses]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvariantViolation("timestamps must be strictly increasing")


def deproject(u: float, v: float, depth: float, intr: CameraIntrinsics) -> SpatialPoint:
    """Pinhole inverse: pixel + depth to a spatial point (v is down, y is up)."""
    if depth <= 0.0:
        raise InvalidDepth(f"depth must be positive (got {depth})")
    return SpatialPoint(
        (u - intr.cx) * depth / intr.fx,
        -(v - intr.cy) * depth / intr.fy,
        depth,
    )


def _data_lines(path) -> tuple[str, list[tuple[int, str]]]:
    """Header line plus (line_number, content) pairs, comments/blanks skipped."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].strip()
    out = []
    for i, raw in enumerate(lines[1:], start=2):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            out.append((i, stripped))
    return header, out


def _parse_floats(fields: list[str], n: int, line: int) -> list[float]:
    if len(fields) != n:
        raise ParseError(f"expected {n} fields, got {len(fields)}", line=line)
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise ParseError(str(exc), line=line) from exc


def load_trace(path, intrinsics: CameraIntrinsics | None = None) -> EyeTrace:
    """Load an eye trace; PIXEL_DEPTH records are deprojected on load."""
    header, records = _data_lines(path)
    parts = header.split()
    if len(parts) != 3 or " ".join(parts[:2]) != TRACE_HEADER:
        raise ParseError(f"bad trace header {header!r}", line=1)
    try:
        mode = TraceMode(parts[2])
    except ValueError as exc:
        raise ParseError(f"unknown trace mode {parts[2]!r}", line=1) from exc
    if mode is TraceMode.PIXEL_DEPTH and intrinsics is None:
        raise ParseError("PIXEL_DEPTH trace requires camera intrinsics", line=1)
    if not records:
        raise ParseError("no records")

    poses = []
    for line_no, line in records:
        vals = _parse_floats(line.split(), 7, line_no)
        t_ms = vals[0]
        if mode is TraceMode.SPATIAL:
            left = SpatialPoint(vals[1], vals[2], vals[3])
            right = SpatialPoint(vals[4], vals[5], vals[6])
        else:
            if vals[3] <= 0.0 or vals[6] <= 0.0:
                raise InvariantViolation(f"line {line_no}: depth must be positive")
            left = deproject(vals[1], vals[2], vals[3], intrinsics)
            right = deproject(vals[4], vals[5], vals[6], intrinsics)
        try:
            poses.append(EyePose(left, right, timestamp_ms=t_ms))
        except InvariantViolation as exc:
            raise InvariantViolation(f"line {line_no}: {exc}") from exc
    return EyeTrace(poses=tuple(poses), mode=mode)


def _f(value) -> str:
    """Canonical float form: shortest repr that round-trips bit-exactly."""
    return repr(float(value))


def save_trace(trace: EyeTrace, path) -> None:
    """SPATIAL traces are written as stored; PIXEL_DEPTH traces were already deprojected."""
    lines = [f"{TRACE_HEADER} {TraceMode.SPATIAL.value}"]
    for p in trace.poses:
        lines.append(
            f"{_f(p.timestamp_ms)} {_f(p.left.x)} {_f(p.left.y)} {_f(p.left.z)} "
            f"{_f(p.right.x)} {_f(p.right.y)} {_f(p.right.z)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_scene(path) -> ArScene:
    header, records = _data_lines(path)
    if header != SCENE_HEADER:
        raise ParseError(f"bad scene header {header!r}", line=1)
    anchors, contours = [], []
    for line_no, line in records:
        fields = line.split()
        kind = fields[0]
        if kind == "anchor":
            vals = _parse_floats(fields[1:], 7, line_no)
            color = _parse_color(vals[3:6], line_no)
            radius = int(vals[6])
            if radius < 0:
                raise ParseError("radius_px must be >= 0", line=line_no)
            try:
                anchors.append(
                    Anchor(SpatialPoint(vals[0], vals[1], vals[2]), color, radius)
                )
            except InvariantViolation as exc:
                raise InvariantViolation(f"line {line_no}: {exc}") from exc
        elif kind == "contour":
            if len(fields) < 5:
                raise ParseError("contour needs r g b n ...", line=line_no)
            head = _parse_floats(fields[1:5], 4, line_no)
            color = _parse_color(head[:3], line_no)
            n = int(head[3])
            coords = _parse_floats(fields[5:], 3 * n, line_no)
            pts = tuple(
                SpatialPoint(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2])
                for i in range(n)
            )
            try:
                contours.append(Contour(color=color, points=pts))
            except InvariantViolation as exc:
                raise InvariantViolation(f"line {line_no}: {exc}") from exc
        else:
            raise ParseError(f"unknown scene record {kind!r}", line=line_no)
    return ArScene(anchors=tuple(anchors), contours=tuple(contours))


def _parse_color(vals, line_no) -> tuple[int, int, int]:
    color = tuple(int(v) for v in vals)
    if any(not 0 <= c <= 255 for c in color):
        raise ParseError(f"color {color} out of range 0..255", line=line_no)
    return color


def save_scene(scene: ArScene, path) -> None:
    lines = [SCENE_HEADER]
    for a in scene.anchors:
        r, g, b = a.color
        lines.append(
            f"anchor {_f(a.point.x)} {_f(a.point.y)} {_f(a.point.z)} {r} {g} {b} {a.radius_px}"
        )
    for c in scene.contours:
        r, g, b = c.color
        coords = " ".join(f"{_f(p.x)} {_f(p.y)} {_f(p.z)}" for p in c.points)
        lines.append(f"contour {r} {g} {b} {len(c.points)} {coords}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_CONFIG_FLOAT_KEYS = (
    "grating_r_mm",
    "grating_n",
    "grating_t_mm",
    "screen_offset_x_m",
    "screen_offset_y_m",
    "screen_theta_x",
    "screen_theta_y",
    "camera_fx",
    "camera_fy",
    "camera_cx",
    "camera_cy",
)
_CONFIG_INT_KEYS = ("screen_width_px", "screen_height_px")


def load_config(path) -> tuple[GratingSpec, ScreenMap, CameraIntrinsics]:
    header, records = _data_lines(path)
    if header != CONFIG_HEADER:
        raise ParseError(f"bad config header {header!r}", line=1)
    raw: dict[str, float] = {}
    for line_no, line in records:
        fields = line.split()
        if len(fields) != 2:
            raise ParseError("expected 'key value'", line=line_no)
        key, value = fields
        if key in _CONFIG_FLOAT_KEYS:
            raw[key] = _parse_floats([value], 1, line_no)[0]
        elif key in _CONFIG_INT_KEYS:
            try:
                raw[key] = int(value)
            except ValueError as exc:
                raise ParseError(str(exc), line=line_no) from exc
        else:
            raise ParseError(f"unknown config key {key!r}", line=line_no)
    missing = [k for k in (*_CONFIG_FLOAT_KEYS, *_CONFIG_INT_KEYS) if k not in raw]
    if missing:
        raise ParseError(f"missing config keys: {', '.join(missing)}")
    spec = GratingSpec(r=raw["grating_r_mm"], n=raw["grating_n"], T=raw["grating_t_mm"])
    screen = ScreenMap(
        camera_offset_x=raw["screen_offset_x_m"],
        camera_offset_y=raw["screen_offset_y_m"],
        theta_x=raw["screen_theta_x"],
        theta_y=raw["screen_theta_y"],
        width_px=raw["screen_width_px"],
        height_px=raw["screen_height_px"],
    )
    intr = CameraIntrinsics(
        fx=raw["camera_fx"], fy=raw["camera_fy"], cx=raw["camera_cx"], cy=raw["camera_cy"]
    )
    return spec, screen, intr


def save_config(spec: GratingSpec, screen: ScreenMap, intr: CameraIntrinsics, path) -> None:
    lines = [
        CONFIG_HEADER,
        f"grating_r_mm {_f(spec.r)}",
        f"grating_n {_f(spec.n)}",
        f"grating_t_mm {_f(spec.T)}",
        f"screen_offset_x_m {_f(screen.camera_offset_x)}",
        f"screen_offset_y_m {_f(screen.camera_offset_y)}",
        f"screen_theta_x {_f(screen.theta_x)}",
        f"screen_theta_y {_f(screen.theta_y)}",
        f"screen_width_px {int(screen.width_px)}",
        f"screen_height_px {int(screen.height_px)}",
        f"camera_fx {_f(intr.fx)}",
        f"camera_fy {_f(intr.fy)}",
        f"camera_cx {_f(intr.cx)}",
        f"camera_cy {_f(intr.cy)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ppm(path) -> FrameBuffer:
    """Read a binary PPM (P6, maxval 255) bit-exactly."""
    blob = Path(path).read_bytes()
    magic, pos = _ppm_token(blob, 0)
    if magic != b"P6":
        raise UnsupportedFormat(f"not a binary PPM (magic {magic!r})")
    width_tok, pos = _ppm_token(blob, pos)
    height_tok, pos = _ppm_token(blob, pos)
    maxval_tok, pos = _ppm_token(blob, pos)
    try:
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except ValueError as exc:
        raise ParseError(f"bad PPM header field: {exc}") from exc
    if maxval != 255:
        raise UnsupportedFormat(f"maxval must be 255 (got {maxval})")
    if width <= 0 or height <= 0:
        raise ParseError(f"bad PPM dimensions {width}x{height}")
    # exactly one whitespace byte separates the header from the raster
    data = blob[pos + 1 :]
    expected = width * height * 3
    if len(data) < expected:
        raise ParseError(f"PPM raster truncated: {len(data)} < {expected} bytes")
    pixels = np.frombuffer(data[:expected], dtype=np.uint8).reshape(height, width, 3)
    return FrameBuffer(pixels.copy())


def _ppm_token(blob: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and # comments."""
    n = len(blob)
    while pos < n:
        ch = blob[pos : pos + 1]
        if ch == b"#":
            while pos < n and blob[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise ParseError("unexpected end of PPM header")
    start = pos
    while pos < n and not blob[pos : pos + 1].isspace():
        pos += 1
    return blob[start:pos], pos


def write_ppm(frame: FrameBuffer, path) -> None:
    """Write a canonical binary PPM: 'P6\\n{w} {h}\\n255\\n' + raster."""
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.data.tobytes())
