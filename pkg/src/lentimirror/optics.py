"""Physical verification by exact ray tracing through the lenslet array.

This module never uses the closed-form imaging law from
lentimirror.grating; it refracts real rays with Snell's law at the
cylindrical lens caps so it can serve as an independent check of that
law.

Model (2D cross-section, millimetres): the screen's pixel plane is z=0,
lenslet m is a cylindrical cap of radius r centred at (m*T, h - r) with
its apex plane at z = h, where h is the substrate thickness. By default
h = n*f (= n*r/(n-1)), the back focal distance of a single refracting
surface, which places the pixels at the true focal plane. Rays refract
once at the cap and then travel straight through the substrate; the flat
exit face and the half-mirror are optically inert.

Visibility uses the viewing-zone notion: a screen point belongs to an
eye's stripe if some eye position within half the interocular distance
of it receives that point's light. A single eye point only ever sees a
sliver of each lenslet (the focused image of the pupil), so zone tracing
is what gives stripes their designed width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometry,
    DimensionMismatch,
    InvalidSpec,
    NoIntersection,
    NotOnScreenPlane,
    ParallelRays,
)
from .geometry import EyePose, ScreenMap, SpatialPoint, align_point, reflect_point
from .grating import GratingSpec, ViewerState, build_stripe_plan, min_viewing_distance
from .interleave import FrameBuffer, interleave

__all__ = [
    "DEFAULT_ZONE_WIDTH_MM",
    "LensletSurface",
    "VisibilityMap",
    "trace_eye_ray",
    "stripe_interval",
    "visibility_map",
    "perceived_view",
    "crosstalk_ratio",
    "triangulate_perceived",
    "CheckResult",
    "render_report",
    "run_verification",
]

# nominal human interocular distance, used when no tracked value is supplied
DEFAULT_ZONE_WIDTH_MM = 65.0


@dataclass(frozen=True)
class LensletSurface:
    """The traced lens stack: grating spec plus pixel-to-apex distance (mm).

    substrate_thickness defaults to n*f, the focal plane of the traced
    surface; override it for defocus sensitivity studies.
    """

    spec: GratingSpec
    substrate_thickness: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.substrate_thickness is None:
            object.__setattr__(
                self, "substrate_thickness", self.spec.n * self.spec.focal_length
            )
        if not self.substrate_thickness > 0.0:
            raise InvalidSpec(
                f"substrate thickness must be positive (got {self.substrate_thickness})"
            )

    def lenslet_x(self, index: int) -> float:
        """Centre of lenslet `index` on the screen, mm."""
        return index * self.spec.T


def _refract(dx, dz, nx, nz, n_ratio):
    """Snell refraction of unit directions (dx, dz) at unit normals (nx, nz).

    n_ratio is n_incident / n_transmitted. Returns (tx, tz, valid) where
    valid is False for totally internally reflected samples.
    """
    cos_i = -(dx * nx + dz * nz)
    sin2_t = n_ratio * n_ratio * (1.0 - cos_i * cos_i)
    valid = (sin2_t <= 1.0) & (cos_i > 0.0)
    cos_t = np.sqrt(np.where(valid, 1.0 - sin2_t, 0.0))
    k = n_ratio * cos_i - cos_t
    return n_ratio * dx + k * nx, n_ratio * dz + k * nz, valid


def _eye_mm(eye: SpatialPoint, surface: LensletSurface) -> tuple[float, float]:
    """Eye position in trace coordinates (mm above the pixel plane)."""
    if eye.z <= 0.0:
        raise NoIntersection("eye must be in front of the mirror (z > 0)")
    x_mm, z_mm = eye.x * 1000.0, eye.z * 1000.0
    if z_mm <= surface.substrate_thickness:
        raise NoIntersection("eye is at or below the lens apex plane")
    return x_mm, z_mm


def trace_eye_ray(
    eye: SpatialPoint, lenslet_index: int, surface: LensletSurface, samples: int = 64
) -> tuple[float, float]:
    """Screen interval (mm) reached by rays from one eye point through one lenslet.

    `samples` rays are aimed across the cylindrical cap, refracted with
    Snell's law and propagated to the pixel plane; the interval is the
    conservative min/max of the landing points. Totally internally
    reflected samples are excluded.
    """
    if samples < 3:
        raise ValueError("need at least 3 cap samples")
    eye_x, eye_z = _eye_mm(eye, surface)
    spec = surface.spec
    r, h = spec.r, surface.substrate_thickness
    cx, cz = surface.lenslet_x(lenslet_index), h - r

    phi_max = math.asin((spec.T / 2.0) / r)
    phi = np.linspace(-phi_max, phi_max, samples)
    sx = cx + r * np.sin(phi)
    sz = cz + r * np.cos(phi)

    dx, dz = sx - eye_x, sz - eye_z
    norm = np.hypot(dx, dz)
    dx, dz = dx / norm, dz / norm
    nx, nz = (sx - cx) / r, (sz - cz) / r
    tx, tz, valid = _refract(dx, dz, nx, nz, 1.0 / spec.n)
    valid &= tz < 0.0
    if not valid.any():
        raise NoIntersection(f"no refracted ray from lenslet {lenslet_index} reaches the screen")
    landings = sx[valid] + tx[valid] * (0.0 - sz[valid]) / tz[valid]
    return float(landings.min()), float(landings.max())


def _chief_landings(eye_x: float, eye_z: float, lens_x: np.ndarray, surface: LensletSurface):
    """Landing x of the chief ray (aimed at the curvature centre) per lenslet.

    Returns (landings, valid); a lenslet is invalid when its chief ray
    would enter through a neighbour's cap.
    """
    spec = surface.spec
    r, h = spec.r, surface.substrate_thickness
    cz = h - r
    dx_un, dz_un = lens_x - eye_x, cz - eye_z
    norm = np.hypot(dx_un, dz_un)
    dx, dz = dx_un / norm, dz_un / norm
    # entry point sits |EC| - r along the aim line
    t_hit = norm - r
    sx = eye_x + t_hit * dx
    sz = eye_z + t_hit * dz
    valid = np.abs(sx - lens_x) <= spec.T / 2.0
    nx, nz = (sx - lens_x) / r, (sz - cz) / r
    tx, tz, ok = _refract(dx, dz, nx, nz, 1.0 / spec.n)
    valid &= ok & (tz < 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        landings = sx + tx * (0.0 - sz) / tz
    return landings, valid


def stripe_interval(
    eye: SpatialPoint,
    lenslet_index: int,
    surface: LensletSurface,
    zone_width_mm: float = DEFAULT_ZONE_WIDTH_MM,
    samples: int = 9,
) -> tuple[float, float]:
    """Traced stripe (mm) for one lenslet: screen region reaching the eye's viewing zone.

    Chief rays are traced from `samples` positions spanning the zone of
    width zone_width_mm centred on the eye; the stripe is the span of
    their landing points.
    """
    if samples < 2:
        raise ValueError("need at least 2 zone samples")
    eye_x, eye_z = _eye_mm(eye, surface)
    lens = np.array([surface.lenslet_x(lenslet_index)])
    positions = np.linspace(eye_x - zone_width_mm / 2.0, eye_x + zone_width_mm / 2.0, samples)
    lands = []
    for p in positions:
        landing, valid = _chief_landings(float(p), eye_z, lens, surface)
        if valid[0]:
            lands.append(float(landing[0]))
    if not lands:
        raise NoIntersection(f"lenslet {lenslet_index} is not visible from the viewing zone")
    return min(lands), max(lands)


@dataclass(frozen=True)
class VisibilityMap:
    """Boolean visibility per pixel column for one eye."""

    columns: np.ndarray
    resolution: int

    def column_set(self) -> set[int]:
        return set(np.flatnonzero(self.columns).tolist())


def _screen_x_range_mm(screen: ScreenMap) -> tuple[float, float]:
    x_lo = -screen.camera_offset_x * 1000.0
    x_hi = (screen.width_px / screen.theta_x - screen.camera_offset_x) * 1000.0
    return x_lo, x_hi


def visibility_map(
    eye: SpatialPoint,
    surface: LensletSurface,
    screen: ScreenMap,
    zone_width_mm: float = DEFAULT_ZONE_WIDTH_MM,
    samples: int = 5,
) -> VisibilityMap:
    """Which pixel columns the eye sees through the whole on-screen lens array.

    Unions the traced stripe intervals of every on-screen lenslet and
    rasterises them half-open: column j is visible when its centre lies
    in [lo, hi). Lenslets whose chief rays cannot reach the eye are
    skipped.
    """
    eye_x, eye_z = _eye_mm(eye, surface)
    spec = surface.spec
    x_lo, x_hi = _screen_x_range_mm(screen)
    m_lo = math.floor(x_lo / spec.T) - 1
    m_hi = math.ceil(x_hi / spec.T) + 1
    lens_x = np.arange(m_lo, m_hi + 1) * spec.T

    positions = np.linspace(
        eye_x - zone_width_mm / 2.0, eye_x + zone_width_mm / 2.0, max(samples, 2)
    )
    all_lands = np.empty((len(positions), len(lens_x)))
    all_valid = np.empty((len(positions), len(lens_x)), dtype=bool)
    for i, p in enumerate(positions):
        all_lands[i], all_valid[i] = _chief_landings(float(p), eye_z, lens_x, surface)

    visible = np.zeros(screen.width_px, dtype=bool)
    for k in range(len(lens_x)):
        ok = all_valid[:, k]
        if not ok.all():
            continue
        lo, hi = all_lands[ok, k].min(), all_lands[ok, k].max()
        # column centre (j + 0.5)/theta - offset, half-open membership
        a = (lo / 1000.0 + screen.camera_offset_x) * screen.theta_x - 0.5
        b = (hi / 1000.0 + screen.camera_offset_x) * screen.theta_x - 0.5
        j0 = max(math.ceil(a), 0)
        j1 = min(math.ceil(b), screen.width_px)
        if j0 < j1:
            visible[j0:j1] = True
    return VisibilityMap(columns=visible, resolution=screen.width_px)


def perceived_view(
    eye: SpatialPoint,
    frame: FrameBuffer,
    surface: LensletSurface,
    screen: ScreenMap,
    zone_width_mm: float = DEFAULT_ZONE_WIDTH_MM,
) -> FrameBuffer:
    """The eye's retinal image of the screen: visible columns pass, the rest go black."""
    if frame.width != screen.width_px or frame.height != screen.height_px:
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} does not match screen "
            f"{screen.width_px}x{screen.height_px}"
        )
    vis = visibility_map(eye, surface, screen, zone_width_mm)
    out = np.zeros_like(frame.data)
    out[:, vis.columns] = frame.data[:, vis.columns]
    return FrameBuffer(out, frame.meta)


def crosstalk_ratio(
    frame_left_only: FrameBuffer,
    eye_right: SpatialPoint,
    surface: LensletSurface,
    screen: ScreenMap,
    zone_width_mm: float = DEFAULT_ZONE_WIDTH_MM,
) -> float:
    """Fraction of left-eye content pixels that leak into the right eye's view."""
    content = frame_left_only.data.any(axis=2)
    total = int(content.sum())
    if total == 0:
        return 0.0
    vis = visibility_map(eye_right, surface, screen, zone_width_mm)
    leaked = int(content[:, vis.columns].sum())
    return leaked / total


def triangulate_perceived(
    eyes: EyePose, q_left: SpatialPoint, q_right: SpatialPoint
) -> SpatialPoint:
    """The 3D point the viewer fuses from the two on-screen stimuli.

    Extends the rays eye->q beyond the screen and returns the midpoint of
    the shortest segment between them.
    """
    if q_left.z != 0.0 or q_right.z != 0.0:
        raise NotOnScreenPlane("triangulation stimuli must lie on the screen plane")
    p1 = np.array([eyes.left.x, eyes.left.y, eyes.left.z])
    p2 = np.array([eyes.right.x, eyes.right.y, eyes.right.z])
    d1 = np.array([q_left.x, q_left.y, q_left.z]) - p1
    d2 = np.array([q_right.x, q_right.y, q_right.z]) - p2

    a = float(d1 @ d1)
    b = float(d1 @ d2)
    c = float(d2 @ d2)
    w0 = p1 - p2
    d = float(d1 @ w0)
    e = float(d2 @ w0)
    denom = a * c - b * b
    if denom <= 1e-24 * a * c:
        raise ParallelRays("sight rays are parallel; no perceived point")
    s = (b * e - c * d) / denom
    t = (a * e - b * d) / denom
    near1 = p1 + s * d1
    near2 = p2 + t * d2
    mid = (near1 + near2) / 2.0
    return SpatialPoint(float(mid[0]), float(mid[1]), float(mid[2]))


@dataclass(frozen=True)
class CheckResult:
    """One verification record: measured value against its bound."""

    name: str
    measured: float
    bound: float
    passed: bool


def render_report(checks: list[CheckResult]) -> str:
    """Line-oriented report, one record per check."""
    lines = [
        f"{c.name} measured={c.measured:.6g} bound={c.bound:.6g} "
        f"{'PASS' if c.passed else 'FAIL'}"
        for c in checks
    ]
    return "\n".join(lines) + "\n"


def run_verification(
    spec: GratingSpec,
    screen: ScreenMap,
    eyes: EyePose,
    e_mm: float | None = None,
    seed: int = 0,
) -> list[CheckResult]:
    """Standard oracle suite against one viewing configuration.

    Checks: alignment round trip, traced-vs-analytic stripe width and
    centre, disjointness of the two eyes' visible columns, and the
    crosstalk leak ratio for a left-only frame.
    """
    checks = []
    rng = np.random.default_rng(seed)

    # 1. perception round trip: triangulating the aligned pair recovers the reflection
    worst = 0.0
    for _ in range(500):
        ex, ey = rng.uniform(-0.2, 0.2, 2)
        ez = rng.uniform(0.3, 1.5)
        ex2, ey2 = rng.uniform(-0.2, 0.2, 2)
        ez2 = rng.uniform(0.3, 1.5)
        pose = EyePose(SpatialPoint(ex, ey, ez), SpatialPoint(ex2, ey2, ez2))
        p = SpatialPoint(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.0, 1.0))
        try:
            pair = align_point(pose, p)
            fused = triangulate_perceived(pose, pair.q_left, pair.q_right)
        except (DegenerateGeometry, ParallelRays):
            continue
        mirrored = reflect_point(p)
        err = max(
            abs(fused.x - mirrored.x), abs(fused.y - mirrored.y), abs(fused.z - mirrored.z)
        )
        worst = max(worst, err)
    checks.append(CheckResult("alignment-round-trip-m", worst, 1e-9, worst < 1e-9))

    view = ViewerState.from_eyes(eyes, e_mm=e_mm)
    surface = LensletSurface(spec)
    f = spec.focal_length
    if view.l > f:
        w_mm = view.e * f / (view.l - f)
        lens = round(view.mid_x / spec.T)  # lenslet under the viewer
        lo, hi = stripe_interval(eyes.left, lens, surface, zone_width_mm=view.e)
        width_err = abs((hi - lo) - w_mm) / w_mm
        checks.append(CheckResult("stripe-width-rel-err", width_err, 0.05, width_err <= 0.05))

        # distance from the traced centre to the nearest analytic left-eye
        # stripe centre (the lattice is pitch-periodic, so fold by pitch)
        pitch = spec.T * view.l / (view.l - f)
        base = view.mid_x + f * (view.e / 2.0) / (view.l - f)
        offset = (lo + hi) / 2.0 - base
        folded = offset - pitch * round(offset / pitch)
        center_err = abs(folded) / spec.T
        checks.append(CheckResult("stripe-center-err-T", center_err, 0.25, center_err <= 0.25))

        vis_l = visibility_map(eyes.left, surface, screen, zone_width_mm=view.e)
        vis_r = visibility_map(eyes.right, surface, screen, zone_width_mm=view.e)
        shared = int((vis_l.columns & vis_r.columns).sum())
        checks.append(CheckResult("eye-visibility-shared-columns", shared, 0.0, shared == 0))

        plan = build_stripe_plan(view, spec, screen)
        white = FrameBuffer.filled(screen.width_px, screen.height_px, (255, 255, 255))
        black = FrameBuffer.black(screen.width_px, screen.height_px)
        left_only = interleave(white, black, plan)
        ratio = crosstalk_ratio(left_only, eyes.right, surface, screen, zone_width_mm=view.e)
        checks.append(CheckResult("crosstalk-ratio", ratio, 0.01, ratio <= 0.01))

        lmin = min_viewing_distance(spec, view.e)
        margin = view.l / lmin
        checks.append(CheckResult("viewing-distance-over-minimum", margin, 1.0, margin >= 1.0))
    return checks
