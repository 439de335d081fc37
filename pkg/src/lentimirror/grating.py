"""Lenticular grating imaging law and stripe planning.

All quantities in this module are millimetres (the natural scale of the
lens hardware); conversion to metres/pixels happens once, at the
ScreenMap boundary inside build_stripe_plan.

The imaging law for a cylindrical lenslet sheet:

    f = r / (n - 1)                 focal length from curvature + index
    w = e * f / (l - f)             on-screen stripe width
    pitch = T * l / (l - f)         spacing of successive same-eye stripes
    l_min = 2 * e * f / T           closest crosstalk-free viewing distance

Stripe centres form two interleaved lattices, one per eye, offset by
-e/2 and +e/2 inside the refraction term:

    lower(m) = mid_x + f*(m*T - e/2)/(l - f) + m*T
    upper(m) = mid_x + f*(m*T + e/2)/(l - f) + m*T

Lens inversion note: each lenslet images like a camera obscura, so the
pixels reaching the LEFT eye's viewing zone are the ones displaced
toward +e/2, i.e. the *upper* lattice (verified by the exact ray tracer
in lentimirror.optics). build_stripe_plan assigns eye content
accordingly; stripe_index_for keeps the nominal lower=left labelling
for lattice queries.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidSpec, InvalidViewing, InvariantViolation
from .geometry import EyePose, ScreenMap

__all__ = [
    "GratingSpec",
    "ViewerState",
    "Eye",
    "StripeCenters",
    "StripeEntry",
    "StripePlan",
    "focal_length",
    "stripe_width",
    "stripe_centers",
    "stripe_pitch",
    "min_viewing_distance",
    "stripe_index_for",
    "build_stripe_plan",
]


@dataclass(frozen=True)
class GratingSpec:
    """Lenticular sheet hardware: curvature radius r, refractive index n, period T (mm)."""

    r: float
    n: float
    T: float

    def __post_init__(self):
        if not self.n > 1.0:
            raise InvalidSpec(f"refractive index must exceed 1 (got {self.n})")
        if not self.r > 0.0:
            raise InvalidSpec(f"curvature radius must be positive (got {self.r})")
        if not self.T > 0.0:
            raise InvalidSpec(f"grating period must be positive (got {self.T})")

    @property
    def focal_length(self) -> float:
        """f = r / (n - 1), millimetres."""
        return self.r / (self.n - 1.0)


@dataclass(frozen=True)
class ViewerState:
    """Per-frame viewing quantities, millimetres.

    mid_x: eye-midpoint x; e: interocular distance; l: viewing distance
    (z of the eye midpoint).
    """

    mid_x: float
    e: float
    l: float

    def __post_init__(self):
        if not self.e > 0.0:
            raise InvariantViolation(f"interocular distance must be positive (got {self.e})")
        if not self.l > 0.0:
            raise InvariantViolation(f"viewing distance must be positive (got {self.l})")

    @classmethod
    def from_eyes(cls, eyes: EyePose, e_mm: float | None = None) -> "ViewerState":
        """Derive viewing quantities from tracked eye positions (metres).

        e is recomputed from the tracked pair unless a constant e_mm is
        supplied; l is the z of the eye midpoint.
        """
        dx = eyes.left.x - eyes.right.x
        dy = eyes.left.y - eyes.right.y
        dz = eyes.left.z - eyes.right.z
        if e_mm is None:
            e_mm = math.sqrt(dx * dx + dy * dy + dz * dz) * 1000.0
        return cls(
            mid_x=(eyes.left.x + eyes.right.x) / 2.0 * 1000.0,
            e=e_mm,
            l=(eyes.left.z + eyes.right.z) / 2.0 * 1000.0,
        )


class Eye(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class StripeCenters(NamedTuple):
    """The two stripe-centre lattices at index m: lower carries the -e/2 term, upper +e/2."""

    lower: float
    upper: float


def focal_length(spec: GratingSpec) -> float:
    """Focal length of the lenticular sheet, f = r/(n-1) mm."""
    return spec.focal_length


def _require_beyond_focus(l: float, f: float) -> None:
    if l <= f:
        raise InvalidViewing(f"viewing distance {l} mm must exceed the focal length {f} mm")


def stripe_width(spec: GratingSpec, view: ViewerState) -> float:
    """Width of the stripe each eye sees on the screen, w = e*f/(l-f) mm."""
    f = spec.focal_length
    _require_beyond_focus(view.l, f)
    return view.e * f / (view.l - f)


def stripe_pitch(spec: GratingSpec, view: ViewerState) -> float:
    """Spacing between successive same-eye stripe centres, T*l/(l-f) mm."""
    f = spec.focal_length
    _require_beyond_focus(view.l, f)
    return spec.T * view.l / (view.l - f)


def stripe_centers(view: ViewerState, spec: GratingSpec, m: int) -> StripeCenters:
    """Centre positions of stripe pair m, mm in camera-origin coordinates.

    lower(m) = mid_x + f*(m*T - e/2)/(l - f) + m*T
    upper(m) = mid_x + f*(m*T + e/2)/(l - f) + m*T
    """
    f = spec.focal_length
    _require_beyond_focus(view.l, f)
    mT = m * spec.T
    denom = view.l - f
    return StripeCenters(
        lower=view.mid_x + f * (mT - view.e / 2.0) / denom + mT,
        upper=view.mid_x + f * (mT + view.e / 2.0) / denom + mT,
    )


def min_viewing_distance(spec: GratingSpec, e: float) -> float:
    """Closest distance with no left/right stripe overlap, 2*e*f/T mm."""
    if not e > 0.0:
        raise InvalidSpec(f"interocular distance must be positive (got {e})")
    return 2.0 * e * spec.focal_length / spec.T


def stripe_index_for(x_target: float, view: ViewerState, spec: GratingSpec, eye: Eye) -> int:
    """Stripe index m whose nominal centre for `eye` is nearest x_target (mm).

    Nominal labelling: LEFT indexes the lower lattice, RIGHT the upper.
    Ties break toward the smaller m.
    """
    pitch = stripe_pitch(spec, view)
    c0 = stripe_centers(view, spec, 0)
    base = c0.lower if eye is Eye.LEFT else c0.upper
    k = math.floor((x_target - base) / pitch)
    # centres are affine in m, so the nearest lies in the floor bracket;
    # evaluate candidates with stripe_centers itself so distances agree
    # bit-for-bit with what callers see
    best = None
    for m in (k - 1, k, k + 1):
        c = stripe_centers(view, spec, m)
        center = c.lower if eye is Eye.LEFT else c.upper
        candidate = (abs(center - x_target), m)
        if best is None or candidate < best:
            best = candidate
    return best[1]


@dataclass(frozen=True)
class StripeEntry:
    """One stripe: index m, the eye that sees it, centre column and rounded-down width."""

    m: int
    eye: Eye
    center_px: float
    width_px: int


@dataclass(frozen=True)
class StripePlan:
    """Full-screen assignment of pixel columns to per-eye stripes.

    entries are sorted by center_px; width_px is identical across entries
    (floor of the analytic width, which keeps crosstalk-free plans
    overlap-free after rasterisation). l is the viewing distance in
    metres. When crosstalk_free is False the plan is still usable;
    consumers decide how to handle the overlap.
    """

    entries: tuple[StripeEntry, ...]
    l: float
    crosstalk_free: bool


def build_stripe_plan(view: ViewerState, spec: GratingSpec, screen: ScreenMap) -> StripePlan:
    """Enumerate every stripe whose centre is on screen and assign eyes.

    Each index m whose lower or upper centre lands on the screen
    contributes both entries. The upper (+e/2) lattice is the one the
    lens array steers into the left eye's viewing zone (camera-obscura
    inversion), so it carries Eye.LEFT; the lower lattice carries
    Eye.RIGHT.
    """
    f = spec.focal_length
    _require_beyond_focus(view.l, f)

    w_mm = stripe_width(spec, view)
    width_px = math.floor(w_mm / 1000.0 * screen.theta_x)
    pitch = stripe_pitch(spec, view)
    c0 = stripe_centers(view, spec, 0)

    def to_px(x_mm: float) -> float:
        return (x_mm / 1000.0 + screen.camera_offset_x) * screen.theta_x

    def on_screen(px: float) -> bool:
        return 0.0 <= px < screen.width_px

    # invert the affine centre map for both lattices to bound the m range
    x_lo = -screen.camera_offset_x * 1000.0
    x_hi = (screen.width_px / screen.theta_x - screen.camera_offset_x) * 1000.0
    m_lo = min(math.floor((x_lo - c0.lower) / pitch), math.floor((x_lo - c0.upper) / pitch)) - 1
    m_hi = max(math.ceil((x_hi - c0.lower) / pitch), math.ceil((x_hi - c0.upper) / pitch)) + 1

    entries = []
    for m in range(m_lo, m_hi + 1):
        c = stripe_centers(view, spec, m)
        lower_px, upper_px = to_px(c.lower), to_px(c.upper)
        if on_screen(lower_px) or on_screen(upper_px):
            entries.append(StripeEntry(m=m, eye=Eye.RIGHT, center_px=lower_px, width_px=width_px))
            entries.append(StripeEntry(m=m, eye=Eye.LEFT, center_px=upper_px, width_px=width_px))

    entries.sort(key=lambda s: (s.center_px, s.eye is Eye.RIGHT))
    crosstalk_free = view.l >= min_viewing_distance(spec, view.e)
    return StripePlan(entries=tuple(entries), l=view.l / 1000.0, crosstalk_free=crosstalk_free)
