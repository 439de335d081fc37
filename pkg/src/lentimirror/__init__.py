"""lentimirror: geometry, stripe interleaving and ray-traced verification
for lenticular mirror-AR displays."""

from .errors import (
    DegenerateGeometry,
    DimensionMismatch,
    InvalidDepth,
    InvalidSpec,
    InvalidViewing,
    InvariantViolation,
    LentimirrorError,
    NoIntersection,
    NotOnScreenPlane,
    ParallelRays,
    ParseError,
    TotalInternalReflection,
    UnsupportedFormat,
)
from .geometry import (
    EyePose,
    PixelCoord,
    ScreenMap,
    ScreenPair,
    SpatialPoint,
    align_contour,
    align_point,
    reflect_point,
    sight_screen_intersection,
    to_screen_pixels,
)
from .grating import (
    Eye,
    GratingSpec,
    StripeCenters,
    StripeEntry,
    StripePlan,
    ViewerState,
    build_stripe_plan,
    focal_length,
    min_viewing_distance,
    stripe_centers,
    stripe_index_for,
    stripe_pitch,
    stripe_width,
)
from .interleave import (
    Anchor,
    ArScene,
    Contour,
    FrameBuffer,
    compose_ar_frame,
    interleave,
    render_eye_views,
)
from .optics import (
    DEFAULT_ZONE_WIDTH_MM,
    CheckResult,
    LensletSurface,
    VisibilityMap,
    crosstalk_ratio,
    perceived_view,
    render_report,
    run_verification,
    stripe_interval,
    trace_eye_ray,
    triangulate_perceived,
    visibility_map,
)
from .traceio import (
    CameraIntrinsics,
    EyeTrace,
    TraceMode,
    deproject,
    load_config,
    load_scene,
    load_trace,
    read_ppm,
    save_config,
    save_scene,
    save_trace,
    write_ppm,
)

__version__ = "0.1.0"
