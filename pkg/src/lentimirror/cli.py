"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 geometry
error. Reports go to stdout unless --out is given.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateGeometry,
    InvalidDepth,
    InvalidSpec,
    InvalidViewing,
    InvariantViolation,
    NoIntersection,
    NotOnScreenPlane,
    ParallelRays,
    ParseError,
    UnsupportedFormat,
)
from .geometry import EyePose, SpatialPoint, align_point, to_screen_pixels
from .grating import ViewerState, build_stripe_plan, min_viewing_distance, stripe_pitch, stripe_width
from .interleave import Anchor, ArScene, Contour, FrameBuffer, compose_ar_frame, interleave, render_eye_views
from .optics import (
    CheckResult,
    LensletSurface,
    perceived_view,
    render_report,
    run_verification,
)
from .traceio import load_config, load_scene, load_trace, read_ppm, write_ppm

INPUT_ERRORS = (
    ParseError,
    InvariantViolation,
    UnsupportedFormat,
    InvalidDepth,
    InvalidSpec,
    InvalidViewing,
    FileNotFoundError,
    IsADirectoryError,
)
GEOMETRY_ERRORS = (DegenerateGeometry, NotOnScreenPlane, ParallelRays, NoIntersection)


def _emit(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pose_for_frame(trace, index: int, l_mm: float | None) -> EyePose:
    if not 0 <= index < len(trace.poses):
        raise InvariantViolation(f"frame {index} out of range (trace has {len(trace.poses)})")
    pose = trace.poses[index]
    if l_mm is not None:
        z = l_mm / 1000.0
        pose = EyePose(
            replace(pose.left, z=z), replace(pose.right, z=z), timestamp_ms=pose.timestamp_ms
        )
    return pose


def cmd_align(args) -> int:
    spec, screen, intr = load_config(args.config)
    trace = load_trace(args.trace, intrinsics=intr)
    scene = load_scene(args.scene)
    lines = ["frame anchor uL vL uR vR"]
    for fi, pose in enumerate(trace.poses):
        for ai, anchor in enumerate(scene.anchors):
            try:
                pair = align_point(pose, anchor.point)
            except DegenerateGeometry as exc:
                raise DegenerateGeometry(f"frame {fi} anchor {ai}: {exc}") from exc
            pl = to_screen_pixels(pair.q_left, screen)
            pr = to_screen_pixels(pair.q_right, screen)
            lines.append(f"{fi} {ai} {pl.u!r} {pl.v!r} {pr.u!r} {pr.v!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_design(args) -> int:
    spec, _screen, _intr = load_config(args.config)
    if args.e is None or args.l is None:
        raise InvariantViolation("design requires --e and --l (millimetres)")
    view = ViewerState(mid_x=0.0, e=args.e, l=args.l)
    f = spec.focal_length
    w = stripe_width(spec, view)
    pitch = stripe_pitch(spec, view)
    l_min = min_viewing_distance(spec, args.e)
    verdict = "OK" if args.l >= l_min else "CROSSTALK"
    report = (
        f"f_mm {f!r}\n"
        f"w_mm {w!r}\n"
        f"pitch_mm {pitch!r}\n"
        f"l_min_mm {l_min!r}\n"
        f"verdict {verdict}\n"
    )
    _emit(report, args.out)
    return 0


def cmd_interleave(args) -> int:
    spec, screen, intr = load_config(args.config)
    trace = load_trace(args.trace, intrinsics=intr)
    pose = _pose_for_frame(trace, args.frame, args.l)
    left = read_ppm(args.left_ppm)
    right = read_ppm(args.right_ppm)
    view = ViewerState.from_eyes(pose, e_mm=args.e)
    plan = build_stripe_plan(view, spec, screen)
    frame = interleave(left, right, plan)
    if not args.out:
        raise InvariantViolation("interleave requires --out for the PPM result")
    write_ppm(frame, args.out)
    return 0


def _anchor_visibility_checks(scene, pose, spec, screen, view) -> list[CheckResult]:
    """End-to-end check: each anchor shows up near its own-eye stimulus only."""
    surface = LensletSurface(spec)
    frame = compose_ar_frame(scene, pose, spec, screen, e_mm=view.e)
    seen_left = perceived_view(pose.left, frame, surface, screen, zone_width_mm=view.e)
    seen_right = perceived_view(pose.right, frame, surface, screen, zone_width_mm=view.e)
    bad = 0
    for anchor in scene.anchors:
        pair = align_point(pose, anchor.point)
        pl = to_screen_pixels(pair.q_left, screen)
        pr = to_screen_pixels(pair.q_right, screen)
        reach = anchor.radius_px + 1
        if not _color_near(seen_left, anchor.color, pl.u, pl.v, reach):
            bad += 1
        elif _color_near(seen_left, anchor.color, pr.u, pr.v, reach):
            bad += 1
        elif not _color_near(seen_right, anchor.color, pr.u, pr.v, reach):
            bad += 1
        elif _color_near(seen_right, anchor.color, pl.u, pl.v, reach):
            bad += 1
    return [CheckResult("anchor-visibility-failures", bad, 0.0, bad == 0)]


def _color_near(frame: FrameBuffer, color, u: float, v: float, radius: float) -> bool:
    h, w = frame.height, frame.width
    lo_x = max(int(np.floor(u - radius)), 0)
    hi_x = min(int(np.ceil(u + radius)) + 1, w)
    lo_y = max(int(np.floor(v - radius)), 0)
    hi_y = min(int(np.ceil(v + radius)) + 1, h)
    if lo_x >= hi_x or lo_y >= hi_y:
        return False
    patch = frame.data[lo_y:hi_y, lo_x:hi_x]
    ys, xs = np.mgrid[lo_y:hi_y, lo_x:hi_x]
    inside = (xs - u) ** 2 + (ys - v) ** 2 <= radius * radius
    match = (patch == np.asarray(color, dtype=np.uint8)).all(axis=2)
    return bool((match & inside).any())


def cmd_simulate(args) -> int:
    spec, screen, intr = load_config(args.config)
    trace = load_trace(args.trace, intrinsics=intr)
    pose = _pose_for_frame(trace, args.frame, args.l)
    checks = run_verification(spec, screen, pose, e_mm=args.e, seed=args.seed)
    if args.scene:
        scene = load_scene(args.scene)
        view = ViewerState.from_eyes(pose, e_mm=args.e)
        checks += _anchor_visibility_checks(scene, pose, spec, screen, view)
    _emit(render_report(checks), args.out)
    return 0 if all(c.passed for c in checks) else 1


def _synthetic_scene() -> ArScene:
    anchors = (
        Anchor(SpatialPoint(-0.01, 0.005, 0.25), (255, 80, 0), 3),
        Anchor(SpatialPoint(0.0, -0.004, 0.3), (0, 200, 255), 3),
        Anchor(SpatialPoint(0.012, 0.0, 0.2), (80, 255, 80), 3),
    )
    contour = Contour(
        color=(255, 255, 0),
        points=(
            SpatialPoint(-0.008, -0.006, 0.25),
            SpatialPoint(0.0, 0.006, 0.25),
            SpatialPoint(0.008, -0.006, 0.25),
        ),
    )
    return ArScene(anchors=anchors, contours=(contour,))


def cmd_bench(args) -> int:
    if args.frame is None or args.frame <= 0:
        raise InvariantViolation("bench requires --frame N with N > 0 synthetic frames")
    spec, screen, _intr = load_config(args.config)
    scene = _synthetic_scene()
    n = args.frame
    timings = {"plan": [], "render": [], "interleave": [], "total": []}
    for i in range(n):
        # small deterministic head motion so each frame recomputes everything
        dx = 0.01 * np.sin(2 * np.pi * i / max(n, 1))
        pose = EyePose(
            SpatialPoint(-0.0325 + dx, 0.0, 0.6), SpatialPoint(0.0325 + dx, 0.0, 0.6)
        )
        t0 = time.perf_counter()
        view = ViewerState.from_eyes(pose)
        plan = build_stripe_plan(view, spec, screen)
        t1 = time.perf_counter()
        left, right = render_eye_views(scene, pose, screen)
        t2 = time.perf_counter()
        interleave(left, right, plan)
        t3 = time.perf_counter()
        timings["plan"].append((t1 - t0) * 1000.0)
        timings["render"].append((t2 - t1) * 1000.0)
        timings["interleave"].append((t3 - t2) * 1000.0)
        timings["total"].append((t3 - t0) * 1000.0)
    lines = [f"frames {n} resolution {screen.width_px}x{screen.height_px}"]
    for stage in ("plan", "render", "interleave", "total"):
        vals = sorted(timings[stage])
        median = statistics.median(vals)
        p95 = vals[min(int(0.95 * len(vals)), len(vals) - 1)]
        lines.append(f"stage {stage} median_ms {median:.3f} p95_ms {p95:.3f}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lentimirror",
        description="Lenticular mirror-AR display: alignment, stripe planning, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--trace", help="eye trace file path")
        p.add_argument("--scene", help="scene file path")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
        p.add_argument("--frame", type=int, default=0, help="trace frame index (bench: frame count)")
        p.add_argument("--e", type=float, default=None, help="interocular distance override, mm")
        p.add_argument("--l", type=float, default=None, help="viewing distance override, mm")

    p_align = sub.add_parser("align", help="per-frame anchor alignment table")
    common(p_align)

    p_design = sub.add_parser("design", help="grating design report for given e and l")
    common(p_design)

    p_inter = sub.add_parser("interleave", help="interleave two eye PPMs for one trace frame")
    common(p_inter)
    p_inter.add_argument("left_ppm", help="left-eye PPM")
    p_inter.add_argument("right_ppm", help="right-eye PPM")

    p_sim = sub.add_parser("simulate", help="run the ray-traced verification suite")
    common(p_sim)

    p_bench = sub.add_parser("bench", help="per-stage timing over synthetic frames (--frame N)")
    common(p_bench)

    return parser


_COMMANDS = {
    "align": cmd_align,
    "design": cmd_design,
    "interleave": cmd_interleave,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    missing = []
    if args.command in ("align", "simulate"):
        if not args.trace:
            missing.append("--trace")
    if args.command == "align" and not args.scene:
        missing.append("--scene")
    if args.command == "interleave" and not args.trace:
        missing.append("--trace")
    if missing:
        parser.error(f"{args.command} requires {' and '.join(missing)}")
    try:
        return _COMMANDS[args.command](args)
    except GEOMETRY_ERRORS as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return 3
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
