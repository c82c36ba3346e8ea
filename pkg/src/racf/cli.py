"""Command line front end.

Subcommands: track (run the tracker over a sequence directory), synth
(render a scripted test scene), eval (failure/reset protocol with metrics),
ablate (the fixed component on/off grid), emit-config (print the effective
configuration). Sequence problems - missing ground truth, malformed
annotations - exit with status 2 before any tracking happens.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .config import RunConfig, load_config
from .dcf import dump_filter
from .evaluate import (SequenceError, box_from_corners, load_sequence,
                       run_protocol)
from .imaging import load_frame
from .synth import SCENARIOS, build_scenario, write_sequence
from .tracker import FrameRecord, init as tracker_init, step as tracker_step

# name -> toggles switched on relative to the all-off baseline
ABLATION_VARIANTS = (
    ("baseline", frozenset()),
    ("D", frozenset({"dc"})),
    ("DF", frozenset({"dc", "fpe"})),
    ("R", frozenset({"rotation"})),
    ("RF", frozenset({"rotation", "fpe"})),
    ("RD", frozenset({"rotation", "dc"})),
    ("RDF", frozenset({"rotation", "dc", "fpe"})),
    ("RIDF", frozenset({"rotation", "ic", "dc", "fpe"})),
)

_TOGGLE_FIELDS = {"dc": "use_dc", "fpe": "use_fpe",
                  "rotation": "use_rotation", "ic": "use_ic"}

# (cli dest, config field) pairs for value-carrying options
_VALUE_OPTIONS = (
    ("ic_amount", "ic_amount"),
    ("ic_sigma", "ic_sigma"),
    ("ic_threshold", "ic_threshold"),
    ("scales", "scales"),
    ("scale_step", "scale_step"),
    ("rot_halfcount", "rot_halfcount"),
    ("rot_delta", "rot_delta"),
    ("fpe_rho", "fpe_rho"),
    ("omega_d", "omega_d"),
    ("omega_a", "omega_a"),
)


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="key = value file; command line flags win")
    p.add_argument("--ic-amount", type=float, help="unsharp gain")
    p.add_argument("--ic-sigma", type=float, help="unsharp blur sigma")
    p.add_argument("--ic-threshold", type=float,
                   help="unsharp activation threshold")
    p.add_argument("--no-ic", action="store_true",
                   help="skip illumination correction")
    p.add_argument("--scales", type=int, help="number of scale candidates")
    p.add_argument("--scale-step", type=float, help="scale ladder ratio")
    p.add_argument("--rot-halfcount", type=int,
                   help="orientation candidates each side of current angle")
    p.add_argument("--rot-delta", type=float,
                   help="orientation candidate spacing, degrees")
    p.add_argument("--fpe-rho", type=float,
                   help="distance softening in the peak weighting")
    p.add_argument("--no-fpe", action="store_true",
                   help="rank peaks by raw score only")
    p.add_argument("--no-rotation", action="store_true",
                   help="keep the filter axis aligned")
    p.add_argument("--omega-d", type=float,
                   help="displacement smoothing weight")
    p.add_argument("--omega-a", type=float, help="angle smoothing weight")
    p.add_argument("--no-dc", action="store_true",
                   help="report raw displacements, no smoothing")


def _build_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    updates = {}
    for dest, fld in _VALUE_OPTIONS:
        value = getattr(args, dest)
        if value is not None:
            updates[fld] = value
    if args.no_ic:
        updates["use_ic"] = False
    if args.no_fpe:
        updates["use_fpe"] = False
    if args.no_rotation:
        updates["use_rotation"] = False
    if args.no_dc:
        updates["use_dc"] = False
    return replace(cfg, **updates)


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 16 or h < 16:
        raise argparse.ArgumentTypeError("sizes below 16x16 are not useful")
    return w, h


def _write_pgm(path: str, arr: np.ndarray) -> None:
    lo, hi = float(arr.min()), float(arr.max())
    if hi - lo < 1e-12:
        img = np.zeros(arr.shape, dtype=np.uint8)
    else:
        img = np.rint(255.0 * (arr - lo) / (hi - lo)).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def cmd_track(args) -> int:
    cfg = _build_config(args)
    paths, gt = load_sequence(args.sequence)
    if args.dump_scoremaps:
        os.makedirs(args.dump_scoremaps, exist_ok=True)

    state = tracker_init(load_frame(paths[0]), box_from_corners(gt[0]), cfg)
    records = [state.last]
    for path in paths[1:]:
        state, _ = tracker_step(state, load_frame(path))
        records.append(state.last)
        if args.dump_scoremaps and state.last_det is not None:
            _write_pgm(os.path.join(args.dump_scoremaps,
                                    f"scoremap_{state.frame_index:04d}.pgm"),
                       state.last_det.score_map.s)

    lines = [FrameRecord.csv_header()] + [r.csv_row() for r in records]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.dump_filter:
        dump_filter(state.filt, args.dump_filter)
    return 0


def cmd_eval(args) -> int:
    cfg = _build_config(args)
    paths, gt = load_sequence(args.sequence)
    report = run_protocol(paths, gt, cfg)
    print(report.summary_line())
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.summary_line() + "\n")
            fh.write("frame,iou,center_error\n")
            for i in range(report.n_frames):
                fh.write(f"{i},{report.ious[i]!r},"
                         f"{report.center_errors[i]!r}\n")
    return 0


def cmd_synth(args) -> int:
    spec = build_scenario(args.scenario, args.seed, n_frames=args.frames,
                          size=args.size, target_size=args.target)
    write_sequence(args.out_dir, spec)
    print(f"{spec.name}: {spec.n_frames} frames -> {args.out_dir}")
    return 0


def _thread_count() -> int:
    env = os.environ.get("RACF_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"RACF_THREADS must be an integer, got {env!r}")
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


def cmd_ablate(args) -> int:
    cfg0 = _build_config(args)
    sequences = []
    for seq_dir in args.sequences:
        paths, gt = load_sequence(seq_dir)
        sequences.append((os.path.basename(os.path.normpath(seq_dir)),
                          paths, gt))

    jobs = []
    for vname, toggles in ABLATION_VARIANTS:
        flags = {fld: (key in toggles) for key, fld in _TOGGLE_FIELDS.items()}
        det_cfg = replace(cfg0, **flags)
        for sname, paths, gt in sequences:
            jobs.append((vname, sname, det_cfg, paths, gt))

    def run_one(job):
        vname, sname, det_cfg, paths, gt = job
        return (vname, sname), run_protocol(paths, gt, det_cfg)

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        results = dict(pool.map(run_one, jobs))

    os.makedirs(args.report_dir, exist_ok=True)
    out_path = os.path.join(args.report_dir, "report.csv")
    # fixed emit order keyed by (variant, sequence): identical runs give
    # identical bytes no matter how many workers raced above
    lines = ["variant,sequence,frames,failures,skipped,mean_iou,precision20"]
    for vname, _ in ABLATION_VARIANTS:
        for sname, _, _ in sequences:
            r = results[(vname, sname)]
            lines.append(f"{vname},{sname},{r.n_frames},{r.n_failures},"
                         f"{r.n_skipped},{r.mean_iou!r},{r.precision_20!r}")
    for vname, _ in ABLATION_VARIANTS:
        reps = [results[(vname, s[0])] for s in sequences]
        mean_iou = float(np.mean([r.mean_iou for r in reps]))
        mean_prec = float(np.mean([r.precision_20 for r in reps]))
        fails = sum(r.n_failures for r in reps)
        skipped = sum(r.n_skipped for r in reps)
        frames = sum(r.n_frames for r in reps)
        lines.append(f"{vname},ALL,{frames},{fails},{skipped},"
                     f"{mean_iou!r},{mean_prec!r}")
        print(f"{vname:>9}: mean_iou={mean_iou:.4f} "
              f"precision20={mean_prec:.4f} failures={fails}")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"report: {out_path}")
    return 0


def cmd_emit_config(args) -> int:
    print(_build_config(args).emit())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="racf",
        description="rotation-adaptive correlation filter tracking")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track a sequence, write per-frame boxes")
    p.add_argument("sequence", help="directory with frames + groundtruth.txt")
    p.add_argument("--output", metavar="CSV",
                   help="result file (default: stdout)")
    p.add_argument("--dump-scoremaps", metavar="DIR",
                   help="write the winning score map per frame as PGM")
    p.add_argument("--dump-filter", metavar="FILE",
                   help="store the final filter coefficients")
    _add_run_options(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("synth", help="render a synthetic test sequence")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--size", type=_parse_size, default=(192, 192),
                   help="frame size WxH")
    p.add_argument("--target", type=_parse_size, default=(48, 48),
                   help="target size WxH")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="run the failure/reset protocol")
    p.add_argument("sequence")
    p.add_argument("--report", metavar="FILE", help="write per-frame metrics")
    _add_run_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="component on/off grid over sequences")
    p.add_argument("sequences", nargs="+")
    p.add_argument("--report-dir", default="ablation",
                   help="where report.csv goes")
    _add_run_options(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("emit-config", help="print the effective settings")
    _add_run_options(p)
    p.set_defaults(func=cmd_emit_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SequenceError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
