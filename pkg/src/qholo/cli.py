"""``qholo`` command line: simulate, g2, reconstruct, metrics, pipeline.

Exit codes: 0 ok, 2 configuration error, 3 data or file error,
4 detection or undefined-statistic error.
"""

import argparse
import os
import sys

import numpy as np

from . import fileio
from .coincidence import find_delay, rolling_g2, total_report
from .config import load_config, validate
from .errors import ConfigurationError, DataError, QHoloError, UndefinedStatisticError
from .experiment import HERALD, full_run
from .metrics import (
    PARAM_NAMES,
    central_profile,
    fit_fringe,
    fringe_snr,
    snr_inputs_from_frames,
    snr_total,
    visibility,
)
from .reconstruct import Method, fft2, reconstruct_hologram
from .scan import Channel, HologramFrame, acquire, acquire_line
from .source_sim import TimeTagStream


class Run:
    """Resolved configuration plus the list of files written so far."""

    def __init__(self, args):
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.set("run.seed", args.seed)
        if args.out is not None:
            cfg.set("run.out", args.out)
        if args.window_ns is not None:
            cfg.set("g2.window_ns", args.window_ns)
            cfg.set("scan.coincidence_window", args.window_ns)
        if args.method is not None:
            cfg.set("mask.method", args.method)
        if args.mask_radius is not None:
            cfg.set("mask.radius", args.mask_radius)
        if getattr(args, "bin_duration", None) is not None:
            cfg.set("g2.bin_duration", args.bin_duration)
        self.cfg = validate(cfg)
        self.out = cfg["run.out"]
        self.files = []
        try:
            os.makedirs(self.out, exist_ok=True)
        except OSError as e:
            raise DataError(f"cannot create output directory {self.out}: {e.strerror}") from None

    def path(self, name):
        p = os.path.join(self.out, name)
        self.files.append(p)
        return p

    def finish(self):
        cfg_path = self.path("config.resolved.ini")
        text = self.cfg.to_ini()
        with open(cfg_path, "w") as fh:
            fh.write(text)
        fileio.write_manifest(self.out, self.cfg.seed, text, self.files)


# simulate --------------------------------------------------------------------

def simulate(run):
    cfg = run.cfg
    source, detectors, scan = cfg.source(), cfg.detectors(), cfg.scan()
    # characterisation run: fibre parked on the brightest pixel
    tags = full_run(source, detectors, pixel_probability=scan.throughput)
    tag_files = []
    for ch, stream in sorted(tags.items()):
        p = run.path(f"tags_ch{ch}.bin")
        fileio.write_tags(p, stream, duration_ps=stream.duration_ps)
        run.files.append(p + ".meta")
        tag_files.append(p)
    acq = acquire(cfg.object_map(), cfg.beam(), cfg.tilt(), source, detectors, scan,
                  calibration=cfg.calibration())
    frames = {}
    for frame in acq.frames():
        name = frame.channel.value
        fileio.write_frame(run.path(f"frame_{name}.csv"), frame)
        fileio.write_pgm(run.path(f"frame_{name}.pgm"), frame.counts)
        frames[name] = frame
    return tag_files, frames


def cmd_simulate(args):
    run = Run(args)
    simulate(run)
    run.finish()
    return 0


# g2 --------------------------------------------------------------------------

def _load_streams(paths):
    streams = {}
    for p in paths:
        reader = fileio.read_tags_csv if str(p).endswith(".csv") else fileio.read_tags
        for ch, s in reader(p).items():
            if ch in streams:
                merged = np.union1d(streams[ch].tags, s.tags)
                if merged.size != len(streams[ch]) + len(s):
                    raise DataError(f"channel {ch} appears in several files with shared tags")
                s = TimeTagStream(ch, merged, max(streams[ch].duration_ps, s.duration_ps))
            streams[ch] = s
    return streams


def g2_analysis(run, tag_files, channels=(1, 2, 3), calibrate=False):
    streams = _load_streams(tag_files)
    duration = max((s.duration_ps for s in streams.values()), default=0)
    h, a, b = (streams.get(c, TimeTagStream(c, np.zeros(0, np.int64), duration))
               for c in channels)
    offsets = (0, 0)
    if calibrate:
        offsets = (find_delay(h, a).offset_ps, find_delay(h, b).offset_ps)
    window = int(round(run.cfg["g2.window_ns"] * 1000))
    bin_s = run.cfg["g2.bin_duration"]
    reports = rolling_g2(h, a, b, window, bin_s, offsets, duration_ps=duration or None)
    total = total_report(reports)
    fileio.write_reports(run.path("g2.csv"), reports, bin_s, total)
    return total


def cmd_g2(args):
    run = Run(args)
    total = g2_analysis(run, args.tags, tuple(args.channels), args.calibrate_delays)
    run.finish()
    print(f"g2(0) = {total.g2:.6g} +- {total.g2_sigma:.2g}  "
          f"(N1={total.N1} N12={total.N12} N13={total.N13} N123={total.N123})")
    if not total.defined:
        raise UndefinedStatisticError("whole-run g2(0) undefined: no heralded coincidences")
    return 0


# reconstruct -------------------------------------------------------------------

def reconstruct_frame(run, frame, name, calibration_frame=None, center=None):
    cfg = run.cfg
    rec = reconstruct_hologram(frame, cfg["mask.method"], cfg["mask.radius"], cfg["mask.shape"],
                               center=center, half_width=cfg["mask.half_width"],
                               calibration_frame=calibration_frame)
    prefix = os.path.join(run.out, f"recon_{name}")
    fileio.write_field(prefix, rec.object_field)
    run.files += [f"{prefix}_amplitude.csv", f"{prefix}_phase.csv"]
    fileio.write_pgm(run.path(f"recon_{name}_amplitude.pgm"), rec.object_field.amplitude)
    fileio.write_pgm(run.path(f"recon_{name}_phase.pgm"),
                     fileio.to_gray(rec.object_field.phase, lo=-np.pi, hi=np.pi))
    fileio.write_pgm(run.path(f"spectrum_{name}.pgm"), np.log1p(np.abs(fft2(frame).data)))
    return rec


def cmd_reconstruct(args):
    run = Run(args)
    frame = fileio.read_frame(args.frame)
    cal = fileio.read_frame(args.calibration_frame) if args.calibration_frame else None
    if Method(run.cfg["mask.method"]) is Method.CALIBRATION_FRAME and cal is None:
        raise ConfigurationError("--method calibration_frame needs --calibration-frame")
    rec = reconstruct_frame(run, frame, frame.channel.value, cal)
    run.finish()
    print(f"first order at (u, v) = {rec.center}, mask radius {rec.mask.radius}")
    return 0


# metrics -----------------------------------------------------------------------

def _soft(rows, name, func):
    """Append (name, value, flag) rows; statistic failures become flagged rows."""
    try:
        value = func()
    except UndefinedStatisticError as e:
        rows.append((name, None, type(e).__name__))
        return None
    rows.append((name, repr(float(value)), ""))
    return value


def line_metrics(profile, label, rows, fit_line=None):
    _soft(rows, f"{label}.visibility", lambda: visibility(profile))
    line = profile if fit_line is None else fit_line
    try:
        fit = fit_fringe(line)
    except QHoloError as e:
        rows.append((f"{label}.fit", None, type(e).__name__))
        return
    flag = "degenerate" if fit.degenerate else ""
    for n in PARAM_NAMES:
        rows.append((f"{label}.{n}", repr(getattr(fit.params, n)), flag))
    rows.append((f"{label}.residual_rms", repr(fit.residual_rms), flag))
    try:
        snr, capped = fringe_snr(fit, line)
        rows.append((f"{label}.fringe_snr", repr(snr), "capped" if capped else ""))
    except UndefinedStatisticError as e:
        rows.append((f"{label}.fringe_snr", None, type(e).__name__))


def frame_metrics(run, frame, rows):
    label = frame.channel.value
    if frame.shape[0] == 1:
        line_metrics(frame.counts[0], label + ".line", rows)
    else:
        prof = central_profile(frame, run.cfg["metrics.profile_rows"])
        line_metrics(prof, label + ".profile", rows)


def total_snr_rows(run, heralded, nonheralded, rows):
    calib = run.cfg.calibration()
    window = run.cfg["scan.coincidence_window"] * 1e-9
    herald_dark = run.cfg["detector.herald.dark_rate"]
    include_dd = run.cfg["metrics.include_dd"]
    for per_pixel, tag in ((True, "per_pixel"), (False, "frame")):
        inp = snr_inputs_from_frames(heralded, nonheralded, calib.herald_singles_rate, window,
                                     herald_dark, per_pixel)
        _soft(rows, f"snr_h.{tag}", lambda: snr_total(inp, "heralded", include_dd))
        _soft(rows, f"snr_nh.{tag}", lambda: snr_total(inp, "nonheralded"))


def write_metrics(run, rows, name="metrics.csv"):
    fileio.write_rows(run.path(name), ("quantity", "value", "flag"), rows)


def cmd_metrics(args):
    run = Run(args)
    frame = fileio.read_frame(args.frame)
    rows = []
    frame_metrics(run, frame, rows)
    if args.nonheralded:
        other = fileio.read_frame(args.nonheralded)
        frame_metrics(run, other, rows)
        if frame.shape != other.shape:
            raise DataError("heralded and non-heralded frames differ in shape")
        total_snr_rows(run, frame, other, rows)
    write_metrics(run, rows)
    run.finish()
    for q, v, f in rows:
        print(f"{q:32s} {v if v is not None else '-':>24s} {f}")
    return 0


# pipeline ----------------------------------------------------------------------

def cmd_pipeline(args):
    run = Run(args)
    cfg = run.cfg
    tag_files, frames = simulate(run)
    total = g2_analysis(run, tag_files)
    h, nh = frames["heralded"], frames["nonheralded"]
    rows = []
    # both frames use the first-order position found on the heralded one
    center = None
    for frame in (h, nh):
        try:
            rec = reconstruct_frame(run, frame, frame.channel.value, center=center)
            center = rec.center
        except QHoloError as e:
            rows.append((f"{frame.channel.value}.reconstruct", None, type(e).__name__))
        frame_metrics(run, frame, rows)
    total_snr_rows(run, h, nh, rows)

    scan = cfg.scan()
    row = cfg["metrics.line_row"]
    row = scan.height // 2 if row is None else row
    line = acquire_line(cfg.object_map(), cfg.beam(), cfg.tilt(), cfg.source(),
                        cfg.detectors(), scan, row, cfg["metrics.line_oversample"],
                        calibration=cfg.calibration())
    dwell = scan.integration_time * cfg["metrics.line_oversample"]
    for counts, ch in ((line.heralded, Channel.HERALDED), (line.nonheralded, Channel.NONHERALDED)):
        lf = HologramFrame(counts[None, :], scan.pixel_size, dwell, ch)
        fileio.write_frame(run.path(f"line_{ch.value}.csv"), lf)
        line_metrics(counts, f"{ch.value}.line", rows)
    rows.append(("g2", repr(total.g2) if total.defined else None,
                 "" if total.defined else "UndefinedStatisticError"))
    write_metrics(run, rows)
    run.finish()
    print(f"pipeline output in {run.out}: {len(run.files) + 1} files")
    return 0


# entry point -------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--out", help="output directory (overrides run.out)")
    p.add_argument("--window-ns", type=float, help="coincidence window in ns")
    p.add_argument("--method", choices=[m.value for m in Method],
                   help="linear-phase removal method")
    p.add_argument("--mask-radius", type=int, help="first-order mask radius in pixels")


def build_parser():
    parser = argparse.ArgumentParser(prog="qholo",
                                     description="Heralded single-photon holography tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="time tags and hologram frames")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("g2", help="rolling heralded g2(0) from time-tag files")
    _common(p)
    p.add_argument("tags", nargs="+", help="binary (.bin) or CSV (.csv) time-tag files")
    p.add_argument("--channels", type=int, nargs=3, default=[HERALD, 2, 3],
                   metavar=("HERALD", "A", "B"))
    p.add_argument("--bin-duration", type=float, help="seconds per report bin")
    p.add_argument("--calibrate-delays", action="store_true",
                   help="estimate channel delays from the data first")
    p.set_defaults(func=cmd_g2)

    p = sub.add_parser("reconstruct", help="amplitude and phase from a frame")
    _common(p)
    p.add_argument("frame")
    p.add_argument("--calibration-frame", help="object-free hologram for calibration_frame")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="visibility, fringe fit and SNR")
    _common(p)
    p.add_argument("frame", help="frame or single-row line CSV")
    p.add_argument("--nonheralded", help="matching non-heralded frame for total SNR")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("pipeline", help="simulate, g2, reconstruct and metrics")
    _common(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QHoloError as e:
        print(f"qholo: error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"qholo: error: {e}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
