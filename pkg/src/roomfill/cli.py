"""Command line front end.

Subcommands cover the full workflow: synthesise or average measurement
WAVs, solve a design from a config file, render programme material,
simulate the result against the fixtures and pretty-print reports.

Exit codes: 0 success, 1 simulated deviation over the allowed maximum,
2 usage or validation errors, 3 the gain solve hit its iteration cap
(the best-effort design is still written), 4 unfillable bands.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .audio import ImpulseResponse, read_wav, write_wav
from .config import load_config
from .designfile import load_design, save_design
from .errors import RoomfillError, UnfillableBandError
from .pipeline import solve_design
from .render import RENDER_MODES, render
from .rirs import average_pair
from .simulate import SyntheticRirParams, export_report, read_report, simulate_total, synth_rir

EXIT_OK = 0
EXIT_DEVIATION = 1
EXIT_USAGE = 2
EXIT_NONCONVERGED = 3
EXIT_UNFILLABLE = 4


def _notch(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected F0,DEPTH_DB,Q")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("expected three numbers, got %r" % text)


def _bit_depth(text: str):
    if text in ("16", "24"):
        return int(text)
    if text == "float32":
        return text
    raise argparse.ArgumentTypeError("bit depth must be 16, 24 or float32")


def cmd_synth_rir(args) -> int:
    if args.notch is not None:
        coloration = ("notch",) + args.notch
    elif args.lowpass is not None:
        coloration = ("lowpass", args.lowpass)
    else:
        coloration = ("none",)
    params = SyntheticRirParams(
        sample_rate=args.sample_rate,
        length_ms=args.length_ms,
        t60_ms=args.t60_ms,
        direct_amplitude=args.direct_amplitude,
        direct_delay_ms=args.direct_delay_ms,
        coloration=coloration,
        seed=args.seed,
    )
    ir = synth_rir(params)
    write_wav(args.output, ir.buffer)
    print(
        "wrote %s: %d samples at %d Hz, t60 %g ms, coloration %s"
        % (
            args.output,
            ir.data.size,
            ir.sample_rate,
            args.t60_ms,
            params.coloration_summary(),
        )
    )
    return EXIT_OK


def cmd_avg_rir(args) -> int:
    a = ImpulseResponse(read_wav(args.capture_a))
    b = ImpulseResponse(read_wav(args.capture_b))
    avg = average_pair(a, b)
    write_wav(args.output, avg.buffer)
    print(
        "wrote %s: %d samples at %d Hz (mean of 2 captures)"
        % (args.output, avg.data.size, avg.sample_rate)
    )
    return EXIT_OK


def _solve_line(name: str, solve, filled_only: bool) -> str:
    mask = solve.gains > 0 if filled_only else np.ones_like(solve.gains, dtype=bool)
    worst = float(np.max(np.abs(solve.residual_db[mask]))) if mask.any() else 0.0
    state = (
        "converged in %d iterations" % solve.iterations_used
        if solve.converged
        else "NOT converged after %d iterations" % solve.iterations_used
    )
    return "%-12s %s, offset %+.2f dB, max |residual| %.3f dB" % (
        name + ":",
        state,
        solve.offset_db,
        worst,
    )


def cmd_design(args) -> int:
    run = load_config(args.config)
    rirs = run.load_rirs()
    spec = run.filterbank(rirs.sample_rate)
    design = solve_design(
        rirs,
        spec,
        run.target(),
        run.solver(),
        delay_ms=run.delay_ms,
        decorrelator_len=run.decorrelator_len,
        seed_left=run.seed_left,
        seed_right=run.seed_right,
    )
    out = args.output or os.path.join(run.output_dir, "design.txt")
    parent = os.path.dirname(os.path.abspath(out))
    os.makedirs(parent, exist_ok=True)
    save_design(design, out)

    solves = (
        ("fill left", design.gains.left, True),
        ("fill right", design.gains.right, True),
        ("front left", design.front_gains.left, False),
        ("front right", design.front_gains.right, False),
    )
    for name, solve, filled_only in solves:
        print(_solve_line(name, solve, filled_only))
    print("wrote %s (%d bands at %d Hz)" % (out, spec.num_bands, spec.sample_rate))
    if not all(s.converged for _, s, _ in solves):
        print("warning: best-effort design, solve did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_render(args) -> int:
    design = load_design(args.design)
    buf = read_wav(args.input)
    result = render(buf, design, args.mode)
    write_wav(args.output, result.buffer, bit_depth=args.bit_depth)
    rate = result.buffer.sample_rate
    print(
        "wrote %s: 4 channels (FL FR SL SR), %d samples at %d Hz, mode %s"
        % (args.output, result.buffer.num_samples, rate, result.mode)
    )
    print(
        "chain latency: "
        + ", ".join(
            "%s %d samples (%.1f ms)" % (ch, n, 1000.0 * n / rate)
            for ch, n in result.latency_samples.items()
        )
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    run = load_config(args.config)
    design = load_design(args.design)
    rirs = run.load_rirs()
    channels = (args.channel,) if args.channel else ("left", "right")
    out = args.output or os.path.join(run.output_dir, "report.csv")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)

    worst = 0.0
    for channel in channels:
        report = simulate_total(design, rirs, channel)
        if len(channels) == 1:
            path = out
        else:
            base, ext = os.path.splitext(out)
            path = "%s_%s%s" % (base, channel, ext or ".csv")
        export_report(report, path)
        worst = max(worst, report.max_abs_deviation_filled_bands_db)
        print(
            "%-6s max |deviation| %.3f dB over filled bands, rms %.3f dB, "
            "%d unfilled -> %s"
            % (
                channel + ":",
                report.max_abs_deviation_filled_bands_db,
                report.rms_deviation_db,
                report.unfilled_band_count,
                path,
            )
        )
    if worst > args.max_deviation_db:
        print(
            "deviation %.3f dB exceeds the allowed %.3f dB"
            % (worst, args.max_deviation_db),
            file=sys.stderr,
        )
        return EXIT_DEVIATION
    return EXIT_OK


def cmd_report(args) -> int:
    report = read_report(args.csv)
    print(
        "%9s %9s %9s %9s %9s %10s"
        % ("f_c_hz", "primary", "fill", "total", "target", "deviation")
    )
    for i in range(report.num_bands):
        print(
            "%9.2f %9.2f %9.2f %9.2f %9.2f %10.3f"
            % (
                report.center_freqs[i],
                report.primary_db[i],
                report.fill_db[i],
                report.total_db[i],
                report.target_db[i],
                report.deviation_db[i],
            )
        )
    print("max |deviation| over filled bands: %.6g dB" % report.max_abs_deviation_filled_bands_db)
    print("rms deviation: %.6g dB" % report.rms_deviation_db)
    print("unfilled bands: %d" % report.unfilled_band_count)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roomfill",
        description="Offline room equalisation: supporting-loudspeaker "
        "spectral fill from measured impulse responses.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser(
        "synth-rir",
        help="generate a synthetic room impulse response WAV",
        formatter_class=fmt,
    )
    p.add_argument("-o", "--output", required=True, help="output WAV path")
    p.add_argument("--sample-rate", type=int, default=48000, choices=(44100, 48000))
    p.add_argument("--length-ms", type=float, default=1000.0, help="response length")
    p.add_argument("--t60-ms", type=float, default=300.0, help="60 dB decay time")
    p.add_argument("--direct-amplitude", type=float, default=1.0)
    p.add_argument("--direct-delay-ms", type=float, default=0.0)
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--notch",
        type=_notch,
        metavar="F0,DEPTH_DB,Q",
        help="carve a notch: centre Hz, depth dB, quality factor",
    )
    group.add_argument("--lowpass", type=float, metavar="FC_HZ", help="treble roll-off cutoff")
    p.add_argument("--seed", type=int, default=0, help="tail noise seed")
    p.set_defaults(func=cmd_synth_rir)

    p = sub.add_parser(
        "avg-rir",
        help="average two microphone captures of the same loudspeaker",
        formatter_class=fmt,
    )
    p.add_argument("capture_a", help="first capture WAV")
    p.add_argument("capture_b", help="second capture WAV")
    p.add_argument("-o", "--output", required=True, help="output WAV path")
    p.set_defaults(func=cmd_avg_rir)

    p = sub.add_parser(
        "design",
        help="solve an equalisation design from a config file",
        formatter_class=fmt,
    )
    p.add_argument("--config", required=True, help="run configuration INI")
    p.add_argument(
        "-o",
        "--output",
        default=None,
        help="design file path (default: <output_dir>/design.txt)",
    )
    p.set_defaults(func=cmd_design)

    p = sub.add_parser(
        "render",
        help="render stereo programme to the 4-channel condition",
        formatter_class=fmt,
    )
    p.add_argument("--design", required=True, help="design file from `design`")
    p.add_argument("-i", "--input", required=True, help="stereo WAV input")
    p.add_argument("-o", "--output", required=True, help="4-channel WAV output")
    p.add_argument("--mode", default="proposed", choices=RENDER_MODES)
    p.add_argument(
        "--bit-depth",
        type=_bit_depth,
        default="float32",
        help="output sample format: 16, 24 or float32",
    )
    p.set_defaults(func=cmd_render)

    p = sub.add_parser(
        "simulate",
        help="verify a design against the configured responses",
        formatter_class=fmt,
    )
    p.add_argument("--design", required=True, help="design file from `design`")
    p.add_argument("--config", required=True, help="run configuration INI")
    p.add_argument(
        "-o",
        "--output",
        default=None,
        help="report CSV path; _left/_right is inserted when both "
        "channels run (default: <output_dir>/report.csv)",
    )
    p.add_argument("--channel", choices=("left", "right"), help="simulate one channel only")
    p.add_argument(
        "--max-deviation-db",
        type=float,
        default=1.0,
        help="largest filled-band |deviation| that still exits 0",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "report",
        help="pretty-print a simulation report CSV",
        formatter_class=fmt,
    )
    p.add_argument("csv", help="report written by `simulate`")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnfillableBandError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_UNFILLABLE
    except (RoomfillError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
