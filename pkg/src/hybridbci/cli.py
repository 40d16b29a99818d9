"""Command-line entry point: ``hybridbci <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, erp, evaluation, filters, io, spectral, stimulus
from .core import ConfigError, MarkerEvent, ProtocolError, StimulusConfig, StreamError
from .decoder import LineSink
from .pipeline import DecoderSettings, StreamingDecoder, filtered_p300, filtered_ssvep

log = logging.getLogger("hybridbci")

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, args, inputs=(), outputs=(), extra=None):
    """Record what produced ``outputs``; only ``timestamp`` varies between reruns."""
    manifest = {
        "subcommand": args.command,
        "config": getattr(args, "config", None),
        "seed": getattr(args, "seed", None),
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)},
        "inputs": [str(p) for p in inputs],
        "outputs": {str(p): _sha256(p) for p in outputs},
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")


def _load_config(args) -> StimulusConfig:
    if getattr(args, "config", None):
        try:
            return io.read_config(args.config)
        except FileNotFoundError:
            raise UsageError(f"config file {args.config} not found") from None
    return StimulusConfig()


def _out_dir(path) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


# -- filter-design ------------------------------------------------------------

def cmd_filter_design(args):
    try:
        if args.kind == "bandpass":
            if args.lo is None or args.hi is None:
                raise UsageError("bandpass needs --lo and --hi")
            design = filters.design_bandpass(args.lo, args.hi, args.order, args.fs)
        elif args.kind == "lowpass":
            if args.cutoff is None:
                raise UsageError("lowpass needs --cutoff")
            design = filters.design_lowpass(args.cutoff, args.order, args.fs)
        else:
            design = filters.design_notch(args.freq, args.fs, args.q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    n = int(round(args.fs / 2 / 0.1))
    grid = np.arange(n + 1) / 10.0
    grid[-1] = min(grid[-1], args.fs / 2)
    mag, phase = filters.frequency_response(design, grid)

    def write_response(f):
        f.write("freq_hz,magnitude_db,phase_rad\n")
        for g, m, p in zip(grid, mag, phase):
            f.write(f"{g:.1f},{m:.6f},{p:.6f}\n")

    def write_sos(f):
        f.write("section,b0,b1,b2,a0,a1,a2\n")
        for i, row in enumerate(design.sos):
            f.write(f"{i}," + ",".join(format(v, ".17g") for v in row) + "\n")

    if args.out_dir:
        d = _out_dir(args.out_dir)
        with open(d / "sos.csv", "w") as f:
            write_sos(f)
        with open(d / "response.csv", "w") as f:
            write_response(f)
        write_manifest(d / "manifest.json", args, outputs=[d / "sos.csv", d / "response.csv"],
                       extra={"design": design.description})
    elif args.sos:
        write_sos(sys.stdout)
    else:
        write_response(sys.stdout)
    return 0


# -- simulate -----------------------------------------------------------------

def _synth_from_args(args) -> stimulus.SynthConfig:
    try:
        return stimulus.SynthConfig(
            ssvep_amplitude=args.ssvep_amp,
            harmonic_ratio=args.harmonic_ratio,
            p300_amplitude=args.p300_amp,
            p300_latency_ms=args.p300_latency,
            p300_width_ms=args.p300_width,
            noise_sigma=args.noise,
            line_noise_amplitude=args.line_noise,
            tail_ms=args.tail_ms,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args):
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    config = _load_config(args)
    synth = _synth_from_args(args)
    sim = stimulus.simulate(args.epochs, synth, config)
    d = _out_dir(args.out_dir)
    paths = [d / "recording.csv", d / "markers.csv", d / "intent.csv"]
    io.write_recording(paths[0], sim.recording)
    io.write_markers(paths[1], sim.markers)
    io.write_intents(paths[2], sim.attended, config)
    toggles = {
        str(led): {
            "target_hz": t.target_frequency,
            "half_period_ticks": t.half_period_ticks,
            "achieved_hz": t.achieved_frequency,
            "deviation_percent": stimulus.verify_frequency(t)[1],
        }
        for led, t in sim.toggles.items()
    }
    write_manifest(d / "manifest.json", args, inputs=[args.config] if args.config else [],
                   outputs=paths, extra={
                       "rng": stimulus.RNG_ALGORITHM,
                       "synth": asdict(synth),
                       "stimulus_config": io.format_config(config),
                       "rows": len(sim.recording),
                       "epoch_offset_ms": config.epoch_offset_ms,
                       "tick_ns": str(stimulus.TICK_NS),
                       "serial": stimulus.serial_metadata(),
                       "serial_bytes": stimulus.serial_marker_bytes(sim.markers).decode("ascii"),
                       "toggles": toggles,
                   })
    print(f"wrote {len(sim.recording)} samples, {len(sim.markers)} markers, "
          f"{args.epochs} epochs to {d}")
    return 0


# -- decode -------------------------------------------------------------------

def _settings_from_args(args) -> DecoderSettings:
    return DecoderSettings(
        gate=not args.no_p300_gate,
        notch=not args.no_notch,
        notch_q=args.notch_q,
        p300_channels=args.p300_channel,
        threshold=args.threshold,
        threshold_mode=args.threshold_mode,
        threshold_k=args.threshold_k,
    )


def cmd_decode(args):
    config = _load_config(args)
    settings = _settings_from_args(args)
    sink_file = open(args.commands_out, "w") if args.commands_out else None
    try:
        sink = LineSink(sink_file) if sink_file else None
        dec = StreamingDecoder(config, settings, sink)
        markers = io.iter_markers(args.markers)
        pending = next(markers, None)
        with open(args.out, "w", newline="") as out:
            out.write(",".join(io.DECISION_HEADER) + "\n")

            def emit(decisions):
                for d in decisions:
                    out.write(io.decision_row(d))

            for block in io.iter_recording(args.recording, args.chunk):
                end = int(block.timestamps[-1])
                batch = []
                while pending is not None and pending.timestamp <= end:
                    batch.append(pending)
                    pending = next(markers, None)
                dec.add_markers(batch)
                emit(dec.push(block))
            rest = [] if pending is None else [pending, *markers]
            dec.add_markers(rest)
            emit(dec.finish())
    finally:
        if sink_file:
            sink_file.close()
    outputs = [args.out] + ([args.commands_out] if args.commands_out else [])
    n_cmd = len(dec.messages)
    write_manifest(Path(str(args.out) + ".manifest.json"), args,
                   inputs=[args.recording, args.markers] + ([args.config] if args.config else []),
                   outputs=outputs, extra={"settings": asdict(settings)})
    print(f"{len(dec.decisions)} epochs decoded, {n_cmd} commands issued")
    return 0


# -- evaluate -----------------------------------------------------------------

def cmd_evaluate(args):
    if args.itr:
        try:
            p, n, t = float(args.itr[0]), int(args.itr[1]), float(args.itr[2])
            bits = evaluation.itr_bits_per_selection(p, n)
            bpm = evaluation.itr_bpm(p, n, t)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        print(f"bits/selection: {bits:.4f}")
        print(f"ITR: {bpm:.2f} bpm")
        return 0
    if args.fixture:
        records = evaluation.load_table2()
    else:
        if not (args.decisions and args.intents):
            raise UsageError("need --decisions and --intents, --fixture table2, or --itr P N T")
        decisions = io.read_decisions(args.decisions)
        intents = io.read_intents(args.intents)
        if len(decisions) != len(intents):
            raise io.DataError(f"{len(decisions)} decisions vs {len(intents)} intents")
        records = evaluation.score(decisions, intents)
    report = evaluation.aggregate(records)
    print(report.text())
    if args.fixture:
        print(f"note: the study reports a mean accuracy of {evaluation.REPORTED_MEAN_ACCURACY}%; "
              f"recounting the table's success flags gives {report.overall.percent}%")
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["stratum", "key", "successes", "attempts", "percent"])
            w.writerows(report.rows())
        write_manifest(Path(str(args.out) + ".manifest.json"), args,
                       inputs=[p for p in (args.decisions, args.intents) if p],
                       outputs=[args.out])
    return 0


# -- psd / erp ----------------------------------------------------------------

def _window(recording, start_ms, duration_ms):
    t0 = recording.timestamps[0] if start_ms is None else int(start_ms * 1000)
    lo = int(np.searchsorted(recording.timestamps, t0))
    if duration_ms is None:
        return lo, len(recording)
    hi = int(np.searchsorted(recording.timestamps, t0 + int(duration_ms * 1000)))
    return lo, hi


def cmd_psd(args):
    config = _load_config(args)
    rec = io.read_recording(args.recording)
    if len(rec) == 0:
        raise io.DataError("empty recording")
    if args.raw:
        x = spectral.ssvep_channel(rec.data)
    else:
        x = filtered_ssvep(rec, config, notch=not args.no_notch)
    lo, hi = _window(rec, args.start_ms, args.duration_ms)
    try:
        psd = spectral.welch_psd(x[lo:hi], config.sample_rate, args.segment, args.overlap)
    except ValueError as exc:
        raise io.DataError(str(exc)) from None
    with open(args.out, "w") as f:
        f.write("freq_hz,power_uv2_per_hz\n")
        for fr, p in zip(psd.frequencies, psd.power):
            f.write(f"{fr:g},{p:.10g}\n")
    feats = spectral.extract_ssvep_features(psd, config)
    win, margin = spectral.ssvep_argmax(feats)
    print(f"{psd.n_segments} segments, resolution {psd.resolution:g} Hz; "
          f"strongest target {win:g} Hz (margin {margin:.2f})")
    write_manifest(Path(str(args.out) + ".manifest.json"), args,
                   inputs=[args.recording], outputs=[args.out])
    return 0


def cmd_erp(args):
    config = _load_config(args)
    rec = io.read_recording(args.recording)
    markers = [m for m in io.read_markers(args.markers) if m.code == args.code]
    if not markers:
        raise io.DataError(f"no markers with code {args.code!r}")
    x = filtered_p300(rec, config, DecoderSettings(p300_channels=args.p300_channel),
                      notch=not args.no_notch)
    epochs = []
    for m in markers:
        try:
            epochs.append(erp.baseline_correct(erp.extract_epoch(rec.timestamps, x, m, config)))
        except erp.TruncatedEpochError as exc:
            log.warning("skipping marker at %d us: %s", m.timestamp, exc)
    if not epochs:
        raise io.DataError("every epoch is truncated")
    avg = erp.average_epochs(epochs)
    with open(args.out, "w") as f:
        f.write("time_ms,value_uV\n")
        for t, v in zip(avg.times_ms, avg.samples):
            f.write(f"{t:g},{v:.10g}\n")
    det = erp.detect_p300(avg, config.p300_window_ms, args.threshold)
    print(f"averaged {len(epochs)} epochs for {args.code!r}: peak {det.peak_amplitude:.2f} uV "
          f"at {det.peak_latency:g} ms ({'valid' if det.valid else 'not valid'})")
    write_manifest(Path(str(args.out) + ".manifest.json"), args,
                   inputs=[args.recording, args.markers], outputs=[args.out])
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridbci", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("filter-design", help="print coefficients and magnitude response")
    f.add_argument("kind", choices=["bandpass", "lowpass", "notch"])
    f.add_argument("--fs", type=float, required=True)
    f.add_argument("--lo", type=float)
    f.add_argument("--hi", type=float)
    f.add_argument("--cutoff", type=float)
    f.add_argument("--order", type=int, default=4)
    f.add_argument("--freq", type=float, default=50.0)
    f.add_argument("--q", type=float, default=30.0)
    f.add_argument("--sos", action="store_true", help="print coefficients instead of response")
    f.add_argument("--out-dir")
    f.set_defaults(func=cmd_filter_design)

    s = sub.add_parser("simulate", help="synthesise a recording, markers and intents")
    s.add_argument("--epochs", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--ssvep-amp", type=float, default=2.0)
    s.add_argument("--harmonic-ratio", type=float, default=0.5)
    s.add_argument("--p300-amp", type=float, default=5.0)
    s.add_argument("--p300-latency", type=float, default=350.0)
    s.add_argument("--p300-width", type=float, default=200.0)
    s.add_argument("--noise", type=float, default=2.0)
    s.add_argument("--line-noise", type=float, default=5.0)
    s.add_argument("--tail-ms", type=float, default=600.0)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("decode", help="replay a recording through the decoder")
    d.add_argument("--recording", required=True)
    d.add_argument("--markers", required=True)
    d.add_argument("--config")
    d.add_argument("--out", required=True)
    d.add_argument("--commands-out", help="write SEQ,COMMAND lines here")
    d.add_argument("--no-p300-gate", action="store_true")
    d.add_argument("--no-notch", action="store_true")
    d.add_argument("--notch-q", type=float, default=30.0)
    d.add_argument("--p300-channel", choices=sorted(erp.P300_CHANNELS), default="midline")
    d.add_argument("--threshold", type=float, default=erp.DEFAULT_THRESHOLD)
    d.add_argument("--threshold-mode", choices=["absolute", "relative"], default="absolute")
    d.add_argument("--threshold-k", type=float, default=erp.DEFAULT_K)
    d.add_argument("--chunk", type=int, default=250, help=argparse.SUPPRESS)
    d.set_defaults(func=cmd_decode)

    e = sub.add_parser("evaluate", help="accuracy report or ITR")
    e.add_argument("--decisions")
    e.add_argument("--intents")
    e.add_argument("--fixture", choices=["table2"])
    e.add_argument("--itr", nargs=3, metavar=("P", "N", "T"))
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    q = sub.add_parser("psd", help="Welch PSD of the SSVEP channel")
    q.add_argument("--recording", required=True)
    q.add_argument("--config")
    q.add_argument("--out", required=True)
    q.add_argument("--start-ms", type=float)
    q.add_argument("--duration-ms", type=float)
    q.add_argument("--segment", type=int, default=spectral.DEFAULT_SEGMENT)
    q.add_argument("--overlap", type=float, default=spectral.DEFAULT_OVERLAP)
    q.add_argument("--raw", action="store_true", help="skip notch and bandpass")
    q.add_argument("--no-notch", action="store_true")
    q.set_defaults(func=cmd_psd)

    r = sub.add_parser("erp", help="marker-averaged P300 waveform")
    r.add_argument("--recording", required=True)
    r.add_argument("--markers", required=True)
    r.add_argument("--code", required=True, choices=["o", "p", "q", "r"])
    r.add_argument("--config")
    r.add_argument("--out", required=True)
    r.add_argument("--p300-channel", choices=sorted(erp.P300_CHANNELS), default="midline")
    r.add_argument("--threshold", type=float, default=erp.DEFAULT_THRESHOLD)
    r.add_argument("--no-notch", action="store_true")
    r.set_defaults(func=cmd_erp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hybridbci {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.DataError, StreamError, ProtocolError) as exc:
        print(f"hybridbci {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"hybridbci {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
