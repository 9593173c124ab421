"""Command-line front end: filter design, file resampling, model
inference over WAV files, batch experiments, and cost accounting.

Exit codes: 0 when all requested work completed; 1 when the work ran
but something did not pass or complete (a design missing its template,
a diverged inference, skipped models in a batch run); 2 for bad
arguments, unreadable files, or invalid configuration.

POLYRATE_WORKERS caps the experiment worker pool when the config does
not set it. The optional --figures flag on `design` and `run` renders
PNG plots of the same data the text/CSV outputs carry; everything else
emits data only.
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import harness, neural, presets
from .filter_design import (
    DesignSpecification,
    design_equiripple_lowpass,
    design_kaiser_lowpass,
    save_filter,
    validate_against_spec,
)
from .resamplers import FftConverter
from .wavio import read_wav, write_wav

__all__ = ["main", "ExperimentConfig"]

ExperimentConfig = harness.ExperimentConfig

log = logging.getLogger("polyrate")


def _design_template(name):
    """The template a named registry design is judged against."""
    if name in ("hb-iir", "hb-fir"):
        return presets.evaluation_spec()
    return presets.design_spec(name)


def _print_report(label, filt, report, cost=None):
    order = filt.order_n
    print(f"{label}: order {order} ({order + 1} taps)"
          if getattr(filt, "coeffs", None) is not None
          else f"{label}: order {order} "
               f"(branches {filt.branch0.size}+{filt.branch1.size})")
    print(f"  passband dev {report.passband_dev_db:.4f} dB "
          f"(limit {report.passband_limit_db:g})")
    print(f"  stopband atten {report.stopband_atten_db:.2f} dB "
          f"(threshold {report.stopband_threshold_db:g})")
    print(f"  dc gain {report.dc_gain_db:.2e} dB")
    if cost is not None:
        print(f"  cost {cost.mpus:.2f} MPUs + {cost.apus:.2f} APUs per "
              f"sample at {cost.reference_rate_hz:g} Hz, "
              f"latency {cost.latency_ms:.3f} ms")
    print("  PASS" if report.passes else "  FAIL")


def cmd_design(args):
    if args.name:
        if any(v is not None for v in (args.fpb, args.fsb)):
            raise ValueError("give either a design name or explicit edges, "
                             "not both")
        filt = presets.design(args.name)
        spec = _design_template(args.name)
        cost = presets.filter_cost(args.name)
        label = args.name
    else:
        if None in (args.fpb, args.fsb, args.rate):
            raise ValueError("explicit designs need --fpb, --fsb and --rate")
        spec = DesignSpecification(args.fpb, args.fsb, args.ap,
                                   getattr(args, "as_"), args.rate)
        if args.kind == "kaiser":
            filt = design_kaiser_lowpass(spec, n=args.order)
        else:
            filt = design_equiripple_lowpass(spec, n=args.order)
        cost = None
        label = f"{args.kind} lowpass"
    report = validate_against_spec(filt, spec)
    _print_report(label, filt, report, cost)
    out = args.out or f"{args.name or args.kind}.json"
    save_filter(filt, out)
    print(f"  wrote {out}")
    if args.figures:
        path = _render_design_figure(filt, spec, args.figures,
                                     args.name or args.kind)
        print(f"  wrote {path}")
    return 0 if report.passes else 1


def cmd_resample(args):
    x, src_rate = read_wav(args.infile)
    dst_rate = float(args.to)
    if dst_rate <= 0:
        raise ValueError("target rate must be positive")
    if dst_rate == src_rate:
        y = x
    elif args.path == "fft":
        fr = Fraction(round(dst_rate), round(src_rate))
        y = FftConverter(fr.numerator, fr.denominator).process(x)
    else:
        pair = (round(src_rate), round(dst_rate))
        if pair == (44100, 48000):
            conv = presets.build_converter(args.path, "up")
        elif pair == (48000, 44100):
            conv = presets.build_converter(args.path, "down")
        else:
            raise ValueError(
                f"named paths convert between 44100 and 48000 Hz only "
                f"(got {pair}); use --path fft for other ratios")
        y = conv.process(x)
    write_wav(args.outfile, y, dst_rate, width=args.width)
    print(f"wrote {args.outfile}: {y.size} samples at {dst_rate:g} Hz")
    return 0


def cmd_process(args):
    x, rate = read_wav(args.infile)
    _, model = harness.resolve_model(args.model, args.train_rate)
    try:
        y = harness.apply_method(model, args.method, x, rate)
    except neural.InstabilityFault as fault:
        print(f"error: inference diverged: {fault}", file=sys.stderr)
        return 1
    write_wav(args.outfile, y, rate, width=args.width)
    print(f"wrote {args.outfile}: {y.size} samples at {rate:g} Hz")
    return 0


def cmd_run(args):
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    for key in ("models", "methods", "f0_hz"):
        value = getattr(args, key)
        if value:
            doc[key] = value
    for key in ("gain", "train_rate_hz", "inference_rate_hz", "duration_s",
                "output", "spectra_dir", "workers"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    cfg = harness.ExperimentConfig.from_dict(doc, args.set or ())
    result = harness.run_experiment(cfg)
    harness.write_csv(result.rows, cfg.output)
    summary_path = str(Path(cfg.output).with_suffix("")) + ".summary.json"
    harness.write_summary(result.summary, summary_path)
    log.info("wrote %d rows to %s", len(result.rows), cfg.output)
    log.info("wrote summary to %s", summary_path)
    if args.figures:
        for path in _render_run_figures(result.rows, args.figures):
            log.info("wrote %s", path)
    if not result.complete:
        for key, reason in result.skipped.items():
            log.error("skipped %s: %s", key, reason)
        return 1
    return 0


def cmd_cost(args):
    rate = args.rate
    hidden = args.hidden
    steps_per_sample = 1.0
    if args.what == "naive":
        from .resamplers import CostReport
        report = CostReport(0.0, 0.0, 0.0, rate)
        label = "naive"
    elif args.what == "srirnn":
        if args.s is None or args.k is None:
            raise ValueError("cost srirnn needs --k and --s")
        try:
            l_str, m_str = args.ratio.split("/")
            l, m = int(l_str), int(m_str)
        except (AttributeError, ValueError):
            raise ValueError("--ratio must look like 160/147") from None
        report = neural.srirnn_cost(args.s, args.k, l, m, rate)
        steps_per_sample = max(l, m) / m
        if hidden is None:
            hidden = args.s // 2
        label = f"srirnn k={args.k} s={args.s} ratio={l}/{m}"
    elif args.what == "resample":
        if not args.name:
            raise ValueError("cost resample needs a conversion path name")
        report = presets.conversion_cost(args.name, rate)
        label = f"resample {args.name} (two instances: pre and post)"
    elif args.what == "oversample":
        if not args.name:
            raise ValueError("cost oversample needs the factor m")
        m = int(args.name)
        report = presets.oversampling_cost(args.interp, args.decim, m, rate)
        steps_per_sample = float(m)
        label = f"oversample m={m} {args.interp}/{args.decim}"
    else:
        raise ValueError(f"unknown cost target {args.what!r}")
    doc = {"method": label}
    doc.update(report.to_dict())
    if args.include_cell:
        if hidden is None:
            raise ValueError("--include-cell needs --hidden (or --s)")
        cell = 8.0 * hidden * hidden + 8.0 * hidden * args.input_dim
        doc["cell_ops"] = cell * steps_per_sample
    print(json.dumps(doc, indent=2))
    return 0


def _render_design_figure(filt, spec, outdir, name):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rate = filt.rate_hz or spec.filter_rate_hz
    f = np.linspace(0.0, 0.5, 8193)
    if hasattr(filt, "frequency_response"):
        h = np.abs(filt.frequency_response(f))
    else:
        h = np.abs(filt.amplitude_response(f))
    db = 20.0 * np.log10(np.maximum(h, 1e-300))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(f * rate / 1000.0, db, linewidth=0.8)
    for edge, style in ((spec.f_pb, "--"), (spec.f_sb, ":")):
        ax.axvline(edge * spec.filter_rate_hz / 1000.0, color="gray",
                   linestyle=style, linewidth=0.8)
    ax.axhline(-spec.a_s, color="red", linestyle=":", linewidth=0.8)
    ax.set_xlabel("frequency / kHz")
    ax.set_ylabel("magnitude / dB")
    ax.set_ylim(-max(spec.a_s + 40.0, 60.0), 5.0)
    ax.set_title(name)
    ax.grid(True, alpha=0.3)
    path = outdir / f"design-{name}-response.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def _render_run_figures(rows, outdir):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    models = sorted({r["model"] for r in rows})
    paths = []
    for model in models:
        for metric in ("esr_db", "mesr_db", "asr_db", "nmr_db"):
            fig, ax = plt.subplots(figsize=(8, 4.5))
            methods = sorted({r["method"] for r in rows
                              if r["model"] == model})
            for method in methods:
                pts = [(r["f0_hz"], r[metric]) for r in rows
                       if r["model"] == model and r["method"] == method
                       and r["status"] == "ok"]
                if not pts:
                    continue
                xs, ys = zip(*sorted(pts))
                ax.semilogx(xs, ys, marker="o", markersize=3,
                            linewidth=1.0, label=method)
            ax.set_xlabel("f0 / Hz")
            ax.set_ylabel(metric.replace("_db", "").upper() + " / dB")
            ax.set_title(f"{model}: {metric.replace('_db', '').upper()}")
            ax.grid(True, alpha=0.3, which="both")
            ax.legend(fontsize=8)
            path = outdir / f"{model}-{metric}.png"
            fig.savefig(path, dpi=120, bbox_inches="tight")
            plt.close(fig)
            paths.append(path)
    return paths


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polyrate",
        description="Multirate filtering and recurrent effect models "
                    "across sample rates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="build and validate a filter")
    p.add_argument("name", nargs="?", choices=presets.FILTER_NAMES,
                   help="registry design; omit to give explicit edges")
    p.add_argument("--fpb", type=float, help="passband edge, cycles/sample")
    p.add_argument("--fsb", type=float, help="stopband edge, cycles/sample")
    p.add_argument("--ap", type=float, default=0.5,
                   help="passband ripple, dB (default 0.5)")
    p.add_argument("--as", dest="as_", type=float, default=120.0,
                   help="stopband attenuation, dB (default 120)")
    p.add_argument("--rate", type=float, help="filtering rate, Hz")
    p.add_argument("--kind", choices=("kaiser", "remez"), default="kaiser")
    p.add_argument("--order", type=int, help="override the order estimate")
    p.add_argument("--out", help="output JSON path (default NAME.json)")
    p.add_argument("--figures", metavar="DIR",
                   help="also render the magnitude response to DIR")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("resample", help="resample a mono WAV file")
    p.add_argument("infile")
    p.add_argument("outfile")
    p.add_argument("--to", type=float, required=True, help="target rate, Hz")
    p.add_argument("--path", default="hb-wb-kaiser",
                   choices=presets.CONVERTER_NAMES + ("fft",))
    p.add_argument("--width", type=int, default=3, choices=(2, 3, 4),
                   help="output sample width in bytes (default 3)")
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("process",
                       help="run a WAV file through a model + method")
    p.add_argument("infile")
    p.add_argument("outfile")
    p.add_argument("--model", required=True,
                   help="model JSON path or bundled:NAME")
    p.add_argument("--method", default="naive",
                   help="naive | srirnn:K | resample:PATH | "
                        "oversample:M[:INTERP[:DECIM]]")
    p.add_argument("--train-rate", type=float, default=None,
                   help="override the model's recorded training rate")
    p.add_argument("--width", type=int, default=3, choices=(2, 3, 4))
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("run", help="batch experiment: CSV + summary JSON")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (JSON-parsed value)")
    p.add_argument("--models", nargs="+",
                   help="model files or bundled:NAME entries")
    p.add_argument("--methods", nargs="+", help="method descriptors")
    p.add_argument("--f0", dest="f0_hz", nargs="+", type=float,
                   help="test tone frequencies, Hz")
    p.add_argument("--gain", type=float, default=None)
    p.add_argument("--train-rate", dest="train_rate_hz", type=float,
                   default=None)
    p.add_argument("--inference-rate", dest="inference_rate_hz",
                   type=float, default=None)
    p.add_argument("--duration", dest="duration_s", type=float,
                   default=None)
    p.add_argument("--output", default=None, help="CSV path")
    p.add_argument("--spectra-dir", dest="spectra_dir", default=None,
                   help="also dump per-row spectra as (Hz, dB) text")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--figures", metavar="DIR",
                   help="also render metric-vs-f0 plots to DIR")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cost", help="arithmetic cost of a configuration")
    p.add_argument("what", choices=("naive", "srirnn", "resample",
                                    "oversample"))
    p.add_argument("name", nargs="?",
                   help="conversion path (resample) or factor (oversample)")
    p.add_argument("--k", type=int, help="fractional delay order")
    p.add_argument("--s", type=int, help="state entries (hidden + cell)")
    p.add_argument("--ratio", help="rate ratio L/M, e.g. 160/147")
    p.add_argument("--rate", type=float, default=44_100.0,
                   help="reference rate, Hz (default 44100)")
    p.add_argument("--interp", default="c-hb-iir",
                   choices=presets.INTERP_KINDS)
    p.add_argument("--decim", default="c-hb-iir",
                   choices=presets.DECIM_KINDS)
    p.add_argument("--include-cell", action="store_true",
                   help="add the 8H^2 + 8HD per-step cell estimate")
    p.add_argument("--hidden", type=int, help="hidden units H")
    p.add_argument("--input-dim", type=int, default=1)
    p.set_defaults(func=cmd_cost)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
