"""Batch evaluation: models x methods x test tones -> CSV rows + summary.

One experiment cell runs a single (model, method, f0) combination:
synthesize the tone, push it through the method's pipeline, and score
the output against the same model running plainly at its training rate.
Cells execute in a thread pool (the inference kernel releases the GIL)
and results are merged in (model, method, f0) sort order, so the CSV is
byte-identical across runs regardless of scheduling.

Scoring protocol, shared by every cell:

* the analysis frame is the final 131072 samples of each signal, long
  enough to resolve -120 dB partials and to let the recurrent state
  settle first; the frame is mean-removed before analysis, since the
  DC offset a biased recurrent model rides on is neither signal nor
  aliasing;
* f0 is snapped to the training-rate bin grid so the reference
  harmonics fall exactly on bins;
* ESR compares bandlimited resyntheses at the training rate after
  alignment (integer cross-correlation peak, then a fractional shift
  that zeroes the fundamental's phase error), which absorbs both
  resampler group delay and any fractional offset;
* MESR compares harmonic magnitudes against the reference (phase and
  rate blind); ASR and NMR are computed on the output's own spectrum.

Rows where the state feedback diverged carry status "unstable" and NaN
metrics; a model that cannot even run plainly is skipped with a logged
reason and produces no rows at all.
"""

import concurrent.futures
import csv
import json
import logging
import math
import os
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, neural, presets
from .resamplers import FftConverter

__all__ = [
    "CSV_COLUMNS", "FRAME", "ExperimentConfig", "MethodSpec",
    "apply_method", "default_f0_grid", "parse_method", "resolve_model",
    "run_experiment", "write_csv", "write_summary",
]

log = logging.getLogger("polyrate")

FRAME = 1 << 17
CSV_COLUMNS = ("model", "method", "l", "m", "f0_hz",
               "esr_db", "mesr_db", "asr_db", "nmr_db", "status")

_METHOD_KINDS = ("naive", "srirnn", "resample", "oversample")


def default_f0_grid():
    """25 log-spaced test tones from A0 (27.5 Hz) to C8 (4186 Hz)."""
    return [float(f) for f in np.geomspace(27.5, 4186.0, 25)]


class MethodSpec:
    """One parsed method descriptor.

    kind 'naive' has no parameters; 'srirnn' carries the delay order k;
    'resample' carries a conversion path name (or 'fft'); 'oversample'
    carries the factor m and the interpolator/decimator kinds.
    """

    def __init__(self, kind, label, k=None, design=None, m=None,
                 interp=None, decim=None):
        self.kind = kind
        self.label = label
        self.k = k
        self.design = design
        self.m = m
        self.interp = interp
        self.decim = decim

    def __repr__(self):
        return f"MethodSpec({self.label!r})"


def parse_method(text):
    """Parse a method descriptor into a MethodSpec.

    Accepted forms (brace/comma spelling normalizes to the colon one):
      naive
      srirnn:K                e.g. srirnn:3
      resample:PATH           PATH in presets.CONVERTER_NAMES or 'fft'
      oversample:M[:INTERP[:DECIM]]   default both to 'c-hb-iir'
    """
    raw = str(text).strip()
    norm = raw.replace("{", ":").replace("}", "").replace(",", ":")
    parts = [p.strip() for p in norm.split(":") if p.strip()]
    if not parts:
        raise ValueError("empty method descriptor")
    kind = parts[0]
    args = parts[1:]
    if kind == "naive":
        if args:
            raise ValueError(f"naive takes no parameters, got {raw!r}")
        return MethodSpec("naive", "naive")
    if kind == "srirnn":
        if len(args) != 1:
            raise ValueError(f"srirnn needs exactly one order, got {raw!r}")
        k = int(args[0])
        if k < 0:
            raise ValueError("srirnn order must be >= 0")
        return MethodSpec("srirnn", f"srirnn:{k}", k=k)
    if kind == "resample":
        if len(args) != 1:
            raise ValueError(f"resample needs a path name, got {raw!r}")
        design = args[0]
        if design not in presets.CONVERTER_NAMES + ("fft",):
            raise ValueError(
                f"unknown conversion path {design!r}; expected one of "
                f"{', '.join(presets.CONVERTER_NAMES)} or fft")
        return MethodSpec("resample", f"resample:{design}", design=design)
    if kind == "oversample":
        if not 1 <= len(args) <= 3:
            raise ValueError(f"oversample takes 1-3 parameters, got {raw!r}")
        m = int(args[0])
        if m < 1 or (m & (m - 1)):
            raise ValueError("oversampling factor must be a power of two")
        interp = args[1] if len(args) > 1 else "c-hb-iir"
        decim = args[2] if len(args) > 2 else "c-hb-iir"
        if interp not in presets.INTERP_KINDS:
            raise ValueError(f"unknown interpolator {interp!r}; expected one "
                             f"of {', '.join(presets.INTERP_KINDS)}")
        if decim not in presets.DECIM_KINDS:
            raise ValueError(f"unknown decimator {decim!r}; expected one "
                             f"of {', '.join(presets.DECIM_KINDS)}")
        return MethodSpec("oversample", f"oversample:{m}:{interp}:{decim}",
                          m=m, interp=interp, decim=decim)
    raise ValueError(f"unknown method kind {kind!r}; expected one of "
                     f"{', '.join(_METHOD_KINDS)}")


class ExperimentConfig:
    """Everything one batch run needs.

    models: file paths, 'bundled:crunch-8' / 'bundled:fuzz-16', or
    RnnModel instances. methods: descriptor strings (see parse_method).
    f0_hz defaults to the 25-tone A0..C8 grid. inference_rate_hz is the
    foreign rate the naive/srirnn/resample methods run at; oversample
    methods always run at the model's own rate. train_rate_hz, when
    set, overrides the rate recorded in each model file.
    """

    def __init__(self, models, methods, f0_hz=None, gain=0.1,
                 train_rate_hz=None, inference_rate_hz=48_000.0,
                 duration_s=4.0, output="results.csv", spectra_dir=None,
                 workers=None):
        if not models:
            raise ValueError("at least one model is required")
        if not methods:
            raise ValueError("at least one method is required")
        self.models = list(models)
        self.methods = [parse_method(m) for m in methods]
        self.f0_hz = ([float(f) for f in f0_hz] if f0_hz is not None
                      else default_f0_grid())
        self.gain = float(gain)
        self.train_rate_hz = (None if train_rate_hz is None
                              else float(train_rate_hz))
        self.inference_rate_hz = float(inference_rate_hz)
        self.duration_s = float(duration_s)
        self.output = output
        self.spectra_dir = spectra_dir
        self.workers = workers
        rates = [self.inference_rate_hz]
        if self.train_rate_hz is not None:
            rates.append(self.train_rate_hz)
        limit = min(rates) / 2.0
        bad = [f for f in self.f0_hz if not 0.0 < f < limit]
        if bad:
            raise ValueError(
                f"test tones must lie in (0, {limit}) Hz, got {bad}")
        if self.gain <= 0:
            raise ValueError("gain must be positive")
        if self.duration_s * min(rates) < FRAME:
            raise ValueError(
                f"duration too short: need at least {FRAME} samples at "
                f"{min(rates)} Hz for the analysis frame")

    @classmethod
    def from_file(cls, path, overrides=()):
        doc = json.loads(Path(path).read_text())
        return cls.from_dict(doc, overrides)

    @classmethod
    def from_dict(cls, doc, overrides=()):
        doc = dict(doc)
        for item in overrides:
            key, sep, value = str(item).partition("=")
            if not sep:
                raise ValueError(f"override {item!r} is not key=value")
            try:
                doc[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                doc[key.strip()] = value
        known = {"models", "methods", "f0_hz", "gain", "train_rate_hz",
                 "inference_rate_hz", "duration_s", "output", "spectra_dir",
                 "workers"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "models" not in doc or "methods" not in doc:
            raise ValueError("config must set 'models' and 'methods'")
        return cls(**doc)


def _integer_ratio(num_rate, den_rate, what):
    ni, di = round(num_rate), round(den_rate)
    if abs(num_rate - ni) > 1e-6 or abs(den_rate - di) > 1e-6:
        raise ValueError(f"{what} needs integer sample rates, got "
                         f"{num_rate}/{den_rate}")
    return Fraction(ni, di)


def resolve_model(entry, train_rate_override):
    """-> (label, RnnModel) for a path, bundled:NAME, or instance."""
    if isinstance(entry, neural.RnnModel):
        model = entry
        label = model.name or f"model-{model.hidden_size}"
    elif isinstance(entry, str) and entry.startswith("bundled:"):
        wanted = entry.split(":", 1)[1]
        match = [m for m in neural.bundled_test_models() if m.name == wanted]
        if not match:
            names = [m.name for m in neural.bundled_test_models()]
            raise FileNotFoundError(
                f"no bundled model {wanted!r}; available: {names}")
        model = match[0]
        label = model.name
    else:
        model = neural.load_model(entry)
        label = model.name or Path(str(entry)).stem
    if train_rate_override is not None and \
            train_rate_override != model.train_rate_hz:
        model = neural.RnnModel(
            model.hidden_size, model.input_dim, train_rate_override,
            model.w_input, model.w_recurrent, model.bias,
            model.w_out_hidden, model.w_out_input, model.out_bias,
            name=model.name)
    return label, model


class _Reference:
    """Per-(model, f0) plain-rate baseline reused by every method row."""

    def __init__(self, x, spec, harm, resynth):
        self.x = x
        self.spec = spec
        self.harm = harm
        self.resynth = resynth


def _frame_spectrum(y, rate):
    """Spectrum of the final FRAME samples, mean-removed."""
    y = np.asarray(y, dtype=float)
    if y.size < FRAME:
        raise ValueError(
            f"output too short to score: {y.size} < {FRAME} samples")
    frame = y[-FRAME:]
    return analysis.analyze_spectrum(frame - frame.mean(), rate)


def _align_shift_s(ref, h_cmp, out_bl, rate):
    """Time shift (seconds) that best aligns out_bl onto the reference.

    Integer lag from the circular cross-correlation peak, then a
    fractional correction that zeroes the fundamental's phase
    difference. (A parabolic fit of the correlation peak is far too
    coarse for multi-harmonic signals: a tenth-sample alignment error
    already scrambles the upper partials.)"""
    n = out_bl.size
    c = np.fft.irfft(np.fft.rfft(ref.resynth) * np.conj(np.fft.rfft(out_bl)),
                     n)
    k0 = int(np.argmax(c))
    if k0 > n // 2:
        k0 -= n
    shift = k0 / rate
    if len(h_cmp) and h_cmp.amplitudes[0] > 0.0 and \
            len(ref.harm) and ref.harm.amplitudes[0] > 0.0:
        w0 = 2.0 * np.pi * h_cmp.f0
        dphi = ref.harm.phases[0] - h_cmp.phases[0] - w0 * shift
        dphi = (dphi + np.pi) % (2.0 * np.pi) - np.pi
        shift += dphi / w0
    return shift


def _score(ref, spec_out, h_out, rate_t):
    """MetricsReport for one output against the cached reference."""
    mesr_db = analysis.mesr(ref.harm, h_out)
    asr_db = analysis.asr(spec_out, h_out)
    nmr_db = analysis.nmr(spec_out, h_out)
    # ESR leg at the training rate: keep harmonics below its Nyquist,
    # align by cross-correlation, compare bandlimited resyntheses
    n_keep = len(h_out)
    while n_keep and (n_keep * h_out.f0) >= rate_t / 2.0:
        n_keep -= 1
    h_cmp = analysis.HarmonicSet(h_out.f0, h_out.amplitudes[:n_keep],
                                 h_out.phases[:n_keep], rate_t)
    out_bl = analysis.resynth_bandlimited(h_cmp, rate_t, FRAME)
    shift = _align_shift_s(ref, h_cmp, out_bl, rate_t)
    aligned = analysis.resynth_bandlimited(h_cmp.shifted(shift), rate_t,
                                           FRAME)
    esr_db = analysis.esr(ref.resynth, aligned)
    return analysis.MetricsReport(esr_db, mesr_db, asr_db, nmr_db)


def _build_resample_pair(ms, rate_t, rate_i):
    """Converters (into the model, back out) for a resample method."""
    if ms.design == "fft":
        fr = _integer_ratio(rate_t, rate_i, "resample")
        return (FftConverter(fr.numerator, fr.denominator),
                FftConverter(fr.denominator, fr.numerator))
    pair = (round(rate_t), round(rate_i))
    if pair == (44100, 48000):
        return (presets.build_converter(ms.design, "down"),
                presets.build_converter(ms.design, "up"))
    if pair == (48000, 44100):
        return (presets.build_converter(ms.design, "up"),
                presets.build_converter(ms.design, "down"))
    raise ValueError(
        f"conversion path {ms.design!r} is defined for the 44100/48000 "
        f"pair only (rates {pair}); use resample:fft for other ratios")


def _method_ratio(ms, rate_t, rate_i):
    """The (l, m) the CSV reports: srirnn state-delay ratio, resample
    into-model ratio, oversample factor, 1/1 for naive."""
    if ms.kind == "srirnn":
        fr = _integer_ratio(rate_i, rate_t, "srirnn")
        return fr.numerator, fr.denominator
    if ms.kind == "resample":
        fr = _integer_ratio(rate_t, rate_i, "resample")
        return fr.numerator, fr.denominator
    if ms.kind == "oversample":
        return ms.m, 1
    return 1, 1


def apply_method(model, method, signal, rate_hz):
    """Run one method descriptor over an arbitrary signal at rate_hz.

    naive/srirnn/resample treat rate_hz as the foreign inference rate;
    oversample wraps the model in an interpolator/decimator pair and
    returns at the incoming rate either way. Raises InstabilityFault
    if the state feedback diverges.
    """
    ms = method if isinstance(method, MethodSpec) else parse_method(method)
    rate_t = model.train_rate_hz
    if ms.kind == "naive":
        return neural.process(model, signal)
    if ms.kind == "srirnn":
        fr = _integer_ratio(rate_hz, rate_t, "srirnn")
        scfg = neural.SrirnnConfig(fr.numerator, fr.denominator, k=ms.k)
        return neural.srirnn_process(model, scfg, signal)
    if ms.kind == "resample":
        into, back = _build_resample_pair(ms, rate_t, rate_hz)
        return neural.resampled_process(model, into, back, signal)
    interp = presets.build_oversampler(ms.interp, ms.m, "interpolate")
    decim = presets.build_oversampler(ms.decim, ms.m, "decimate")
    return neural.oversampled_process(model, ms.m, interp, decim, signal)


def _run_method(model, ms, ref, f0, cfg):
    """-> (output signal or None, output rate, status string)."""
    rate_t = model.train_rate_hz
    rate_i = cfg.inference_rate_hz
    try:
        if ms.kind == "oversample":
            # runs at the model's own rate: reuse the reference input
            return apply_method(model, ms, ref.x, rate_t), rate_t, "ok"
        x = analysis.gen_sine(f0, rate_i, cfg.gain, cfg.duration_s)
        return apply_method(model, ms, x, rate_i), rate_i, "ok"
    except neural.InstabilityFault as fault:
        log.warning("unstable: %s", fault)
        return fault.partial_output, rate_t, "unstable"


def _run_cell(label, model, ms, ref, f0, cfg):
    rate_t = model.train_rate_hz
    y, rate_out, status = _run_method(model, ms, ref, f0, cfg)
    nan = float("nan")
    metrics = analysis.MetricsReport(nan, nan, nan, nan)
    if status == "ok":
        spec_out = _frame_spectrum(y, rate_out)
        h_out = analysis.extract_harmonics(spec_out, f0)
        metrics = _score(ref, spec_out, h_out, rate_t)
        if cfg.spectra_dir is not None:
            _dump_spectrum(cfg.spectra_dir, label, ms.label, f0, spec_out)
    l, m = _method_ratio(ms, rate_t, cfg.inference_rate_hz)
    row = {"model": label, "method": ms.label, "l": l, "m": m,
           "f0_hz": f0, "status": status}
    row.update(metrics.to_dict())
    return row


def _dump_spectrum(directory, label, method, f0, spec):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    safe = f"{label}_{method}_{f0:.3f}Hz.txt".replace("/", "-")
    mag = spec.magnitude_db()
    lines = [f"{f:.6f} {v:.6f}" for f, v in zip(spec.freqs_hz, mag)]
    (directory / safe).write_text("\n".join(lines) + "\n")


def _worker_count(cfg):
    if cfg.workers:
        return max(1, int(cfg.workers))
    env = os.environ.get("POLYRATE_WORKERS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


class ExperimentResult:
    def __init__(self, rows, summary, skipped):
        self.rows = rows
        self.summary = summary
        self.skipped = skipped

    @property
    def complete(self):
        return not self.skipped


def run_experiment(cfg):
    """Execute every (model, method, f0) cell of a configuration.

    Returns an ExperimentResult with rows sorted by (model, method,
    f0). Models that fail to load or cannot run plainly at their
    training rate are skipped (logged, listed in result.skipped) and
    contribute no rows; instability in a foreign-rate method marks only
    that row.
    """
    models = []
    skipped = {}
    for entry in cfg.models:
        key = entry if isinstance(entry, str) else repr(entry)
        try:
            label, model = resolve_model(entry, cfg.train_rate_hz)
        except (OSError, ValueError) as exc:
            log.warning("skipping model %s: %s", key, exc)
            skipped[key] = str(exc)
            continue
        if model.train_rate_hz <= 2.0 * max(cfg.f0_hz):
            skipped[key] = (f"training rate {model.train_rate_hz} Hz "
                            f"cannot represent the test tones")
            log.warning("skipping model %s: %s", key, skipped[key])
            continue
        models.append((label, model))

    references = {}
    ready = []
    for label, model in models:
        rate_t = model.train_rate_hz
        try:
            for f0 in cfg.f0_hz:
                f0s = analysis.snap_to_bin(f0, rate_t, FRAME)
                if (label, f0s) in references:
                    continue
                x = analysis.gen_sine(f0s, rate_t, cfg.gain, cfg.duration_s)
                y = neural.process(model, x)
                spec = _frame_spectrum(y, rate_t)
                harm = analysis.extract_harmonics(spec, f0s)
                resynth = analysis.resynth_bandlimited(harm, rate_t, FRAME)
                references[(label, f0s)] = _Reference(x, spec, harm, resynth)
        except neural.InstabilityFault as fault:
            skipped[label] = f"unstable at its own training rate: {fault}"
            log.warning("skipping model %s: %s", label, skipped[label])
            references = {k: v for k, v in references.items()
                          if k[0] != label}
            continue
        ready.append((label, model))

    cells = []
    for label, model in ready:
        for ms in cfg.methods:
            for f0 in cfg.f0_hz:
                f0s = analysis.snap_to_bin(f0, model.train_rate_hz, FRAME)
                cells.append((label, model, ms,
                              references[(label, f0s)], f0s))

    rows = []
    if cells:
        with concurrent.futures.ThreadPoolExecutor(
                max_workers=_worker_count(cfg)) as pool:
            futures = [pool.submit(_run_cell, label, model, ms, ref, f0s,
                                   cfg)
                       for label, model, ms, ref, f0s in cells]
            rows = [f.result() for f in futures]
    rows.sort(key=lambda r: (r["model"], r["method"], r["f0_hz"]))
    return ExperimentResult(rows, _summarize(rows, skipped), skipped)


def _summarize(rows, skipped):
    """Per-(model, method) frequency-averaged metrics and worst rows."""
    metrics = ("esr_db", "mesr_db", "asr_db", "nmr_db")
    models = {}
    for row in rows:
        per_method = models.setdefault(row["model"], {})
        per_method.setdefault(row["method"], []).append(row)
    out = {"models": {}, "skipped": dict(sorted(skipped.items()))}
    for label in sorted(models):
        entry = {}
        for method in sorted(models[label]):
            group = models[label][method]
            ok = [r for r in group if r["status"] == "ok"
                  and all(math.isfinite(r[k]) for k in metrics)]
            stat = {
                "rows": len(group),
                "unstable": sum(r["status"] == "unstable" for r in group),
                "mean": {k: (sum(r[k] for r in ok) / len(ok) if ok else None)
                         for k in metrics},
            }
            if ok:
                worst = max(ok, key=lambda r: r["esr_db"])
                stat["worst"] = dict(worst)
            entry[method] = stat
        out["models"][label] = {"methods": entry}
    return out


def write_csv(rows, path):
    """Rows to CSV with the documented stable column order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([
                row["model"], row["method"], row["l"], row["m"],
                f"{row['f0_hz']:.6f}",
                f"{row['esr_db']:.6f}", f"{row['mesr_db']:.6f}",
                f"{row['asr_db']:.6f}", f"{row['nmr_db']:.6f}",
                row["status"],
            ])


def write_summary(summary, path):
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True)
                          + "\n")
