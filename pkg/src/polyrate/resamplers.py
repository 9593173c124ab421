"""Streaming sample-rate converters built from designed filters.

Every converter here is single-stream stateful: construct, feed blocks
of any size through process(), get the same samples as a one-shot run
(streaming invariance is part of the contract and tested). Offline
exact conversion lives in fft_resample, which the rest of the library
treats as the fidelity oracle.

Cost accounting follows the polyphase operation counts: a rational
stage costs (N+1)/M multiplies and (N+1-L)/M additions per input
sample, a half-band IIR stage n0+n1 multiplies and 2(n0+n1) additions,
a half-band FIR stage (N/2+1)/2 multiplies using tap symmetry.
"""

import math
from fractions import Fraction

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from .filter_design import FirFilter, HalfBandIir

__all__ = [
    "CostReport", "RationalResampler", "HalfBandStage", "CascadeResampler",
    "EqLinterpInterpolator", "CicDecimator", "ideal_cutoff",
    "polyphase_process", "halfband_iir_process", "cascade_halfband",
    "eq_linterp_interpolate", "cic_decimate", "cic_equivalent_fir",
    "fft_resample", "FftConverter", "fir_cost", "cascade_cost",
    "two_stage_44p1_to_48", "two_stage_48_to_44p1",
]

# first-order high-shelf equalizer shared by the linear-interp and CIC
# baselines; a1 enters the denominator as +0.504 so DC gain is exactly
# (b0+b1)/(1+a1) = 1
HSF_B0 = 1.234
HSF_B1 = 0.270
HSF_A1 = 0.504


class CostReport:
    """Operation counts per sample at a stated reference rate.

    latency_samples is expressed at the rate the filter runs at
    (filter_rate_hz); latency_ms converts it through that same rate, so
    latency_ms = latency_samples / filter_rate_hz * 1000.
    """

    def __init__(self, mpus, apus, latency_samples, reference_rate_hz,
                 filter_rate_hz=None):
        self.mpus = float(mpus)
        self.apus = float(apus)
        self.total_ops = self.mpus + self.apus
        self.latency_samples = float(latency_samples)
        self.reference_rate_hz = float(reference_rate_hz)
        self.filter_rate_hz = float(filter_rate_hz or reference_rate_hz)
        self.latency_ms = 1000.0 * self.latency_samples / self.filter_rate_hz

    def to_dict(self):
        return {"mpus": self.mpus, "apus": self.apus,
                "total_ops": self.total_ops,
                "latency_samples": self.latency_samples,
                "latency_ms": self.latency_ms,
                "reference_rate_hz": self.reference_rate_hz,
                "filter_rate_hz": self.filter_rate_hz}

    def __repr__(self):
        return (f"CostReport(mpus={self.mpus:.2f}, apus={self.apus:.2f}, "
                f"total_ops={self.total_ops:.2f}, "
                f"latency_ms={self.latency_ms:.3f})")


def ideal_cutoff(l, m):
    """Ideal lowpass cutoff for an l/m converter: 1/(2 max(l, m))."""
    if l < 1 or m < 1:
        raise ValueError("factors must be positive")
    return 1.0 / (2.0 * max(l, m))


def fir_cost(n, l, m, reference_rate, input_rate=None):
    """Polyphase cost of an order-n FIR running in an l/m converter.

    MPUs = (N+1)/M and APUs = (N+1-L)/M per input sample; when the
    stage's input rate differs from the reference rate (second stage of
    a cascade), counts are rescaled by input_rate/reference_rate so
    they read per reference-rate sample. Latency is N/2 samples at the
    filter rate l*input_rate.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if input_rate is None:
        input_rate = reference_rate
    scale = input_rate / reference_rate
    mpus = (n + 1) / m * scale
    apus = max(n + 1 - l, 0) / m * scale
    return CostReport(mpus, apus, n / 2.0, reference_rate,
                      filter_rate_hz=l * input_rate)


class RationalResampler:
    """Polyphase rational converter: expand by l, filter, keep every m-th.

    The FIR prototype is decomposed into l sub-filters; each output
    sample costs one length-ceil((N+1)/l) dot product, so the filter
    effectively runs at the lower of the two rates. Output is bit-exact
    equal to zero-stuff -> dense convolution -> decimate (times l to
    restore passband gain), for any block segmentation.
    """

    def __init__(self, fir, l, m):
        if isinstance(fir, FirFilter):
            taps = fir.coeffs
            self.fir = fir
        else:
            taps = np.asarray(fir, dtype=float)
            self.fir = None
        l = int(l)
        m = int(m)
        if l < 1 or m < 1 or math.gcd(l, m) != 1:
            raise ValueError(f"factors ({l}, {m}) must be coprime positive")
        self.l = l
        self.m = m
        self.order_n = taps.size - 1
        k = -(-taps.size // l)
        padded = np.zeros(k * l)
        padded[:taps.size] = taps
        # bank[q, j] multiplies the window sample j steps into the past
        # of the newest input, already reversed for ascending windows
        self.bank = np.empty((l, k))
        for q in range(l):
            self.bank[q] = l * padded[q::l][::-1]
        self.ktaps = k
        self.reset()

    def reset(self):
        self.history = np.zeros(self.ktaps - 1)
        self.n_in = 0
        self.t_next = 0

    @property
    def ratio(self):
        return Fraction(self.l, self.m)

    def group_delay_seconds(self, input_rate):
        return self.order_n / (2.0 * self.l * input_rate)

    def process(self, block):
        block = np.asarray(block, dtype=float)
        if block.ndim != 1:
            raise ValueError("block must be 1-D")
        n_new = self.n_in + block.size
        t_end = (n_new * self.l + self.m - 1) // self.m
        n_out = t_end - self.t_next
        buf = np.concatenate([self.history, block])
        out = np.empty(n_out)
        if n_out:
            view = sliding_window_view(buf, self.ktaps)
            for i0 in range(0, n_out, 65536):
                ts = np.arange(self.t_next + i0,
                               min(self.t_next + i0 + 65536, t_end))
                p = ts * self.m
                starts = p // self.l - self.n_in
                np.einsum("ij,ij->i", view[starts], self.bank[p % self.l],
                          out=out[i0:i0 + ts.size])
        if self.ktaps > 1:
            self.history = buf[buf.size - (self.ktaps - 1):].copy()
        self.n_in = n_new
        self.t_next = t_end
        return out

    def cost_report(self, reference_rate, input_rate=None):
        return fir_cost(self.order_n, self.l, self.m, reference_rate,
                        input_rate)


def polyphase_process(resampler, block):
    """Feed one block through a RationalResampler (streaming)."""
    return resampler.process(block)


class _AllpassChain:
    """Cascade of first-order all-pass sections (a + z^-1)/(1 + a z^-1),
    the per-branch form of (a + z^-2)/(1 + a z^-2) at the branch rate."""

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.reset()

    def reset(self):
        self.zi = [np.zeros(1) for _ in self.coeffs]

    def process(self, x):
        for i, a in enumerate(self.coeffs):
            x, self.zi[i] = lfilter([a, 1.0], [1.0, a], x, zi=self.zi[i])
        return x


class HalfBandStage:
    """Factor-of-two converter around a half-band kernel.

    IIR kernels run one all-pass branch per output phase: interpolation
    emits branch0 on even outputs and branch1 on odd; decimation is the
    dual y[k] = (A0(x[2k]) + A1(x[2k-1]))/2, which has zero latency.
    FIR kernels use the two polyphase tap sets directly.
    """

    def __init__(self, kernel, direction):
        if direction not in ("interpolate", "decimate"):
            raise ValueError(f"unknown direction {direction!r}")
        self.kernel = kernel
        self.direction = direction
        if isinstance(kernel, HalfBandIir):
            self._iir = True
        elif isinstance(kernel, FirFilter) and kernel.zero_stride == 2:
            self._iir = False
        else:
            raise TypeError("kernel must be HalfBandIir or half-band "
                            "FirFilter (zero_stride=2)")
        self.reset()

    def reset(self):
        if self._iir:
            self._b0 = _AllpassChain(self.kernel.branch0)
            self._b1 = _AllpassChain(self.kernel.branch1)
        else:
            taps = self.kernel.coeffs
            self._p0 = taps[0::2]
            self._p1 = taps[1::2]
            self._z0 = np.zeros(self._p0.size - 1)
            self._z1 = np.zeros(self._p1.size - 1)
        self._pend = np.empty(0)
        self._prev_odd = 0.0

    @property
    def ratio(self):
        return Fraction(2, 1) if self.direction == "interpolate" \
            else Fraction(1, 2)

    def _fir(self, taps, x, which):
        zi = self._z0 if which == 0 else self._z1
        y, zf = lfilter(taps, [1.0], x, zi=zi)
        if which == 0:
            self._z0 = zf
        else:
            self._z1 = zf
        return y

    def process(self, block):
        block = np.asarray(block, dtype=float)
        if self.direction == "interpolate":
            if self._iir:
                y0 = self._b0.process(block)
                y1 = self._b1.process(block)
            else:
                y0 = 2.0 * self._fir(self._p0, block, 0)
                y1 = 2.0 * self._fir(self._p1, block, 1)
            out = np.empty(2 * block.size)
            out[0::2] = y0
            out[1::2] = y1
            return out
        s = np.concatenate([self._pend, block])
        pairs = s.size // 2
        ev = s[0:2 * pairs:2]
        od = s[1:2 * pairs:2]
        delayed = np.concatenate([[self._prev_odd], od[:-1]]) if pairs \
            else od
        if self._iir:
            out = 0.5 * (self._b0.process(ev) + self._b1.process(delayed))
        else:
            out = self._fir(self._p0, ev, 0) + self._fir(self._p1, delayed, 1)
        if pairs:
            self._prev_odd = od[-1]
        self._pend = s[2 * pairs:]
        return out

    def group_delay_seconds(self, input_rate):
        if self._iir:
            return 0.0
        n = self.kernel.order_n
        if self.direction == "interpolate":
            return n / (2.0 * 2.0 * input_rate)
        return n / (2.0 * input_rate)

    def cost_report(self, reference_rate):
        """Ops per input sample (interpolate) or per output sample
        (decimate), both referred to the lower-rate side."""
        if self._iir:
            n_all = self.kernel.branch0.size + self.kernel.branch1.size
            mpus, apus = n_all, 2 * n_all
        else:
            mpus = (self.kernel.order_n // 2 + 1) // 2
            apus = 2 * mpus
        lat = 0.0 if self._iir else self.kernel.order_n / 2.0
        rate = 2.0 * reference_rate
        return CostReport(mpus, apus, lat, reference_rate,
                          filter_rate_hz=rate)


def halfband_iir_process(stage, block):
    """Feed one block through a HalfBandStage (streaming)."""
    return stage.process(block)


class CascadeResampler:
    """Ordered stages sharing one stream; ratio is the exact product."""

    def __init__(self, stages, input_rate_hz=None):
        if not stages:
            raise ValueError("need at least one stage")
        self.stages = list(stages)
        self.input_rate_hz = input_rate_hz
        self.ratio = Fraction(1, 1)
        for st in self.stages:
            self.ratio *= st.ratio

    def reset(self):
        for st in self.stages:
            st.reset()

    def process(self, block):
        out = np.asarray(block, dtype=float)
        for st in self.stages:
            out = st.process(out)
        return out

    def group_delay_seconds(self, input_rate=None):
        rate = input_rate or self.input_rate_hz
        if rate is None:
            raise ValueError("input rate required for latency")
        total = 0.0
        for st in self.stages:
            total += st.group_delay_seconds(rate)
            rate = rate * st.ratio
        return total

    @property
    def total_latency_samples(self):
        """Latency in samples at the cascade input rate."""
        if self.input_rate_hz is None:
            raise ValueError("construct with input_rate_hz for latency")
        return self.group_delay_seconds() * self.input_rate_hz


def two_stage_44p1_to_48(wb_fir, hb_iir, input_rate_hz=44100.0):
    """Up path: half-band interpolate x2, then rational 80/147."""
    return CascadeResampler(
        [HalfBandStage(hb_iir, "interpolate"),
         RationalResampler(wb_fir, 80, 147)],
        input_rate_hz=input_rate_hz)


def two_stage_48_to_44p1(wb_fir, hb_iir, input_rate_hz=48000.0):
    """Down path: rational 147/80 first, half-band decimate last."""
    return CascadeResampler(
        [RationalResampler(wb_fir, 147, 80),
         HalfBandStage(hb_iir, "decimate")],
        input_rate_hz=input_rate_hz)


def cascade_halfband(m, direction, kernel_kind, kernel=None,
                     input_rate_hz=None):
    """log2(m) chained half-band stages for a power-of-two factor.

    All stages reuse one kernel design: the first stage's constraints
    are the binding ones and the same coefficients are conservative at
    every later (higher-rate) stage. Pass kernel to supply the design;
    kernel_kind ('iir' | 'fir') only selects the cost accounting when a
    kernel is given explicitly.
    """
    s = int(round(math.log2(m)))
    if 2 ** s != m or m < 2:
        raise ValueError(f"factor {m} is not a power of two >= 2")
    if kernel is None:
        raise ValueError("a half-band kernel design is required")
    stages = [HalfBandStage(kernel, direction) for _ in range(s)]
    casc = CascadeResampler(stages, input_rate_hz=input_rate_hz)
    casc.kernel_kind = kernel_kind
    return casc


def cascade_cost(cascade, reference_rate):
    """Cost of a half-band cascade per base-rate (lowest-rate) sample.

    Stage j of an interpolator processes 2^j base samples per base
    sample, so the total is (2^s - 1) times the single-stage cost; the
    decimator mirrors this per output sample.
    """
    stage0 = cascade.stages[0]
    one = stage0.cost_report(reference_rate)
    factor = 2 ** len(cascade.stages) - 1
    lat = 0.0
    rate = reference_rate
    for st in cascade.stages:
        lat += st.group_delay_seconds(rate)
        rate = rate * st.ratio
    return CostReport(one.mpus * factor, one.apus * factor,
                      lat * reference_rate, reference_rate,
                      filter_rate_hz=reference_rate)


class _Hsf:
    """Streaming first-order high-shelf, y = b0 x + b1 x' - a1 y'."""

    def __init__(self):
        self.zi = np.zeros(1)

    def reset(self):
        self.zi = np.zeros(1)

    def process(self, x):
        y, self.zi = lfilter([HSF_B0, HSF_B1], [1.0, HSF_A1], x, zi=self.zi)
        return y


class EqLinterpInterpolator:
    """High-shelf pre-equalizer followed by linear interpolation by m.

    The shelf lifts the top of the band to counter the droop of the
    linear interpolator. Each input yields m outputs ending exactly on
    the shelf output, so the stage has one input sample of latency.
    Cost: 5 multiplies + 3 additions per input sample.
    """

    def __init__(self, m):
        if m < 2:
            raise ValueError("interpolation factor must be >= 2")
        self.m = int(m)
        self._frac = np.arange(1, self.m + 1) / self.m
        self.reset()

    def reset(self):
        self._hsf = _Hsf()
        self._prev = 0.0

    @property
    def ratio(self):
        return Fraction(self.m, 1)

    def process(self, block):
        w = self._hsf.process(np.asarray(block, dtype=float))
        if w.size == 0:
            return w
        seq = np.concatenate([[self._prev], w])
        self._prev = w[-1]
        segs = seq[:-1, None] + np.outer(np.diff(seq), self._frac)
        return segs.ravel()

    def group_delay_seconds(self, input_rate):
        return 1.0 / input_rate

    def cost_report(self, reference_rate):
        return CostReport(5, 3, 1.0, reference_rate,
                          filter_rate_hz=reference_rate)


def eq_linterp_interpolate(m, block):
    """One-shot high-shelf + linear interpolation by m."""
    return EqLinterpInterpolator(m).process(block)


def cic_equivalent_fir(m=8, stages=6, rate_hz=None):
    """The CIC transfer function as explicit FIR taps.

    An integrator/comb pair is a length-m moving average; the cascade
    is that boxcar convolved with itself `stages` times, scaled by
    m^-stages for unity DC gain. For power-of-two m the taps are exact
    dyadic rationals.
    """
    box = np.ones(m) / m
    taps = box
    for _ in range(stages - 1):
        taps = np.convolve(taps, box)
    return FirFilter(taps, linear_phase=True, rate_hz=rate_hz)


class CicDecimator:
    """Cascaded-integrator-comb decimator with high-shelf equalization.

    Processing uses the mathematically identical cascaded moving-average
    FIR form rather than running integrators: a 6-deep integrator chain
    in floating point grows past the mantissa within a second of audio
    and the comb differencing then cancels catastrophically, while the
    moving-average form keeps every partial sum bounded. The cost
    report quotes the integrator/comb structure's accounting.
    """

    def __init__(self, m=8, stages=6):
        if m < 2:
            raise ValueError("decimation factor must be >= 2")
        self.m = int(m)
        self.stages = int(stages)
        self._taps = cic_equivalent_fir(self.m, self.stages).coeffs
        self.reset()

    def reset(self):
        self._zi = np.zeros(self._taps.size - 1)
        self._phase = 0
        self._hsf = _Hsf()

    @property
    def ratio(self):
        return Fraction(1, self.m)

    def process(self, block):
        x = np.asarray(block, dtype=float)
        y, self._zi = lfilter(self._taps, [1.0], x, zi=self._zi)
        idx = np.arange((-self._phase) % self.m, y.size, self.m)
        out = y[idx]
        self._phase = (self._phase + x.size) % self.m
        return self._hsf.process(out)

    def group_delay_seconds(self, input_rate):
        # the equivalent FIR is linear-phase with stages*(m-1)/2 delay
        return self.stages * (self.m - 1) / (2.0 * input_rate)

    def cost_report(self, reference_rate):
        ops = 2 * self.stages * (self.m + 1) + 5
        # quoted as a single total in the source accounting; split the
        # HSF multiplies out, leave the rest as additions
        return CostReport(5, ops - 5, self.stages * (self.m - 1) / 2.0,
                          reference_rate,
                          filter_rate_hz=self.m * reference_rate)


def cic_decimate(block, m=8, stages=6):
    """One-shot CIC decimation by m with the shelf equalizer."""
    return CicDecimator(m, stages).process(block)


class FftConverter:
    """Offline converter facade over fft_resample.

    Matches the streaming converters' surface (process / ratio /
    group_delay_seconds) so callers can swap it in anywhere a converter
    pair is expected, but it is one-shot: each process() call resamples
    the block it is given in isolation. Zero phase, zero group delay.
    """

    def __init__(self, l, m):
        l = int(l)
        m = int(m)
        if l < 1 or m < 1:
            raise ValueError("factors must be positive")
        g = math.gcd(l, m)
        self.l = l // g
        self.m = m // g

    @property
    def ratio(self):
        return Fraction(self.l, self.m)

    def group_delay_seconds(self, input_rate):
        return 0.0

    def reset(self):
        pass

    def process(self, block):
        return fft_resample(block, self.l, self.m)


def fft_resample(signal, l, m):
    """Offline exact rational resampling in the frequency domain.

    Zero-pads to a multiple of m, moves rfft bins below the narrower
    Nyquist across (splitting/folding the edge bin of even lengths),
    scales by l/m, and trims the result to ceil(n*l/m) samples. Used as
    the fidelity oracle by the analysis pipeline.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal must be 1-D")
    g = math.gcd(int(l), int(m))
    l, m = int(l) // g, int(m) // g
    if l == m:
        return x.copy()
    n = x.size
    n_pad = -(-n // m) * m
    n_up = n_pad * l // m
    xp = np.zeros(n_pad)
    xp[:n] = x
    spec = np.fft.rfft(xp)
    out_spec = np.zeros(n_up // 2 + 1, dtype=complex)
    if n_up > n_pad:
        k = n_pad // 2
        out_spec[:k + 1] = spec
        if n_pad % 2 == 0:
            out_spec[k] *= 0.5  # the old Nyquist bin becomes ordinary
    else:
        k = n_up // 2
        out_spec[:k + 1] = spec[:k + 1]
        if n_up % 2 == 0:
            # fold +/- halves of the new Nyquist line into its real bin
            out_spec[k] = 2.0 * spec[k].real
    y = np.fft.irfft(out_spec, n_up) * (n_up / n_pad)
    n_out = -(-n * l // m)
    return y[:n_out]
