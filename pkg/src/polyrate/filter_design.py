"""Lowpass prototype synthesis for the resampler stages.

Four design families, one validation path:

* Kaiser windowed-sinc with the classic order/beta estimates.
* Weighted-equiripple (minimax) FIR via the exchange engine in
  ``_remez``, with Bellanger's order estimate.
* Power-symmetric elliptic half-band IIR in two all-pass polyphase
  branches, synthesized in closed form from the elliptic nome.
* Half-band equiripple FIR via the one-band trick (design the
  even-tap subfilter alone, interleave zeros, center tap 1/2).

All magnitude checks go through ``validate_against_spec``, which
evaluates the actual coefficients on a dense grid; design routines
never certify themselves.
"""

import json
import math

import numpy as np

from ._remez import ConvergenceError, count_alternations, remez_design

__all__ = [
    "DesignSpecification", "RippleAmplitudes", "FirFilter", "HalfBandIir",
    "SpecReport", "ripple_amplitudes", "ripple_to_db", "kaiser_order",
    "kaiser_beta", "design_kaiser_lowpass", "bellanger_order",
    "design_equiripple_lowpass", "design_halfband_elliptic_iir",
    "design_halfband_fir", "validate_against_spec", "save_filter",
    "load_filter", "ConvergenceError",
]


class DesignSpecification:
    """Absolute lowpass requirements, normalized to the filtering rate.

    Parameters
    ----------
    f_pb, f_sb : float
        Passband and stopband edges in cycles/sample at the rate the
        filter runs at, 0 <= f_pb < f_sb <= 0.5.
    a_p : float
        Maximum peak-to-peak passband ripple in dB.
    a_s : float
        Minimum stopband attenuation in dB.
    filter_rate_hz : float
        The rate the filter runs at (input rate times any interpolation
        factor), used to map physical frequencies onto the normalized
        axis.
    """

    def __init__(self, f_pb, f_sb, a_p, a_s, filter_rate_hz):
        if not (0.0 <= f_pb < f_sb <= 0.5):
            raise ValueError(
                f"band edges must satisfy 0 <= f_pb < f_sb <= 0.5, "
                f"got ({f_pb}, {f_sb})")
        if not (a_p > 0 and a_s > 0):
            raise ValueError("ripple and attenuation must be positive")
        if not (filter_rate_hz > 0):
            raise ValueError("filter_rate_hz must be positive")
        self.f_pb = float(f_pb)
        self.f_sb = float(f_sb)
        self.a_p = float(a_p)
        self.a_s = float(a_s)
        self.filter_rate_hz = float(filter_rate_hz)

    @property
    def delta_f(self):
        """Transition bandwidth, cycles/sample."""
        return self.f_sb - self.f_pb

    def __repr__(self):
        return (f"DesignSpecification(f_pb={self.f_pb}, f_sb={self.f_sb}, "
                f"a_p={self.a_p}, a_s={self.a_s}, "
                f"filter_rate_hz={self.filter_rate_hz})")


class RippleAmplitudes:
    """Linear ripple amplitudes (delta1 passband, delta2 stopband)."""

    def __init__(self, delta1, delta2):
        if not (0.0 < delta1 < 1.0 and 0.0 < delta2 < 1.0):
            raise ValueError("ripple amplitudes must lie in (0, 1)")
        self.delta1 = float(delta1)
        self.delta2 = float(delta2)

    def __iter__(self):
        return iter((self.delta1, self.delta2))

    def __repr__(self):
        return f"RippleAmplitudes(delta1={self.delta1}, delta2={self.delta2})"


class FirFilter:
    """Designed FIR taps plus the metadata the resamplers need.

    coeffs has length order_n + 1. Symmetric designs carry
    linear_phase=True and satisfy coeffs[k] == coeffs[N-k] exactly.
    Half-band designs carry zero_stride=2: every second tap away from
    the center is exactly zero and the center tap is exactly 1/2 (those
    are left unnormalized to preserve the structure; all other designs
    are rescaled for unity DC gain).
    """

    def __init__(self, coeffs, linear_phase=True, zero_stride=None,
                 rate_hz=None):
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D array")
        self.order_n = self.coeffs.size - 1
        self.linear_phase = bool(linear_phase)
        self.zero_stride = zero_stride
        self.rate_hz = rate_hz
        if self.linear_phase and not np.array_equal(
                self.coeffs, self.coeffs[::-1]):
            raise ValueError("linear_phase requires exactly symmetric taps")

    @property
    def group_delay(self):
        """Group delay in samples at the filter rate (N/2)."""
        return self.order_n / 2.0

    def amplitude_response(self, freqs):
        """Zero-phase amplitude at normalized frequencies (cycles/sample).

        For symmetric taps this is the real amplitude A(f) with the
        linear-phase factor removed; it can go negative in stopbands.
        """
        om = 2.0 * np.pi * np.asarray(freqs, dtype=float)
        n = np.arange(self.coeffs.size) - self.order_n / 2.0
        out = np.empty(om.size)
        for i0 in range(0, om.size, 2048):
            sl = slice(i0, i0 + 2048)
            out[sl] = np.cos(np.outer(om[sl], n)) @ self.coeffs
        return out

    def __repr__(self):
        return (f"FirFilter(order_n={self.order_n}, "
                f"linear_phase={self.linear_phase}, "
                f"zero_stride={self.zero_stride}, rate_hz={self.rate_hz})")


class HalfBandIir:
    """Half-band IIR as two parallel all-pass polyphase branches.

    Each branch is a cascade of sections (a + z^-2) / (1 + a z^-2) at
    the full rate; branch 1 carries an extra z^-1. Total order is
    2*(n0 + n1) + 1, always odd.
    """

    def __init__(self, branch0, branch1, rate_hz=None):
        self.branch0 = np.asarray(branch0, dtype=float)
        self.branch1 = np.asarray(branch1, dtype=float)
        self.rate_hz = rate_hz
        for a in (*self.branch0, *self.branch1):
            # poles of each section sit at +/- i*sqrt(a)
            if not (0.0 <= a < 1.0):
                raise ValueError(f"all-pass coefficient {a} is not stable")

    @property
    def order_n(self):
        return 2 * (self.branch0.size + self.branch1.size) + 1

    def frequency_response(self, freqs):
        """Complex response at normalized frequencies (cycles/sample)."""
        om = 2.0 * np.pi * np.asarray(freqs, dtype=float)
        z2 = np.exp(-2j * om)
        a0 = np.ones_like(z2)
        for a in self.branch0:
            a0 = a0 * (a + z2) / (1.0 + a * z2)
        a1 = np.ones_like(z2)
        for a in self.branch1:
            a1 = a1 * (a + z2) / (1.0 + a * z2)
        return 0.5 * (a0 + np.exp(-1j * om) * a1)

    def __repr__(self):
        return (f"HalfBandIir(order_n={self.order_n}, "
                f"n0={self.branch0.size}, n1={self.branch1.size}, "
                f"rate_hz={self.rate_hz})")


class SpecReport:
    """Worst-case deviations of a design against its requirements."""

    def __init__(self, passband_dev_db, stopband_atten_db, dc_gain_db,
                 stopband_threshold_db, passband_limit_db=0.5):
        self.passband_dev_db = float(passband_dev_db)
        self.stopband_atten_db = float(stopband_atten_db)
        self.dc_gain_db = float(dc_gain_db)
        self.stopband_threshold_db = float(stopband_threshold_db)
        self.passband_limit_db = float(passband_limit_db)
        self.passes = (self.passband_dev_db <= self.passband_limit_db
                       and self.stopband_atten_db >= self.stopband_threshold_db
                       and abs(self.dc_gain_db) <= 1e-6)

    def __repr__(self):
        return (f"SpecReport(passband_dev_db={self.passband_dev_db:.4f}, "
                f"stopband_atten_db={self.stopband_atten_db:.2f}, "
                f"dc_gain_db={self.dc_gain_db:.2e}, passes={self.passes})")


def ripple_amplitudes(a_p, a_s):
    """Linear ripple amplitudes from dB specifications.

    delta1 = (10^(a_p/20) - 1) / (10^(a_p/20) + 1) treats a_p as
    peak-to-peak passband ripple; delta2 = 10^(-a_s/20).
    """
    if not (np.isfinite(a_p) and np.isfinite(a_s) and a_p > 0 and a_s > 0):
        raise ValueError("a_p and a_s must be finite and positive")
    r = 10.0 ** (a_p / 20.0)
    return RippleAmplitudes((r - 1.0) / (r + 1.0), 10.0 ** (-a_s / 20.0))


def ripple_to_db(ripple):
    """Inverse of ripple_amplitudes: (a_p, a_s) in dB."""
    a_p = 20.0 * math.log10((1.0 + ripple.delta1) / (1.0 - ripple.delta1))
    a_s = -20.0 * math.log10(ripple.delta2)
    return a_p, a_s


def kaiser_order(a_s, delta_f):
    """Windowed-sinc order estimate, rounded up to the next even integer.

    N = (a_s - 7.95) / (14.36 * delta_f).
    """
    if a_s <= 7.95:
        raise ValueError("attenuation must exceed 7.95 dB for the estimate")
    if delta_f <= 0:
        raise ValueError("transition width must be positive")
    raw = (a_s - 7.95) / (14.36 * delta_f)
    n = math.ceil(raw)
    return n if n % 2 == 0 else n + 1


def kaiser_beta(a_s):
    """Window shape parameter for a stopband attenuation target.

    0.1102 (a_s - 8.7) above 50 dB; the standard piecewise extension
    below that (power-law blend down to 21 dB, rectangular below).
    """
    if a_s > 50.0:
        return 0.1102 * (a_s - 8.7)
    if a_s > 21.0:
        return 0.5842 * (a_s - 21.0) ** 0.4 + 0.07886 * (a_s - 21.0)
    return 0.0


def design_kaiser_lowpass(spec, n=None, max_order=1_000_000):
    """Kaiser windowed-sinc lowpass meeting a DesignSpecification.

    Cutoff at the transition-band midpoint, order from kaiser_order
    unless n overrides it (must be even so the group delay is an
    integer), taps normalized for exactly unity DC gain and mirrored
    so the symmetry is bitwise.
    """
    if n is None:
        n = kaiser_order(spec.a_s, spec.delta_f)
    elif n % 2 or n <= 0:
        raise ValueError("order override must be a positive even integer")
    if n > max_order:
        raise ValueError(f"estimated order {n} exceeds cap {max_order}")
    beta = kaiser_beta(spec.a_s)
    f_c = 0.5 * (spec.f_pb + spec.f_sb)
    w = np.kaiser(n + 1, beta)
    # build the left half plus center, then mirror
    k = np.arange(n // 2 + 1) - n / 2.0
    half = 2.0 * f_c * np.sinc(2.0 * f_c * k) * w[:n // 2 + 1]
    taps = np.concatenate([half, half[-2::-1]])
    taps /= taps.sum()
    return FirFilter(taps, linear_phase=True, rate_hz=spec.filter_rate_hz)


def bellanger_order(delta1, delta2, delta_f):
    """Equiripple length estimate, rounded up to the next even integer.

    N_eq = 2/3 * log10(1/(10 d1 d2)) / delta_f.
    """
    if not (delta1 > 0 and delta2 > 0 and 0 < delta_f < 0.5):
        raise ValueError("ripples must be positive and delta_f in (0, 0.5)")
    raw = (2.0 * math.log10(1.0 / (10.0 * delta1 * delta2))
           / (3.0 * delta_f))
    n = math.ceil(raw)
    return n if n % 2 == 0 else n + 1


def design_equiripple_lowpass(spec, n=None, stopband_weight=None,
                              max_iterations=100):
    """Weighted-minimax lowpass via the exchange engine.

    Parameters
    ----------
    spec : DesignSpecification
    n : int, optional
        Filter order. Defaults to the Bellanger estimate rounded up to
        even (integer group delay).
    stopband_weight : float, optional
        Error weight of the stopband relative to the passband.
        Defaults to delta1/delta2 from the spec's ripple targets, which
        splits the minimax error in the specified ratio.

    The result is normalized for unity DC gain and its weighted-error
    alternation count is verified (at least n/2 + 2 sign-alternating
    extrema); a design that cannot be levelled raises ConvergenceError.
    """
    d1, d2 = ripple_amplitudes(spec.a_p, spec.a_s)
    if n is None:
        n = bellanger_order(d1, d2, spec.delta_f)
        if n % 2:
            n += 1
    if n < 2:
        raise ValueError("order must be at least 2")
    if stopband_weight is None:
        stopband_weight = d1 / d2
    bands = [(0.0, spec.f_pb), (spec.f_sb, 0.5)]
    result = remez_design(n + 1, bands, [1.0, 0.0], [1.0, stopband_weight],
                          max_iterations=max_iterations)
    # alternation structure belongs to the raw minimax solution; the
    # unity-DC normalization below shifts the passband error one-sided
    n_alt = count_alternations(n + 1, result.taps, bands, [1.0, 0.0],
                               [1.0, stopband_weight])
    min_alt = n // 2 + 2
    if n_alt < min_alt:
        raise ConvergenceError(
            f"converged design shows {n_alt} alternations, "
            f"expected at least {min_alt}", result.delta, result.iterations)
    taps = result.taps / result.taps.sum()
    return FirFilter(taps, linear_phase=True, rate_hz=spec.filter_rate_hz)


def _halfband_iir_theory(tbw, n):
    """(stopband attenuation dB, section coefficients) for odd order n.

    Closed-form power-symmetric elliptic synthesis from the nome
    q-series; tbw is the transition width as a fraction of the rate.
    """
    w = tbw * 2.0 * np.pi
    k = math.tan((np.pi - w) / 4.0) ** 2
    k_prime = math.sqrt(1.0 - k * k)
    e = 0.5 * (1.0 - math.sqrt(k_prime)) / (1.0 + math.sqrt(k_prime))
    q = e * (1.0 + 2.0 * e ** 4 + 15.0 * e ** 8 + 150.0 * e ** 12)
    k1 = 4.0 * math.sqrt(q ** n)
    atten_db = -20.0 * math.log10(math.sqrt(k1 / (1.0 + k1)))
    i = np.arange(1, n // 2 + 1)
    num = np.zeros(i.size)
    den = np.zeros(i.size)
    for m in range(5):
        s = -1.0 if m % 2 else 1.0
        num += s * q ** (m * (m + 1)) * np.sin((2 * m + 1) * np.pi * i / n)
        if m > 0:
            den += s * q ** (m * m) * np.cos(2 * m * np.pi * i / n)
    wv = 2.0 * q ** 0.25 * num / (1.0 + 2.0 * den)
    a_prime = np.sqrt((1.0 - wv * wv * k) * (1.0 - wv * wv / k)) / (1.0 + wv * wv)
    return atten_db, (1.0 - a_prime) / (1.0 + a_prime)


def design_halfband_elliptic_iir(f_sb, a_s_target, rate_hz=None,
                                 shortfall_db=0.5, max_order=199):
    """Power-symmetric elliptic half-band IIR meeting an attenuation target.

    Picks the minimal odd order whose theoretical attenuation reaches
    a_s_target - shortfall_db (a small documented concession: the jump
    between consecutive odd orders is many dB, so insisting on the
    exact target would regularly cost two orders for a fraction of a
    dB). Sections alternate between the two polyphase branches.
    """
    if not (0.25 < f_sb < 0.5):
        raise ValueError("stopband edge must lie in (0.25, 0.5)")
    tbw = 2.0 * f_sb - 0.5
    n = 3
    while True:
        atten, coeffs = _halfband_iir_theory(tbw, n)
        if atten >= a_s_target - shortfall_db:
            break
        n += 2
        if n > max_order:
            raise ValueError(
                f"attenuation {a_s_target} dB unreachable below order "
                f"{max_order} for f_sb={f_sb}")
    return HalfBandIir(coeffs[0::2], coeffs[1::2], rate_hz=rate_hz)


def design_halfband_fir(a_s, f_sb, rate_hz=None, shortfall_db=0.5,
                        max_order=2002):
    """Equiripple half-band FIR via the one-band trick.

    The even-indexed taps of a half-band filter form a half-rate
    filter with a single passband reaching 2*(0.5 - f_sb); designing
    that subfilter alone, halving it into the even slots and setting
    the center tap to exactly 1/2 yields the full design with half the
    stopband ripple of the subfilter. Minimal order N with N/2 odd is
    selected against the attenuation target (same shortfall concession
    as the IIR design). Taps are not renormalized: the center value
    and the zero pattern are structural.
    """
    if not (0.25 < f_sb < 0.5):
        raise ValueError("stopband edge must lie in (0.25, 0.5)")
    edge = 2.0 * (0.5 - f_sb)
    n = 6
    while True:
        g = remez_design(n // 2 + 1, [(0.0, edge)], [1.0], [1.0])
        atten = -20.0 * math.log10(abs(g.delta) / 2.0)
        if atten >= a_s - shortfall_db:
            break
        n += 4  # keep N/2 odd so the center lands on the delay branch
        if n > max_order:
            raise ValueError(
                f"attenuation {a_s} dB unreachable below order {max_order}")
    taps = np.zeros(n + 1)
    taps[0::2] = g.taps / 2.0
    taps[n // 2] = 0.5
    return FirFilter(taps, linear_phase=True, zero_stride=2, rate_hz=rate_hz)


def _edge_weighted_grid(spec, grid_points):
    """Normalized frequency grid, denser around the two band edges."""
    base = max(int(grid_points), 16384)
    n_pb = max(base // 4, 2048)
    n_tr = max(base // 8, 1024)
    n_sb = max(base // 2, 4096)
    n_edge = max(base // 8, 1024)
    w_edge = max(spec.delta_f / 8.0, 1e-7)
    parts = [
        np.linspace(0.0, spec.f_pb, n_pb),
        np.linspace(max(spec.f_pb - w_edge, 0.0), spec.f_pb, n_edge),
        np.linspace(spec.f_pb, spec.f_sb, n_tr),
        np.linspace(spec.f_sb, min(spec.f_sb + w_edge, 0.5), n_edge),
        np.linspace(spec.f_sb, 0.5, n_sb),
    ]
    return np.unique(np.concatenate(parts))


def validate_against_spec(filt, spec, stopband_threshold_db=None,
                          grid_points=16384):
    """Measure a design (or cascade of designs) against a specification.

    Parameters
    ----------
    filt : FirFilter | HalfBandIir | sequence of those
        A sequence is treated as a cascade: responses are evaluated at
        physical frequencies (each stage mapped through its own
        rate_hz) and multiplied.
    spec : DesignSpecification
        Defines the passband/stopband edges; spec.filter_rate_hz maps
        them to physical frequencies for cascades.
    stopband_threshold_db : float, optional
        Pass threshold for the measured attenuation; defaults to
        spec.a_s - 0.5, accepting the same shortfall the half-band
        order search tolerates.

    Returns a SpecReport with worst-case passband deviation (max
    |gain| deviation from unity in dB over the passband), minimum
    stopband attenuation, and DC gain.
    """
    if stopband_threshold_db is None:
        stopband_threshold_db = spec.a_s - 0.5
    stages = filt if isinstance(filt, (list, tuple)) else [filt]
    grid = _edge_weighted_grid(spec, grid_points)
    f_hz = grid * spec.filter_rate_hz

    mag = np.ones(grid.size)
    dc = 1.0
    for stage in stages:
        rate = stage.rate_hz or spec.filter_rate_hz
        f_norm = f_hz / rate
        if np.any(f_norm > 0.5 + 1e-12):
            raise ValueError(
                f"grid reaches {f_hz.max():.0f} Hz beyond the Nyquist of a "
                f"stage running at {rate:.0f} Hz")
        f_norm = np.minimum(f_norm, 0.5)
        if isinstance(stage, HalfBandIir):
            mag = mag * np.abs(stage.frequency_response(f_norm))
            dc *= abs(complex(stage.frequency_response(np.zeros(1))[0]))
        else:
            mag = mag * np.abs(stage.amplitude_response(f_norm))
            dc *= abs(float(stage.amplitude_response(np.zeros(1))[0]))

    pb = f_hz <= spec.f_pb * spec.filter_rate_hz + 1e-9
    sb = f_hz >= spec.f_sb * spec.filter_rate_hz - 1e-9
    with np.errstate(divide="ignore"):
        mag_db = 20.0 * np.log10(np.maximum(mag, 1e-300))
    passband_dev = float(np.max(np.abs(mag_db[pb]))) if pb.any() else 0.0
    stop_atten = float(-np.max(mag_db[sb])) if sb.any() else np.inf
    dc_db = 20.0 * math.log10(dc) if dc > 0 else -np.inf
    return SpecReport(passband_dev, stop_atten, dc_db, stopband_threshold_db,
                      passband_limit_db=spec.a_p)


def save_filter(filt, path):
    """Serialize a design to JSON with full double precision."""
    if isinstance(filt, HalfBandIir):
        doc = {"type": "halfband_iir", "rate_hz": filt.rate_hz,
               "branches": [filt.branch0.tolist(), filt.branch1.tolist()],
               "order": filt.order_n}
    elif isinstance(filt, FirFilter):
        doc = {"type": "fir", "rate_hz": filt.rate_hz,
               "coeffs": filt.coeffs.tolist(), "order": filt.order_n,
               "linear_phase": filt.linear_phase,
               "zero_stride": filt.zero_stride}
    else:
        raise TypeError(f"cannot serialize {type(filt).__name__}")
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_filter(path):
    """Load a design saved by save_filter."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc["type"] == "halfband_iir":
        return HalfBandIir(doc["branches"][0], doc["branches"][1],
                           rate_hz=doc.get("rate_hz"))
    if doc["type"] == "fir":
        return FirFilter(doc["coeffs"],
                         linear_phase=doc.get("linear_phase", True),
                         zero_stride=doc.get("zero_stride"),
                         rate_hz=doc.get("rate_hz"))
    raise ValueError(f"unknown filter type {doc['type']!r}")
