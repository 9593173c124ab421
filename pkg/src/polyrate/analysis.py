"""Tone generation, spectral analysis, and the four fidelity metrics.

The measurement chain: generate a sine, process it through some system,
window the steady-state tail with a 120 dB Chebyshev window, read the
harmonic amplitudes/phases off the spectrum, resynthesize an alias-free
reference, and score the output against it:

* ESR  - time-domain error energy vs reference energy, in dB.
* MESR - same ratio on harmonic magnitude vectors (phase-blind).
* ASR  - spectral energy outside the harmonic set vs harmonic energy.
* NMR  - that non-harmonic energy weighted against a simplified
         psychoacoustic masking threshold per Bark band.

ASR and NMR subtract window-consistently: the harmonic reference is
resynthesized, windowed, and transformed with the same parameters, so
an alias-free signal lands on the numeric floor instead of inheriting
leakage skirts.
"""

import math

import numpy as np
from scipy.signal.windows import chebwin

__all__ = [
    "Spectrum", "HarmonicSet", "MetricsReport", "gen_sine", "snap_to_bin",
    "analyze_spectrum", "extract_harmonics", "resynth_bandlimited",
    "esr", "mesr", "asr", "nmr", "DB_FLOOR",
]

DB_FLOOR = -300.0

# upper edges of the 25 critical bands, Hz (the last band runs to the
# Nyquist of whatever rate is analyzed)
_BARK_EDGES = np.array([
    100.0, 200.0, 300.0, 400.0, 510.0, 630.0, 770.0, 920.0, 1080.0,
    1270.0, 1480.0, 1720.0, 2000.0, 2320.0, 2700.0, 3150.0, 3700.0,
    4400.0, 5300.0, 6400.0, 7700.0, 9500.0, 12000.0, 15500.0,
])


class Spectrum:
    """Normalized rfft of a Chebyshev-windowed frame.

    Scaling is 2/sum(window): a full-scale sine centered on a bin reads
    its true amplitude. scale and the window descriptor are kept so
    window-consistent subtraction can reuse them.
    """

    def __init__(self, bins, rate_hz, length, window="chebyshev-120",
                 scale=None):
        self.bins = np.asarray(bins, dtype=complex)
        self.rate_hz = float(rate_hz)
        self.length = int(length)
        self.window = window
        self.scale = scale
        if self.bins.size != self.length // 2 + 1:
            raise ValueError("bin count must be length//2 + 1")

    @property
    def freqs_hz(self):
        return np.arange(self.bins.size) * (self.rate_hz / self.length)

    def magnitude_db(self, floor_db=DB_FLOOR):
        mag = np.abs(self.bins)
        return 20.0 * np.log10(np.maximum(mag, 10.0 ** (floor_db / 20.0)))


class HarmonicSet:
    """Amplitudes and phases at k*f0 for every harmonic below Nyquist."""

    def __init__(self, f0, amplitudes, phases, rate_hz):
        self.f0 = float(f0)
        self.amplitudes = np.asarray(amplitudes, dtype=float)
        self.phases = np.asarray(phases, dtype=float)
        self.rate_hz = float(rate_hz)
        if self.amplitudes.shape != self.phases.shape:
            raise ValueError("amplitude/phase length mismatch")
        if np.any(self.amplitudes < 0):
            raise ValueError("amplitudes must be non-negative")

    def __len__(self):
        return self.amplitudes.size

    def shifted(self, time_shift_s):
        """Phases advanced as if the underlying signal were shifted
        earlier by time_shift_s seconds (latency compensation)."""
        k = np.arange(1, len(self) + 1)
        ph = self.phases + 2.0 * np.pi * k * self.f0 * time_shift_s
        return HarmonicSet(self.f0, self.amplitudes, ph, self.rate_hz)


class MetricsReport:
    def __init__(self, esr_db, mesr_db, asr_db, nmr_db):
        self.esr_db = float(esr_db)
        self.mesr_db = float(mesr_db)
        self.asr_db = float(asr_db)
        self.nmr_db = float(nmr_db)

    def to_dict(self):
        return {"esr_db": self.esr_db, "mesr_db": self.mesr_db,
                "asr_db": self.asr_db, "nmr_db": self.nmr_db}

    def __repr__(self):
        return (f"MetricsReport(esr={self.esr_db:.2f}, "
                f"mesr={self.mesr_db:.2f}, asr={self.asr_db:.2f}, "
                f"nmr={self.nmr_db:.2f})")


def gen_sine(f0, rate, g=0.1, duration=1.0):
    """g*sin(2*pi*f0*n/rate) for n = 0 .. duration*rate - 1."""
    if not (0.0 < f0 < rate / 2.0):
        raise ValueError(f"f0 must lie in (0, {rate / 2}), got {f0}")
    n = int(round(duration * rate))
    return g * np.sin(2.0 * np.pi * f0 / rate * np.arange(n))


def snap_to_bin(f0, rate, n_fft):
    """Nearest exact-bin frequency for a length-n_fft analysis frame."""
    step = rate / n_fft
    return max(round(f0 / step), 1) * step


def _window(n):
    w = chebwin(n, at=120.0)
    return w, 2.0 / w.sum()


def analyze_spectrum(signal, rate, min_length=4096):
    """Chebyshev-windowed (120 dB sidelobes) normalized rfft."""
    x = np.asarray(signal, dtype=float)
    if x.size < min_length:
        raise ValueError(f"need at least {min_length} samples, got {x.size}")
    w, scale = _window(x.size)
    bins = np.fft.rfft(x * w) * scale
    return Spectrum(bins, rate, x.size, scale=scale)


def _refine_peak(mag_db, idx):
    """Parabolic vertex through three log-magnitude bins.

    Returns (fractional bin offset in [-0.5, 0.5], peak value in dB).
    """
    if idx <= 0 or idx >= mag_db.size - 1:
        return 0.0, mag_db[idx]
    a, b, c = mag_db[idx - 1], mag_db[idx], mag_db[idx + 1]
    if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(c)):
        return 0.0, b
    den = a - 2.0 * b + c
    if den >= 0.0:
        return 0.0, b
    delta = 0.5 * (a - c) / den
    delta = float(np.clip(delta, -0.5, 0.5))
    return delta, b - 0.25 * (a - c) * delta


def extract_harmonics(spec, f0, search_bins=3, floor_amp=1e-13):
    """Amplitude and phase at each k*f0 below Nyquist.

    Looks for the local magnitude maximum within +/-search_bins of the
    nominal bin, refines by parabolic interpolation of the dB peak, and
    corrects the phase for the window's linear-phase ramp and the
    fractional bin offset. Harmonics below the numeric floor are
    recorded with amplitude 0.
    """
    if f0 <= 0:
        raise ValueError("f0 must be positive")
    nyq = spec.rate_hz / 2.0
    n_harm = int(math.ceil(nyq / f0)) - 1
    while (n_harm + 1) * f0 < nyq - 1e-9:
        n_harm += 1
    mag = np.abs(spec.bins)
    with np.errstate(divide="ignore"):
        mag_db = 20.0 * np.log10(mag)
    amps = np.zeros(n_harm)
    phases = np.zeros(n_harm)
    bin_hz = spec.rate_hz / spec.length
    for k in range(1, n_harm + 1):
        nominal = k * f0 / bin_hz
        i0 = int(round(nominal))
        lo = max(i0 - search_bins, 0)
        hi = min(i0 + search_bins + 1, mag.size)
        if lo >= hi:
            continue
        i_pk = lo + int(np.argmax(mag[lo:hi]))
        delta, peak_db = _refine_peak(mag_db, i_pk)
        amp = 10.0 ** (peak_db / 20.0)
        if not np.isfinite(amp) or amp < floor_amp:
            continue
        amps[k - 1] = amp
        # x = a sin(w t + phi) => bin angle is phi - pi/2 plus the
        # symmetric window's ramp delta*(N-1)/2 at the fractional offset
        domega = 2.0 * np.pi * delta / spec.length
        ang = np.angle(spec.bins[i_pk])
        phases[k - 1] = ang + np.pi / 2.0 - domega * (spec.length - 1) / 2.0
    return HarmonicSet(f0, amps, phases, spec.rate_hz)


def resynth_bandlimited(h, rate, length):
    """Sum of sines from a HarmonicSet, truncated below rate/2."""
    t = np.arange(int(length))
    out = np.zeros(int(length))
    for k in range(1, len(h) + 1):
        fk = k * h.f0
        if fk >= rate / 2.0:
            break
        if h.amplitudes[k - 1] == 0.0:
            continue
        out += h.amplitudes[k - 1] * np.sin(
            2.0 * np.pi * fk / rate * t + h.phases[k - 1])
    return out


def _ratio_db(num, den):
    if den <= 0.0:
        raise ValueError("zero-energy reference, metric undefined")
    if num <= 0.0:
        return DB_FLOOR
    return max(10.0 * math.log10(num / den), DB_FLOOR)


def esr(y_bl, y_bl_prime):
    """10 log10(||y - y'||^2 / ||y||^2); inputs must be pre-aligned."""
    a = np.asarray(y_bl, dtype=float)
    b = np.asarray(y_bl_prime, dtype=float)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return _ratio_db(float(np.sum((a - b) ** 2)), float(np.sum(a * a)))


def mesr(h, h_prime):
    """ESR on harmonic magnitude vectors; phase differences are invisible."""
    if abs(h.f0 - h_prime.f0) > 1e-6 * h.f0:
        raise ValueError("harmonic sets have different fundamentals")
    n = min(len(h), len(h_prime))
    a = h.amplitudes[:n]
    b = h_prime.amplitudes[:n]
    return _ratio_db(float(np.sum((a - b) ** 2)), float(np.sum(a * a)))


def _windowed_reference(spec, h):
    """Spectrum of the resynthesized harmonic part under the same window."""
    ref = resynth_bandlimited(h, spec.rate_hz, spec.length)
    w, scale = _window(spec.length)
    return np.fft.rfft(ref * w) * scale


def asr(spec, h):
    """Aliasing-to-signal ratio, window-consistent.

    Residual bins Y - Y_BL carry everything not explained by the
    harmonic set (aliasing, noise); their energy is compared with the
    energy of Y_BL itself.
    """
    y_bl = _windowed_reference(spec, h)
    num = float(np.sum(np.abs(spec.bins - y_bl) ** 2))
    den = float(np.sum(np.abs(y_bl) ** 2))
    return _ratio_db(num, den)


def _band_slices(freqs, rate):
    edges = np.concatenate([[0.0], _BARK_EDGES, [rate / 2.0]])
    edges = edges[edges <= rate / 2.0 + 1e-9]
    if edges[-1] < rate / 2.0:
        edges = np.concatenate([edges, [rate / 2.0]])
    idx = np.searchsorted(edges, freqs, side="right") - 1
    idx = np.clip(idx, 0, edges.size - 2)
    return idx, edges.size - 1


def nmr(spec, h):
    """Noise-to-mask ratio over 25 critical bands.

    Masker energy per band comes from the windowed harmonic reference;
    a Schroeder-style spreading function (+25 dB/Bark below, -10
    dB/Bark above the masker band) smears it, and the threshold sits
    14.5 + z dB below the spread masker energy, z being the band
    center in Bark. The residual energy per band is compared with the
    threshold and the per-band ratios average linearly.
    """
    y_bl = _windowed_reference(spec, h)
    noise = np.abs(spec.bins - y_bl) ** 2
    masker = np.abs(y_bl) ** 2
    idx, n_bands = _band_slices(spec.freqs_hz, spec.rate_hz)
    e_mask = np.bincount(idx, weights=masker, minlength=n_bands)
    e_noise = np.bincount(idx, weights=noise, minlength=n_bands)
    z = np.arange(n_bands, dtype=float)
    dz = z[:, None] - z[None, :]  # maskee band minus masker band
    spread_db = np.where(dz >= 0.0, -10.0 * dz, 25.0 * dz)
    spread = (10.0 ** (spread_db / 10.0)) @ e_mask
    offset = 10.0 ** (-(14.5 + z + 0.5) / 10.0)
    thresh = spread * offset
    ok = thresh > 0.0
    if not np.any(ok):
        raise ValueError("zero-energy reference, metric undefined")
    ratio = float(np.mean(e_noise[ok] / thresh[ok]))
    if ratio <= 0.0:
        return DB_FLOOR
    return max(10.0 * math.log10(ratio), DB_FLOOR)
