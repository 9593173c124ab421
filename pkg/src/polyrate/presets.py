"""Named designs and converter builders for the 44.1/48 kHz workflows.

The 44100 <-> 48000 conversion shares the virtual filtering rate
160 * 44100 = 147 * 48000 = 7.056 MHz. Two filter families cover it:

* narrow-band ("nb-…"): one rational stage does the whole job, so the
  filter needs the full 120 dB template at the 7.056 MHz rate.
* wide-band ("wb-…"): a half-band stage doubles the rate first, which
  relaxes the rational stage's stopband edge to 60.1 kHz and shortens
  it by a factor of about four.

Every design in the registry is cached after its first construction;
the equiripple ones take seconds at these orders.
"""

import functools

from .filter_design import (
    DesignSpecification,
    design_equiripple_lowpass,
    design_halfband_elliptic_iir,
    design_halfband_fir,
    design_kaiser_lowpass,
)
from .resamplers import (
    CicDecimator,
    CostReport,
    EqLinterpInterpolator,
    FftConverter,
    HalfBandStage,
    RationalResampler,
    cascade_cost,
    cascade_halfband,
    fir_cost,
    two_stage_44p1_to_48,
    two_stage_48_to_44p1,
)

__all__ = [
    "FILTER_RATE_HZ", "SOURCE_RATE_HZ", "TARGET_RATE_HZ", "DOUBLED_RATE_HZ",
    "FILTER_NAMES", "CONVERTER_NAMES", "INTERP_KINDS", "DECIM_KINDS",
    "design_spec", "design", "evaluation_spec", "evaluation_stages",
    "build_converter", "build_oversampler", "filter_cost", "conversion_cost",
    "oversampling_cost",
]

SOURCE_RATE_HZ = 44_100.0
TARGET_RATE_HZ = 48_000.0
DOUBLED_RATE_HZ = 88_200.0
FILTER_RATE_HZ = 7_056_000.0  # 160 * 44100 == 147 * 48000

FILTER_NAMES = ("nb-kaiser", "nb-remez", "wb-kaiser", "wb-remez",
                "hb-iir", "hb-fir")
CONVERTER_NAMES = ("nb-kaiser", "nb-remez", "hb-wb-kaiser", "hb-wb-remez")
INTERP_KINDS = ("c-hb-iir", "c-hb-fir", "eq-linterp", "fft")
DECIM_KINDS = ("c-hb-iir", "c-hb-fir", "cic", "fft")

# fixed orders where the order estimate and the published design differ;
# the Kaiser estimate for the wide-band template lands on 918, the
# published filter uses 916 and still meets the composite template
_FIXED_ORDER = {"nb-remez": 2554, "wb-remez": 698, "wb-kaiser": 916}


def design_spec(name):
    """The DesignSpecification a named FIR design is built against."""
    r = FILTER_RATE_HZ
    if name == "nb-kaiser":
        return DesignSpecification(11_500 / r, 28_100 / r, 0.5, 120.0, r)
    if name == "nb-remez":
        return DesignSpecification(16_000 / r, 28_100 / r, 0.5, 120.0, r)
    if name == "wb-kaiser":
        return DesignSpecification(0.0, 60_100 / r, 0.5, 120.0, r)
    if name == "wb-remez":
        return DesignSpecification(16_000 / r, 60_100 / r, 0.5, 120.0, r)
    raise ValueError(f"no band-edge specification for {name!r}; "
                     f"half-band designs take (f_sb, a_s) directly")


@functools.lru_cache(maxsize=None)
def design(name):
    """Build (once) and return a registry design by name."""
    if name in ("nb-kaiser", "wb-kaiser"):
        return design_kaiser_lowpass(design_spec(name),
                                     n=_FIXED_ORDER.get(name))
    if name in ("nb-remez", "wb-remez"):
        return design_equiripple_lowpass(design_spec(name),
                                         n=_FIXED_ORDER[name])
    if name == "hb-iir":
        return design_halfband_elliptic_iir(28_100 / DOUBLED_RATE_HZ, 120.0,
                                            rate_hz=DOUBLED_RATE_HZ)
    if name == "hb-fir":
        return design_halfband_fir(120.0, 28_100 / DOUBLED_RATE_HZ,
                                   rate_hz=DOUBLED_RATE_HZ)
    raise ValueError(f"unknown design {name!r}; expected one of "
                     f"{', '.join(FILTER_NAMES)}")


def evaluation_spec():
    """The shared acceptance template every conversion path is measured
    against: flat to 16 kHz within +-0.5 dB, 120 dB beyond 28.1 kHz,
    expressed at the 88.2 kHz evaluation rate so one grid covers both
    single-stage and two-stage paths up to 44.1 kHz."""
    r = DOUBLED_RATE_HZ
    return DesignSpecification(16_000 / r, 28_100 / r, 0.5, 120.0, r)


def evaluation_stages(name):
    """The design stages whose cascaded response a conversion path
    applies to the signal band (what validate_against_spec expects)."""
    if name in ("nb-kaiser", "nb-remez"):
        return [design(name)]
    if name == "hb-wb-kaiser":
        return [design("hb-iir"), design("wb-kaiser")]
    if name == "hb-wb-remez":
        return [design("hb-iir"), design("wb-remez")]
    raise ValueError(f"unknown conversion path {name!r}; expected one of "
                     f"{', '.join(CONVERTER_NAMES)}")


def build_converter(name, direction):
    """A fresh streaming 44.1/48 kHz converter.

    direction 'up' converts 44100 -> 48000, 'down' the reverse. The
    nb-* paths are one rational stage; hb-wb-* paths run the elliptic
    half-band doubler next to the source rate with the short rational
    stage between.
    """
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    up = direction == "up"
    if name in ("nb-kaiser", "nb-remez"):
        fir = design(name)
        return (RationalResampler(fir, 160, 147) if up
                else RationalResampler(fir, 147, 160))
    if name in ("hb-wb-kaiser", "hb-wb-remez"):
        wb = design("wb-kaiser" if name.endswith("kaiser") else "wb-remez")
        hb = design("hb-iir")
        return (two_stage_44p1_to_48(wb, hb, input_rate_hz=SOURCE_RATE_HZ)
                if up else
                two_stage_48_to_44p1(wb, hb, input_rate_hz=TARGET_RATE_HZ))
    if name == "fft":
        return FftConverter(160, 147) if up else FftConverter(147, 160)
    raise ValueError(f"unknown conversion path {name!r}; expected one of "
                     f"{', '.join(CONVERTER_NAMES)} or 'fft'")


def build_oversampler(kind, m, direction):
    """A fresh power-of-two oversampling stage.

    kind selects the structure: half-band cascades ('c-hb-iir',
    'c-hb-fir') work in both directions, 'eq-linterp' only
    interpolates, 'cic' only decimates, 'fft' is the offline exact
    reference. m == 1 returns None (no resampling).
    """
    if direction not in ("interpolate", "decimate"):
        raise ValueError("direction must be 'interpolate' or 'decimate'")
    m = int(m)
    if m == 1:
        return None
    if kind == "c-hb-iir":
        return cascade_halfband(m, direction, "iir", kernel=design("hb-iir"),
                                input_rate_hz=SOURCE_RATE_HZ)
    if kind == "c-hb-fir":
        return cascade_halfband(m, direction, "fir", kernel=design("hb-fir"),
                                input_rate_hz=SOURCE_RATE_HZ)
    if kind == "eq-linterp":
        if direction != "interpolate":
            raise ValueError("eq-linterp only interpolates; valid decimators: "
                             + ", ".join(DECIM_KINDS))
        return EqLinterpInterpolator(m)
    if kind == "cic":
        if direction != "decimate":
            raise ValueError("cic only decimates; valid interpolators: "
                             + ", ".join(INTERP_KINDS))
        return CicDecimator(m, stages=6)
    if kind == "fft":
        return FftConverter(m, 1) if direction == "interpolate" \
            else FftConverter(1, m)
    kinds = INTERP_KINDS if direction == "interpolate" else DECIM_KINDS
    raise ValueError(f"unknown oversampler {kind!r}; expected one of "
                     f"{', '.join(kinds)}")


def filter_cost(name, reference_rate=SOURCE_RATE_HZ):
    """Per-sample cost of one instance of a named design, referred to
    reference_rate (multiplies/additions per reference-rate sample)."""
    if name in ("nb-kaiser", "nb-remez"):
        return fir_cost(design(name).order_n, 160, 147, reference_rate)
    if name in ("wb-kaiser", "wb-remez"):
        return fir_cost(design(name).order_n, 80, 147, reference_rate,
                        input_rate=2.0 * reference_rate)
    if name == "hb-iir":
        return HalfBandStage(design("hb-iir"),
                             "interpolate").cost_report(reference_rate)
    if name == "hb-fir":
        return HalfBandStage(design("hb-fir"),
                             "interpolate").cost_report(reference_rate)
    raise ValueError(f"unknown design {name!r}; expected one of "
                     f"{', '.join(FILTER_NAMES)}")


def conversion_cost(name, reference_rate=SOURCE_RATE_HZ):
    """Round-trip cost of a 44.1/48 conversion path: two converter
    instances, one on each side of the processor being wrapped."""
    if name in ("nb-kaiser", "nb-remez"):
        one = filter_cost(name, reference_rate)
    elif name in ("hb-wb-kaiser", "hb-wb-remez"):
        wb = filter_cost("wb-kaiser" if name.endswith("kaiser")
                         else "wb-remez", reference_rate)
        hb = filter_cost("hb-iir", reference_rate)
        one = CostReport(wb.mpus + hb.mpus, wb.apus + hb.apus,
                         wb.latency_samples, reference_rate,
                         filter_rate_hz=wb.filter_rate_hz)
    else:
        raise ValueError(f"unknown conversion path {name!r}; expected one "
                         f"of {', '.join(CONVERTER_NAMES)}")
    return CostReport(2.0 * one.mpus, 2.0 * one.apus,
                      2.0 * one.latency_samples, reference_rate,
                      filter_rate_hz=one.filter_rate_hz)


def oversampling_cost(interp, decim, m, reference_rate=SOURCE_RATE_HZ):
    """Cost of an oversample-by-m wrapper: one interpolator plus one
    decimator, per reference-rate sample."""
    total_mpus = total_apus = total_lat_samples = 0.0
    for kind, direction in ((interp, "interpolate"), (decim, "decimate")):
        stage = build_oversampler(kind, m, direction)
        if stage is None:
            continue
        if kind in ("c-hb-iir", "c-hb-fir"):
            rep = cascade_cost(stage, reference_rate)
        else:
            rep = stage.cost_report(reference_rate)
        total_mpus += rep.mpus
        total_apus += rep.apus
        total_lat_samples += (rep.latency_samples * reference_rate
                              / rep.filter_rate_hz)
    return CostReport(total_mpus, total_apus, total_lat_samples,
                      reference_rate, filter_rate_hz=reference_rate)
