"""Multirate filtering and recurrent effect models across sample rates.

Four layers:

* filter_design: Kaiser/equiripple lowpass synthesis, elliptic and FIR
  half-band designs, order estimates, template validation.
* resamplers: streaming polyphase/half-band/CIC converters built from
  those designs, with operation-count and latency accounting, plus an
  offline FFT reference.
* neural: a single-layer LSTM inference engine that can run a model at
  a rate it was not trained at (fractional state delay, oversampled
  integer delay, or resampling round trips).
* analysis/harness/cli: sine-probe spectral metrics (ESR, MESR, ASR,
  NMR) and the batch experiment front end.
"""

from .filter_design import (
    ConvergenceError,
    DesignSpecification,
    FirFilter,
    HalfBandIir,
    RippleAmplitudes,
    SpecReport,
    bellanger_order,
    design_equiripple_lowpass,
    design_halfband_elliptic_iir,
    design_halfband_fir,
    design_kaiser_lowpass,
    kaiser_beta,
    kaiser_order,
    load_filter,
    ripple_amplitudes,
    ripple_to_db,
    save_filter,
    validate_against_spec,
)
from .resamplers import (
    CascadeResampler,
    CicDecimator,
    CostReport,
    EqLinterpInterpolator,
    FftConverter,
    HalfBandStage,
    RationalResampler,
    cascade_cost,
    cascade_halfband,
    cic_equivalent_fir,
    fft_resample,
    fir_cost,
    two_stage_44p1_to_48,
    two_stage_48_to_44p1,
)
from .neural import (
    InstabilityFault,
    ModelSchemaError,
    RnnModel,
    RnnState,
    SrirnnConfig,
    StateHistory,
    bundled_test_models,
    lagrange_coeffs,
    load_model,
    lstm_step,
    make_test_model,
    oversampled_process,
    process,
    resampled_process,
    save_model,
    srirnn_cost,
    srirnn_process,
)
from .analysis import (
    HarmonicSet,
    MetricsReport,
    Spectrum,
    analyze_spectrum,
    asr,
    esr,
    extract_harmonics,
    gen_sine,
    mesr,
    nmr,
    resynth_bandlimited,
    snap_to_bin,
)
from .harness import (
    ExperimentConfig,
    apply_method,
    default_f0_grid,
    parse_method,
    run_experiment,
)
from . import presets, wavio

__version__ = "0.1.0"
