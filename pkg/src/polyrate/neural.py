"""LSTM effect-model inference at native and foreign sample rates.

A trained model assumes one sample spacing. Running it on audio at a
different rate without adjustment ("naive") detunes its dynamics and
aliases its nonlinearity. Three remedies are implemented around one
shared inner loop:

* fractional state delay: the recurrence reads a Lagrange-interpolated
  (or extrapolated) combination of past states so the feedback spacing
  matches the training rate (srirnn_process);
* integer oversampling: the signal is interpolated by m, the recurrence
  reads the state from exactly m steps back, and the output is
  decimated (oversampled_process);
* resampling: the signal is converted to the training rate, processed
  plainly, and converted back (resampled_process).

The gate convention is fixed: blocks ordered (input, forget, candidate,
output), logistic sigmoid on i/f/o, tanh on the candidate and on the
cell at output, no peepholes. The output layer is affine in the hidden
state with an optional direct input term.

Cell magnitudes above 1e6 trip an InstabilityFault carrying the sample
index; extrapolated state feedback (running below the training rate)
is the configuration known to get there.
"""

import json
import math
from pathlib import Path

import numpy as np

from .resamplers import CostReport

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is an install requirement
    _njit = None

__all__ = [
    "RnnModel", "RnnState", "SrirnnConfig", "StateHistory",
    "InstabilityFault", "ModelSchemaError", "lagrange_coeffs", "lstm_step",
    "process", "srirnn_process", "oversampled_process", "resampled_process",
    "srirnn_cost", "load_model", "save_model", "make_test_model",
    "bundled_test_models", "CELL_LIMIT",
]

CELL_LIMIT = 1e6


class InstabilityFault(RuntimeError):
    """State feedback diverged (some |cell| exceeded CELL_LIMIT)."""

    def __init__(self, sample_index, value, context="", partial_output=None):
        self.sample_index = sample_index
        self.value = value
        self.context = context
        self.partial_output = partial_output
        where = "" if sample_index is None else f" at sample {sample_index}"
        ctx = f" ({context})" if context else ""
        super().__init__(
            f"cell state reached {value:.3g}{where}{ctx}")


class ModelSchemaError(ValueError):
    """A model document failed validation; the message names the field."""


def _field(doc, key, path):
    if not isinstance(doc, dict) or key not in doc:
        raise ModelSchemaError(f"{path}{key}: missing")
    return doc[key]


def _as_array(value, shape, path):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ModelSchemaError(f"{path}: not numeric") from None
    if arr.shape != shape:
        raise ModelSchemaError(
            f"{path}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelSchemaError(f"{path}: contains non-finite entries")
    return arr


class RnnModel:
    """Immutable single-layer LSTM with an affine output layer.

    hidden_size counts hidden units; the full recurrent state is twice
    that (hidden plus cell). Weight shapes: w_input (4H, D),
    w_recurrent (4H, H), bias (4H,), w_out_hidden (H,), w_out_input
    (D,), out_bias scalar. Gate blocks along the 4H axis are ordered
    (input, forget, candidate, output).
    """

    def __init__(self, hidden_size, input_dim, train_rate_hz, w_input,
                 w_recurrent, bias, w_out_hidden, w_out_input, out_bias,
                 name=None):
        h = int(hidden_size)
        d = int(input_dim)
        if d < 1:
            raise ModelSchemaError("input_dim: must be at least 1")
        if not (6 <= h <= 64):
            raise ModelSchemaError(
                f"hidden_size: must lie in [6, 64], got {h}")
        if not train_rate_hz > 0:
            raise ModelSchemaError("train_rate_hz: must be positive")
        self.hidden_size = h
        self.input_dim = d
        self.train_rate_hz = float(train_rate_hz)
        self.w_input = _as_array(w_input, (4 * h, d), "lstm.w_input")
        self.w_recurrent = _as_array(
            w_recurrent, (4 * h, h), "lstm.w_recurrent")
        self.bias = _as_array(bias, (4 * h,), "lstm.bias")
        self.w_out_hidden = _as_array(w_out_hidden, (h,), "dense.w_hidden")
        self.w_out_input = _as_array(w_out_input, (d,), "dense.w_input")
        self.out_bias = float(out_bias)
        self.name = name
        for arr in (self.w_input, self.w_recurrent, self.bias,
                    self.w_out_hidden, self.w_out_input):
            arr.setflags(write=False)

    @property
    def state_count(self):
        """Total recurrent state entries: hidden plus cell."""
        return 2 * self.hidden_size

    def initial_state(self):
        return RnnState(np.zeros(self.hidden_size),
                        np.zeros(self.hidden_size))

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return (f"RnnModel({label} hidden={self.hidden_size} "
                f"in={self.input_dim} rate={self.train_rate_hz:g})")


class RnnState:
    """Hidden and cell vectors of one LSTM stream.

    After any lstm_step the hidden entries lie in (-1, 1) in exact
    arithmetic (output gate in (0,1) times a tanh); float saturation
    can round the bound to +/-1, so the constructor admits the closed
    interval.
    """

    def __init__(self, hidden, cell):
        self.hidden = np.asarray(hidden, dtype=float)
        self.cell = np.asarray(cell, dtype=float)
        if self.hidden.shape != self.cell.shape or self.hidden.ndim != 1:
            raise ValueError("hidden and cell must be 1-D and equal length")
        if np.any(np.abs(self.hidden) > 1.0):
            raise ValueError("hidden entries must lie in [-1, 1]")

    def copy(self):
        return RnnState(self.hidden.copy(), self.cell.copy())


class StateHistory:
    """Ring buffer of the last depth full states, most recent first.

    Starts at zeros. recent(0) is the newest pushed state; weighted(c)
    forms sum_j c[j] * state_{-1-j} over hidden and cell alike, the
    combination the fractional-delay recurrence feeds back.
    """

    def __init__(self, hidden_size, depth):
        if depth < 1:
            raise ValueError("depth must be at least 1")
        self.depth = int(depth)
        self.hidden = np.zeros((self.depth, int(hidden_size)))
        self.cell = np.zeros((self.depth, int(hidden_size)))
        self._pos = 0

    def push(self, state):
        self._pos = (self._pos - 1) % self.depth
        self.hidden[self._pos] = state.hidden
        self.cell[self._pos] = state.cell

    def recent(self, j=0):
        if not 0 <= j < self.depth:
            raise IndexError(f"history holds {self.depth} states")
        row = (self._pos + j) % self.depth
        return self.hidden[row].copy(), self.cell[row].copy()

    def weighted(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.size > self.depth:
            raise ValueError("more coefficients than stored states")
        rows = (self._pos + np.arange(c.size)) % self.depth
        return c @ self.hidden[rows], c @ self.cell[rows]


def lagrange_coeffs(k, d):
    """Lagrange fractional-delay FIR tap weights.

    l_j = prod_{i != j} (d - i) / (j - i) over nodes i, j in 0..k; the
    weights sum to 1 for any d, so constant state trajectories pass
    through unchanged. Negative d extrapolates ahead of the newest
    node (weights then leave [0, 1]).
    """
    k = int(k)
    if k < 0:
        raise ValueError("order must be non-negative")
    d = float(d)
    coeffs = np.empty(k + 1)
    for j in range(k + 1):
        num = 1.0
        den = 1.0
        for i in range(k + 1):
            if i != j:
                num *= d - i
                den *= j - i
        coeffs[j] = num / den
    return coeffs


class SrirnnConfig:
    """Fractional state-delay setup for running at l/m times the
    training rate.

    Delay adjustment delta = l/m - 1 run-rate samples; a k-th order
    Lagrange kernel over the k+1 newest states realizes it. l/m > 1
    interpolates; l/m < 1 extrapolates, which is the documented
    instability risk.
    """

    def __init__(self, l, m, k=3):
        l = int(l)
        m = int(m)
        if l < 1 or m < 1:
            raise ValueError("l and m must be positive")
        if math.gcd(l, m) != 1:
            raise ValueError("l and m must be coprime")
        self.l = l
        self.m = m
        self.k = int(k)
        self.delta = l / m - 1.0
        self.coeffs = lagrange_coeffs(self.k, self.delta)
        if abs(self.coeffs.sum() - 1.0) > 1e-12:
            raise AssertionError("delay weights must sum to 1")

    def __repr__(self):
        return (f"SrirnnConfig(l={self.l}, m={self.m}, k={self.k}, "
                f"delta={self.delta:+.6f})")


def _sigmoid_vec(z):
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_step(model, state, x):
    """One recurrence step: (state, y) from the previous state and one
    input frame (scalar audio sample, or a length input_dim vector)."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if xv.shape != (model.input_dim,):
        raise ValueError(f"input frame must have {model.input_dim} entries")
    h = model.hidden_size
    z = model.w_input @ xv + model.w_recurrent @ state.hidden + model.bias
    gi = _sigmoid_vec(z[:h])
    gf = _sigmoid_vec(z[h:2 * h])
    gg = np.tanh(z[2 * h:3 * h])
    go = _sigmoid_vec(z[3 * h:])
    cell = gf * state.cell + gi * gg
    if not np.all(np.isfinite(cell)):
        raise InstabilityFault(None, float(np.max(np.abs(
            np.where(np.isfinite(cell), cell, np.inf)))))
    hidden = go * np.tanh(cell)
    y = float(model.w_out_hidden @ hidden + model.w_out_input @ xv
              + model.out_bias)
    return RnnState(hidden, cell), y


def _loop_py(w_ih0, gate_const, w_hh, w_oh, w_ox0, y_const, x, coeffs, y):
    """Sample loop shared by every processing mode.

    The state fed back at step t is sum_j coeffs[j] * state_{t-1-j};
    coeffs == [1.0] is the plain recurrence and skips the weighting
    arithmetic entirely so identity configurations match plain
    processing bit for bit. Returns (fault_index, value), index -1
    when the run stayed inside the cell limit.
    """
    n = x.shape[0]
    h = w_oh.shape[0]
    p = coeffs.shape[0]
    h_hist = np.zeros((p, h))
    c_hist = np.zeros((p, h))
    hs = np.empty(h)
    cs = np.empty(h)
    pos = 0
    for t in range(n):
        if p == 1:
            for j in range(h):
                hs[j] = h_hist[0, j]
                cs[j] = c_hist[0, j]
        else:
            for j in range(h):
                hs[j] = 0.0
                cs[j] = 0.0
            for q in range(p):
                cq = coeffs[q]
                if cq != 0.0:
                    row = pos + q
                    if row >= p:
                        row -= p
                    for j in range(h):
                        hs[j] += cq * h_hist[row, j]
                        cs[j] += cq * c_hist[row, j]
        xt = x[t]
        pos = pos - 1 if pos > 0 else p - 1
        acc = 0.0
        for j in range(h):
            zi = gate_const[j] + w_ih0[j] * xt
            zf = gate_const[h + j] + w_ih0[h + j] * xt
            zg = gate_const[2 * h + j] + w_ih0[2 * h + j] * xt
            zo = gate_const[3 * h + j] + w_ih0[3 * h + j] * xt
            for q in range(h):
                hq = hs[q]
                zi += w_hh[j, q] * hq
                zf += w_hh[h + j, q] * hq
                zg += w_hh[2 * h + j, q] * hq
                zo += w_hh[3 * h + j, q] * hq
            if zi >= 0.0:
                gi = 1.0 / (1.0 + math.exp(-zi))
            else:
                ei = math.exp(zi)
                gi = ei / (1.0 + ei)
            if zf >= 0.0:
                gf = 1.0 / (1.0 + math.exp(-zf))
            else:
                ef = math.exp(zf)
                gf = ef / (1.0 + ef)
            gg = math.tanh(zg)
            if zo >= 0.0:
                go = 1.0 / (1.0 + math.exp(-zo))
            else:
                eo = math.exp(zo)
                go = eo / (1.0 + eo)
            cn = gf * cs[j] + gi * gg
            if not abs(cn) <= CELL_LIMIT:
                return t, cn
            hn = go * math.tanh(cn)
            h_hist[pos, j] = hn
            c_hist[pos, j] = cn
            acc += w_oh[j] * hn
        y[t] = acc + w_ox0 * xt + y_const
    return -1, 0.0


if _njit is not None:
    _loop = _njit(cache=True, nogil=True)(_loop_py)
else:  # pragma: no cover
    _loop = _loop_py


def _conditioned(model, cond):
    d = model.input_dim
    if cond is None:
        cond = np.zeros(d - 1)
    cond = np.asarray(cond, dtype=float).reshape(-1)
    if cond.size != d - 1:
        raise ValueError(
            f"conditioning vector must have {d - 1} entries, got {cond.size}")
    gate_const = model.bias + model.w_input[:, 1:] @ cond
    y_const = model.out_bias + float(model.w_out_input[1:] @ cond)
    return (np.ascontiguousarray(model.w_input[:, 0]),
            np.ascontiguousarray(gate_const),
            np.ascontiguousarray(model.w_recurrent),
            np.ascontiguousarray(model.w_out_hidden),
            float(model.w_out_input[0]), y_const)


def _run(model, signal, coeffs, cond, context):
    x = np.ascontiguousarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal must be 1-D")
    c = np.ascontiguousarray(coeffs, dtype=float)
    last = c.size
    while last > 1 and c[last - 1] == 0.0:
        last -= 1
    c = c[:last]
    y = np.zeros(x.size)
    if x.size == 0:
        return y
    w_ih0, gate_const, w_hh, w_oh, w_ox0, y_const = _conditioned(model, cond)
    idx, value = _loop(w_ih0, gate_const, w_hh, w_oh, w_ox0, y_const,
                       x, c, y)
    if idx >= 0:
        name = model.name or "model"
        raise InstabilityFault(int(idx), float(value),
                               context=f"{name}, {context}",
                               partial_output=y[:idx])
    return y


def process(model, signal, cond=None):
    """Plain inference at the model's own rate."""
    return _run(model, signal, np.ones(1), cond, "plain")


def srirnn_process(model, cfg, signal, cond=None):
    """Inference at l/m times the training rate with the recurrence
    reading the fractionally delayed state defined by cfg.

    l = m reduces to plain processing exactly (the delay weights
    collapse to [1, 0, ..., 0] and trailing zeros are dropped).
    """
    if not isinstance(cfg, SrirnnConfig):
        raise TypeError("cfg must be a SrirnnConfig")
    label = f"srirnn k={cfg.k} l/m={cfg.l}/{cfg.m}"
    return _run(model, signal, cfg.coeffs, cond, label)


def oversampled_process(model, m, interp, decim, signal, cond=None):
    """Run the model at m times its rate between a matched
    interpolator/decimator pair, reading the state from exactly m
    steps back so the feedback spacing stays at the training rate.

    m=1 bypasses the resamplers and is identical to plain processing.
    interp/decim may be streaming resamplers (anything with process())
    or plain callables signal -> signal.
    """
    m = int(m)
    if m < 1:
        raise ValueError("oversampling factor must be at least 1")
    if m == 1:
        return process(model, signal, cond)
    up = _apply_resampler(interp, signal)
    coeffs = np.zeros(m)
    coeffs[m - 1] = 1.0
    y_up = _run(model, up, coeffs, cond, f"oversample m={m}")
    return _apply_resampler(decim, y_up)


def resampled_process(model, up, down, signal, cond=None):
    """Convert the signal to the training rate, process plainly,
    convert back. The recurrence never sees a foreign rate, so this
    mode cannot destabilize a model that is stable at its own rate.

    up feeds the model (foreign rate -> training rate), down returns
    (training rate -> foreign rate); their ratios must cancel when
    both expose a ratio attribute. None means identity on either side.
    """
    r_up = getattr(up, "ratio", None)
    r_down = getattr(down, "ratio", None)
    if r_up is not None and r_down is not None and r_up * r_down != 1:
        raise ValueError(
            f"conversion ratios do not cancel: {r_up} * {r_down} != 1")
    x_model = _apply_resampler(up, signal)
    y_model = process(model, x_model, cond)
    return _apply_resampler(down, y_model)


def _apply_resampler(resampler, signal):
    if resampler is None:
        return np.asarray(signal, dtype=float)
    if hasattr(resampler, "process"):
        return resampler.process(signal)
    if callable(resampler):
        return resampler(signal)
    raise TypeError("resampler must expose process() or be callable")


def srirnn_cost(s, k, l, m, reference_rate_hz):
    """Arithmetic cost of the fractional state delay, per sample at
    reference_rate_hz.

    The k-th order kernel needs (k+1) multiplies and k additions per
    state entry per step at the operating rate; with s state entries
    and the operating rate l/m times the reference, that is
    (k+1)*s*max(l,m)/m multiplies and k*s*max(l,m)/m additions per
    reference sample (per operating sample when running below the
    reference rate, whichever is counted at the higher of the two).
    No filtering is involved, so the latency is zero.
    """
    if s < 1 or k < 0 or l < 1 or m < 1:
        raise ValueError("invalid cost parameters")
    scale = max(l, m) / m
    return CostReport(mpus=(k + 1) * s * scale, apus=k * s * scale,
                      latency_samples=0.0,
                      reference_rate_hz=reference_rate_hz,
                      filter_rate_hz=reference_rate_hz)


def _from_canonical(doc):
    h = _field(doc, "hidden_size", "")
    d = _field(doc, "input_dim", "")
    rate = _field(doc, "train_rate_hz", "")
    lstm = _field(doc, "lstm", "")
    dense = _field(doc, "dense", "")
    try:
        h = int(h)
        d = int(d)
    except (TypeError, ValueError):
        raise ModelSchemaError(
            "hidden_size/input_dim: must be integers") from None
    return RnnModel(
        hidden_size=h, input_dim=d, train_rate_hz=rate,
        w_input=_as_array(_field(lstm, "w_input", "lstm."), (4 * h, d),
                          "lstm.w_input"),
        w_recurrent=_as_array(_field(lstm, "w_recurrent", "lstm."),
                              (4 * h, h), "lstm.w_recurrent"),
        bias=_as_array(_field(lstm, "bias", "lstm."), (4 * h,), "lstm.bias"),
        w_out_hidden=_as_array(_field(dense, "w_hidden", "dense."), (h,),
                               "dense.w_hidden"),
        w_out_input=_as_array(_field(dense, "w_input", "dense."), (d,),
                              "dense.w_input"),
        out_bias=_field(dense, "bias", "dense."),
        name=doc.get("name"))


def _from_torch_state_dict(doc):
    """Adapter for PyTorch-exported guitar-amp model documents: a
    state_dict with rec.* LSTM tensors and lin.* output tensors plus a
    model_data header.

    Gate blocks are already (i, f, g, o); the two bias vectors are
    summed. model_data.skip selects the direct input term (default 1,
    matching the exporters that omit the field); the sample rate falls
    back to 44100 Hz when absent.
    """
    sd = _field(doc, "state_dict", "")
    meta = doc.get("model_data", {})
    unit = meta.get("unit_type", "LSTM")
    if str(unit).upper() != "LSTM":
        raise ModelSchemaError(f"model_data.unit_type: {unit} not supported")
    w_ih = np.asarray(_field(sd, "rec.weight_ih_l0", "state_dict."), float)
    if w_ih.ndim != 2 or w_ih.shape[0] % 4:
        raise ModelSchemaError("state_dict.rec.weight_ih_l0: bad shape")
    h = w_ih.shape[0] // 4
    d = w_ih.shape[1]
    w_hh = _as_array(_field(sd, "rec.weight_hh_l0", "state_dict."),
                     (4 * h, h), "state_dict.rec.weight_hh_l0")
    b = (_as_array(_field(sd, "rec.bias_ih_l0", "state_dict."), (4 * h,),
                   "state_dict.rec.bias_ih_l0")
         + _as_array(_field(sd, "rec.bias_hh_l0", "state_dict."), (4 * h,),
                     "state_dict.rec.bias_hh_l0"))
    lin_w = np.asarray(_field(sd, "lin.weight", "state_dict."), float)
    lin_w = lin_w.reshape(-1)
    if lin_w.size != h:
        raise ModelSchemaError(
            f"state_dict.lin.weight: expected {h} entries, got {lin_w.size}")
    lin_b = np.asarray(_field(sd, "lin.bias", "state_dict."),
                       float).reshape(-1)
    w_out_input = np.zeros(d)
    if int(meta.get("skip", 1)):
        w_out_input[0] = 1.0
    rate = meta.get("samplerate", meta.get("sample_rate", 44100.0))
    return RnnModel(h, d, rate, w_ih, w_hh, b, lin_w, w_out_input,
                    float(lin_b[0]), name=doc.get("name"))


def _from_layer_list(doc):
    """Adapter for layer-list model documents (Keras-convention
    export): layers[].type in {lstm, dense} with weights stored as
    [kernel, recurrent_kernel, bias] and [kernel, bias]; kernels are
    transposed to row-major gate blocks. Gate order matches (i, f, g,
    o) already. Sample rate from a top-level samplerate field, 44100
    Hz when absent; no direct input term.
    """
    layers = _field(doc, "layers", "")
    lstm = dense = None
    for i, layer in enumerate(layers):
        kind = str(layer.get("type", "")).lower()
        if kind == "lstm" and lstm is None:
            lstm = (i, layer)
        elif kind == "dense" and dense is None:
            dense = (i, layer)
    if lstm is None or dense is None:
        raise ModelSchemaError("layers: need one lstm and one dense layer")
    li, lstm = lstm
    di, dense = dense
    lw = _field(lstm, "weights", f"layers[{li}].")
    if len(lw) != 3:
        raise ModelSchemaError(
            f"layers[{li}].weights: expected [kernel, recurrent, bias]")
    kernel = np.asarray(lw[0], float)
    if kernel.ndim != 2 or kernel.shape[1] % 4:
        raise ModelSchemaError(f"layers[{li}].weights[0]: bad shape")
    h = kernel.shape[1] // 4
    d = kernel.shape[0]
    recurrent = _as_array(lw[1], (h, 4 * h), f"layers[{li}].weights[1]")
    bias = _as_array(lw[2], (4 * h,), f"layers[{li}].weights[2]")
    dw = _field(dense, "weights", f"layers[{di}].")
    if len(dw) != 2:
        raise ModelSchemaError(
            f"layers[{di}].weights: expected [kernel, bias]")
    dk = np.asarray(dw[0], float).reshape(-1)
    if dk.size != h:
        raise ModelSchemaError(
            f"layers[{di}].weights[0]: expected {h} entries, got {dk.size}")
    db = np.asarray(dw[1], float).reshape(-1)
    rate = doc.get("samplerate", doc.get("sample_rate", 44100.0))
    return RnnModel(h, d, rate, kernel.T, recurrent.T, bias, dk,
                    np.zeros(d), float(db[0]), name=doc.get("name"))


def load_model(source):
    """Build an RnnModel from a JSON document, file path, or open file.

    Three layouts are recognized: the canonical schema (hidden_size /
    input_dim / train_rate_hz / lstm / dense), PyTorch state_dict
    exports, and Keras-convention layer lists. Validation failures
    raise ModelSchemaError naming the offending field.
    """
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text())
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ModelSchemaError("document: expected a JSON object")
    if "state_dict" in doc:
        return _from_torch_state_dict(doc)
    if "layers" in doc:
        return _from_layer_list(doc)
    return _from_canonical(doc)


def save_model(model, path=None):
    """Canonical-schema document for a model; written as JSON when a
    path is given. Floats round-trip exactly through repr."""
    doc = {
        "hidden_size": model.hidden_size,
        "input_dim": model.input_dim,
        "train_rate_hz": model.train_rate_hz,
        "lstm": {
            "w_input": model.w_input.tolist(),
            "w_recurrent": model.w_recurrent.tolist(),
            "bias": model.bias.tolist(),
        },
        "dense": {
            "w_hidden": model.w_out_hidden.tolist(),
            "w_input": model.w_out_input.tolist(),
            "bias": model.out_bias,
        },
    }
    if model.name:
        doc["name"] = model.name
    if path is not None:
        Path(path).write_text(json.dumps(doc))
    return doc


def make_test_model(hidden_size=16, seed=0, drive=1.0, feedback=1.0,
                    forget_bias=1.0, out_gain=1.0, skip=0.0,
                    train_rate_hz=44100.0, name=None):
    """Deterministic synthetic distortion model.

    Weights are drawn from a seeded generator: drive scales the
    input-to-gate column (larger -> harder saturation, richer
    harmonics), feedback scales the recurrent matrix, forget_bias
    biases the forget gates open (longer memory, slower state decay),
    out_gain scales the output layer, skip sets the direct input term.
    """
    rng = np.random.default_rng(seed)
    h = int(hidden_size)
    w_in = drive * rng.normal(0.0, 1.0, size=(4 * h, 1))
    w_rec = feedback * rng.normal(0.0, 1.0 / math.sqrt(h), size=(4 * h, h))
    bias = rng.normal(0.0, 0.1, size=4 * h)
    bias[h:2 * h] += forget_bias
    w_out = out_gain * rng.normal(0.0, 1.0 / math.sqrt(h), size=h)
    return RnnModel(h, 1, train_rate_hz, w_in, w_rec, bias, w_out,
                    np.array([float(skip)]), 0.0, name=name)


def bundled_test_models():
    """The two seeded models the test harness ships with.

    Both are driven hard enough that the gate saturation acts as a
    waveshaper with slowly decaying harmonics, so aliasing stays
    measurable through 8x oversampling; recurrence is kept light so the
    steady response to a tone is strictly periodic. crunch-8 is nearly
    memoryless, fuzz-16 keeps a little more feedback and a faster
    state decay.
    """
    crunch = make_test_model(hidden_size=8, seed=1101, drive=80.0,
                             feedback=0.15, forget_bias=0.0, out_gain=2.0,
                             name="crunch-8")
    fuzz = make_test_model(hidden_size=16, seed=2203, drive=80.0,
                           feedback=0.35, forget_bias=-0.5, out_gain=1.5,
                           name="fuzz-16")
    return [crunch, fuzz]
