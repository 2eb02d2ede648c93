"""Leaky-output dynamics: the synaptic-potential mode of the converter.

With a leak resistor on the output node the voltage obeys

    dV/dt = -V / tau1 + v_set * exp(-t / tau2) * D(t)

where D(t) gates the drive through the pulse schedule. D is constant
between slot boundaries and each constant-D stretch has an exact
variation-of-constants solution, so the primary engine is piecewise
analytic. A classical fixed-step fourth-order integrator provides an
independent numerical check of the same equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DigitalCode,
    TdacConfig,
    UnsupportedCharacteristicError,
    _require_matching_width,
    make_schedule,
)

# relative |tau1 - tau2| below which the two-constant response is treated
# as the equal-constant (alpha) case
TAU_DEGENERACY_BAND = 1e-9


@dataclass(frozen=True)
class LeakConfig:
    """Output leak time constant and initial output voltage."""

    tau1: float
    v0: float = 0.0

    def __post_init__(self):
        tau1 = float(self.tau1)
        v0 = float(self.v0)
        if not (math.isfinite(tau1) and tau1 > 0.0):
            raise ValueError("tau1 must be finite and positive")
        if not math.isfinite(v0):
            raise ValueError("v0 must be finite")
        object.__setattr__(self, "tau1", tau1)
        object.__setattr__(self, "v0", v0)


@dataclass(frozen=True, eq=False)
class Waveform:
    """Sampled output-voltage trace with strictly increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or v.shape != t.shape or t.size == 0:
            raise ValueError("times and values must be matching non-empty 1-D arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValueError("sample times must be strictly increasing")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size

    @property
    def peak_index(self) -> int:
        # argmax returns the first maximum, breaking ties to earliest time
        return int(np.argmax(self.values))

    @property
    def peak_value(self) -> float:
        return float(self.values[self.peak_index])

    @property
    def peak_time(self) -> float:
        return float(self.times[self.peak_index])


def _phi(x: np.ndarray) -> np.ndarray:
    # (exp(x) - 1) / x, continued with 1 through x = 0
    out = np.ones_like(x)
    nz = x != 0.0
    out[nz] = np.expm1(x[nz]) / x[nz]
    return out


def _phi_scalar(x: float) -> float:
    return math.expm1(x) / x if x != 0.0 else 1.0


def _drive_intervals(
    config: TdacConfig, code: DigitalCode, t_end: float
) -> list[tuple[float, float, bool]]:
    """Constant-drive stretches covering [0, t_end], merged over equal gates."""
    spans: list[list] = []
    for slot in make_schedule(config).slots:
        if slot.t_start >= t_end:
            break
        on = bool(code.bit(slot.bit_index))
        end = min(slot.t_end, t_end)
        if spans and spans[-1][2] == on:
            spans[-1][1] = end
        else:
            spans.append([slot.t_start, end, on])
    tail_start = config.q * config.t_w
    if tail_start < t_end:
        if spans and spans[-1][2] is False:
            spans[-1][1] = t_end
        else:
            spans.append([tail_start, t_end, False])
    if not spans:
        spans.append([0.0, t_end, False])
    return [tuple(s) for s in spans]


def leaky_voltage(
    config: TdacConfig,
    leak: LeakConfig,
    code: DigitalCode,
    times,
) -> np.ndarray:
    """Exact piecewise-analytic solution sampled at the given times.

    ``times`` must be sorted and non-negative. On every constant-drive
    stretch [a, b] the state advances by

        V(t) = V(a) exp(-(t-a)/tau1)
             + v_set (t-a) exp(-a/tau2 - (t-a)/tau1) phi(lam (t-a))

    with lam = 1/tau1 - 1/tau2 and phi(x) = (e^x - 1)/x. The phi form is
    well conditioned for every lam, including the equal-time-constant
    limit, so no branch can divide by zero. Identity scc only.
    """
    if not config.identity_scc:
        raise UnsupportedCharacteristicError(
            "the analytic propagator requires the identity characteristic; "
            "use simulate_leaky_numeric"
        )
    _require_matching_width(config, code)
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("times must be a non-empty 1-D array")
    if t[0] < 0.0:
        raise ValueError("sample times must be >= 0")
    if t.size > 1 and np.any(np.diff(t) < 0.0):
        raise ValueError("sample times must be sorted")

    tau1 = leak.tau1
    tau2 = config.tau2
    v_set = config.v_set
    lam = 1.0 / tau1 - 1.0 / tau2

    out = np.empty_like(t)
    spans = _drive_intervals(config, code, float(t[-1])) if t[-1] > 0.0 else [
        (0.0, float(t[-1]), False)
    ]
    v_state = leak.v0
    lo = 0
    for idx, (a, b, on) in enumerate(spans):
        last = idx == len(spans) - 1
        hi = t.size if last else int(np.searchsorted(t, b, side="left"))
        sel = t[lo:hi]
        if sel.size:
            dt = sel - a
            v = v_state * np.exp(-dt / tau1)
            if on:
                v = v + v_set * dt * np.exp(-a / tau2 - dt / tau1) * _phi(lam * dt)
            out[lo:hi] = v
        lo = hi
        if not last:
            span = b - a
            nxt = v_state * math.exp(-span / tau1)
            if on:
                nxt += (
                    v_set
                    * span
                    * math.exp(-a / tau2 - span / tau1)
                    * _phi_scalar(lam * span)
                )
            v_state = nxt
    return out


def default_t_end(config: TdacConfig, leak: LeakConfig) -> float:
    """Conversion window plus ten leak/drive time constants of decay."""
    return 10.0 * max(leak.tau1, config.tau2) + config.q * config.t_w


def simulate_leaky(
    config: TdacConfig,
    leak: LeakConfig,
    code: DigitalCode,
    t_end: float | None = None,
    dt_out: float | None = None,
) -> Waveform:
    """Leaky-mode response on a grid of dt_out multiples plus slot edges.

    Slot boundaries are always sampled so that alternating-code ripple is
    never aliased away. Values come from the exact propagator, not from a
    discretization; after the last slot the output decays as a pure
    exponential in tau1.
    """
    if t_end is None:
        t_end = default_t_end(config, leak)
    t_end = float(t_end)
    if not (math.isfinite(t_end) and t_end > 0.0):
        raise ValueError("t_end must be positive")
    if dt_out is None:
        dt_out = t_end / 2048.0
    dt_out = float(dt_out)
    if not (math.isfinite(dt_out) and dt_out > 0.0):
        raise ValueError("dt_out must be positive")

    n_out = int(math.floor(t_end / dt_out * (1.0 + 1e-12)))
    grid = np.arange(n_out + 1) * dt_out
    edges = np.arange(config.q + 1) * config.t_w
    times = np.unique(np.concatenate([grid, edges[edges <= t_end], [t_end]]))
    times = times[times <= t_end]
    values = leaky_voltage(config, leak, code, times)
    return Waveform(times, values)


def simulate_leaky_numeric(
    config: TdacConfig,
    leak: LeakConfig,
    code: DigitalCode,
    t_end: float,
    dt: float,
) -> Waveform:
    """Classical fixed-step fourth-order integration of the leaky mode.

    Steps never straddle a slot boundary: each constant-drive stretch is
    subdivided into ceil(span / dt) equal steps, so the discontinuous gate
    is seen as a sequence of smooth problems. The returned samples are the
    integration points themselves. Any scc characteristic is accepted.
    """
    _require_matching_width(config, code)
    t_end = float(t_end)
    dt = float(dt)
    if not (math.isfinite(t_end) and t_end > 0.0):
        raise ValueError("t_end must be positive")
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError("dt must be positive")
    if dt > config.t_w / 16.0:
        raise ValueError(
            "dt must be at most t_w / 16 so slot boundaries are resolved"
        )

    scc = config.scc
    tau1 = leak.tau1
    tau2 = config.tau2
    v_set = config.v_set
    exp = math.exp

    times = [0.0]
    values = [leak.v0]
    v = leak.v0
    for a, b, on in _drive_intervals(config, code, t_end):
        n = max(1, math.ceil((b - a) / dt))
        h = (b - a) / n
        if on:
            f_lo = v_set * exp(-a / tau2)
            if scc is not None:
                f_lo = scc(f_lo)
        else:
            f_lo = 0.0
        for j in range(1, n + 1):
            t0 = a + (j - 1) * h
            t1 = b if j == n else a + j * h
            hj = t1 - t0
            if on:
                f_mid = v_set * exp(-(t0 + 0.5 * hj) / tau2)
                f_hi = v_set * exp(-t1 / tau2)
                if scc is not None:
                    f_mid = scc(f_mid)
                    f_hi = scc(f_hi)
            else:
                f_mid = 0.0
                f_hi = 0.0
            k1 = -v / tau1 + f_lo
            k2 = -(v + 0.5 * hj * k1) / tau1 + f_mid
            k3 = -(v + 0.5 * hj * k2) / tau1 + f_mid
            k4 = -(v + hj * k3) / tau1 + f_hi
            v = v + hj / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
            times.append(t1)
            values.append(v)
            f_lo = f_hi
    return Waveform(np.array(times), np.array(values))


def alpha_waveform(v_set: float, tau1: float, t):
    """Equal-time-constant synaptic shape t * v_set * exp(-t / tau1)."""
    if tau1 <= 0.0:
        raise ValueError("tau1 must be positive")
    t = np.asarray(t, dtype=float)
    out = t * v_set * np.exp(-t / tau1)
    return float(out) if out.ndim == 0 else out


def dual_exp_waveform(v_set: float, tau1: float, tau2: float, t):
    """Two-time-constant synaptic shape.

    Returns tau1 tau2 / (tau1 - tau2) * v_set * (exp(-t/tau1) - exp(-t/tau2)).
    Inside the degeneracy band the expression is numerically unstable and
    the exact equal-constant limit, the alpha shape, is returned instead.
    """
    if tau1 <= 0.0 or tau2 <= 0.0:
        raise ValueError("time constants must be positive")
    if abs(tau1 - tau2) < TAU_DEGENERACY_BAND * tau1:
        return alpha_waveform(v_set, tau1, t)
    t = np.asarray(t, dtype=float)
    c = tau1 * tau2 / (tau1 - tau2)
    out = c * v_set * (np.exp(-t / tau1) - np.exp(-t / tau2))
    return float(out) if out.ndim == 0 else out


def peak_of(waveform: Waveform) -> tuple[float, float]:
    """Sample-level maximum refined by a three-point quadratic fit.

    Ties break toward the earliest sample. Refinement is skipped at the
    trace edges and whenever the bracketing parabola is not concave; the
    refined value is clamped to the bracketing interval and never reported
    below the sample maximum.
    """
    if len(waveform) == 0:
        raise ValueError("waveform is empty")
    t = waveform.times
    v = waveform.values
    i = int(np.argmax(v))
    if i == 0 or i == len(waveform) - 1:
        return float(t[i]), float(v[i])

    t0, t1, t2 = float(t[i - 1]), float(t[i]), float(t[i + 1])
    v0, v1, v2 = float(v[i - 1]), float(v[i]), float(v[i + 1])
    d0 = (t0 - t1) * (t0 - t2)
    d1 = (t1 - t0) * (t1 - t2)
    d2 = (t2 - t0) * (t2 - t1)
    if d0 == 0.0 or d1 == 0.0 or d2 == 0.0:
        return t1, v1
    a2 = v0 / d0 + v1 / d1 + v2 / d2
    if a2 >= 0.0:
        return t1, v1
    a1 = -(v0 * (t1 + t2) / d0 + v1 * (t0 + t2) / d1 + v2 * (t0 + t1) / d2)
    a0 = v0 * t1 * t2 / d0 + v1 * t0 * t2 / d1 + v2 * t0 * t1 / d2
    ts = min(max(-a1 / (2.0 * a2), t0), t2)
    vs = a0 + a1 * ts + a2 * ts * ts
    if vs < v1:
        return t1, v1
    return float(ts), float(vs)
