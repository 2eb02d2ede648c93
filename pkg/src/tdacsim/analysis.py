"""Transfer-curve quality metrics, synaptic-shape fitting, and pulse-width
calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DigitalCode, TdacConfig, convert_closed_form
from .ode import Waveform, peak_of

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class BracketingError(ValueError):
    """The search bounds do not bracket an interior minimum."""


def _config_bits(config) -> int:
    q = getattr(config, "q", None)
    if q is None:
        q = config.base.q
    return int(q)


@dataclass(frozen=True, eq=False)
class TransferCurve:
    """Output for every code 0 .. 2^q - 1, in code order."""

    codes: np.ndarray
    outputs: np.ndarray
    config: object

    def __post_init__(self):
        c = np.array(self.codes, dtype=int)
        v = np.array(self.outputs, dtype=float)
        if c.ndim != 1 or v.shape != c.shape or c.size < 2:
            raise ValueError("codes and outputs must be matching 1-D arrays")
        if not np.array_equal(c, np.arange(c.size)):
            raise ValueError("codes must run 0 .. 2^q - 1 in order")
        if c.size != (1 << _config_bits(self.config)):
            raise ValueError("curve must cover every code of the configured width")
        c.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "codes", c)
        object.__setattr__(self, "outputs", v)

    def __len__(self) -> int:
        return self.codes.size

    def entries(self) -> list[tuple[int, float]]:
        return [(int(c), float(v)) for c, v in zip(self.codes, self.outputs)]


def transfer_curve(config: TdacConfig) -> TransferCurve:
    """Enumerate the full leak-free transfer characteristic."""
    if config.q > 16:
        raise ValueError("full transfer-curve enumeration is limited to q <= 16")
    n = 1 << config.q
    outputs = np.empty(n)
    for value in range(n):
        outputs[value] = convert_closed_form(
            config, DigitalCode.from_int(value, config.q)
        )
    return TransferCurve(np.arange(n), outputs, config)


@dataclass(frozen=True, eq=False)
class LinearityReport:
    """Endpoint-fit DNL/INL in LSB units plus direct monotonicity."""

    lsb_step: float
    dnl: np.ndarray
    inl: np.ndarray
    monotone: bool
    max_abs_dnl: float
    max_abs_inl: float


def linearity_report(curve) -> LinearityReport:
    """Endpoint-fit linearity metrics for a transfer curve.

    The ideal step is (v_last - v_first) / (n - 1); DNL and INL are the
    per-step and per-code deviations from that line, in step units.
    Monotonicity is checked directly on the outputs (v[i+1] >= v[i]), not
    through a DNL threshold. Accepts a TransferCurve or a plain 1-D array
    of outputs, so regional curves can be analyzed too.
    """
    v = curve.outputs if isinstance(curve, TransferCurve) else np.asarray(curve, float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least two curve entries")
    step = (float(v[-1]) - float(v[0])) / (v.size - 1)
    if step == 0.0:
        raise ValueError("degenerate flat curve: endpoint step is zero")
    diffs = np.diff(v)
    dnl = diffs / step - 1.0
    inl = (v - (v[0] + step * np.arange(v.size))) / step
    return LinearityReport(
        lsb_step=step,
        dnl=dnl,
        inl=inl,
        monotone=bool(np.all(diffs >= 0.0)),
        max_abs_dnl=float(np.max(np.abs(dnl))),
        max_abs_inl=float(np.max(np.abs(inl))),
    )


@dataclass(frozen=True)
class FitResult:
    """Outcome of a synaptic-shape least-squares fit.

    For the alpha model the two fitted time constants coincide. For the
    dual-exponential model they are canonicalized to tau1_fit >= tau2_fit
    (the shape is symmetric under swapping them).
    """

    model: str
    v_set_fit: float
    tau1_fit: float
    tau2_fit: float
    sse: float
    converged: bool
    iterations: int

    def __post_init__(self):
        if self.tau1_fit <= 0.0 or self.tau2_fit <= 0.0:
            raise ValueError("fitted time constants must be positive")
        if self.sse < 0.0:
            raise ValueError("sse cannot be negative")


_MODEL_ALIASES = {
    "alpha": "alpha",
    "dual": "dual-exponential",
    "dual-exponential": "dual-exponential",
    "dual_exp": "dual-exponential",
}


def _alpha_model(theta, t):
    a, tau1 = theta
    e = np.exp(-t / tau1)
    f = a * t * e
    jac = np.column_stack([t * e, f * t / tau1**2])
    return f, jac


def _dual_model(theta, t):
    a, tau1, tau2 = theta
    d = tau1 - tau2
    c = tau1 * tau2 / d
    e1 = np.exp(-t / tau1)
    e2 = np.exp(-t / tau2)
    base = e1 - e2
    f = a * c * base
    j_a = c * base
    j_t1 = a * (-(tau2**2) / d**2 * base + c * e1 * t / tau1**2)
    j_t2 = a * (tau1**2 / d**2 * base - c * e2 * t / tau2**2)
    return f, np.column_stack([j_a, j_t1, j_t2])


def _theta_ok(kind: str, theta) -> bool:
    if not np.all(np.isfinite(theta)):
        return False
    taus = theta[1:]
    if np.any(taus <= 0.0):
        return False
    if kind == "dual-exponential":
        # keep clear of the degenerate tau1 == tau2 ridge
        if abs(theta[1] - theta[2]) < 1e-9 * max(theta[1], theta[2]):
            return False
    return True


def _damped_least_squares(kind, model_fn, theta0, t, v, max_iterations, sse_floor):
    """Levenberg-style damped Gauss-Newton; returns (theta, sse, iters, conv, stalled)."""
    theta = np.asarray(theta0, dtype=float)
    f, jac = model_fn(theta, t)
    r = v - f
    sse = float(r @ r)
    lam = 1e-3
    iterations = 0
    consecutive_fails = 0
    converged = sse == 0.0
    for _ in range(max_iterations):
        if converged:
            break
        iterations += 1
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.clip(np.diag(jtj), 1e-300, None)
        improved = False
        for _ in range(12):
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(diag), jtr)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            trial = theta + delta
            if not _theta_ok(kind, trial):
                lam *= 4.0
                continue
            f_t, jac_t = model_fn(trial, t)
            r_t = v - f_t
            sse_t = float(r_t @ r_t)
            if sse_t < sse:
                rel_step = float(
                    np.max(np.abs(delta) / np.maximum(np.abs(theta), 1e-300))
                )
                d_sse = sse - sse_t
                theta, f, jac, r, sse = trial, f_t, jac_t, r_t, sse_t
                lam = max(lam / 3.0, 1e-12)
                improved = True
                if rel_step < 1e-9 or d_sse < sse_floor or sse == 0.0:
                    converged = True
                break
            lam *= 4.0
        if improved:
            consecutive_fails = 0
        else:
            consecutive_fails += 1
            if consecutive_fails >= 3:
                break
    return theta, sse, iterations, converged, consecutive_fails >= 3


def _linear_amplitude(shape, v):
    denom = float(shape @ shape)
    if denom == 0.0:
        return 0.0
    return float(shape @ v) / denom


def _grid_seed_alpha(t, v, tau_center):
    best = None
    lo, hi = tau_center / 16.0, tau_center * 16.0
    for _ in range(4):
        taus = np.geomspace(lo, hi, 17)
        for tau in taus:
            shape = t * np.exp(-t / tau)
            a = _linear_amplitude(shape, v)
            r = v - a * shape
            sse = float(r @ r)
            if best is None or sse < best[0]:
                best = (sse, a, tau)
        width = (hi / lo) ** (1.0 / 8.0)
        lo, hi = best[2] / width, best[2] * width
    return np.array([best[1], best[2]])


def _grid_seed_dual(t, v, tau_center):
    best = None
    lo, hi = tau_center / 16.0, tau_center * 16.0
    for _ in range(4):
        taus = np.geomspace(lo, hi, 13)
        for i, tau1 in enumerate(taus):
            for tau2 in taus[: i + 1]:
                if abs(tau1 - tau2) < 1e-6 * tau1:
                    continue
                c = tau1 * tau2 / (tau1 - tau2)
                shape = c * (np.exp(-t / tau1) - np.exp(-t / tau2))
                a = _linear_amplitude(shape, v)
                r = v - a * shape
                sse = float(r @ r)
                if best is None or sse < best[0]:
                    best = (sse, a, tau1, tau2)
        width = (hi / lo) ** (1.0 / 6.0)
        lo = min(best[2], best[3]) / width
        hi = max(best[2], best[3]) * width
    return np.array([best[1], best[2], best[3]])


def _dual_peak_time(tau1, tau2):
    return tau1 * tau2 / (tau1 - tau2) * math.log(tau1 / tau2)


def _initial_alpha(waveform):
    t_peak, v_peak = peak_of(waveform)
    tau1 = max(t_peak, 1e-12)
    return np.array([v_peak / (tau1 * math.exp(-1.0)), tau1])


def _initial_dual(waveform):
    t = waveform.times
    v = waveform.values
    t_peak, v_peak = peak_of(waveform)
    t_peak = max(t_peak, 1e-12)

    # slow constant from the late-time log-slope of the decay
    tail = (t > 2.0 * t_peak) & (v > max(1e-3 * v_peak, 0.0))
    tau1 = None
    if int(np.count_nonzero(tail)) >= 4:
        slope = np.polyfit(t[tail], np.log(v[tail]), 1)[0]
        if slope < 0.0:
            tau1 = -1.0 / slope
    if tau1 is None or not math.isfinite(tau1):
        tau1 = 2.0 * t_peak
    tau1 = max(tau1, 1.05 * t_peak)

    # fast constant from the peak-time relation, by bisection in (0, tau1)
    lo, hi = 1e-6 * tau1, (1.0 - 1e-6) * tau1
    tau2 = None
    if _dual_peak_time(tau1, lo) < t_peak < _dual_peak_time(tau1, hi):
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if _dual_peak_time(tau1, mid) < t_peak:
                lo = mid
            else:
                hi = mid
        tau2 = 0.5 * (lo + hi)
    if tau2 is None:
        tau2 = tau1 / 3.0

    c = tau1 * tau2 / (tau1 - tau2)
    shape_peak = c * (math.exp(-t_peak / tau1) - math.exp(-t_peak / tau2))
    amp = v_peak / shape_peak if shape_peak > 0.0 else v_peak
    return np.array([amp, tau1, tau2])


def fit_waveform(waveform: Waveform, model: str, max_iterations: int = 200) -> FitResult:
    """Least-squares fit of a synaptic-shape model to a sampled waveform.

    ``model`` is ``"alpha"`` or ``"dual"``/``"dual-exponential"``. Damped
    Gauss-Newton iterations with analytic Jacobians do the work; if the
    damping stalls three times in a row, a zooming log-grid search over the
    time constants (amplitude solved linearly) reseeds a final polish.
    Non-convergence is reported through the result, not raised.
    """
    kind = _MODEL_ALIASES.get(str(model).lower())
    if kind is None:
        raise ValueError(f"unknown model {model!r}; expected alpha or dual")
    if len(waveform) < 8:
        raise ValueError("need at least 8 samples spanning the peak")
    t = waveform.times
    v = waveform.values
    v_peak = float(np.max(v))
    if v_peak <= float(np.min(v)):
        raise ValueError("degenerate input: waveform is flat")
    sse_floor = 1e-12 * v_peak**2

    if kind == "alpha":
        model_fn, theta0 = _alpha_model, _initial_alpha(waveform)
    else:
        model_fn, theta0 = _dual_model, _initial_dual(waveform)

    theta, sse, iters, converged, stalled = _damped_least_squares(
        kind, model_fn, theta0, t, v, max_iterations, sse_floor
    )
    if stalled and not converged and iters < max_iterations:
        t_peak, _ = peak_of(waveform)
        seed = (
            _grid_seed_alpha(t, v, max(t_peak, 1e-12))
            if kind == "alpha"
            else _grid_seed_dual(t, v, max(t_peak, 1e-12))
        )
        theta2, sse2, iters2, converged, _ = _damped_least_squares(
            kind, model_fn, seed, t, v, max_iterations - iters, sse_floor
        )
        iters += iters2
        if sse2 < sse:
            theta, sse = theta2, sse2

    if kind == "alpha":
        amp, tau1 = float(theta[0]), float(theta[1])
        tau2 = tau1
    else:
        amp, tau1, tau2 = (float(x) for x in theta)
        if tau2 > tau1:
            tau1, tau2 = tau2, tau1
    return FitResult(
        model=kind,
        v_set_fit=amp,
        tau1_fit=tau1,
        tau2_fit=tau2,
        sse=float(sse),
        converged=bool(converged),
        iterations=iters,
    )


def calibrate_pulse_width(
    tau2: float,
    q: int,
    search_bounds: tuple[float, float],
    v_set: float = 1.0,
    c_out: float = 1.0,
    rel_tol: float = 1e-7,
) -> float:
    """Pulse width minimizing the transfer curve's max |INL|.

    Golden-section search over the bounds; the objective is V-shaped around
    its zero-INL optimum, so the search localizes tightly. A result pinned
    against either bound means the bounds do not bracket the optimum and a
    BracketingError is raised.
    """
    lo, hi = (float(x) for x in search_bounds)
    if not (0.0 < lo < hi):
        raise ValueError("search bounds must satisfy 0 < lo < hi")
    tau2 = float(tau2)
    if tau2 <= 0.0:
        raise ValueError("tau2 must be positive")
    q = int(q)
    if q < 2:
        raise ValueError("calibration needs at least two bits")

    def objective(tw: float) -> float:
        cfg = TdacConfig(q=q, t_w=tw, tau2=tau2, v_set=v_set, c_out=c_out)
        return linearity_report(transfer_curve(cfg)).max_abs_inl

    tol = rel_tol * tau2
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = objective(d)
    best = 0.5 * (a + b)
    if best - lo < 10.0 * tol or hi - best < 10.0 * tol:
        raise BracketingError(
            "search converged onto a bound; the bounds do not bracket "
            "an interior minimum"
        )
    return best
