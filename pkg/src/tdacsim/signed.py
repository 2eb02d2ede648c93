"""Sign-magnitude eight-bit converter.

The top bit selects the output polarity and the remaining seven bits
convert as magnitude, each polarity with its own gain. Codes 0 and 128
are the dual zeros of the encoding and both land exactly on the baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analysis import TransferCurve
from .core import DigitalCode, TdacConfig, convert_closed_form
from .ode import LeakConfig, Waveform, simulate_leaky

SIGN_BIT = 8
MAGNITUDE_BITS = 7


@dataclass(frozen=True)
class SignedTdacConfig:
    """Eight-bit sign+magnitude converter parameters.

    The gains are dimensionless multipliers standing in for the separate
    slope adjustments of the positive and negative branches; the baseline
    is a pure reporting offset.
    """

    base: TdacConfig
    gain_pos: float = 1.0
    gain_neg: float = 1.0
    baseline: float = 0.0

    def __post_init__(self):
        if self.base.q != 8:
            raise ValueError("the signed converter is eight bits wide (base.q == 8)")
        for name in ("gain_pos", "gain_neg"):
            g = float(getattr(self, name))
            if not (math.isfinite(g) and g > 0.0):
                raise ValueError(f"{name} must be finite and positive")
            object.__setattr__(self, name, g)
        baseline = float(self.baseline)
        if not math.isfinite(baseline):
            raise ValueError("baseline must be finite")
        object.__setattr__(self, "baseline", baseline)


def _split_code(code: DigitalCode) -> tuple[bool, DigitalCode]:
    if code.q != 8:
        raise ValueError("the signed converter expects an 8-bit code")
    return code.bit(SIGN_BIT), DigitalCode(code.bits[:MAGNITUDE_BITS])


def _magnitude_config(config: SignedTdacConfig, gain: float = 1.0) -> TdacConfig:
    base = config.base
    return replace(base, q=MAGNITUDE_BITS, v_set=base.v_set * gain)


def convert_signed(config: SignedTdacConfig, code: DigitalCode) -> float:
    """Sign-magnitude conversion: baseline +/- gain * magnitude voltage."""
    positive, magnitude = _split_code(code)
    v7 = convert_closed_form(_magnitude_config(config), magnitude)
    if positive:
        return config.baseline + config.gain_pos * v7
    return config.baseline - config.gain_neg * v7


def signed_transfer_curve(config: SignedTdacConfig) -> TransferCurve:
    """All 256 signed outputs in code order."""
    outputs = np.array(
        [convert_signed(config, DigitalCode.from_int(v, 8)) for v in range(256)]
    )
    return TransferCurve(np.arange(256), outputs, config)


def simulate_signed_leaky(
    config: SignedTdacConfig,
    leak: LeakConfig,
    code: DigitalCode,
    t_end: float | None = None,
    dt_out: float | None = None,
) -> Waveform:
    """Leaky-mode response of the signed converter.

    Only the seven magnitude bits occupy schedule slots; the sign bit flips
    the polarity of the drive (and of the initial condition), so equal-gain
    waveforms of opposite sign are exact mirror images about the baseline.
    """
    positive, magnitude = _split_code(code)
    gain = config.gain_pos if positive else config.gain_neg
    cfg = _magnitude_config(config, gain)
    if positive:
        wf = simulate_leaky(cfg, leak, magnitude, t_end, dt_out)
        return Waveform(wf.times, config.baseline + wf.values)
    wf = simulate_leaky(cfg, replace(leak, v0=-leak.v0), magnitude, t_end, dt_out)
    return Waveform(wf.times, config.baseline - wf.values)
