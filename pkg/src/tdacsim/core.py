"""Digital codes, pulse schedules, and the leak-free conversion law.

A time-domain DAC weights each stored bit by sampling one decaying drive
waveform in consecutive time slots, most significant bit first. Adjacent
slot weights differ by the fixed factor exp(t_w / tau2), so the transfer
characteristic is exactly binary when t_w / tau2 = ln 2.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

LN2 = math.log(2.0)


class UnsupportedCharacteristicError(ValueError):
    """The requested operation needs the identity drive characteristic."""


@dataclass(frozen=True)
class DigitalCode:
    """Bit vector of length q, stored LSB first: ``bits[0]`` is B_1."""

    bits: tuple[bool, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise ValueError("a digital code needs at least one bit")
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @classmethod
    def from_int(cls, value: int, q: int) -> "DigitalCode":
        value = operator.index(value)
        q = operator.index(q)
        if q < 1:
            raise ValueError("bit count q must be >= 1")
        if not 0 <= value < (1 << q):
            raise ValueError(f"value {value} does not fit in {q} bits")
        return cls(tuple(bool((value >> k) & 1) for k in range(q)))

    @classmethod
    def from_string(cls, text: str) -> "DigitalCode":
        """Parse an MSB-first binary string such as ``"10101010"``."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a binary code string: {text!r}")
        return cls(tuple(c == "1" for c in reversed(text)))

    @property
    def q(self) -> int:
        return len(self.bits)

    @property
    def value(self) -> int:
        return sum(1 << k for k, b in enumerate(self.bits) if b)

    def bit(self, k: int) -> bool:
        """B_k with 1-based index k; B_1 is the LSB, B_q the MSB."""
        if not 1 <= k <= self.q:
            raise ValueError(f"bit index {k} outside 1..{self.q}")
        return self.bits[k - 1]

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in reversed(self.bits))


@dataclass(frozen=True)
class TdacConfig:
    """Static converter parameters.

    ``scc`` maps the drive voltage to the current-source response. ``None``
    means the identity characteristic, the only one with a closed-form
    transfer; any other callable restricts the config to the numerical
    conversion and simulation paths.
    """

    q: int
    t_w: float
    v_set: float = 1.0
    tau2: float = 1.0
    c_out: float = 1.0
    scc: Callable[[float], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "q", operator.index(self.q))
        if self.q < 1:
            raise ValueError("bit count q must be >= 1")
        for name in ("t_w", "v_set", "tau2", "c_out"):
            x = float(getattr(self, name))
            if not (math.isfinite(x) and x > 0.0):
                raise ValueError(f"{name} must be finite and positive")
            object.__setattr__(self, name, x)

    def ratio(self) -> float:
        """Pulse width over drive time constant, t_w / tau2."""
        return self.t_w / self.tau2

    @property
    def identity_scc(self) -> bool:
        return self.scc is None


class Slot(NamedTuple):
    bit_index: int  # 1-based; B_q occupies the first slot
    t_start: float
    t_end: float


@dataclass(frozen=True)
class PulseSchedule:
    """Contiguous width-t_w sampling windows, MSB first, starting at t = 0."""

    slots: tuple[Slot, ...]

    def __post_init__(self):
        if not self.slots:
            raise ValueError("a schedule needs at least one slot")
        prev_end = 0.0
        for s in self.slots:
            if not s.t_end > s.t_start:
                raise ValueError("slot windows must have positive width")
            if s.t_start != prev_end:
                raise ValueError("slots must be contiguous and non-overlapping")
            prev_end = s.t_end

    @property
    def q(self) -> int:
        return len(self.slots)

    @property
    def t_w(self) -> float:
        return self.slots[0].t_end - self.slots[0].t_start

    @property
    def duration(self) -> float:
        return self.slots[-1].t_end

    def active_bit(self, t: float) -> int | None:
        """1-based index of the bit whose slot contains t, None outside.

        Slot membership is left-closed: a boundary instant belongs to the
        later slot.
        """
        if t < 0.0 or t >= self.duration:
            return None
        k = min(int(t // self.t_w), self.q - 1)
        # floor division can land one slot off at boundaries; nudge back
        if t >= self.slots[k].t_end:
            k += 1
        elif t < self.slots[k].t_start:
            k -= 1
        return self.slots[k].bit_index

    def drive_indicator(self, code: DigitalCode, t: float) -> int:
        """Gate value at time t: 1 while the slot of a set bit is active."""
        k = self.active_bit(t)
        if k is None:
            return 0
        return 1 if code.bit(k) else 0


def make_schedule(config: TdacConfig) -> PulseSchedule:
    """Assign B_q to [0, t_w), B_{q-1} to [t_w, 2 t_w), and so on."""
    tw = config.t_w
    slots = tuple(
        Slot(config.q - k, k * tw, (k + 1) * tw) for k in range(config.q)
    )
    return PulseSchedule(slots)


def drive_voltage(config: TdacConfig, t: float) -> float:
    """Drive waveform v_set * exp(-t / tau2), defined for t >= 0."""
    if t < 0.0:
        raise ValueError("the drive waveform is defined for t >= 0")
    return config.v_set * math.exp(-t / config.tau2)


def _require_matching_width(config: TdacConfig, code: DigitalCode) -> None:
    if code.q != config.q:
        raise ValueError(
            f"code has {code.q} bits but the converter expects {config.q}"
        )


@lru_cache(maxsize=512)
def _slot_weights(config: TdacConfig) -> tuple[float, ...]:
    # weight of slot k: integral of the drive over [k t_w, (k+1) t_w],
    # divided by c_out
    r = config.ratio()
    scale = config.v_set * config.tau2 / config.c_out
    return tuple(
        scale * (math.exp(-k * r) - math.exp(-(k + 1) * r))
        for k in range(config.q)
    )


def convert_closed_form(config: TdacConfig, code: DigitalCode) -> float:
    """Leak-free conversion via the per-slot antiderivative of the drive.

    Valid only for the identity characteristic; any other scc must go
    through :func:`convert_quadrature`.
    """
    if not config.identity_scc:
        raise UnsupportedCharacteristicError(
            "closed-form conversion requires the identity characteristic; "
            "use convert_quadrature"
        )
    _require_matching_width(config, code)
    weights = _slot_weights(config)
    return sum((w for k, w in enumerate(weights) if code.bit(config.q - k)), 0.0)


@lru_cache(maxsize=512)
def _slot_quadratures(config: TdacConfig, steps_per_slot: int) -> tuple[float, ...]:
    # composite Simpson with slot edges as hard breakpoints: the bit gate is
    # discontinuous there, so no panel may straddle a boundary
    out = []
    n_points = 2 * steps_per_slot + 1
    weights = np.ones(n_points)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    h = config.t_w / (2 * steps_per_slot)
    for k in range(config.q):
        grid = k * config.t_w + np.linspace(0.0, config.t_w, n_points)
        v = config.v_set * np.exp(-grid / config.tau2)
        if config.scc is not None:
            v = np.array([config.scc(x) for x in v], dtype=float)
        out.append(float(h / 3.0 * np.dot(weights, v)))
    return tuple(out)


def convert_quadrature(
    config: TdacConfig, code: DigitalCode, steps_per_slot: int = 256
) -> float:
    """Numerical conversion: per-slot composite Simpson over the gated drive.

    Accepts any scc characteristic and serves as the independent
    cross-check for :func:`convert_closed_form`. ``steps_per_slot`` counts
    Simpson panels per slot and must be at least 16.
    """
    steps_per_slot = operator.index(steps_per_slot)
    if steps_per_slot < 16:
        raise ValueError("steps_per_slot must be >= 16")
    _require_matching_width(config, code)
    integrals = _slot_quadratures(config, steps_per_slot)
    total = sum((s for k, s in enumerate(integrals) if code.bit(config.q - k)), 0.0)
    return total / config.c_out


class RatioRegime(Enum):
    BELOW_LN2 = "below-ln2"
    AT_LN2 = "at-ln2"
    ABOVE_LN2 = "above-ln2"


class RatioCheck(NamedTuple):
    ratio: float
    regime: RatioRegime


def linearity_ratio(config: TdacConfig, eps_ratio: float = 1e-9) -> RatioCheck:
    """Classify t_w / tau2 against ln 2, the exact binary-weighting point.

    ``eps_ratio`` is the relative half-width of the at-ln2 band.
    """
    r = config.ratio()
    if abs(r - LN2) <= eps_ratio * LN2:
        regime = RatioRegime.AT_LN2
    elif r < LN2:
        regime = RatioRegime.BELOW_LN2
    else:
        regime = RatioRegime.ABOVE_LN2
    return RatioCheck(r, regime)
