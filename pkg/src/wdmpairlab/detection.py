"""Analytic per-gate count model for a pair source seen by two gated detectors.

The model is first order in the pair probability: multi-pair emission shows
up only through accidental coincidences, taken as the product of the two
singles probabilities.  Its ratio of accidental to true coincidences inverts
exactly to the in-band pair probability (see
:func:`wdmpairlab.merit.invert_p`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class SplittingMode(str, Enum):
    """How the two photons of a pair are sent to the two detectors."""

    DETERMINISTIC = "deterministic"  # two symmetric demux channels
    STATISTICAL = "statistical"  # one channel followed by a 50/50 splitter


P_INBAND_MAX = 0.5


@dataclass(frozen=True)
class SourceSpec:
    """Pump frequency (THz) and in-band pair emission probability per gate."""

    pump_thz: float
    p_inband: float

    def __post_init__(self):
        if not self.pump_thz > 0:
            raise ValueError(f"pump frequency must be positive, got {self.pump_thz}")
        if not 0.0 <= self.p_inband <= P_INBAND_MAX:
            raise ValueError(f"p_inband must be in [0, {P_INBAND_MAX}], got {self.p_inband}")


@dataclass(frozen=True)
class DetectorSpec:
    """Gated single-photon detector.

    Units: trigger rate in Hz, gate width in ns, dark rate in counts/s,
    dead time in microseconds.  ``efficiency`` has no default on purpose;
    it must come from the user's hardware.
    """

    trigger_rate_hz: float
    gate_width_ns: float
    dark_rate_cps: float
    dead_time_us: float
    efficiency: float

    def __post_init__(self):
        if not self.trigger_rate_hz > 0:
            raise ValueError("trigger rate must be positive")
        if not self.gate_width_ns > 0:
            raise ValueError("gate width must be positive")
        if self.dark_rate_cps < 0 or self.dead_time_us < 0:
            raise ValueError("dark rate and dead time must be non-negative")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if self.trigger_rate_hz * self.gate_width_ns * 1e-9 > 1.0:
            raise ValueError("gates overlap: trigger_rate * gate_width exceeds 1")
        if self.dark_rate_cps > self.trigger_rate_hz:
            raise ValueError("dark rate exceeds the trigger rate")

    @classmethod
    def gated_ingaas(cls, efficiency: float) -> "DetectorSpec":
        """2 MHz trigger, 20 ns gate, 500 dark counts/s, 10 us dead time."""
        return cls(2e6, 20.0, 500.0, 10.0, efficiency)

    @property
    def dead_gates(self) -> int:
        """Number of trigger periods blocked after a click."""
        # round first so 10 us * 2 MHz lands on 20, not 21
        return math.ceil(round(self.dead_time_us * 1e-6 * self.trigger_rate_hz, 9))


@dataclass(frozen=True)
class CoincidenceProbs:
    p_single_s: float
    p_single_i: float
    p_tc: float
    p_ac: float

    @property
    def ratio_ac_tc(self) -> float:
        return self.p_ac / self.p_tc


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


def path_efficiency(peak: float = 1.0, coupling: float = 1.0, detector: float = 1.0) -> float:
    """Arm efficiency: channel peak transmission x coupling x detector efficiency."""
    for name, v in (("peak", peak), ("coupling", coupling), ("detector", detector)):
        _check_probability(name, v)
    return peak * coupling * detector


def dark_prob_per_gate(det: DetectorSpec) -> float:
    return det.dark_rate_cps / det.trigger_rate_hz


def forward_model(
    src: SourceSpec,
    eta_s: float,
    eta_i: float,
    i2_over_i1: float,
    mode: SplittingMode,
    dark: float = 0.0,
) -> CoincidenceProbs:
    """Singles, true and accidental coincidence probabilities per gate.

    Parameters
    ----------
    src : SourceSpec
        Only ``p_inband`` is used here.
    eta_s, eta_i : float
        Path efficiencies of the two arms.  Statistical splitting feeds both
        detectors from one channel, so the two must be equal.
    i2_over_i1 : float
        Shape overlap ratio of the channel pair, in (0, 1].
    mode : SplittingMode
    dark : float
        Dark-click probability per gate, the same for both detectors.

    Notes
    -----
    Singles are ``p * eta + dark`` in both modes.  True coincidences are
    ``p * eta_s * eta_i * r`` for deterministic splitting and half of that
    for statistical splitting, where a pair is separated only half the time.
    Accidentals are the product of the singles.
    """
    mode = SplittingMode(mode)
    _check_probability("eta_s", eta_s)
    _check_probability("eta_i", eta_i)
    _check_probability("dark", dark)
    if not 0.0 < i2_over_i1 <= 1.0:
        raise ValueError(f"i2_over_i1 must be in (0, 1], got {i2_over_i1}")
    if mode is SplittingMode.STATISTICAL and eta_s != eta_i:
        raise ValueError("statistical splitting needs equal arm efficiencies (one shared channel)")

    p = src.p_inband
    p_s = p * eta_s + dark
    p_i = p * eta_i + dark
    p_tc = p * eta_s * eta_i * i2_over_i1
    if mode is SplittingMode.STATISTICAL:
        p_tc *= 0.5
    return CoincidenceProbs(p_s, p_i, p_tc, p_s * p_i)


def dead_time_live_fraction(det: DetectorSpec, p_click: float) -> float:
    """Fraction of gates during which a detector is armed.

    Every click blocks ``dead_time * trigger_rate`` following gates, hence
    ``1 / (1 + p_click * trigger_rate * dead_time)``.
    """
    _check_probability("p_click", p_click)
    return 1.0 / (1.0 + p_click * det.trigger_rate_hz * det.dead_time_us * 1e-6)
