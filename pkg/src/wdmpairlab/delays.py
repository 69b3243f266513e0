"""Group-delay tables, delay compensation, pump planning and channel allocation.

Sign convention for pair delays: a positive delay means the idler (higher
channel number) photon arrives late, so the signal arm is delayed to
realign; a negative delay delays the idler arm instead.  Only magnitudes
and relative signs are meaningful; which physical arm leads is not known
from the measurements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .detection import SplittingMode
from .spectral import ITU_ANCHOR_THZ, DemuxSpec, itu_center_frequency, pair_key

#: Speed of light in nm * THz.
C_NM_THZ = 299792.458

FLAT_TOP = "flat-top"
GAUSSIAN = "gaussian"


class UnmeasuredDelayError(ValueError):
    """A channel pair whose group delay exceeded the measurable range."""

    def __init__(self, technology: str, shape: str, pair: tuple[int, int]):
        self.technology, self.shape, self.pair = technology, shape, pair
        super().__init__(f"{technology} ({shape}) channel pair {pair[0]}-{pair[1]}: delay unmeasured")


class DelayRangeError(ValueError):
    pass


class InsufficientChannelsError(ValueError):
    pass


@dataclass(frozen=True)
class DelayEntry:
    """Measured group delay of one channel pair of one filter.

    ``delay_ns`` is ``None`` when the delay was too large to be measured.
    """

    technology: str
    shape: str
    pair: tuple[int, int]
    delay_ns: Optional[float]

    def __post_init__(self):
        object.__setattr__(self, "pair", pair_key(*self.pair))

    @property
    def measured(self) -> bool:
        return self.delay_ns is not None

    def to_json(self) -> dict:
        return {
            "technology": self.technology,
            "shape": self.shape,
            "pair": list(self.pair),
            "delay_ns": self.delay_ns,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DelayEntry":
        d = doc["delay_ns"]
        return cls(doc["technology"], doc["shape"], tuple(doc["pair"]), None if d is None else float(d))


_TABLE = (
    ("DTF", FLAT_TOP, (23, 25), 15.0),
    ("DTF", FLAT_TOP, (22, 26), 22.5),
    ("DTF", FLAT_TOP, (21, 27), -2.5),
    ("AWG", FLAT_TOP, (23, 25), 12.5),
    ("AWG", FLAT_TOP, (22, 26), 10.0),
    ("AWG", FLAT_TOP, (21, 27), None),
    ("DG", FLAT_TOP, (23, 25), 10.0),
    ("DG", FLAT_TOP, (22, 26), 10.0),
    ("DG", FLAT_TOP, (21, 27), 10.0),
    ("DG", GAUSSIAN, (23, 25), 10.0),
    ("DG", GAUSSIAN, (22, 26), 10.0),
    ("DG", GAUSSIAN, (21, 27), 10.0),
)


def builtin_delay_table() -> list[DelayEntry]:
    """Measured group delays (ns) of the four reference demultiplexers."""
    return [DelayEntry(*row) for row in _TABLE]


def filter_table(table: Sequence[DelayEntry], technology: str, shape: str = FLAT_TOP) -> list[DelayEntry]:
    rows = [e for e in table if e.technology == technology and e.shape == shape]
    if not rows:
        raise KeyError(f"no delay entries for {technology} ({shape})")
    return rows


def lookup_delay(table: Sequence[DelayEntry], pair: tuple[int, int]) -> DelayEntry:
    key = pair_key(*pair)
    for e in table:
        if e.pair == key:
            return e
    raise KeyError(f"channel pair {key[0]}-{key[1]} not in delay table")


def delays_for(technology: str, shape: str = FLAT_TOP) -> dict:
    """Delay map for a :class:`DemuxSpec` built from the builtin table."""
    return {e.pair: e.delay_ns for e in filter_table(builtin_delay_table(), technology, shape)}


@dataclass(frozen=True)
class DelayLine:
    """Adjustable electronic delay available on each detector arm (ns)."""

    max_ns: float = 25.0
    resolution_ns: float = 0.5
    min_ns: float = 0.0

    def __post_init__(self):
        if self.min_ns != 0.0:
            raise ValueError("delay lines start at 0 ns")
        if self.max_ns < self.min_ns:
            raise ValueError("delay-line upper bound below lower bound")
        if not self.resolution_ns > 0:
            raise ValueError("resolution must be positive")

    def quantize(self, delay_ns: float) -> float:
        steps = round(delay_ns / self.resolution_ns)
        return steps * self.resolution_ns


@dataclass(frozen=True)
class DelaySetting:
    arm: str  # "signal" or "idler"
    delay_ns: float

    @property
    def signed_ns(self) -> float:
        """Setting in the pair-delay sign convention (idler delays count negative)."""
        return self.delay_ns if self.arm == "signal" else -self.delay_ns

    def to_json(self) -> dict:
        return {"arm": self.arm, "delay_ns": self.delay_ns}


def compensation_setting(entry: DelayEntry, line: DelayLine = DelayLine()) -> DelaySetting:
    """Delay-line setting that realigns the two photons of ``entry``'s pair.

    The delay is rounded to the line resolution.  Raises
    :class:`UnmeasuredDelayError` for unmeasured pairs and
    :class:`DelayRangeError` when the magnitude exceeds the line range.
    """
    if not entry.measured:
        raise UnmeasuredDelayError(entry.technology, entry.shape, entry.pair)
    d = entry.delay_ns
    mag = line.quantize(abs(d))
    if not line.min_ns <= mag <= line.max_ns:
        raise DelayRangeError(f"|delay| {abs(d)} ns outside delay line range [{line.min_ns}, {line.max_ns}] ns")
    return DelaySetting("signal" if d >= 0 else "idler", mag)


def coincidence_vs_delay(applied_ns: float, true_delay_ns: float, gate_width_ns: float, p_tc_aligned: float) -> float:
    """True-coincidence probability with a delay mismatch between two square gates."""
    if not gate_width_ns > 0:
        raise ValueError("gate width must be positive")
    return p_tc_aligned * max(0.0, 1.0 - abs(applied_ns - true_delay_ns) / gate_width_ns)


def pump_for_channel_pair(a: int, b: int) -> tuple[float, float]:
    """Pump frequency (THz) and vacuum wavelength (nm) serving channels ``a`` and ``b``."""
    itu_center_frequency(a), itu_center_frequency(b)
    # sum on the integer grid so every pair symmetric about one channel agrees exactly
    pump = (20 * ITU_ANCHOR_THZ + a + b) / 10.0
    return pump, C_NM_THZ / pump


@dataclass(frozen=True)
class RetuneStep:
    pair: tuple[int, int]
    pump_thz: float
    wavelength_nm: float
    setting: DelaySetting
    scan_ns: tuple[float, ...]
    scan_peak_ns: float

    def to_json(self) -> dict:
        return {
            "pair": list(self.pair),
            "pump_thz": self.pump_thz,
            "wavelength_nm": self.wavelength_nm,
            "setting": self.setting.to_json(),
            "scan_ns": list(self.scan_ns),
            "scan_peak_ns": self.scan_peak_ns,
        }


def _coarse_scan(entry: DelayEntry, line: DelayLine, gate_width_ns: float):
    step = gate_width_ns / 4.0
    n = int(math.floor(line.max_ns / step + 1e-9))
    pos = np.arange(n + 1) * step
    signed = np.concatenate([-pos[:0:-1], pos])
    response = [coincidence_vs_delay(s, entry.delay_ns, gate_width_ns, 1.0) for s in signed]
    return tuple(float(s) for s in signed), float(signed[int(np.argmax(response))])


def retune_plan(
    pairs: Sequence[tuple[int, int]],
    table: Sequence[DelayEntry],
    line: DelayLine = DelayLine(),
    gate_width_ns: float = 20.0,
) -> list[RetuneStep]:
    """Ordered steps for serving ``pairs`` one after another with a tunable pump.

    Each step retunes the pump to the pair, scans the delay line coarsely
    (a quarter gate per step, both arms) and records the peak, then sets the
    compensation delay.  The whole plan is rejected if any pair's delay is
    unmeasured.
    """
    entries = [lookup_delay(table, p) for p in pairs]
    for e in entries:
        if not e.measured:
            raise UnmeasuredDelayError(e.technology, e.shape, e.pair)
    steps = []
    for e in entries:
        pump, wl = pump_for_channel_pair(*e.pair)
        scan, peak = _coarse_scan(e, line, gate_width_ns)
        steps.append(RetuneStep(e.pair, pump, wl, compensation_setting(e, line), scan, peak))
    return steps


@dataclass(frozen=True)
class Assignment:
    users: tuple[str, str]
    pair: tuple[int, int]
    pump_thz: float
    setting: Optional[DelaySetting]
    mode: SplittingMode = SplittingMode.DETERMINISTIC

    def to_json(self) -> dict:
        return {
            "users": list(self.users),
            "pair": list(self.pair),
            "pump_thz": self.pump_thz,
            "delay": None if self.setting is None else self.setting.to_json(),
            "mode": self.mode.value,
        }


@dataclass(frozen=True)
class AllocationPlan:
    assignments: tuple[Assignment, ...] = ()
    pump_tunable: bool = False

    @property
    def simultaneous(self) -> bool:
        """True when one pump frequency serves every assigned pair."""
        return len({round(a.pump_thz, 9) for a in self.assignments}) <= 1

    def to_json(self) -> dict:
        return {
            "pump_tunable": self.pump_tunable,
            "simultaneous": self.simultaneous,
            "assignments": [a.to_json() for a in self.assignments],
        }


def symmetric_pairs(demux: DemuxSpec, pump_thz: float, tol_ghz: float = 1.0) -> list[tuple[int, int]]:
    """Channel pairs symmetric about ``pump/2``, ordered outward from degeneracy."""
    chans = sorted(demux.channels, key=lambda c: c.itu)
    half = pump_thz / 2.0
    out = []
    for i, a in enumerate(chans):
        for b in chans[i + 1 :]:
            if abs(a.center_thz + b.center_thz - pump_thz) * 1000.0 <= tol_ghz:
                out.append((abs(a.center_thz - half), a.itu, b.itu))
    out.sort()
    return [(a, b) for _, a, b in out]


def _setting_for(demux: DemuxSpec, pair, line):
    d = demux.delays.get(pair_key(*pair), "missing")
    if d == "missing" or d is None:
        return None
    return compensation_setting(DelayEntry(demux.technology, "", pair, d), line)


def allocate(
    requests: Sequence[tuple[str, str]],
    demux: DemuxSpec,
    pump_thz: Optional[float] = None,
    line: DelayLine = DelayLine(),
) -> AllocationPlan:
    """Assign a channel pair to every user pair.

    With a fixed pump only pairs symmetric about ``pump/2`` can carry
    entanglement; they are handed out from the degeneracy point outward.
    Without one, free channels are paired in grid order and each pair gets
    its own pump, so the plan is generally not simultaneous.  Delay settings
    come from ``demux.delays`` where a measured value exists.
    """
    users = [u for req in requests for u in req]
    if len(set(users)) != len(users):
        raise ValueError("a user appears in more than one request")
    if not requests:
        return AllocationPlan((), pump_thz is None)

    if pump_thz is not None:
        candidates = symmetric_pairs(demux, pump_thz)
    else:
        free = sorted(demux.numbers)
        candidates = [(free[k], free[k + 1]) for k in range(0, len(free) - 1, 2)]
    if len(candidates) < len(requests):
        raise InsufficientChannelsError(
            f"{len(requests)} requests but only {len(candidates)} usable channel pairs"
        )
    out = []
    for req, pair in zip(requests, candidates):
        pump = pump_thz if pump_thz is not None else demux.channel(pair[0]).center_thz + demux.channel(pair[1]).center_thz
        out.append(Assignment(tuple(req), pair, pump, _setting_for(demux, pair, line)))
    return AllocationPlan(tuple(out), pump_thz is None)
