"""Visibility, pair-probability inversion, brightness and p sweeps."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .detection import (
    DetectorSpec,
    SourceSpec,
    SplittingMode,
    dark_prob_per_gate,
    dead_time_live_fraction,
    forward_model,
    path_efficiency,
)
from .spectral import DemuxSpec, overlap_ratio

#: Visibility below which a two-photon state cannot be entangled.
ENTANGLEMENT_BOUND = math.sqrt(2.0) / 2.0

P_SWEEP_RANGE = (0.01, 0.18)


class OutOfSweepRangeWarning(UserWarning):
    """An inferred pair probability falls outside the characterized 0.01-0.18 range."""


def vmax(ratio_ac_tc: float) -> float:
    """Maximum attainable two-photon visibility, ``1 / (1 + 2 P_AC/P_TC)``."""
    if ratio_ac_tc < 0 or math.isnan(ratio_ac_tc):
        raise ValueError(f"accidental/true ratio must be >= 0, got {ratio_ac_tc}")
    return 1.0 / (1.0 + 2.0 * ratio_ac_tc)


def invert_p(ratio_ac_tc: float, i1: float, i2: float, mode: SplittingMode) -> float:
    """In-band pair emission probability from a measured P_AC/P_TC ratio.

    Deterministic splitting gives ``(i2 / i1) * ratio``; statistical
    splitting halves it.  Results outside 0.01-0.18 raise an
    :class:`OutOfSweepRangeWarning` but are still returned.
    """
    mode = SplittingMode(mode)
    if not i1 > 0:
        raise ValueError(f"i1 must be positive, got {i1}")
    if not 0 < i2 <= i1:
        raise ValueError(f"need 0 < i2 <= i1, got i2={i2}, i1={i1}")
    if ratio_ac_tc < 0:
        raise ValueError(f"accidental/true ratio must be >= 0, got {ratio_ac_tc}")
    p = (i2 / i1) * ratio_ac_tc
    if mode is SplittingMode.STATISTICAL:
        p = (i2 / (2.0 * i1)) * ratio_ac_tc
    lo, hi = P_SWEEP_RANGE
    if not lo <= p <= hi:
        warnings.warn(f"p = {p:.4g} is outside the sweep range [{lo}, {hi}]", OutOfSweepRangeWarning, stacklevel=2)
    return p


def brightness(p_tc: float, det: DetectorSpec, live_fraction: float = 1.0) -> float:
    """True coincidences per second."""
    return p_tc * det.trigger_rate_hz * live_fraction


@dataclass(frozen=True)
class FomPoint:
    p_inband: float
    mode: SplittingMode
    p_tc: float
    p_ac: float
    v_max: float
    brightness_cps: float

    @property
    def entanglable(self) -> bool:
        return self.v_max > ENTANGLEMENT_BOUND


def _p_grid(p_min, p_max, n, spacing):
    if n < 2:
        raise ValueError(f"need n >= 2 sweep points, got {n}")
    if not 0 < p_min < p_max:
        raise ValueError(f"need 0 < p_min < p_max, got {p_min}, {p_max}")
    if spacing == "linear":
        return np.linspace(p_min, p_max, n)
    if spacing == "log":
        return np.geomspace(p_min, p_max, n)
    raise ValueError(f"spacing must be 'linear' or 'log', got {spacing!r}")


def sweep_fom(
    demux: DemuxSpec,
    pair: Union[int, Sequence[int]],
    det: Union[DetectorSpec, Sequence[DetectorSpec]],
    pump_thz: float | None = None,
    p_min: float = P_SWEEP_RANGE[0],
    p_max: float = P_SWEEP_RANGE[1],
    n: int = 18,
    spacing: str = "linear",
    coupling: float = 1.0,
) -> list[FomPoint]:
    """Figures of merit over a grid of in-band pair probabilities.

    ``pair`` is either two channel numbers (deterministic splitting) or a
    single channel feeding a 50/50 splitter (statistical splitting).
    ``det`` is one detector used on both arms or a ``(signal, idler)``
    pair.  The pump defaults to the sum of the channel centers and must
    otherwise put both channels symmetric about ``pump/2`` within the
    channels' centering tolerance.

    Path efficiency per arm is the channel peak times ``coupling`` times the
    detector efficiency.  Brightness is scaled by the dead-time live
    fraction evaluated at the probability that either detector clicks,
    since a coincidence needs both detectors armed.
    """
    if isinstance(pair, (int, np.integer)):
        mode = SplittingMode.STATISTICAL
        ch_s = ch_i = demux.channel(int(pair))
    else:
        a, b = pair
        if a == b:
            raise ValueError("deterministic splitting needs two distinct channels")
        mode = SplittingMode.DETERMINISTIC
        ch_s, ch_i = demux.channel(a), demux.channel(b)
    if isinstance(det, DetectorSpec):
        det_s = det_i = det
    else:
        det_s, det_i = det
    if det_s.trigger_rate_hz != det_i.trigger_rate_hz:
        raise ValueError("both detectors must share the trigger")

    center_sum = ch_s.center_thz + ch_i.center_thz
    if pump_thz is None:
        pump_thz = center_sum
    tol_thz = max(ch_s.centering_tol_ghz, ch_i.centering_tol_ghz) / 1000.0
    if abs(center_sum - pump_thz) > tol_thz:
        raise ValueError(
            f"channels {ch_s.itu} and {ch_i.itu} are not symmetric about pump/2 "
            f"(center sum {center_sum:.6f} THz vs pump {pump_thz:.6f} THz)"
        )

    ratio = overlap_ratio(ch_s.curve, ch_i.curve, pump_thz)
    ratio = min(ratio, 1.0)
    eta_s = path_efficiency(ch_s.curve.peak, coupling, det_s.efficiency)
    eta_i = path_efficiency(ch_i.curve.peak, coupling, det_i.efficiency)
    dark_s, dark_i = dark_prob_per_gate(det_s), dark_prob_per_gate(det_i)
    dark = 0.5 * (dark_s + dark_i)
    if dark_s != dark_i:
        warnings.warn("unequal dark rates averaged for the analytic model", stacklevel=2)

    points = []
    for p in _p_grid(p_min, p_max, n, spacing):
        probs = forward_model(SourceSpec(pump_thz, float(p)), eta_s, eta_i, ratio, mode, dark)
        p_either = min(1.0, probs.p_single_s + probs.p_single_i - probs.p_tc)
        live = dead_time_live_fraction(det_s, p_either)
        v = vmax(probs.ratio_ac_tc) if probs.p_tc > 0 else 0.0
        points.append(
            FomPoint(float(p), mode, probs.p_tc, probs.p_ac, v, brightness(probs.p_tc, det_s, live))
        )
    return points
