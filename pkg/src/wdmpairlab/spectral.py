"""Filter transmission curves, the ITU grid and spectral overlap integrals.

Frequencies are plain floats in THz, filter widths in GHz.  Integrals are
taken over ordinary frequency, so I1 and I2 come out in THz; only their
ratio is used by the figure-of-merit code, where any 2*pi convention
cancels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

LN2 = math.log(2.0)

ITU_ANCHOR_THZ = 190.0
ITU_MAX_CHANNEL = 100

#: Half-width of the quadrature window for parametric curves, in FWHM units.
WINDOW_FWHM = 5.0
DEFAULT_POINTS = 2001
_MAX_POINTS = 2**21 + 1

# Tabulated lookups within this distance of a range end snap onto it, so that
# reflected grids that miss the end by an ulp still see the edge sample.
_EDGE_TOL_THZ = 1e-9

TECHNOLOGIES = ("DTF", "AWG", "DG")

_GL_NODE = 0.5 / math.sqrt(3.0)


def _check_peak(peak: float) -> None:
    if not 0.0 < peak <= 1.0:
        raise ValueError(f"peak transmission must be in (0, 1], got {peak}")


def _check_center(center_thz: float) -> None:
    if not center_thz > 0.0:
        raise ValueError(f"center frequency must be positive, got {center_thz} THz")


@dataclass(frozen=True)
class Gaussian:
    """Gaussian channel: ``peak * exp(-4 ln2 ((f - center) / fwhm)**2)``."""

    center_thz: float
    fwhm_ghz: float
    peak: float = 1.0

    def __post_init__(self):
        _check_center(self.center_thz)
        if not self.fwhm_ghz > 0:
            raise ValueError(f"fwhm must be positive, got {self.fwhm_ghz} GHz")
        _check_peak(self.peak)

    order = 1

    @property
    def fwhm_thz(self) -> float:
        return self.fwhm_ghz / 1000.0

    def __call__(self, f):
        return eval_transmission(self, f)


@dataclass(frozen=True)
class FlatTop:
    """Super-Gaussian channel of even power ``2 * order``.

    ``order=1`` is the Gaussian; large orders approach a rectangle of width
    ``fwhm_ghz``.  The half-maximum points sit at ``center +- fwhm/2`` for
    every order.
    """

    center_thz: float
    fwhm_ghz: float
    peak: float = 1.0
    order: int = 4

    def __post_init__(self):
        _check_center(self.center_thz)
        if not self.fwhm_ghz > 0:
            raise ValueError(f"fwhm must be positive, got {self.fwhm_ghz} GHz")
        _check_peak(self.peak)
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be an integer >= 1, got {self.order}")

    @property
    def fwhm_thz(self) -> float:
        return self.fwhm_ghz / 1000.0

    def __call__(self, f):
        return eval_transmission(self, f)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Sampled transmission, linearly interpolated and zero outside the samples."""

    frequency_thz: np.ndarray
    transmission: np.ndarray
    _peak: float = field(init=False, repr=False)

    def __post_init__(self):
        f = np.array(self.frequency_thz, dtype=float)
        t = np.array(self.transmission, dtype=float)
        if f.ndim != 1 or f.shape != t.shape:
            raise ValueError("frequency and transmission must be 1-d arrays of equal length")
        if f.size < 3:
            raise ValueError(f"need at least 3 samples, got {f.size}")
        if not np.all(np.diff(f) > 0):
            raise ValueError("frequency samples must be strictly increasing")
        if f[0] <= 0:
            raise ValueError("frequencies must be positive")
        if not np.all(np.isfinite(t)) or t.min() < 0.0 or t.max() > 1.0:
            raise ValueError("transmission samples must lie in [0, 1]")
        if t.max() == 0.0:
            raise ValueError("transmission is identically zero")
        f.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "frequency_thz", f)
        object.__setattr__(self, "transmission", t)
        object.__setattr__(self, "_peak", float(t.max()))

    @property
    def peak(self) -> float:
        return self._peak

    @property
    def center_thz(self) -> float:
        """Transmission-weighted centroid."""
        f, t = self.frequency_thz, self.transmission
        return float(np.trapezoid(f * t, f) / np.trapezoid(t, f))

    def __eq__(self, other):
        if not isinstance(other, Tabulated):
            return NotImplemented
        return np.array_equal(self.frequency_thz, other.frequency_thz) and np.array_equal(
            self.transmission, other.transmission
        )

    def __hash__(self):
        return hash((self.frequency_thz.tobytes(), self.transmission.tobytes()))

    def __call__(self, f):
        return eval_transmission(self, f)


TransmissionCurve = Union[Gaussian, FlatTop, Tabulated]


def rectangle(center_thz: float, width_ghz: float, peak: float = 1.0, n: int = 101) -> Tabulated:
    """Ideal box filter as a tabulated curve with ``n`` samples across the band."""
    half = width_ghz / 2000.0
    f = np.linspace(center_thz - half, center_thz + half, n)
    return Tabulated(f, np.full(n, float(peak)))


def itu_center_frequency(n: int) -> float:
    """Center frequency in THz of ITU 100 GHz grid channel ``n``."""
    if int(n) != n or not 0 <= n <= ITU_MAX_CHANNEL:
        raise ValueError(f"ITU channel number must be an integer in [0, {ITU_MAX_CHANNEL}], got {n}")
    # (1900 + n) / 10 is correctly rounded; 190 + 0.1 * n is not always.
    return (10 * ITU_ANCHOR_THZ + int(n)) / 10.0


def _super_gaussian(f, center_thz, fwhm_thz, peak, order):
    x = 2.0 * (np.asarray(f, dtype=float) - center_thz) / fwhm_thz
    return peak * np.exp(-LN2 * x ** (2 * order))


def eval_transmission(curve: TransmissionCurve, f):
    """Intensity transmission of ``curve`` at frequency ``f`` (THz, scalar or array)."""
    if isinstance(curve, Tabulated):
        fp = curve.frequency_thz
        x = np.asarray(f, dtype=float)
        lo, hi = fp[0], fp[-1]
        x = np.where((x < lo) & (x >= lo - _EDGE_TOL_THZ), lo, x)
        x = np.where((x > hi) & (x <= hi + _EDGE_TOL_THZ), hi, x)
        out = np.interp(x, fp, curve.transmission, left=0.0, right=0.0)
    else:
        out = _super_gaussian(f, curve.center_thz, curve.fwhm_thz, curve.peak, curve.order)
    return out if np.ndim(out) else float(out)


def normalize_shape(curve: TransmissionCurve) -> tuple[TransmissionCurve, float]:
    """Split a curve into its unit-peak shape and the peak (insertion-loss) factor."""
    peak = curve.peak
    if isinstance(curve, Tabulated):
        return Tabulated(curve.frequency_thz, curve.transmission / peak), peak
    if isinstance(curve, FlatTop):
        return FlatTop(curve.center_thz, curve.fwhm_ghz, 1.0, curve.order), peak
    return Gaussian(curve.center_thz, curve.fwhm_ghz, 1.0), peak


def scale_peak(curve: TransmissionCurve, factor: float) -> TransmissionCurve:
    """Return ``curve`` with its transmission multiplied by ``factor``."""
    if isinstance(curve, Tabulated):
        return Tabulated(curve.frequency_thz, curve.transmission * factor)
    if isinstance(curve, FlatTop):
        return FlatTop(curve.center_thz, curve.fwhm_ghz, curve.peak * factor, curve.order)
    return Gaussian(curve.center_thz, curve.fwhm_ghz, curve.peak * factor)


def integration_window(curve: TransmissionCurve) -> tuple[float, float]:
    """Frequency interval (THz) outside which the curve is treated as zero."""
    if isinstance(curve, Tabulated):
        return float(curve.frequency_thz[0]), float(curve.frequency_thz[-1])
    half = WINDOW_FWHM * curve.fwhm_thz
    return curve.center_thz - half, curve.center_thz + half


def support(curve: TransmissionCurve, floor: float = 1e-6) -> tuple[float, float]:
    """Interval where the transmission exceeds ``floor`` times its peak.

    Tabulated curves return their sample range.
    """
    if isinstance(curve, Tabulated):
        return integration_window(curve)
    if not 0.0 < floor < 1.0:
        raise ValueError("floor must be in (0, 1)")
    half = 0.5 * curve.fwhm_thz * (math.log(1.0 / floor) / LN2) ** (1.0 / (2 * curve.order))
    return curve.center_thz - half, curve.center_thz + half


def _reflect(interval, pump_thz):
    lo, hi = interval
    return pump_thz - hi, pump_thz - lo


def _adaptive_trapezoid(func, lo, hi, n, rtol):
    x = np.linspace(lo, hi, n)
    est = np.trapezoid(func(x), x)
    while n < _MAX_POINTS:
        n = 2 * n - 1
        x = np.linspace(lo, hi, n)
        new = np.trapezoid(func(x), x)
        if abs(new - est) <= rtol * abs(new) or new == 0.0:
            return float(new)
        est = new
    return float(est)


def integral_i1(curve: TransmissionCurve, n_points: int = DEFAULT_POINTS, rtol: float = 1e-12) -> float:
    """Spectral width of one channel, the integral of its transmission (THz).

    Tabulated curves use the trapezoid rule on their own samples, which is
    exact for the linear interpolant.  Parametric curves use a trapezoid
    rule over ``center +- 5 fwhm`` starting at ``n_points`` and doubling
    until two successive estimates agree to ``rtol``.
    """
    if isinstance(curve, Tabulated):
        return float(np.trapezoid(curve.transmission, curve.frequency_thz))
    lo, hi = integration_window(curve)
    return _adaptive_trapezoid(lambda x: eval_transmission(curve, x), lo, hi, max(n_points, DEFAULT_POINTS), rtol)


def _piecewise_gauss(func, breakpoints):
    # Two-point Gauss-Legendre per segment: exact for products of two linear
    # pieces and never samples a segment end, where box edges are ambiguous.
    a, b = breakpoints[:-1], breakpoints[1:]
    h = b - a
    mid = 0.5 * (a + b)
    x1, x2 = mid - _GL_NODE * h, mid + _GL_NODE * h
    return float(np.sum(0.5 * h * (func(x1) + func(x2))))


def integral_i2(
    curve_i: TransmissionCurve,
    curve_j: TransmissionCurve,
    pump_thz: float,
    n_points: int = DEFAULT_POINTS,
    rtol: float = 1e-12,
) -> float:
    """Pair overlap integral ``int T_i(nu) T_j(pump - nu) dnu`` in THz.

    The integration runs over the part of ``curve_i``'s window that overlaps
    the reflection of ``curve_j``'s window about ``pump/2``; disjoint
    windows give exactly 0.  Two parametric curves use the adaptive
    trapezoid of :func:`integral_i1`.  When a tabulated curve is involved
    the sample points of both curves (the partner's reflected) become
    segment breakpoints, refined to at least ``n_points`` for a parametric
    partner, and each segment is integrated by two-point Gauss-Legendre.
    """
    if not pump_thz > 0:
        raise ValueError(f"pump frequency must be positive, got {pump_thz}")
    lo_i, hi_i = integration_window(curve_i)
    lo_j, hi_j = _reflect(integration_window(curve_j), pump_thz)
    lo, hi = max(lo_i, lo_j), min(hi_i, hi_j)
    if not hi > lo:
        return 0.0

    def product(x):
        return eval_transmission(curve_i, x) * eval_transmission(curve_j, pump_thz - x)

    tab_i = isinstance(curve_i, Tabulated)
    tab_j = isinstance(curve_j, Tabulated)
    if not (tab_i or tab_j):
        return _adaptive_trapezoid(product, lo, hi, max(n_points, DEFAULT_POINTS), rtol)

    pts = [np.array([lo, hi])]
    if tab_i:
        pts.append(curve_i.frequency_thz)
    if tab_j:
        pts.append(pump_thz - curve_j.frequency_thz[::-1])
    if not (tab_i and tab_j):
        pts.append(np.linspace(lo, hi, max(n_points, DEFAULT_POINTS)))
    x = np.unique(np.concatenate(pts))
    x = x[(x >= lo) & (x <= hi)]
    if x.size < 2:
        return 0.0
    return _piecewise_gauss(product, x)


def gaussian_i1_exact(curve: Gaussian) -> float:
    """Closed-form I1 of a Gaussian: ``peak * fwhm * sqrt(pi / (4 ln2))``."""
    return curve.peak * curve.fwhm_thz * math.sqrt(math.pi / (4.0 * LN2))


def gaussian_i2_exact(curve_i: Gaussian, curve_j: Gaussian, pump_thz: float) -> float:
    """Closed-form overlap of two Gaussians under energy conservation."""
    si = curve_i.fwhm_thz / (2.0 * math.sqrt(2.0 * LN2))
    sj = curve_j.fwhm_thz / (2.0 * math.sqrt(2.0 * LN2))
    s2 = si * si + sj * sj
    d = curve_i.center_thz - (pump_thz - curve_j.center_thz)
    return (
        curve_i.peak
        * curve_j.peak
        * math.sqrt(2.0 * math.pi)
        * si
        * sj
        / math.sqrt(s2)
        * math.exp(-d * d / (2.0 * s2))
    )


def overlap_ratio(curve_i: TransmissionCurve, curve_j: TransmissionCurve, pump_thz: float) -> float:
    """Shape-only ratio I2/I1 for a channel pair.

    Both curves are normalized to unit peak first, so insertion loss stays
    out of the ratio and can be carried by the path efficiency instead.  For
    mismatched channels the geometric mean of the two I1 values is used.
    """
    ni, _ = normalize_shape(curve_i)
    nj, _ = normalize_shape(curve_j)
    i2 = integral_i2(ni, nj, pump_thz)
    return i2 / math.sqrt(integral_i1(ni) * integral_i1(nj))


def detuning_sweep(
    curve_i: TransmissionCurve,
    curve_j: TransmissionCurve,
    pump_center_thz: float,
    half_range_ghz: float,
    n_points: int,
) -> list[tuple[float, float]]:
    """I2 as the pump is detuned over ``+- half_range_ghz`` around ``pump_center_thz``.

    ``n_points`` must be odd so the zero-detuning point is sampled.
    Returns ``(detuning_ghz, i2_thz)`` rows in ascending detuning.
    """
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError(f"n_points must be odd and >= 3, got {n_points}")
    detunings = np.linspace(-half_range_ghz, half_range_ghz, n_points)
    detunings[n_points // 2] = 0.0
    return [
        (float(d), integral_i2(curve_i, curve_j, pump_center_thz + d / 1000.0))
        for d in detunings
    ]


@dataclass(frozen=True)
class ChannelSpec:
    """One demultiplexer output on the ITU grid.

    A channel whose curve center strays from the grid by more than
    ``centering_tol_ghz`` is kept but reported through :attr:`off_grid`.
    """

    itu: int
    curve: TransmissionCurve
    centering_tol_ghz: float = 1.0

    def __post_init__(self):
        itu_center_frequency(self.itu)

    @property
    def grid_thz(self) -> float:
        return itu_center_frequency(self.itu)

    @property
    def center_thz(self) -> float:
        return self.curve.center_thz

    @property
    def offset_ghz(self) -> float:
        return (self.center_thz - self.grid_thz) * 1000.0

    @property
    def off_grid(self) -> bool:
        return abs(self.offset_ghz) > self.centering_tol_ghz


def pair_key(a: int, b: int) -> tuple[int, int]:
    """Canonical key of an unordered channel pair."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class DemuxSpec:
    """A demultiplexer: technology tag, channels and per-pair group delays.

    ``delays`` maps :func:`pair_key` tuples to a delay in ns, or ``None``
    where the delay was too large to measure.
    """

    technology: str
    channels: tuple[ChannelSpec, ...]
    grid_spacing_ghz: float = 100.0
    delays: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.technology not in TECHNOLOGIES:
            raise ValueError(f"technology must be one of {TECHNOLOGIES}, got {self.technology!r}")
        if not self.grid_spacing_ghz > 0:
            raise ValueError("grid spacing must be positive")
        object.__setattr__(self, "channels", tuple(self.channels))
        numbers = [c.itu for c in self.channels]
        if len(set(numbers)) != len(numbers):
            raise ValueError(f"duplicate ITU channel numbers in {numbers}")
        object.__setattr__(self, "delays", {pair_key(*k): v for k, v in dict(self.delays).items()})

    @classmethod
    def synthetic(
        cls,
        technology: str,
        numbers,
        shape: str = "flattop",
        fwhm_ghz: float = 100.0,
        peak: float = 1.0,
        order: int = 4,
        delays=None,
    ) -> "DemuxSpec":
        """Build a demux with identical parametric channels centered on the grid."""
        channels = []
        for n in numbers:
            f0 = itu_center_frequency(n)
            if shape == "gaussian":
                curve = Gaussian(f0, fwhm_ghz, peak)
            elif shape == "flattop":
                curve = FlatTop(f0, fwhm_ghz, peak, order)
            elif shape == "rectangle":
                curve = rectangle(f0, fwhm_ghz, peak)
            else:
                raise ValueError(f"unknown shape {shape!r}")
            channels.append(ChannelSpec(n, curve))
        return cls(technology, tuple(channels), delays=delays or {})

    @property
    def numbers(self) -> list[int]:
        return [c.itu for c in self.channels]

    def channel(self, itu: int) -> ChannelSpec:
        for c in self.channels:
            if c.itu == itu:
                return c
        raise KeyError(f"channel {itu} not in demux (have {self.numbers})")
