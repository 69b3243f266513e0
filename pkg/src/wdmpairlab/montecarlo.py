"""Gate-by-gate Monte Carlo of pair emission, filtering, splitting and detection.

Used as an independent check of the analytic model: it never touches the
overlap integrals, only samples photon frequencies and pushes them through
the transmission curves.

Per gate:

1. draw the number of pairs emitted with signal frequency inside the
   simulation window (flat spectral density),
2. draw each signal frequency uniformly in the window; the idler sits at
   ``pump - signal``,
3. route every photon through the demultiplexer with the channel
   transmissions as branching probabilities, then apply the arm efficiency;
   for statistical splitting a 50/50 splitter picks the detector,
4. add dark clicks,
5. apply detector dead time: a registered click blocks the next
   ``ceil(dead_time * trigger_rate)`` gates of that detector,
6. count singles, coincidences (both clicks in one gate) and delayed
   coincidences (signal click in gate k, idler click in gate k + 1).

The mean pair number is set so that the expected number of photons a
unit-peak channel hands to one detector per gate equals ``p_inband``.
Pair numbers are Bernoulli (``emission="first_order"``, at most one pair
per gate, the regime the analytic model describes) or Poisson
(``emission="poisson"``, which adds multi-pair events).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .detection import (
    CoincidenceProbs,
    DetectorSpec,
    SourceSpec,
    SplittingMode,
    dark_prob_per_gate,
    dead_time_live_fraction,
    forward_model,
)
from .spectral import (
    TransmissionCurve,
    eval_transmission,
    integral_i1,
    normalize_shape,
    overlap_ratio,
    support,
)

EMISSION_MODELS = ("first_order", "poisson")
MIN_BATCH = 10_000


class NoTrueCoincidenceError(ValueError):
    """Coincidences do not exceed accidentals, so no true-coincidence signal."""


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo run.

    ``curve_s``/``curve_i`` are the two demux channels for deterministic
    splitting; statistical splitting uses ``curve_s`` alone.  The curves
    carry their own peak transmission; ``coupling`` and the detector
    efficiencies make up the rest of each arm's efficiency.  ``window`` is
    the signal-frequency interval in THz; by default it is the smallest
    interval symmetric about ``pump/2`` covering every channel where its
    transmission exceeds ``support_floor`` of the peak.
    """

    src: SourceSpec
    mode: SplittingMode
    curve_s: TransmissionCurve
    det_s: DetectorSpec
    det_i: DetectorSpec
    n_gates: int
    seed: int
    curve_i: Optional[TransmissionCurve] = None
    coupling: float = 1.0
    window: Optional[tuple[float, float]] = None
    emission: str = "poisson"
    batch_size: int = 100_000
    support_floor: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "mode", SplittingMode(self.mode))
        if self.n_gates < 1:
            raise ValueError("n_gates must be >= 1")
        if self.emission not in EMISSION_MODELS:
            raise ValueError(f"emission must be one of {EMISSION_MODELS}")
        if self.batch_size < MIN_BATCH:
            raise ValueError(f"batch_size must be >= {MIN_BATCH}")
        if self.mode is SplittingMode.DETERMINISTIC and self.curve_i is None:
            raise ValueError("deterministic splitting needs curve_i")
        if self.mode is SplittingMode.STATISTICAL and self.curve_i is not None:
            raise ValueError("statistical splitting uses a single channel (curve_s)")
        if not 0.0 <= self.coupling <= 1.0:
            raise ValueError("coupling must be in [0, 1]")
        if self.det_s.trigger_rate_hz != self.det_i.trigger_rate_hz:
            raise ValueError("both detectors must share the trigger")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def curves(self) -> tuple[TransmissionCurve, ...]:
        return (self.curve_s,) if self.curve_i is None else (self.curve_s, self.curve_i)

    @property
    def eta_s(self) -> float:
        return self.coupling * self.det_s.efficiency

    @property
    def eta_i(self) -> float:
        return self.coupling * self.det_i.efficiency


@dataclass
class RunStats:
    gates_run: int = 0
    live_gates: int = 0  # both detectors armed
    singles_s: int = 0
    singles_i: int = 0
    coincidences: int = 0
    delayed_coincidences: int = 0
    delayed_pairs: int = 0  # (k, k+1) gate pairs examined for delayed coincidences

    def __add__(self, other: "RunStats") -> "RunStats":
        return RunStats(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def trials(self, name: str) -> int:
        return self.delayed_pairs if name == "delayed_coincidences" else self.gates_run

    def rate(self, name: str) -> float:
        return getattr(self, name) / self.trials(name)

    def std_error(self, name: str) -> float:
        r = self.rate(name)
        return math.sqrt(r * (1.0 - r) / self.trials(name))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


COUNT_FIELDS = ("singles_s", "singles_i", "coincidences", "delayed_coincidences")


def simulation_window(cfg: McConfig) -> tuple[float, float]:
    """Signal-frequency window for ``cfg``, validated against the channel supports."""
    half_pump = cfg.src.pump_thz / 2.0
    reach = 0.0
    for curve in cfg.curves:
        lo, hi = support(curve, cfg.support_floor)
        reach = max(reach, abs(lo - half_pump), abs(hi - half_pump))
    if cfg.window is None:
        return half_pump - reach, half_pump + reach
    lo, hi = cfg.window
    if not (lo <= half_pump - reach and hi >= half_pump + reach):
        raise ValueError(
            f"window [{lo}, {hi}] THz does not contain the channel supports and their "
            f"reflections [{half_pump - reach}, {half_pump + reach}]"
        )
    return float(lo), float(hi)


def mean_pairs_per_gate(cfg: McConfig) -> float:
    """Mean number of pairs per gate with signal frequency inside the window."""
    lo, hi = simulation_window(cfg)
    width = hi - lo
    i1 = integral_i1(normalize_shape(cfg.curve_s)[0])
    # A photon reaches a channel either as signal or as idler of a pair, so a
    # deterministic arm collects 2 * I1 / W photons per pair; the statistical
    # channel collects the same but hands half to each detector.
    if cfg.mode is SplittingMode.DETERMINISTIC:
        return cfg.src.p_inband * width / (2.0 * i1)
    return cfg.src.p_inband * width / i1


def _dead_time_filter(clicks: np.ndarray, dead_gates: int) -> tuple[np.ndarray, np.ndarray]:
    """Registered clicks and armed-gate mask after applying dead time."""
    n = clicks.size
    if dead_gates == 0:
        return clicks, np.ones(n, dtype=bool)
    registered = np.zeros(n, dtype=bool)
    next_free = 0
    for idx in np.flatnonzero(clicks).tolist():
        if idx >= next_free:
            registered[idx] = True
            next_free = idx + dead_gates + 1
    kept = np.flatnonzero(registered)
    edges = np.zeros(n + 1, dtype=np.int64)
    np.add.at(edges, kept + 1, 1)
    np.add.at(edges, np.minimum(kept + dead_gates + 1, n), -1)
    blocked = np.cumsum(edges[:n]) > 0
    return registered, ~blocked


def _run_batch(cfg: McConfig, seed_seq: np.random.SeedSequence, n: int, lo: float, width: float, mu: float) -> RunStats:
    rng = np.random.default_rng(seed_seq)
    if cfg.emission == "first_order":
        n_pairs = (rng.random(n) < mu).astype(np.int64)
    else:
        n_pairs = rng.poisson(mu, n)
    gate = np.repeat(np.arange(n), n_pairs)
    nu = lo + width * rng.random(gate.size)
    freq = np.concatenate([nu, cfg.src.pump_thz - nu])
    gate = np.concatenate([gate, gate])

    u = rng.random(freq.size)
    if cfg.mode is SplittingMode.DETERMINISTIC:
        t_s = eval_transmission(cfg.curve_s, freq)
        t_i = eval_transmission(cfg.curve_i, freq)
        # a photon leaves by at most one output port
        total = t_s + t_i
        scale = np.maximum(total, 1.0)
        t_s = t_s / scale
        t_i = t_i / scale
        to_s = u < t_s
        to_i = (u >= t_s) & (u < t_s + t_i)
    else:
        through = u < eval_transmission(cfg.curve_s, freq)
        side = rng.random(freq.size) < 0.5
        to_s = through & side
        to_i = through & ~side
    v = rng.random(freq.size)
    to_s &= v < cfg.eta_s
    to_i &= v < cfg.eta_i

    click_s = np.zeros(n, dtype=bool)
    click_i = np.zeros(n, dtype=bool)
    click_s[gate[to_s]] = True
    click_i[gate[to_i]] = True
    click_s |= rng.random(n) < dark_prob_per_gate(cfg.det_s)
    click_i |= rng.random(n) < dark_prob_per_gate(cfg.det_i)

    click_s, armed_s = _dead_time_filter(click_s, cfg.det_s.dead_gates)
    click_i, armed_i = _dead_time_filter(click_i, cfg.det_i.dead_gates)

    return RunStats(
        gates_run=n,
        live_gates=int(np.count_nonzero(armed_s & armed_i)),
        singles_s=int(np.count_nonzero(click_s)),
        singles_i=int(np.count_nonzero(click_i)),
        coincidences=int(np.count_nonzero(click_s & click_i)),
        delayed_coincidences=int(np.count_nonzero(click_s[:-1] & click_i[1:])),
        delayed_pairs=n - 1,
    )


def _batch_args(cfg: McConfig):
    lo, hi = simulation_window(cfg)
    mu = mean_pairs_per_gate(cfg)
    if cfg.emission == "first_order" and mu > 1.0:
        raise ValueError(
            f"first-order emission needs at most one pair per gate, but the window "
            f"[{lo:.4f}, {hi:.4f}] THz implies {mu:.3f}; narrow the window or use Poisson emission"
        )
    n_batches = -(-cfg.n_gates // cfg.batch_size)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_batches)
    sizes = [cfg.batch_size] * (n_batches - 1) + [cfg.n_gates - cfg.batch_size * (n_batches - 1)]
    return [(cfg, s, n, lo, hi - lo, mu) for s, n in zip(seeds, sizes)]


def _run_batch_packed(args):
    return _run_batch(*args)


def run_mc(cfg: McConfig, workers: int = 1) -> RunStats:
    """Run the simulation; the result depends only on ``cfg`` (seed included).

    Gates are processed in batches of ``cfg.batch_size`` with seeds spawned
    from ``cfg.seed``, so any ``workers`` count gives identical counts.  Dead
    time and delayed-coincidence pairing do not cross batch boundaries.
    """
    jobs = _batch_args(cfg)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch_packed, jobs))
    else:
        parts = [_run_batch(*job) for job in jobs]
    total = RunStats()
    for part in parts:
        total = total + part
    return total


def estimate_ratio(stats: RunStats) -> tuple[float, float]:
    """Accidental-to-true coincidence ratio and its standard error.

    Accidentals come from the delayed-gate rate, true coincidences from the
    coincidence rate minus accidentals.  Errors of the two rates are
    propagated as independent binomial errors.
    """
    c = stats.rate("coincidences")
    a = stats.rate("delayed_coincidences")
    t = c - a
    if t <= 0:
        raise NoTrueCoincidenceError(
            f"coincidence rate {c:.3g} does not exceed the accidental rate {a:.3g}"
        )
    var_c = c * (1.0 - c) / stats.trials("coincidences")
    var_a = a * (1.0 - a) / stats.trials("delayed_coincidences")
    ratio = a / t
    se = math.sqrt((c / t**2) ** 2 * var_a + (a / t**2) ** 2 * var_c)
    return ratio, se


def analytic_prediction(cfg: McConfig) -> CoincidenceProbs:
    """The analytic per-gate probabilities for the configuration simulated by ``cfg``."""
    curve_i = cfg.curve_s if cfg.curve_i is None else cfg.curve_i
    ratio = min(1.0, overlap_ratio(cfg.curve_s, curve_i, cfg.src.pump_thz))
    eta_s = cfg.curve_s.peak * cfg.eta_s
    eta_i = curve_i.peak * cfg.eta_i
    dark = 0.5 * (dark_prob_per_gate(cfg.det_s) + dark_prob_per_gate(cfg.det_i))
    return forward_model(cfg.src, eta_s, eta_i, ratio, cfg.mode, dark)


@dataclass(frozen=True)
class Deviation:
    quantity: str
    count: int
    trials: int
    mc_rate: float
    analytic: float
    sigma: float
    z: float


def compare_to_analytic(stats: RunStats, cfg: McConfig) -> list[Deviation]:
    """Per-quantity deviation of the simulated rates from the analytic model.

    Coincidences are compared with the true-coincidence probability and
    delayed coincidences with the accidental probability.  With dead time
    the analytic rates are scaled by the live fraction: per detector for
    singles, at the either-detector click probability for coincidences and
    by the product of the two for delayed coincidences.  ``sigma`` is the
    binomial standard error at the analytic rate.
    """
    probs = analytic_prediction(cfg)
    live_s = dead_time_live_fraction(cfg.det_s, probs.p_single_s)
    live_i = dead_time_live_fraction(cfg.det_i, probs.p_single_i)
    p_either = min(1.0, probs.p_single_s + probs.p_single_i - probs.p_tc)
    target = {
        "singles_s": probs.p_single_s * live_s,
        "singles_i": probs.p_single_i * live_i,
        "coincidences": probs.p_tc * dead_time_live_fraction(cfg.det_s, p_either),
        "delayed_coincidences": probs.p_ac * live_s * live_i,
    }
    rows = []
    for name in COUNT_FIELDS:
        n = stats.trials(name)
        a = target[name]
        rate = stats.rate(name)
        sigma = math.sqrt(a * (1.0 - a) / n)
        if sigma == 0.0:
            sigma = stats.std_error(name)
        z = (rate - a) / sigma if sigma > 0 else 0.0
        rows.append(Deviation(name, getattr(stats, name), n, rate, a, sigma, z))
    return rows
