"""Photon-pair distribution through DWDM demultiplexers: overlap integrals,
visibility and brightness, a gate-level Monte Carlo check, and group-delay
and channel planning."""

__version__ = "0.1.0"

from .detection import (
    CoincidenceProbs,
    DetectorSpec,
    SourceSpec,
    SplittingMode,
    dark_prob_per_gate,
    dead_time_live_fraction,
    forward_model,
    path_efficiency,
)
from .merit import ENTANGLEMENT_BOUND, FomPoint, brightness, invert_p, sweep_fom, vmax
from .spectral import (
    ChannelSpec,
    DemuxSpec,
    FlatTop,
    Gaussian,
    Tabulated,
    detuning_sweep,
    eval_transmission,
    integral_i1,
    integral_i2,
    itu_center_frequency,
    normalize_shape,
    overlap_ratio,
    rectangle,
)
