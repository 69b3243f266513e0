"""File formats: filter spectra, experiment configs, result tables and plans.

Filter CSV
    Header ``frequency_thz,transmission`` (linear) or
    ``frequency_thz,transmission_db`` (dB, must be <= 0).  Lines starting
    with ``#`` are comments.

Experiment config
    One JSON document with top-level keys ``demux``, ``source``,
    ``detectors``, ``sweep`` and ``montecarlo``.  See ``README.md``.

Result CSV
    ``# key: value`` provenance lines (tool version, config digest, seed),
    then an ordinary CSV table.  Floats are written with ``repr`` so they
    re-parse to the same value.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .delays import FLAT_TOP, DelayEntry, delays_for
from .detection import DetectorSpec, SourceSpec, SplittingMode
from .merit import FomPoint
from .spectral import (
    ChannelSpec,
    DemuxSpec,
    FlatTop,
    Gaussian,
    Tabulated,
    itu_center_frequency,
    pair_key,
    rectangle,
)

SEED_ENV = "WDMPAIRLAB_SEED"

SWEEP_COLUMNS = ("p", "mode", "p_tc", "p_ac", "vmax", "brightness_cps", "entanglable")


class FilterFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# -- filter spectra ---------------------------------------------------------


def load_filter_csv(path) -> Tabulated:
    """Read a measured filter spectrum into a tabulated transmission curve."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise FilterFormatError(f"{path}: empty file")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if header == ["frequency_thz", "transmission"]:
        in_db = False
    elif header == ["frequency_thz", "transmission_db"]:
        in_db = True
    else:
        raise FilterFormatError(f"{path}: unknown header {','.join(header)!r}")
    freq, trans = [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise FilterFormatError(f"{path}: row {lineno} has {len(row)} fields")
        try:
            freq.append(float(row[0]))
            trans.append(float(row[1]))
        except ValueError as exc:
            raise FilterFormatError(f"{path}: row {lineno}: {exc}") from None
    t = np.array(trans)
    if in_db:
        if np.any(t > 0):
            raise FilterFormatError(f"{path}: dB transmission above 0 dB")
        t = 10.0 ** (t / 10.0)
    try:
        return Tabulated(np.array(freq), t)
    except ValueError as exc:
        raise FilterFormatError(f"{path}: {exc}") from None


def write_filter_csv(path, curve: Tabulated, db: bool = False) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frequency_thz", "transmission_db" if db else "transmission"])
    for f, t in zip(curve.frequency_thz, curve.transmission):
        w.writerow([repr(float(f)), repr(float(10 * np.log10(t)) if db else float(t))])
    atomic_write_text(path, buf.getvalue())


# -- atomic output ----------------------------------------------------------


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# -- experiment config ------------------------------------------------------


def _parse_pair(value) -> tuple[int, int]:
    if isinstance(value, str):
        a, _, b = value.partition("-")
        return int(a), int(b)
    a, b = value
    return int(a), int(b)


def _curve_from(doc: dict, itu: int, defaults: dict, base: Path):
    spec = {**defaults, **doc}
    if "csv" in spec:
        return load_filter_csv(base / spec["csv"])
    shape = spec.get("shape", "flattop")
    f0 = spec.get("center_thz", itu_center_frequency(itu))
    fwhm = spec.get("fwhm_ghz", 100.0)
    peak = spec.get("peak", 1.0)
    if shape == "gaussian":
        return Gaussian(f0, fwhm, peak)
    if shape == "flattop":
        return FlatTop(f0, fwhm, peak, int(spec.get("order", 4)))
    if shape == "rectangle":
        return rectangle(f0, fwhm, peak)
    raise ConfigError(f"unknown channel shape {shape!r}")


def demux_from_dict(doc: dict, base: Path = Path(".")) -> DemuxSpec:
    defaults = {k: doc[k] for k in ("shape", "fwhm_ghz", "peak", "order") if k in doc}
    channels = []
    for ch in doc.get("channels", []):
        if isinstance(ch, int):
            ch = {"itu": ch}
        itu = int(ch["itu"])
        channels.append(
            ChannelSpec(itu, _curve_from(ch, itu, defaults, base), float(doc.get("centering_tol_ghz", 1.0)))
        )
    tech = doc.get("technology", "DG")
    delays = doc.get("delays", {})
    if delays == "builtin":
        delays = delays_for(tech, doc.get("delay_shape", FLAT_TOP))
    else:
        delays = {_parse_pair(k): (None if v is None else float(v)) for k, v in delays.items()}
    return DemuxSpec(tech, tuple(channels), float(doc.get("grid_spacing_ghz", 100.0)), delays)


def detectors_from_dict(doc: dict) -> tuple[DetectorSpec, DetectorSpec]:
    def one(d):
        return DetectorSpec(
            float(d.get("trigger_rate_hz", 2e6)),
            float(d.get("gate_width_ns", 20.0)),
            float(d.get("dark_rate_cps", 500.0)),
            float(d.get("dead_time_us", 10.0)),
            float(d["efficiency"]),
        )

    if "signal" in doc:
        return one(doc["signal"]), one(doc.get("idler", doc["signal"]))
    det = one(doc)
    return det, det


@dataclass
class ExperimentConfig:
    raw: dict
    demux: DemuxSpec
    detectors: tuple[DetectorSpec, DetectorSpec]
    pump_thz: float
    p_inband: float
    sweep: dict = field(default_factory=dict)
    montecarlo: dict = field(default_factory=dict)

    @property
    def pair(self) -> tuple[int, int]:
        return _parse_pair(self.sweep.get("pair", (23, 25)))

    @property
    def channel(self) -> int:
        return int(self.sweep.get("channel", 24))

    @property
    def source(self) -> SourceSpec:
        return SourceSpec(self.pump_thz, self.p_inband)

    @property
    def digest(self) -> str:
        return config_digest(self.raw)


def config_digest(doc: Any) -> str:
    """SHA-256 of the canonical JSON form of a config document."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def config_from_dict(doc: dict, base: Path = Path(".")) -> ExperimentConfig:
    missing = [k for k in ("demux", "source", "detectors") if k not in doc]
    if missing:
        raise ConfigError(f"config is missing {', '.join(missing)}")
    try:
        demux_doc = doc["demux"]
        if isinstance(demux_doc, str):
            demux_path = base / demux_doc
            demux_doc = json.loads(demux_path.read_text(encoding="utf-8"))
            demux = demux_from_dict(demux_doc, demux_path.parent)
        else:
            demux = demux_from_dict(demux_doc, base)
        dets = detectors_from_dict(doc["detectors"])
        sweep = dict(doc.get("sweep", {}))
        src = doc["source"]
        pump = src.get("pump_thz", "auto")
        if pump == "auto":
            a, b = _parse_pair(sweep.get("pair", (23, 25)))
            pump = demux.channel(a).center_thz + demux.channel(b).center_thz
        cfg = ExperimentConfig(
            doc, demux, dets, float(pump), float(src.get("p_inband", 0.05)), sweep, dict(doc.get("montecarlo", {}))
        )
        cfg.source  # validates
        return cfg
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path, seed_override: Optional[int] = None) -> ExperimentConfig:
    """Load a config file; ``seed_override`` or ``$WDMPAIRLAB_SEED`` replace the MC seed.

    Precedence is explicit override, then the environment, then the file.
    The override is written into the document before the digest is taken.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    seed = seed_override
    if seed is None and os.environ.get(SEED_ENV):
        seed = int(os.environ[SEED_ENV])
    if seed is not None:
        doc.setdefault("montecarlo", {})
        doc["montecarlo"] = {**doc["montecarlo"], "seed": int(seed)}
    return config_from_dict(doc, path.parent)


# -- result tables ----------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, SplittingMode):
        return v.value
    return str(v)


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[tuple]
    header: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.header.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, path) -> None:
        atomic_write_text(path, self.to_csv())


def provenance(cfg: ExperimentConfig, command: str, seed=None) -> dict:
    head = {"tool": f"wdmpairlab {__version__}", "command": command, "config_sha256": cfg.digest}
    if seed is not None:
        head["seed"] = seed
    return head


def read_result_csv(path) -> tuple[dict, list[str], list[dict]]:
    """Parse a result CSV into (header, columns, rows); numeric cells become floats."""
    header, body = {}, []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].rstrip("\n").partition(": ")
                header[k] = v
            else:
                body.append(line)
    reader = csv.DictReader(body)
    rows = []
    for rec in reader:
        out = {}
        for k, v in rec.items():
            if v in ("true", "false"):
                out[k] = v == "true"
            else:
                try:
                    out[k] = int(v) if v.lstrip("-").isdigit() else float(v)
                except ValueError:
                    out[k] = v
        rows.append(out)
    return header, list(reader.fieldnames or []), rows


def sweep_table(points: list[FomPoint], header: dict) -> ResultTable:
    rows = [(pt.p_inband, pt.mode, pt.p_tc, pt.p_ac, pt.v_max, pt.brightness_cps, pt.entanglable) for pt in points]
    return ResultTable(SWEEP_COLUMNS, rows, header)


# -- JSON documents ---------------------------------------------------------


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def delay_table_to_json(table: list[DelayEntry]) -> str:
    return dumps_json([e.to_json() for e in table])


def delay_table_from_json(text: str) -> list[DelayEntry]:
    return [DelayEntry.from_json(d) for d in json.loads(text)]


def pair_label(pair) -> str:
    a, b = pair_key(*pair)
    return f"{a}-{b}"
