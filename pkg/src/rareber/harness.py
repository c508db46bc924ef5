"""SNR sweeps comparing MC, QMC, RQMC and adaptive IS on a modulated link.

Config files are flat ``key = value`` text; ``#`` starts a comment and list
values are comma separated::

    modulation = qam
    order = 16
    snr = 5, 10, 15, 20, 25
    method = mc, qmc-sobol, is-scale
    words_per_pack = 5000
    packs = 100
"""

from __future__ import annotations

import csv
import io
import json
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .problems import LinkProblem
from .sampler import AdaptiveImportanceSampler, MonteCarloSampler

__all__ = [
    "CSV_COLUMNS",
    "METHODS",
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "compare_methods",
    "emit_results",
    "load_config",
    "read_results",
    "run_experiment",
]

METHODS = ("mc", "qmc-halton", "qmc-sobol", "rqmc-sobol", "is-tilt", "is-scale")
POINT_SOURCES = {
    "mc": "pseudo-random",
    "qmc-halton": "halton",
    "qmc-sobol": "sobol",
    "rqmc-sobol": "scrambled-sobol",
}
IS_POINT_SOURCES = {"mc": "pseudo-random", **{k: v for k, v in POINT_SOURCES.items() if k != "mc"}}
CSV_COLUMNS = ("snr_db", "method", "p_hat", "std_err", "ess", "n_samples", "zero_events", "wall_time_s", "seed")
COMPARE_COLUMNS = ("snr_db", "method", "baseline", "p_hat", "baseline_p_hat", "difference", "combined_std_err")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    modulation: str = "qam"
    order: int = 16
    snr: tuple[float, ...] = (5.0, 10.0, 15.0, 20.0, 25.0)
    method: tuple[str, ...] = ("mc", "qmc-sobol", "is-scale")
    words_per_pack: int = 5000
    packs: int = 100
    loss: str = "ber"
    bits_per_word: int | None = None
    adapt_iterations: int = 5
    init_proposal_snr_offset: float = 5.0
    delta: float = 0.1
    is_point_source: str = "mc"
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    explicit: frozenset = field(default=frozenset(), compare=False, repr=False)

    @property
    def n_samples(self) -> int:
        return self.words_per_pack * self.packs

    def validate(self) -> "ExperimentConfig":
        if self.modulation not in ("bpsk", "qam"):
            raise ConfigError("modulation", f"expected bpsk or qam, got {self.modulation!r}")
        if self.modulation == "qam" and self.order not in (4, 16, 64):
            raise ConfigError("order", f"QAM order must be 4, 16 or 64, got {self.order}")
        if not self.snr:
            raise ConfigError("snr", "at least one SNR value is required")
        if not all(np.isfinite(s) for s in self.snr):
            raise ConfigError("snr", "SNR values must be finite")
        if not self.method:
            raise ConfigError("method", "at least one method is required")
        for m in self.method:
            if m not in METHODS:
                raise ConfigError("method", f"unknown method {m!r}; expected one of {METHODS}")
        for name in ("words_per_pack", "packs", "adapt_iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.loss not in ("ber", "wer"):
            raise ConfigError("loss", f"expected ber or wer, got {self.loss!r}")
        if not self.delta > 0:
            raise ConfigError("delta", "must be positive")
        if self.is_point_source not in IS_POINT_SOURCES:
            raise ConfigError("is_point_source", f"expected one of {tuple(IS_POINT_SOURCES)}")
        if self.format not in ("csv", "json-lines"):
            raise ConfigError("format", f"expected csv or json-lines, got {self.format!r}")
        try:
            LinkProblem(self.modulation, self.order, 0.0, self.bits_per_word, self.loss)
        except ValueError as exc:
            raise ConfigError("bits_per_word", str(exc)) from None
        if not any(m.startswith("is-") for m in self.method):
            unused = self.explicit & {"adapt_iterations", "init_proposal_snr_offset", "delta", "is_point_source"}
            for name in sorted(unused):
                warnings.warn(f"{name} only applies to is-* methods and is ignored", stacklevel=2)
        elif self.n_samples % self.adapt_iterations:
            warnings.warn(
                f"{self.n_samples} samples do not split evenly over {self.adapt_iterations} iterations; "
                "the remainder is dropped for is-* methods",
                stacklevel=2,
            )
        return self


_CONVERTERS = {
    "modulation": str.lower,
    "order": int,
    "snr": lambda s: tuple(float(t) for t in s.split(",") if t.strip()),
    "method": lambda s: tuple(t.strip() for t in s.split(",") if t.strip()),
    "words_per_pack": int,
    "packs": int,
    "loss": str.lower,
    "bits_per_word": lambda s: None if s.lower() in ("", "none") else int(s),
    "adapt_iterations": int,
    "init_proposal_snr_offset": float,
    "delta": float,
    "is_point_source": str,
    "seed": int,
    "out": str,
    "format": str,
}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(key, "unknown config key")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None
    return values


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a config file (optional) and apply non-None ``overrides`` on top."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values = parse_config_text(fh.read())
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)} - {"explicit"}
    for key in values:
        if key not in known:
            raise ConfigError(key, "unknown config key")
    return ExperimentConfig(**values, explicit=frozenset(values)).validate()


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    method: str
    p_hat: float
    std_err: float
    ess: float
    n_samples: int
    zero_events: bool
    wall_time_s: float
    seed: int


def _run_cell(config: ExperimentConfig, snr: float, method: str) -> ResultRow:
    problem = LinkProblem(config.modulation, config.order, snr, config.bits_per_word, config.loss)
    t0 = time.perf_counter()
    if method in POINT_SOURCES:
        est = MonteCarloSampler(
            n_samples=config.words_per_pack,
            n_packs=config.packs,
            point_source=POINT_SOURCES[method],
            seed=config.seed,
        )
    else:
        est = AdaptiveImportanceSampler(
            mode=method[3:],
            n_iter=config.adapt_iterations,
            n_samples_per_iter=config.n_samples // config.adapt_iterations,
            init_scale=10.0 ** (config.init_proposal_snr_offset / 10.0),
            delta=config.delta,
            point_source=IS_POINT_SOURCES[config.is_point_source],
            seed=config.seed,
        )
    report = est.fit(problem).report_
    return ResultRow(
        snr_db=float(snr),
        method=method,
        p_hat=float(report.p_hat),
        std_err=float(report.std_err),
        ess=float(report.ess),
        n_samples=int(report.n_samples),
        zero_events=bool(report.zero_events),
        wall_time_s=time.perf_counter() - t0,
        seed=config.seed,
    )


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """One row per (snr, method), ordered by SNR then by the configured method order."""
    config.validate()
    return [_run_cell(config, snr, method) for snr in config.snr for method in config.method]


def compare_methods(rows, baseline_method: str) -> list[dict]:
    """Signed differences ``p_hat(method) - p_hat(baseline)`` per SNR."""
    rows = list(rows)
    base = {r.snr_db: r for r in rows if r.method == baseline_method}
    out = []
    for r in rows:
        if r.snr_db not in base:
            raise ValueError(f"no {baseline_method!r} row for SNR {r.snr_db}")
        b = base[r.snr_db]
        out.append({
            "snr_db": r.snr_db,
            "method": r.method,
            "baseline": baseline_method,
            "p_hat": r.p_hat,
            "baseline_p_hat": b.p_hat,
            "difference": r.p_hat - b.p_hat,
            "combined_std_err": float(np.hypot(r.std_err, b.std_err)),
        })
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest round-trip form
    return str(value)


def _rows_as_dicts(rows):
    return [asdict(r) if isinstance(r, ResultRow) else dict(r) for r in rows]


def format_results(rows, fmt: str = "csv", columns=CSV_COLUMNS) -> str:
    dicts = _rows_as_dicts(rows)
    if fmt == "json-lines":
        return "".join(json.dumps({c: d[c] for c in columns}) + "\n" for d in dicts)
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for d in dicts:
        writer.writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def emit_results(rows, path, fmt: str = "csv", columns=CSV_COLUMNS) -> None:
    """Write rows as CSV (header + one line per row) or JSON lines."""
    text = format_results(rows, fmt, columns)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _parse_row(d: dict) -> ResultRow:
    return ResultRow(
        snr_db=float(d["snr_db"]),
        method=d["method"],
        p_hat=float(d["p_hat"]),
        std_err=float(d["std_err"]),
        ess=float(d["ess"]),
        n_samples=int(d["n_samples"]),
        zero_events=d["zero_events"] in (True, "true", "True", "1"),
        wall_time_s=float(d["wall_time_s"]),
        seed=int(d["seed"]),
    )


def read_results(path) -> list[ResultRow]:
    """Parse a file written by :func:`emit_results` (CSV or JSON lines)."""
    with open(path, newline="") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return [_parse_row(json.loads(line)) for line in text.splitlines() if line.strip()]
    return [_parse_row(d) for d in csv.DictReader(io.StringIO(text))]


def without_wall_time(rows) -> list[ResultRow]:
    return [replace(r, wall_time_s=0.0) for r in rows]
