"""Monte-Carlo experiment driver.

Each trial draws an information index uniformly, encodes it, sends it over a
freshly drawn channel, decodes, and compares. Trial ``t`` at SNR point ``s``
uses its own generator seeded from ``(seed, s, t)``. Results therefore do not
depend on execution order or on how trials are split across workers, and
decoder variants run with the same seed see identical channels and noise.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .channel import ChannelBlock, sigma_for_snr, transmit
from .codebook import CodeSpec, encode, enumerate_codebook, make_spec
from .decoder import DEFAULT_STACK_CAP, decode_exhaustive, decode_priority

__all__ = [
    "CSV_HEADER",
    "DECODERS",
    "ExperimentConfig",
    "SnrPoint",
    "TrialSummary",
    "emit_csv",
    "format_csv",
    "read_csv",
    "run_experiment",
    "run_point",
    "write_channel_dump",
]

logger = logging.getLogger(__name__)

CSV_HEADER = ("snr_db", "ebn0_db", "trials", "wer", "ber",
              "mean_expansions_per_info_bit", "max_expansions", "erasures")
DECODERS = ("exhaustive", "h1", "h2")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one SNR sweep.

    Parameters
    ----------
    n, k, p, q, mode
        Code parameters, passed to :func:`socodes.codebook.make_spec`.
    snrs : tuple of float
        SNR grid in dB. ``inf`` means a noiseless channel.
    trials : int
        Trials per SNR point.
    seed : int
        Master seed.
    decoder : {"exhaustive", "h1", "h2"}
        Exhaustive ML, or priority-first search with the given heuristic.
    snr_convention : {"average", "asymptotic"}
        See :func:`socodes.channel.sigma_for_snr`.
    q_chan : int or None
        Period (in samples) at which the simulated taps change. ``None`` uses
        the code's design period (quasi-static for codes without one).
    stack_cap : int
        Stack capacity for the tree search.
    n_jobs : int
        Worker processes. Results are identical for any value.
    """

    n: int
    k: int
    p: int = 2
    q: int | None = None
    mode: str | None = None
    snrs: tuple[float, ...] = (10.0,)
    trials: int = 1000
    seed: int = 0
    decoder: str = "h2"
    snr_convention: str = "average"
    q_chan: int | None = None
    stack_cap: int = DEFAULT_STACK_CAP
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snrs", tuple(float(s) for s in self.snrs))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.snr_convention not in ("average", "asymptotic"):
            raise ValueError(f"unknown SNR convention {self.snr_convention!r}")
        if self.q_chan is not None and self.q_chan < 1:
            raise ValueError("q_chan must be positive")
        if self.stack_cap < 1:
            raise ValueError("stack_cap must be positive")
        if any(math.isnan(s) or s == -math.inf for s in self.snrs):
            raise ValueError("SNR values must be finite or +inf")

    def spec(self) -> CodeSpec:
        return make_spec(self.n, self.k, self.p, self.q, self.mode)

    def sigma(self, snr_db: float) -> float:
        if snr_db == math.inf:
            return 0.0
        return sigma_for_snr(self.n, self.p, snr_db, self.snr_convention)

    @property
    def channel_period(self) -> int | None:
        return self.q_chan if self.q_chan is not None else self.q


@dataclass
class SnrPoint:
    """Raw counts for one SNR point; rates are derived properties."""

    snr_db: float
    k: int
    n: int
    trials: int = 0
    word_errors: int = 0
    bit_errors: int = 0
    expansions: int = 0
    branches: int = 0
    max_expansions: int = 0
    erasures: int = 0

    @property
    def ebn0_db(self) -> float:
        return self.snr_db + 10.0 * math.log10(self.n / self.k)

    @property
    def wer(self) -> float:
        return self.word_errors / self.trials if self.trials else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.k) if self.trials else 0.0

    @property
    def wer_stderr(self) -> float:
        w = self.wer
        return math.sqrt(w * (1.0 - w) / self.trials) if self.trials else 0.0

    @property
    def mean_expansions_per_info_bit(self) -> float:
        return self.expansions / (self.trials * self.k) if self.trials else 0.0

    @property
    def mean_branches_per_info_bit(self) -> float:
        return self.branches / (self.trials * self.k) if self.trials else 0.0

    def merge(self, other: "SnrPoint") -> "SnrPoint":
        return replace(self,
                       trials=self.trials + other.trials,
                       word_errors=self.word_errors + other.word_errors,
                       bit_errors=self.bit_errors + other.bit_errors,
                       expansions=self.expansions + other.expansions,
                       branches=self.branches + other.branches,
                       max_expansions=max(self.max_expansions, other.max_expansions),
                       erasures=self.erasures + other.erasures)


@dataclass
class TrialSummary:
    config: ExperimentConfig
    points: list[SnrPoint] = field(default_factory=list)

    def point(self, snr_db: float) -> SnrPoint:
        for pt in self.points:
            if pt.snr_db == snr_db:
                return pt
        raise KeyError(snr_db)


def trial_rng(seed: int, snr_index: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial."""
    return np.random.default_rng([seed, snr_index, trial])


class _Runner:
    """Per-process state: the spec, a codeword cache and (for the oracle) the codebook."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.spec = config.spec()
        self.codebook = enumerate_codebook(self.spec) if config.decoder == "exhaustive" else None
        self._words: dict[int, tuple] = {}

    def codeword(self, index: int):
        if self.codebook is not None:
            return self.codebook.bits[index]
        word = self._words.get(index)
        if word is None:
            word = encode(self.spec, index).bits
            self._words[index] = word
        return word

    def run(self, snr_index: int, start: int, stop: int,
            channel_sink: list | None = None) -> SnrPoint:
        cfg, spec = self.config, self.spec
        snr = cfg.snrs[snr_index]
        sigma = cfg.sigma(snr)
        pt = SnrPoint(snr_db=snr, k=spec.k, n=spec.n)
        for t in range(start, stop):
            rng = trial_rng(cfg.seed, snr_index, t)
            index = int(rng.integers(2 ** spec.k))
            channel = ChannelBlock.draw(spec.p, spec.length, rng, period=cfg.channel_period)
            if channel_sink is not None:
                channel_sink.append((snr_index, t, channel))
            y = transmit(self.codeword(index), channel, sigma, rng)
            if self.codebook is not None:
                res = decode_exhaustive(y, self.codebook)
                erased, decoded, exps, branches = False, res.index, res.expansions, 0
            else:
                res = decode_priority(y, spec, cfg.decoder, cfg.stack_cap)
                erased, decoded = res.erased, res.index
                exps, branches = res.expansions, res.branches
            pt.trials += 1
            pt.expansions += exps
            pt.branches += branches
            pt.max_expansions = max(pt.max_expansions, exps)
            if erased:
                pt.erasures += 1
                pt.word_errors += 1
                pt.bit_errors += spec.k
            elif decoded != index:
                pt.word_errors += 1
                pt.bit_errors += bin(decoded ^ index).count("1")
        return pt


_WORKER: _Runner | None = None


def _worker_init(config: ExperimentConfig) -> None:
    global _WORKER
    _WORKER = _Runner(config)


def _worker_run(args) -> SnrPoint:
    return _WORKER.run(*args)


def _chunks(trials: int, parts: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, trials, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_point(config: ExperimentConfig, snr_index: int, start: int = 0,
              stop: int | None = None) -> SnrPoint:
    """Run trials ``start..stop-1`` of one SNR point in this process."""
    return _Runner(config).run(snr_index, start, config.trials if stop is None else stop)


def run_experiment(config: ExperimentConfig,
                   channel_sink: list | None = None) -> TrialSummary:
    """Run the full sweep and aggregate counts per SNR point.

    Parameters
    ----------
    config : ExperimentConfig
    channel_sink : list, optional
        If given, ``(snr_index, trial, ChannelBlock)`` is appended for every
        trial. Forces serial execution.
    """
    summary = TrialSummary(config=config)
    if config.n_jobs > 1 and channel_sink is None:
        jobs = [(si, a, b) for si in range(len(config.snrs))
                for a, b in _chunks(config.trials, 4 * config.n_jobs)]
        with ProcessPoolExecutor(config.n_jobs, initializer=_worker_init,
                                 initargs=(config,)) as pool:
            parts = list(pool.map(_worker_run, jobs))
        for si, snr in enumerate(config.snrs):
            pts = [p for (sj, _, _), p in zip(jobs, parts) if sj == si]
            agg = pts[0]
            for p in pts[1:]:
                agg = agg.merge(p)
            summary.points.append(agg)
            logger.info("snr %.2f dB: wer %.3g, %.2f expansions/bit", snr, agg.wer,
                        agg.mean_expansions_per_info_bit)
        return summary
    runner = _Runner(config)
    for si, snr in enumerate(config.snrs):
        pt = runner.run(si, 0, config.trials, channel_sink)
        summary.points.append(pt)
        logger.info("snr %.2f dB: wer %.3g, %.2f expansions/bit", snr, pt.wer,
                    pt.mean_expansions_per_info_bit)
    return summary


def _fmt(x: float) -> str:
    return "inf" if x == math.inf else f"{x:.10f}"


def format_csv(points: Iterable[SnrPoint]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for pt in points:
        writer.writerow([_fmt(pt.snr_db), _fmt(pt.ebn0_db), pt.trials, _fmt(pt.wer), _fmt(pt.ber),
                         _fmt(pt.mean_expansions_per_info_bit), pt.max_expansions, pt.erasures])
    return out.getvalue()


def emit_csv(summary: TrialSummary | Sequence[SnrPoint], path: str | Path | TextIO) -> None:
    """Write one CSV row per SNR point (header only for an empty grid)."""
    points = summary.points if isinstance(summary, TrialSummary) else summary
    text = format_csv(points)
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text)


def read_csv(path: str | Path | TextIO, n: int, k: int) -> list[SnrPoint]:
    """Parse :func:`emit_csv` output back into counts.

    Rates are written with ten decimals, so counts are recovered exactly for
    any realistic trial count. Branch counts are not part of the file.
    """
    text = path.read() if hasattr(path, "read") else Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a simulation CSV (header mismatch)")
    points = []
    for row in rows[1:]:
        rec = dict(zip(CSV_HEADER, row))
        trials = int(rec["trials"])
        points.append(SnrPoint(
            snr_db=float(rec["snr_db"]), k=k, n=n, trials=trials,
            word_errors=round(float(rec["wer"]) * trials),
            bit_errors=round(float(rec["ber"]) * trials * k),
            expansions=round(float(rec["mean_expansions_per_info_bit"]) * trials * k),
            max_expansions=int(rec["max_expansions"]),
            erasures=int(rec["erasures"])))
    return points


def write_channel_dump(records: Iterable[tuple], stream: TextIO) -> None:
    """CSV of drawn taps: ``snr_index, trial, tap, re, im``.

    ``tap`` runs over every coefficient of the trial, period-major, so a
    channel that changes ``R`` times contributes ``R * P`` rows.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("snr_index", "trial", "tap", "re", "im"))
    for snr_index, trial, channel in records:
        for tap, h in enumerate(np.asarray(channel.taps).ravel()):
            writer.writerow((snr_index, trial, tap, repr(float(h.real)), repr(float(h.imag))))
