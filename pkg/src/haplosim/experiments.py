"""Monte Carlo sweeps over (n, m-rule, p, k) grids for both decoders.

Each grid cell runs `trials` independent draws. Trial randomness is keyed
by SeedSequence(base_seed, spawn_key=(cell_index, trial_index)), so results
are bit-identical regardless of thread count or scheduling; per-trial wall
times are the only nondeterministic output and can be disabled for
byte-reproducible CSVs.

A failed trial (erasure-decoding failure or eigen non-convergence) counts
as chance-level: SNP error fraction 0.5 and no exact recovery.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import erasure, spectral
from .channel import ChannelConfig, transmit
from .fragio import load_fragments, save_fragments  # re-exported file I/O
from .model import Haplotype, MembershipVector, hamming_up_to_flip
from .spectral import NonConvergedError, SpectralConfig

__all__ = [
    "Cell",
    "ExperimentConfig",
    "CellSummary",
    "run",
    "emit_csv",
    "read_csv",
    "wilson_interval",
    "preset",
    "parse_config_text",
    "load_fragments",
    "save_fragments",
]

M_RULES = ("linear", "nlogn", "coverage")
DECODERS = ("ed", "sp", "both")

CSV_HEADER = (
    "n,m_rule,kappa_or_c,p,k,decoder,trials,exact_rate,exact_ci_lo,exact_ci_hi,"
    "mean_err_frac,failure_rate,mean_ms"
)


@dataclass(frozen=True)
class Cell:
    """One grid point: problem size, read-count rule, noise level, decoder."""

    n: int
    m_rule: str
    kappa_or_c: float
    p: float
    k: int = 2
    decoder: str = "both"

    def validate(self) -> list[str]:
        problems = []
        if self.m_rule not in M_RULES:
            problems.append(f"m_rule must be one of {M_RULES}, got {self.m_rule!r}")
        if self.decoder not in DECODERS:
            problems.append(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.kappa_or_c <= 0:
            problems.append(f"kappa_or_c must be positive, got {self.kappa_or_c}")
        try:
            ChannelConfig(n=self.n, m=max(1, self.reads()), k=self.k, p=self.p)
        except ValueError as exc:
            problems.append(str(exc))
        return problems

    def reads(self) -> int:
        """Read count implied by the rule (coverage c means c*n/k reads)."""
        if self.m_rule == "linear":
            raw = self.kappa_or_c * self.n
        elif self.m_rule == "nlogn":
            raw = self.kappa_or_c * self.n * math.log(self.n)
        elif self.m_rule == "coverage":
            raw = self.kappa_or_c * self.n / self.k
        else:
            raise ValueError(f"unknown m_rule {self.m_rule!r}")
        return max(1, math.ceil(raw))

    def decoders(self) -> tuple[str, ...]:
        return ("ed", "sp") if self.decoder == "both" else (self.decoder,)


@dataclass(frozen=True)
class ExperimentConfig:
    cells: tuple[Cell, ...]
    trials: int = 100
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.cells:
            raise ValueError("experiment grid is empty")
        problems = []
        for index, cell in enumerate(self.cells):
            for msg in cell.validate():
                problems.append(f"cell {index} ({cell.n}, {cell.m_rule}, p={cell.p}): {msg}")
        if problems:
            raise ValueError("invalid experiment config:\n" + "\n".join(problems))


@dataclass(frozen=True)
class CellSummary:
    """Aggregated trial statistics for one (cell, decoder) pair."""

    n: int
    m_rule: str
    kappa_or_c: float
    p: float
    k: int
    decoder: str
    trials: int
    exact_rate: float
    exact_ci_lo: float
    exact_ci_hi: float
    mean_err_frac: float
    failure_rate: float
    mean_ms: float


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval; always brackets the point estimate."""
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    # the score interval contains phat mathematically; guard the roundoff
    return min(max(0.0, center - half), phat), max(min(1.0, center + half), phat)


def _run_trial(
    cell: Cell, cell_index: int, trial_index: int, base_seed: int, measure_time: bool
) -> dict[str, tuple[bool, float, bool, float]]:
    """One draw: returns per-decoder (exact, err_frac, failed, millis)."""
    root = np.random.SeedSequence(entropy=base_seed, spawn_key=(cell_index, trial_index))
    truth_ss, channel_ss, solver_ss = root.spawn(3)
    truth_rng = np.random.Generator(np.random.Philox(truth_ss))
    m = cell.reads()
    h = Haplotype(tuple(truth_rng.integers(0, 2, size=cell.n) * 2 - 1))
    c = MembershipVector(tuple(truth_rng.integers(0, 2, size=m) * 2 - 1))
    channel_seed = int(channel_ss.generate_state(1, dtype=np.uint64)[0])
    solver_seed = int(solver_ss.generate_state(1, dtype=np.uint64)[0])
    observed, _ = transmit(h, c, ChannelConfig(n=cell.n, m=m, k=cell.k, p=cell.p, seed=channel_seed))

    out: dict[str, tuple[bool, float, bool, float]] = {}
    for name in cell.decoders():
        start = time.perf_counter() if measure_time else 0.0
        failed = False
        estimate = None
        if name == "ed":
            result = erasure.decode(observed)
            if result.ok:
                estimate = result.haplotype
            else:
                failed = True
        else:
            try:
                result = spectral.decode(observed, SpectralConfig(seed=solver_seed))
                estimate = result.haplotype
            except NonConvergedError:
                failed = True
        millis = (time.perf_counter() - start) * 1e3 if measure_time else 0.0
        if estimate is None:
            out[name] = (False, 0.5, failed, millis)
        else:
            errors, _flip = hamming_up_to_flip(h, estimate)
            out[name] = (errors == 0, errors / cell.n, failed, millis)
    return out


def run(
    config: ExperimentConfig, threads: int = 1, measure_time: bool = True
) -> list[CellSummary]:
    """Execute the sweep; summaries are deterministic given base_seed.

    With measure_time=False the wall-time column is fixed at 0.0, which
    makes the emitted CSV byte-identical across reruns and thread counts.
    """
    summaries: list[CellSummary] = []
    for cell_index, cell in enumerate(config.cells):
        task = partial(
            _run_trial, cell, cell_index, base_seed=config.base_seed, measure_time=measure_time
        )
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                trials = list(pool.map(task, range(config.trials)))
        else:
            trials = [task(t) for t in range(config.trials)]
        for name in cell.decoders():
            rows = [trial[name] for trial in trials]  # trial order fixed by index
            exact = sum(1 for r in rows if r[0])
            ci_lo, ci_hi = wilson_interval(exact, config.trials)
            summaries.append(
                CellSummary(
                    n=cell.n,
                    m_rule=cell.m_rule,
                    kappa_or_c=cell.kappa_or_c,
                    p=cell.p,
                    k=cell.k,
                    decoder=name,
                    trials=config.trials,
                    exact_rate=exact / config.trials,
                    exact_ci_lo=ci_lo,
                    exact_ci_hi=ci_hi,
                    mean_err_frac=float(np.mean([r[1] for r in rows])),
                    failure_rate=sum(1 for r in rows if r[2]) / config.trials,
                    mean_ms=float(np.mean([r[3] for r in rows])) if measure_time else 0.0,
                )
            )
    return summaries


def _format_number(value) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))  # shortest round-trip decimal


def emit_csv(summaries: list[CellSummary], path) -> None:
    lines = [CSV_HEADER]
    for s in summaries:
        lines.append(
            ",".join(
                [
                    str(s.n),
                    s.m_rule,
                    _format_number(s.kappa_or_c),
                    _format_number(s.p),
                    str(s.k),
                    s.decoder,
                    str(s.trials),
                    _format_number(s.exact_rate),
                    _format_number(s.exact_ci_lo),
                    _format_number(s.exact_ci_hi),
                    _format_number(s.mean_err_frac),
                    _format_number(s.failure_rate),
                    _format_number(s.mean_ms),
                ]
            )
        )
    from pathlib import Path

    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> list[CellSummary]:
    from pathlib import Path

    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header in {path}")
    out = []
    for line in lines[1:]:
        f = line.split(",")
        out.append(
            CellSummary(
                n=int(f[0]),
                m_rule=f[1],
                kappa_or_c=float(f[2]),
                p=float(f[3]),
                k=int(f[4]),
                decoder=f[5],
                trials=int(f[6]),
                exact_rate=float(f[7]),
                exact_ci_lo=float(f[8]),
                exact_ci_hi=float(f[9]),
                mean_err_frac=float(f[10]),
                failure_rate=float(f[11]),
                mean_ms=float(f[12]),
            )
        )
    return out


def preset(name: str, trials: int | None = None, base_seed: int = 0) -> ExperimentConfig:
    """Canned sweeps: 'fig3' (m-scale comparison at p=0.1), 'fig4'
    (noise sweep at m = 2 n ln n), 'table1' (coverage/noise grid at n=100)."""
    if name == "fig3":
        cells = tuple(
            Cell(n=n, m_rule=rule, kappa_or_c=2.0, p=0.1)
            for n in (100, 350, 700)
            for rule in ("linear", "nlogn")
        )
        default_trials = 50
    elif name == "fig4":
        cells = tuple(
            Cell(n=100, m_rule="nlogn", kappa_or_c=2.0, p=p) for p in (0.0, 0.05, 0.1, 0.2)
        )
        default_trials = 50
    elif name == "table1":
        # the published benchmark's fragments span several SNPs, so this
        # analogue uses 5-SNP reads rather than the theoretical k=2
        cells = tuple(
            Cell(n=100, m_rule="coverage", kappa_or_c=c, p=p, k=5)
            for p in (0.0, 0.1, 0.2)
            for c in (3.0, 5.0, 8.0, 10.0)
        )
        default_trials = 100
    else:
        raise ValueError(f"unknown preset {name!r}; expected fig3, fig4, or table1")
    return ExperimentConfig(cells, trials=trials or default_trials, base_seed=base_seed)


_CELL_FIELDS = {
    "n": int,
    "m_rule": str,
    "kappa_or_c": float,
    "p": float,
    "k": int,
    "decoder": str,
}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the flat key-value sweep format.

    Global `trials` and `base_seed` assignments come first; each `[cell]`
    line opens a block of `key = value` pairs (n, m_rule, kappa_or_c, p,
    and optionally k, decoder). All problems are reported together.
    """
    trials = 100
    base_seed = 0
    cells: list[dict] = []
    current: dict | None = None
    problems: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[cell]":
            current = {}
            cells.append(current)
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            problems.append(f"line {lineno}: expected 'key = value', got {raw!r}")
            continue
        if current is None:
            if key == "trials":
                trials = int(value)
            elif key == "base_seed":
                base_seed = int(value)
            else:
                problems.append(f"line {lineno}: unknown global key {key!r}")
        else:
            if key not in _CELL_FIELDS:
                problems.append(f"line {lineno}: unknown cell key {key!r}")
                continue
            try:
                current[key] = _CELL_FIELDS[key](value)
            except ValueError:
                problems.append(f"line {lineno}: bad value for {key!r}: {value!r}")
    parsed: list[Cell] = []
    for index, fields in enumerate(cells):
        missing = {"n", "m_rule", "kappa_or_c", "p"} - fields.keys()
        if missing:
            problems.append(f"cell {index}: missing keys {sorted(missing)}")
            continue
        parsed.append(Cell(**fields))
    if problems:
        raise ValueError("invalid experiment config:\n" + "\n".join(problems))
    return ExperimentConfig(tuple(parsed), trials=trials, base_seed=base_seed)
