"""Paired-end sequencing channel: per-row erasures plus i.i.d. sign flips.

Each read keeps exactly k surviving positions (uniform over the C(n, k)
column subsets, independent across rows) and every surviving observation is
flipped independently with probability p. Also provides closed-form
probabilities for the two failure events of error-free decoding: an
uncovered column, and a split of reads/columns into two groups with no
bridging observation. Both formulas are specific to k=2.

RNG: Philox (counter-based, 64-bit seeded). Pinned so that a (seed, trial)
pair reproduces bit-identical draws regardless of execution order; do not
swap generators silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Haplotype, MembershipVector, ReadMatrix, _unchecked_read_matrix

__all__ = [
    "ChannelConfig",
    "NoiseMatrix",
    "make_rng",
    "sample_mask",
    "transmit",
    "prob_uncovered_column",
    "prob_disconnected_split",
]


@dataclass(frozen=True)
class ChannelConfig:
    """Channel parameters: n sites, m reads, k observations per read, flip prob p."""

    n: int
    m: int
    k: int = 2
    p: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not 2 <= self.k <= self.n:
            raise ValueError(f"k must be in [2, n], got k={self.k}, n={self.n}")
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"p must be in [0, 0.5], got {self.p}")


@dataclass(frozen=True)
class NoiseMatrix:
    """The set of (row, col) positions whose observed sign was inverted."""

    flips: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "flips", frozenset((int(i), int(j)) for i, j in self.flips))

    def __len__(self) -> int:
        return len(self.flips)

    def __contains__(self, pos: tuple[int, int]) -> bool:
        return pos in self.flips


def make_rng(seed: int) -> np.random.Generator:
    """The pinned channel generator for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _draw_columns(cfg: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    """(m, k) array of sorted surviving columns, one uniform k-subset per row.

    k=2 avoids the per-row choice() loop: the second column is drawn
    uniformly from the n-1 remaining slots, which is exactly uniform over
    unordered pairs.
    """
    if cfg.k == 2:
        first = rng.integers(0, cfg.n, size=cfg.m)
        second = rng.integers(0, cfg.n - 1, size=cfg.m)
        second = second + (second >= first)
        cols = np.stack([first, second], axis=1)
    elif cfg.k == cfg.n:
        cols = np.tile(np.arange(cfg.n), (cfg.m, 1))
    else:
        keys = rng.random((cfg.m, cfg.n))
        cols = np.argpartition(keys, cfg.k, axis=1)[:, : cfg.k]
    return np.sort(cols, axis=1)


def sample_mask(cfg: ChannelConfig, rng: np.random.Generator) -> set[tuple[int, int]]:
    """Draw the surviving positions: k distinct uniform columns per row."""
    cols = _draw_columns(cfg, rng)
    return {(i, int(j)) for i in range(cfg.m) for j in cols[i]}


def transmit(
    h: Haplotype, c: MembershipVector, cfg: ChannelConfig
) -> tuple[ReadMatrix, NoiseMatrix]:
    """Push the rank-1 source through the channel.

    Returns the observed matrix and the exact set of flipped positions.
    Deterministic given cfg.seed, with the mask drawn exactly as
    sample_mask draws it. Flip decisions use one uniform per stored entry,
    so memory stays O(m*k) even for large n.
    """
    if len(h) != cfg.n or len(c) != cfg.m:
        raise ValueError(
            f"shape mismatch: h has {len(h)} sites, c has {len(c)} reads, "
            f"config expects n={cfg.n}, m={cfg.m}"
        )
    rng = make_rng(cfg.seed)
    cols = _draw_columns(cfg, rng)
    values = c.to_array()[:, None] * h.to_array()[cols]
    if cfg.p > 0.0:
        flip_here = rng.random((cfg.m, cfg.k)) < cfg.p
        values = np.where(flip_here, -values, values)
        flips = frozenset(
            (int(i), int(cols[i, t])) for i, t in np.argwhere(flip_here)
        )
    else:
        flips = frozenset()
    rows = tuple(
        tuple((int(j), int(v)) for j, v in zip(cols[i], values[i])) for i in range(cfg.m)
    )
    return _unchecked_read_matrix(cfg.n, rows), NoiseMatrix(flips)


def _log_comb(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _log_sum_exp(terms: list[float]) -> float:
    top = max(terms)
    if top == -math.inf:
        return -math.inf
    # compensated accumulation of exp(t - top)
    acc = 0.0
    err = 0.0
    for t in terms:
        x = math.exp(t - top)
        y = x - err
        s = acc + y
        err = (s - acc) - y
        acc = s
    return top + math.log(acc)


def prob_uncovered_column(n: int, m: int) -> float:
    """Probability that some column receives no observation (k=2 reads).

    Evaluates sum_{i=1}^{n-2} C(n,i) * [C(n-i,2)/C(n,2)]^m in log space and
    clamps to [0, 1]. For n > 3 the sum lacks inclusion-exclusion
    alternation, so treat it as a union-style upper estimate there; at n=3
    it is exact.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if m < 1:
        raise ValueError("m must be >= 1")
    log_pairs = _log_comb(n, 2)
    terms = []
    for i in range(1, n - 1):
        terms.append(_log_comb(n, i) + m * (_log_comb(n - i, 2) - log_pairs))
    value = math.exp(_log_sum_exp(terms))
    return min(1.0, max(0.0, value))


def prob_disconnected_split(n: int, m: int, u: int, v: int) -> float:
    """Probability that u reads sample only a fixed-size-v column subset
    while the remaining m-u reads sample only its complement (k=2 reads).

    Evaluates C(n,v) C(m,u) C(v,2)^u C(n-v,2)^(m-u) / C(n,2)^m in log
    space; clamped to [0, 1].
    """
    if not 1 <= u <= m - 1:
        raise ValueError(f"u must be in [1, m-1], got u={u}, m={m}")
    if not 2 <= v <= n - 2:
        raise ValueError(f"v must be in [2, n-2], got v={v}, n={n}")
    log_pairs = _log_comb(n, 2)
    log_value = (
        _log_comb(n, v)
        + _log_comb(m, u)
        + u * _log_comb(v, 2)
        + (m - u) * _log_comb(n - v, 2)
        - m * log_pairs
    )
    return min(1.0, max(0.0, math.exp(log_value)))
