"""Core domain types for haplotype assembly.

A haplotype is a +/-1 string over SNP sites, a membership vector assigns
each read to one chromosome of the pair, and a read matrix holds the sparse
+/-1 observations that survive the sequencing channel. Erased positions are
represented structurally (absent from a row), never as a third allele value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Haplotype",
    "MembershipVector",
    "ReadMatrix",
    "RecoveryResult",
    "UNCOVERED_COLUMN",
    "DISCONNECTED",
    "INCONSISTENT",
    "NON_CONVERGED",
    "encode",
    "project",
    "hamming_up_to_flip",
]


def _check_signs(values: tuple[int, ...], what: str) -> None:
    for v in values:
        if v != 1 and v != -1:
            raise ValueError(f"{what} entries must be +1 or -1, got {v!r}")


@dataclass(frozen=True)
class Haplotype:
    """A length-n sequence of +/-1 alleles; the other chromosome carries its negation."""

    alleles: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alleles", tuple(int(a) for a in self.alleles))
        if len(self.alleles) < 2:
            raise ValueError("haplotype needs at least 2 SNP sites")
        _check_signs(self.alleles, "haplotype")

    def __len__(self) -> int:
        return len(self.alleles)

    def __getitem__(self, j: int) -> int:
        return self.alleles[j]

    def flipped(self) -> "Haplotype":
        return Haplotype(tuple(-a for a in self.alleles))

    def to_array(self) -> np.ndarray:
        return np.array(self.alleles, dtype=np.int8)


@dataclass(frozen=True)
class MembershipVector:
    """Per-read chromosome labels: +1 if the read was sampled from h, -1 from -h."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(int(c) for c in self.members))
        if len(self.members) < 1:
            raise ValueError("membership vector needs at least 1 read")
        _check_signs(self.members, "membership")

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> int:
        return self.members[i]

    def flipped(self) -> "MembershipVector":
        return MembershipVector(tuple(-c for c in self.members))

    def to_array(self) -> np.ndarray:
        return np.array(self.members, dtype=np.int8)


@dataclass(frozen=True)
class ReadMatrix:
    """Sparse m x n observation matrix.

    Each row is a sorted tuple of (column, allele) pairs with 0-based,
    strictly increasing column indices and alleles in {+1, -1}. A position
    absent from its row is erased.
    """

    num_cols: int
    rows: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        if self.num_cols < 1:
            raise ValueError("num_cols must be >= 1")
        clean = []
        for i, row in enumerate(self.rows):
            entries = tuple((int(j), int(a)) for j, a in row)
            prev = -1
            for j, a in entries:
                if not 0 <= j < self.num_cols:
                    raise ValueError(f"row {i}: column {j} out of range [0, {self.num_cols})")
                if j <= prev:
                    raise ValueError(f"row {i}: columns must be strictly increasing at {j}")
                if a != 1 and a != -1:
                    raise ValueError(f"row {i}: allele must be +1 or -1, got {a!r}")
                prev = j
            clean.append(entries)
        object.__setattr__(self, "rows", tuple(clean))

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def entries(self) -> Iterator[tuple[int, int, int]]:
        """Yield (row, column, allele) for every stored observation."""
        for i, row in enumerate(self.rows):
            for j, a in row:
                yield i, j, a

    def num_entries(self) -> int:
        return sum(len(row) for row in self.rows)

    def to_dense(self, fill: int = 0) -> np.ndarray:
        """Dense int8 copy with `fill` at erased positions."""
        out = np.full((self.num_rows, self.num_cols), fill, dtype=np.int8)
        for i, j, a in self.entries():
            out[i, j] = a
        return out

    def negated(self) -> "ReadMatrix":
        return ReadMatrix(
            self.num_cols,
            tuple(tuple((j, -a) for j, a in row) for row in self.rows),
        )


# Failure reasons carried by RecoveryResult.
UNCOVERED_COLUMN = "uncovered_column"
DISCONNECTED = "disconnected"
INCONSISTENT = "inconsistent"
NON_CONVERGED = "non_converged"


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of a decoding attempt.

    On success `haplotype` is always present; `membership` is present for
    erasure decoding and absent for spectral partitioning unless inferred
    separately. On failure both estimates are None and `reason` is set.
    """

    haplotype: Haplotype | None
    membership: MembershipVector | None = None
    reason: str | None = None
    column: int | None = None  # offending column for uncovered-column failures
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.reason is None

    def describe(self) -> str:
        if self.ok:
            return "Success"
        if self.reason == UNCOVERED_COLUMN:
            return f"UncoveredColumn({self.column})"
        if self.reason == DISCONNECTED:
            return "DisconnectedComponent"
        if self.reason == INCONSISTENT:
            return "Inconsistent"
        if self.reason == NON_CONVERGED:
            return "NonConverged"
        return self.reason


def _unchecked_read_matrix(num_cols: int, rows: tuple) -> ReadMatrix:
    """Skip per-entry validation for rows the simulator already guarantees."""
    matrix = object.__new__(ReadMatrix)
    object.__setattr__(matrix, "num_cols", num_cols)
    object.__setattr__(matrix, "rows", rows)
    return matrix


def encode(h: Haplotype, c: MembershipVector) -> np.ndarray:
    """Rank-1 source matrix: entry (i, j) is c_i * h_j."""
    return np.outer(c.to_array(), h.to_array()).astype(np.int8)


def project(dense: np.ndarray, mask: Iterable[tuple[int, int]]) -> ReadMatrix:
    """Keep only the masked positions of a dense +/-1 matrix.

    Raises ValueError for out-of-bounds mask positions.
    """
    dense = np.asarray(dense)
    m, n = dense.shape
    per_row: list[list[tuple[int, int]]] = [[] for _ in range(m)]
    for i, j in mask:
        if not (0 <= i < m and 0 <= j < n):
            raise ValueError(f"mask position ({i}, {j}) outside {m}x{n} matrix")
        per_row[i].append((j, int(dense[i, j])))
    return ReadMatrix(n, tuple(tuple(sorted(row)) for row in per_row))


def hamming_up_to_flip(truth: Haplotype, estimate: Haplotype) -> tuple[int, int]:
    """Hamming distance modulo the global sign ambiguity.

    Returns (error_count, best_flip) where error_count = min over
    flip in {+1, -1} of the Hamming distance between truth and
    flip * estimate, and best_flip attains it. Ties break toward +1.
    """
    if len(truth) != len(estimate):
        raise ValueError(f"length mismatch: {len(truth)} vs {len(estimate)}")
    d_plus = sum(1 for a, b in zip(truth.alleles, estimate.alleles) if a != b)
    d_minus = len(truth) - d_plus
    if d_plus <= d_minus:
        return d_plus, 1
    return d_minus, -1
