"""Seed-propagation decoder for error-free read matrices.

Starting from an arbitrary observed entry of the first read, memberships
and SNP values propagate across reads that share observed columns. The
original formulation repeatedly deletes resolved rows; the propagation here
is a breadth-first walk over the row/column incidence structure, which
visits the same entries and reaches the same success/failure verdicts in
O(m*k + n) time.

Failure classification: an uncovered column is reported before a
disconnected split when both hold. On noisy input the walk keeps going by
default and each column is settled by the majority of propagated votes
(ties to +1) -- a practical extension with no recovery guarantee; pass
strict=True to abort at the first conflicting entry instead.
"""

from __future__ import annotations

from collections import deque

from .model import (
    DISCONNECTED,
    INCONSISTENT,
    UNCOVERED_COLUMN,
    Haplotype,
    MembershipVector,
    ReadMatrix,
    RecoveryResult,
)

__all__ = ["decode", "overlap_components"]


class _DisjointSet:
    """Union-find with path compression over a fixed element range."""

    def __init__(self, size: int) -> None:
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def overlap_components(matrix: ReadMatrix) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Connected components of the read/column incidence structure.

    Two reads are connected iff they share an observed column. Returns one
    (row_indices, col_indices) pair per component, both sorted; columns with
    no observations form singleton components with an empty row tuple.
    Components are ordered by their smallest member (rows first).
    """
    m, n = matrix.num_rows, matrix.num_cols
    ds = _DisjointSet(m + n)
    for i, j, _ in matrix.entries():
        ds.union(i, m + j)
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for i in range(m):
        groups.setdefault(ds.find(i), ([], []))[0].append(i)
    for j in range(n):
        groups.setdefault(ds.find(m + j), ([], []))[1].append(j)
    components = [
        (tuple(rows), tuple(cols)) for rows, cols in groups.values()
    ]
    components.sort(key=lambda rc: (rc[0][0] if rc[0] else m + rc[1][0]))
    return components


def decode(matrix: ReadMatrix, strict: bool = False) -> RecoveryResult:
    """Recover (h, c) from an observation matrix by seed propagation.

    The first read's membership is fixed to +1, so estimates are recovered
    up to a global sign flip. On success every stored entry of an error-free
    input satisfies r_ij = c_i * h_j.

    strict=False (default): conflicting entries are tolerated and each
    column takes the sign of the sum of propagated votes, ties to +1.
    strict=True: the first conflict aborts with an Inconsistent failure.
    """
    m, n = matrix.num_rows, matrix.num_cols
    if m == 0:
        raise ValueError("cannot decode an empty read matrix")
    for i, row in enumerate(matrix.rows):
        if not row:
            raise ValueError(f"row {i} has no observations")

    cols_to_rows: list[list[int]] = [[] for _ in range(n)]
    for i, j, _ in matrix.entries():
        cols_to_rows[j].append(i)
    for j in range(n):
        if not cols_to_rows[j]:
            return RecoveryResult(None, None, reason=UNCOVERED_COLUMN, column=j)

    row_value = {i: dict(row) for i, row in enumerate(matrix.rows)}
    c = [0] * m  # 0 = not yet reached
    h = [0] * n
    votes = [0] * n
    c[0] = 1
    rows_seen = 1
    cols_seen = 0
    queue: deque[tuple[bool, int]] = deque([(True, 0)])
    while queue:
        is_row, idx = queue.popleft()
        if is_row:
            # each row is dequeued once, so every entry votes exactly once
            for j, r in matrix.rows[idx]:
                implied = c[idx] * r
                votes[j] += implied
                if h[j] == 0:
                    h[j] = implied
                    cols_seen += 1
                    queue.append((False, j))
                elif h[j] != implied and strict:
                    return RecoveryResult(None, None, reason=INCONSISTENT)
        else:
            for i in cols_to_rows[idx]:
                implied = row_value[i][idx] * h[idx]
                if c[i] == 0:
                    c[i] = implied
                    rows_seen += 1
                    queue.append((True, i))
                elif c[i] != implied and strict:
                    return RecoveryResult(None, None, reason=INCONSISTENT)

    if rows_seen < m or cols_seen < n:
        return RecoveryResult(None, None, reason=DISCONNECTED)

    if not strict:
        h = [1 if v >= 0 else -1 for v in votes]
    estimate = Haplotype(tuple(h))
    membership = MembershipVector(tuple(c))
    mismatches = sum(1 for i, j, r in matrix.entries() if c[i] * h[j] != r)
    return RecoveryResult(estimate, membership, meta={"mismatches": mismatches})
