"""
Minimum-weight perfect matching on a square cost matrix.

Shortest augmenting paths with row and column potentials, one row at a
time, with the inner column scan done in numpy. After the solve, the dual
potentials mark every edge that some optimal matching may use; walking
the columns in order and pulling the smallest such row into each column
yields the lexicographically smallest optimal matching.
"""

import logging

import numpy as np

from datashare.config import config
from datashare.errors import SizeLimitError
from datashare.mechanism.models import AssignmentProblem, AssignmentResult

logger = logging.getLogger(__name__)


def _solve(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = a.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    # p[j]: row (1-based) assigned to column j; column 0 is the virtual start
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            candidates = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(candidates)) + 1
            delta = candidates[j1 - 1]
            columns = np.flatnonzero(used)
            u[p[columns]] += delta
            v[columns] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    return p[1:] - 1, u[1:], v[1:]


def _lexicographic(order: np.ndarray, tight: np.ndarray) -> np.ndarray:
    n = order.size
    owner = order.copy()
    slot_of = np.empty(n, dtype=np.int64)
    slot_of[owner] = np.arange(n)

    for t in range(n):
        displaced = int(owner[t])
        if not tight[:displaced, t].any():
            continue
        # alternating search over tight edges into the columns after t
        via = np.full(n, -1, dtype=np.int64)
        reached = np.zeros(n, dtype=bool)
        reached[displaced] = True
        stack = [displaced]
        while stack:
            row = stack.pop()
            for column in np.flatnonzero(tight[row, t + 1 :]) + t + 1:
                if via[column] != -1:
                    continue
                via[column] = row
                nxt = int(owner[column])
                if not reached[nxt]:
                    reached[nxt] = True
                    stack.append(nxt)
        rows = np.flatnonzero(tight[:displaced, t] & reached[:displaced])
        if rows.size == 0:
            continue
        chosen = int(rows[0])
        column = int(slot_of[chosen])
        while True:
            row = int(via[column])
            previous = int(slot_of[row])
            owner[column] = row
            slot_of[row] = column
            if row == displaced:
                break
            column = previous
        owner[t] = chosen
        slot_of[chosen] = t
    return owner


def min_cost_assignment(problem: AssignmentProblem) -> AssignmentResult:
    n = problem.n
    if n > config.mechanism.assignment_max_n:
        raise SizeLimitError(
            f"Assignment solver is limited to n <= {config.mechanism.assignment_max_n}"
        )
    a = problem.weights
    order, u, v = _solve(a)
    scale = max(1.0, float(np.abs(a).max()))
    tight = a - u[:, None] - v[None, :] <= config.mechanism.tolerance * scale
    order = _lexicographic(order, tight)
    total = float(a[order, np.arange(n)].sum())
    logger.debug("Assignment of size %d solved with weight %s", n, total)
    return AssignmentResult(matching=tuple(int(row) for row in order), total_weight=total)
