# oracle.py - ground truth for desk-scale checks: exhaustive l0 search and a dense reference IPA
import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import nnls

from interval_passing import (
    FLOODING, SEQUENTIAL, EdgeIntervals, IPAConfig, IterationSnapshot,
    MessageCounters, ReconstructionResult, decision_flags,
)
from signals import as_vector

logger = logging.getLogger(__name__)

MAX_ORACLE_N = 25
MAX_REFERENCE_N = 50
REAL_TOL = 1e-9


class OracleError(ValueError):
    """Instance too large for exhaustive search, or no solution within k_max"""


@dataclass
class OracleSolution:
    solutions: list
    min_support: int


def l0_exhaustive(graph, y, k_max=None, mode=None):
    """All minimum-support non-negative solutions of y = Ax, supports enumerated lexicographically.

    mode 'binary' only admits 0/1 signals; 'nonneg-real' solves each support
    by non-negative least squares. None picks binary for binary graphs with
    integer measurements.
    """
    if graph.n > MAX_ORACLE_N:
        raise OracleError(f"exhaustive search is capped at n={MAX_ORACLE_N}, got n={graph.n}")
    y = as_vector(y, graph.m, "measurement")
    k_max = graph.n if k_max is None else min(int(k_max), graph.n)
    if mode is None:
        mode = 'binary' if graph.is_binary and np.all(y == np.round(y)) else 'nonneg-real'

    A = graph.to_dense()
    for size in range(k_max + 1):
        found = []
        for support in combinations(range(graph.n), size):
            x = _solve_support(A, y, list(support), mode)
            if x is not None:
                found.append(x)
        if found:
            logger.debug("l0 oracle: %d solution(s) with support %d", len(found), size)
            return OracleSolution(found, size)

    raise OracleError(f"no non-negative solution with support <= {k_max}")


def _solve_support(A, y, support, mode):
    x = np.zeros(A.shape[1])
    if not support:
        ok = np.array_equal(y, np.zeros_like(y)) if mode == 'binary' else np.all(np.abs(y) <= REAL_TOL)
        return x if ok else None

    columns = A[:, support]
    if mode == 'binary':
        if np.array_equal(columns.sum(axis=1), y):
            x[support] = 1.0
            return x
        return None

    coef, _ = nnls(columns, y)
    # a zero coefficient means a smaller support, already enumerated
    if np.all(coef > 0) and np.all(np.abs(columns @ coef - y) <= REAL_TOL):
        x[support] = coef
        return x
    return None


# =========================================================================
# DENSE REFERENCE ENGINE
# =========================================================================

def reference_dense_ipa(dense_matrix, y, l_max, variant, schedule_seed=None,
                        config=None, trace=False):
    """Naive dense re-implementation of both engines for differential testing.

    Loops over the full matrix, recomputes every VN message on every visit
    (no update-counter gating) and draws schedules from
    default_rng(schedule_seed) exactly like run_sipa.
    """
    A = np.asarray(dense_matrix, dtype=np.float64)
    m, n = A.shape
    if n > MAX_REFERENCE_N:
        raise OracleError(f"reference engine is for n <= {MAX_REFERENCE_N}, got n={n}")
    y = as_vector(y, m, "measurement")
    if variant not in (FLOODING, SEQUENTIAL):
        raise ValueError(f"unknown variant {variant!r}")
    if l_max < 1:
        raise ValueError(f"l_max must be >= 1, got {l_max}")
    config = config or IPAConfig()

    binary = bool(np.all(A[A != 0] == 1.0))
    exact = config.exact if config.exact is not None else binary and bool(np.all(y == np.round(y)))
    rng = np.random.default_rng(schedule_seed)
    nbr = A > 0

    vc_lo = np.zeros((m, n))
    vc_hi = np.full((m, n), np.inf)
    cv_lo = np.zeros((m, n))
    cv_hi = np.zeros((m, n))
    vc_t = np.zeros((m, n), dtype=np.int64)
    cv_t = np.zeros((m, n), dtype=np.int64)
    for c in range(m):
        for v in range(n):
            if nbr[c, v]:
                cv_hi[c, v] = y[c] / A[c, v]
    scale = np.where(nbr, np.abs(cv_hi), 0.0).max(axis=0, initial=0.0)

    counters = MessageCounters()

    def vn_message(v, target, source_lo, source_hi):
        lo, hi = -np.inf, np.inf
        for c in range(m):
            if nbr[c, v] and not (config.extrinsic and c == target):
                lo = max(lo, source_lo[c, v])
                hi = min(hi, source_hi[c, v])
        if lo == -np.inf:
            lo = 0.0
        return lo * A[target, v], hi * A[target, v]

    def cn_message(c, v):
        sum_hi = 0.0
        sum_lo = 0.0
        for other in range(n):
            if nbr[c, other] and other != v:
                sum_hi += vc_hi[c, other]
                sum_lo += vc_lo[c, other]
        lo = (y[c] - sum_hi) / A[c, v]
        if lo < 0.0:
            lo = 0.0
        return lo, (y[c] - sum_lo) / A[c, v]

    def consolidated():
        lower = np.zeros(n)
        upper = np.full(n, np.inf)
        for v in range(n):
            col = nbr[:, v]
            if col.any():
                lower[v] = cv_lo[col, v].max()
                upper[v] = cv_hi[col, v].min()
        return lower, upper

    def snapshot(iteration, order):
        rows, cols = np.nonzero(nbr)
        intervals = EdgeIntervals(vc_lo[rows, cols], vc_hi[rows, cols],
                                  cv_lo[rows, cols], cv_hi[rows, cols],
                                  vc_t[rows, cols], cv_t[rows, cols])
        return IterationSnapshot(iteration, intervals, order)

    lower, upper = consolidated()
    decided, inconsistent = decision_flags(lower, upper, exact, config.rel_tol, scale)
    snapshots = [] if trace else None
    iterations_used = 0
    iteration = 1

    while iteration < l_max:
        order = None
        if variant == FLOODING:
            prev_lo, prev_hi = cv_lo.copy(), cv_hi.copy()
            for v in range(n):
                for c in range(m):
                    if nbr[c, v]:
                        vc_lo[c, v], vc_hi[c, v] = vn_message(v, c, prev_lo, prev_hi)
                        counters.vn_to_cn += 1
            for c in range(m):
                for v in range(n):
                    if nbr[c, v]:
                        cv_lo[c, v], cv_hi[c, v] = cn_message(c, v)
                        counters.cn_to_vn += 1
        else:
            order = rng.permutation(m)
            for t, c in enumerate(order, start=1):
                for v in range(n):
                    if not nbr[c, v]:
                        continue
                    for c2 in range(m):
                        if nbr[c2, v]:
                            vc_lo[c2, v], vc_hi[c2, v] = vn_message(v, c2, cv_lo, cv_hi)
                            vc_t[c2, v] = t
                            counters.vn_to_cn += 1
                for v in range(n):
                    if nbr[c, v]:
                        cv_lo[c, v], cv_hi[c, v] = cn_message(c, v)
                        cv_t[c, v] = t
                        counters.cn_to_vn += 1

        lower, upper = consolidated()
        decided, bad = decision_flags(lower, upper, exact, config.rel_tol, scale)
        inconsistent |= bad
        iterations_used = iteration
        if snapshots is not None:
            snapshots.append(snapshot(iteration, None if order is None else np.asarray(order)))
        if decided.all():
            break
        iteration += 1

    return ReconstructionResult(
        x_hat=lower,
        converged=decided,
        inconsistent=inconsistent,
        iterations_used=iterations_used,
        counters=counters,
        variant=variant,
        trace=snapshots,
        scale=scale,
    )

