# interval_passing.py - flooding (FIPA) and sequential (SIPA) interval passing
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

import _kernels
from signals import as_vector

logger = logging.getLogger(__name__)

FLOODING = 'fipa'
SEQUENTIAL = 'sipa'
VARIANTS = (FLOODING, SEQUENTIAL)
READ_MODES = ('latest', 'previous')


@dataclass
class IPAConfig:
    """Knobs shared by both engines.

    ``extrinsic`` drops the target CN from the VN max/min (experimental;
    the message rules take the max/min over every neighbor). ``exact``
    selects zero matching tolerance; None infers it from the instance
    (binary weights and integer measurements).
    """
    extrinsic: bool = False
    exact: bool | None = None
    rel_tol: float = 1e-9

    def resolve_exact(self, graph, y):
        if self.exact is not None:
            return self.exact
        return graph.is_binary and bool(np.all(y == np.round(y)))


@dataclass
class MessageCounters:
    cn_to_vn: int = 0
    vn_to_cn: int = 0

    def add(self, vn_to_cn, cn_to_vn):
        self.vn_to_cn += int(vn_to_cn)
        self.cn_to_vn += int(cn_to_vn)

    def copy(self):
        return MessageCounters(self.cn_to_vn, self.vn_to_cn)


@dataclass
class EdgeIntervals:
    """Latest stored bounds per directed edge, plus the scheduling time that produced them"""
    vn_to_cn_lower: np.ndarray
    vn_to_cn_upper: np.ndarray
    cn_to_vn_lower: np.ndarray
    cn_to_vn_upper: np.ndarray
    vn_to_cn_time: np.ndarray
    cn_to_vn_time: np.ndarray

    def copy(self):
        return EdgeIntervals(*(arr.copy() for arr in (
            self.vn_to_cn_lower, self.vn_to_cn_upper, self.cn_to_vn_lower,
            self.cn_to_vn_upper, self.vn_to_cn_time, self.cn_to_vn_time)))


@dataclass(frozen=True, eq=False)
class Schedule:
    order: np.ndarray
    time_of: np.ndarray

    @classmethod
    def from_order(cls, order):
        order = np.asarray(order, dtype=np.int64)
        m = order.size
        if not np.array_equal(np.sort(order), np.arange(m)):
            raise ValueError("schedule order must be a permutation of the CN indices")
        time_of = np.empty(m, dtype=np.int64)
        time_of[order] = np.arange(1, m + 1)
        return cls(order, time_of)

    def split_neighbors(self, graph, v, c):
        """(earlier, later) neighbors of VN v relative to the scheduling time of CN c"""
        t_j = self.time_of[c]
        neighbors = graph.vn_neighbors(v)
        times = self.time_of[neighbors]
        return neighbors[times < t_j], neighbors[times > t_j]


@dataclass
class MessageState:
    graph: object
    y: np.ndarray
    intervals: EdgeIntervals
    config: IPAConfig = field(default_factory=IPAConfig)
    iteration: int = 1
    schedule: Schedule | None = None
    update_count: np.ndarray | None = None
    counters: MessageCounters = field(default_factory=MessageCounters)


@dataclass
class IterationSnapshot:
    iteration: int
    intervals: EdgeIntervals
    order: np.ndarray | None = None


@dataclass
class ReconstructionResult:
    x_hat: np.ndarray
    converged: np.ndarray
    inconsistent: np.ndarray
    iterations_used: int
    counters: MessageCounters
    variant: str
    trace: list | None = None
    scale: np.ndarray | None = None

    @property
    def all_converged(self):
        return bool(self.converged.all())

    def recovered(self, x, rel_tol=0.0):
        """Per-coordinate mask: decided and equal to x within rel_tol * max(1, |x|, scale)"""
        x = np.asarray(getattr(x, 'values', x), dtype=np.float64)
        magnitude = np.maximum(1.0, np.abs(x))
        if self.scale is not None:
            magnitude = np.maximum(magnitude, self.scale)
        close = np.abs(self.x_hat - x) <= rel_tol * magnitude
        return self.converged & close

    def matches(self, x, rel_tol=0.0):
        return bool(self.recovered(x, rel_tol).all())


def init_messages(graph, y, config=None):
    """Initial state: mu_{c->v} = 0 and M_{c->v} = y(c)/A_{c,v}; VN->CN bounds not yet computed"""
    y = np.ascontiguousarray(as_vector(y, graph.m, "measurement"))
    E = graph.num_edges
    intervals = EdgeIntervals(
        vn_to_cn_lower=np.zeros(E),
        vn_to_cn_upper=np.full(E, np.inf),
        cn_to_vn_lower=np.zeros(E),
        cn_to_vn_upper=y[graph.edge_cn] / graph.weight,
        vn_to_cn_time=np.zeros(E, dtype=np.int64),
        cn_to_vn_time=np.zeros(E, dtype=np.int64),
    )
    return MessageState(graph=graph, y=y, intervals=intervals,
                        config=config or IPAConfig(),
                        update_count=np.zeros(graph.n, dtype=np.int64))


def _skip_edge(state, e):
    return e if state.config.extrinsic else -1


def _vn_update(state, v, c):
    g = state.graph
    iv = state.intervals
    e = g.edge_id(c, v)
    lo, hi = _kernels.vn_bounds(iv.cn_to_vn_lower, iv.cn_to_vn_upper,
                                g.vn_ptr, g.vn_edges, v, _skip_edge(state, e))
    return lo * g.weight[e], hi * g.weight[e]


def _cn_update(state, c, v):
    g = state.graph
    iv = state.intervals
    e = g.edge_id(c, v)
    return _kernels.cn_bounds(iv.vn_to_cn_lower, iv.vn_to_cn_upper,
                              g.cn_ptr, g.cn_edges, g.weight, state.y[c], c, e)


def flooding_vn_update(state, v, c):
    """(mu, M) from VN v to CN c: max/min over all stored CN->VN bounds at v, times A[c,v]"""
    return _vn_update(state, v, c)


def flooding_cn_update(state, c, v):
    """(mu, M) from CN c to VN v out of the other VN->CN bounds of c; mu clipped at 0"""
    return _cn_update(state, c, v)


def _check_time(state, t_j):
    if not 1 <= t_j <= state.graph.m:
        raise ValueError(f"scheduling time {t_j} outside 1..{state.graph.m} (partial scheduling is not supported)")


def sequential_vn_update(state, v, c_target, t_j):
    """SIPA VN rule at time t_j.

    The single stored buffer already holds current-iteration messages from
    CNs scheduled before t_j and last-iteration messages from c_target and
    the CNs still to come, so this is the max/min over the stored values.
    """
    _check_time(state, t_j)
    return _vn_update(state, v, c_target)


def sequential_cn_update(state, c, v, t_j):
    """SIPA CN rule at time t_j over the latest stored VN->CN bounds"""
    _check_time(state, t_j)
    return _cn_update(state, c, v)


def consolidate(state, v):
    """(max of stored mu_{c->v}, min of stored M_{c->v}) over the neighbors of v"""
    g = state.graph
    iv = state.intervals
    return _kernels.vn_bounds(iv.cn_to_vn_lower, iv.cn_to_vn_upper, g.vn_ptr, g.vn_edges, v, -1)


def bound_scale(graph, y):
    """Per-VN magnitude of the terms its bounds are built from: max over neighbors of y(c)/A[c,v]

    Isolated VNs get 0.
    """
    y = np.asarray(y, dtype=np.float64)
    scale = np.zeros(graph.n)
    np.maximum.at(scale, graph.edge_vn, np.abs(y[graph.edge_cn]) / graph.weight)
    return scale


def decision_flags(lower, upper, exact, rel_tol=1e-9, scale=None):
    """(decided, inconsistent) masks for consolidated intervals.

    Outside exact mode the tolerance is rel_tol * max(1, |upper|, scale),
    with ``scale`` as returned by bound_scale.
    """
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    finite = np.isfinite(upper)
    if exact:
        eps = np.zeros_like(upper)
    else:
        magnitude = np.maximum(1.0, np.where(finite, np.abs(upper), 1.0))
        if scale is not None:
            magnitude = np.maximum(magnitude, scale)
        eps = rel_tol * magnitude
    gap = np.full_like(upper, np.inf)
    np.subtract(upper, lower, out=gap, where=finite)
    decided = finite & (np.abs(gap) <= eps)
    inconsistent = finite & (gap < -eps)
    return decided, inconsistent


def make_schedule(rng, m):
    """Uniformly random CN order for one iteration"""
    if m < 1:
        raise ValueError("need at least one CN to schedule")
    return Schedule.from_order(rng.permutation(m))


# =========================================================================
# DRIVERS
# =========================================================================

def _flooding_sweep(state):
    g = state.graph
    iv = state.intervals
    vn_msgs, cn_msgs = _kernels.flooding_sweep(
        g.vn_ptr, g.vn_edges, g.cn_ptr, g.cn_edges, g.weight, state.y,
        iv.vn_to_cn_lower, iv.vn_to_cn_upper, iv.cn_to_vn_lower, iv.cn_to_vn_upper,
        state.config.extrinsic)
    state.counters.add(vn_msgs, cn_msgs)


def _sequential_sweep(state, rng, reads):
    g = state.graph
    iv = state.intervals
    state.schedule = make_schedule(rng, g.m)

    if reads == 'previous':
        lo_out = iv.cn_to_vn_lower.copy()
        hi_out = iv.cn_to_vn_upper.copy()
    else:
        lo_out = iv.cn_to_vn_lower
        hi_out = iv.cn_to_vn_upper

    vn_msgs, cn_msgs = _kernels.sequential_sweep(
        state.schedule.order, g.vn_ptr, g.vn_edges, g.cn_ptr, g.cn_edges, g.edge_vn,
        g.weight, state.y, iv.vn_to_cn_lower, iv.vn_to_cn_upper,
        iv.cn_to_vn_lower, iv.cn_to_vn_upper, lo_out, hi_out,
        iv.vn_to_cn_time, iv.cn_to_vn_time, state.update_count, state.config.extrinsic)

    if reads == 'previous':
        iv.cn_to_vn_lower[:] = lo_out
        iv.cn_to_vn_upper[:] = hi_out
    state.counters.add(vn_msgs, cn_msgs)


def _reconstruct(graph, y, l_max, variant, sweep, config, trace):
    if l_max < 1:
        raise ValueError(f"l_max must be >= 1, got {l_max}")
    state = init_messages(graph, y, config)
    exact = state.config.resolve_exact(graph, state.y)
    scale = bound_scale(graph, state.y)
    snapshots = [] if trace else None

    iv = state.intervals
    lower, upper = _kernels.consolidate_all(iv.cn_to_vn_lower, iv.cn_to_vn_upper,
                                            graph.vn_ptr, graph.vn_edges)
    decided, inconsistent = decision_flags(lower, upper, exact, state.config.rel_tol, scale)
    iterations_used = 0

    while state.iteration < l_max:
        sweep(state)
        lower, upper = _kernels.consolidate_all(iv.cn_to_vn_lower, iv.cn_to_vn_upper,
                                                graph.vn_ptr, graph.vn_edges)
        decided, bad = decision_flags(lower, upper, exact, state.config.rel_tol, scale)
        inconsistent |= bad
        iterations_used = state.iteration

        if snapshots is not None:
            order = None if state.schedule is None else state.schedule.order.copy()
            snapshots.append(IterationSnapshot(state.iteration, iv.copy(), order))
        if decided.all():
            break
        state.iteration += 1

    logger.debug("%s finished after %d iterations, %d/%d decided",
                 variant, iterations_used, int(decided.sum()), graph.n)
    return ReconstructionResult(
        x_hat=lower.copy(),
        converged=decided,
        inconsistent=inconsistent,
        iterations_used=iterations_used,
        counters=state.counters.copy(),
        variant=variant,
        trace=snapshots,
        scale=scale,
    )


def run_fipa(graph, y, l_max=50, config=None, trace=False):
    """Flooding interval passing: all VN updates, then all CN updates, per iteration"""
    return _reconstruct(graph, y, l_max, FLOODING, _flooding_sweep, config, trace)


def run_sipa(graph, y, l_max=50, rng=None, config=None, trace=False, reads='latest'):
    """Sequential interval passing over a fresh random CN order every iteration.

    ``reads='previous'`` makes every update read last iteration's CN->VN
    bounds only; its per-iteration bounds then coincide with run_fipa.
    """
    if reads not in READ_MODES:
        raise ValueError(f"reads must be one of {READ_MODES}")
    rng = np.random.default_rng(rng)
    return _reconstruct(graph, y, l_max, SEQUENTIAL,
                        lambda state: _sequential_sweep(state, rng, reads), config, trace)


def run_variant(variant, graph, y, l_max=50, rng=None, config=None, trace=False):
    if variant == FLOODING:
        return run_fipa(graph, y, l_max, config=config, trace=trace)
    if variant == SEQUENTIAL:
        return run_sipa(graph, y, l_max, rng=rng, config=config, trace=trace)
    raise ValueError(f"unknown variant {variant!r}")


# =========================================================================
# TRACES
# =========================================================================

def trace_frame(trace, graph):
    """One record per (iteration, edge, direction): iteration, t, edge, cn, vn, direction, mu, M"""
    frames = []
    edge = np.arange(graph.num_edges)
    for snap in trace:
        iv = snap.intervals
        for direction, lo, hi, t in (
                ('vn_to_cn', iv.vn_to_cn_lower, iv.vn_to_cn_upper, iv.vn_to_cn_time),
                ('cn_to_vn', iv.cn_to_vn_lower, iv.cn_to_vn_upper, iv.cn_to_vn_time)):
            frames.append(pd.DataFrame({
                'iteration': snap.iteration,
                't': t,
                'edge': edge,
                'cn': graph.edge_cn,
                'vn': graph.edge_vn,
                'direction': direction,
                'mu': lo,
                'M': hi,
            }))
    if not frames:
        return pd.DataFrame(columns=['iteration', 't', 'edge', 'cn', 'vn', 'direction', 'mu', 'M'])
    return pd.concat(frames, ignore_index=True)


def write_trace(trace, graph, path):
    """Newline-delimited JSON trace records"""
    trace_frame(trace, graph).to_json(path, orient='records', lines=True)
