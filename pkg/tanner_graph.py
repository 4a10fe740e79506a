# tanner_graph.py - LDPC measurement matrices as Tanner graphs
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from tenacity import RetryError, Retrying, after_log, retry_if_exception_type, stop_after_attempt

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 1000
FIELD_MODES = ('binary', 'nonneg-real')
WEIGHTS_MARKER = 'WEIGHTS'


class MatrixSpecError(ValueError):
    """Raised when a MatrixSpec cannot describe a (gamma, rho)-regular matrix"""


class GraphConstructionError(RuntimeError):
    """Raised when every sampled matching within the attempt budget had a parallel edge"""

    def __init__(self, seed, attempts):
        super().__init__(
            f"could not build a simple regular graph (seed={seed}, attempts={attempts})"
        )
        self.seed = seed
        self.attempts = attempts


class AlistParseError(ValueError):
    """Malformed alist text, reported with the offending line"""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class MatrixSpec:
    gamma: int
    rho: int
    n: int
    m: int
    seed: int = 0
    field_mode: str = 'binary'

    def check(self):
        """Raise MatrixSpecError unless the spec describes a wide regular matrix"""
        if self.gamma < 2 or self.rho < 2:
            raise MatrixSpecError(f"degrees must be >= 2 (gamma={self.gamma}, rho={self.rho})")
        if self.n * self.gamma != self.m * self.rho:
            raise MatrixSpecError(
                f"degree balance violated: n*gamma={self.n * self.gamma} "
                f"!= m*rho={self.m * self.rho}"
            )
        if self.m >= self.n:
            raise MatrixSpecError(f"matrix must be wide (m={self.m} >= n={self.n})")
        if self.field_mode not in FIELD_MODES:
            raise MatrixSpecError(f"unknown field mode {self.field_mode!r}")

    @property
    def label(self):
        mode = 'bin' if self.field_mode == 'binary' else 'real'
        return f"g{self.gamma}r{self.rho}_m{self.m}n{self.n}_s{self.seed}_{mode}"


class TannerGraph:
    """Sparse bipartite graph of a non-negative m x n measurement matrix.

    Edges are numbered in canonical (cn, vn) order. ``cn_ptr``/``cn_edges``
    and ``vn_ptr``/``vn_edges`` give CSR-style incidence lists, each sorted
    by the index of the node on the other side. Arrays are read-only.
    """

    def __init__(self, n, m, edges, spec=None):
        edges = list(edges)
        self.n = int(n)
        self.m = int(m)
        self.spec = spec

        if edges:
            table = np.asarray(edges, dtype=np.float64).reshape(-1, 3)
            cn = table[:, 0].astype(np.int64)
            vn = table[:, 1].astype(np.int64)
            weight = table[:, 2].copy()
        else:
            cn = np.zeros(0, dtype=np.int64)
            vn = np.zeros(0, dtype=np.int64)
            weight = np.zeros(0, dtype=np.float64)

        if cn.size and (cn.min() < 0 or cn.max() >= self.m or vn.min() < 0 or vn.max() >= self.n):
            raise ValueError(f"edge endpoint outside a {self.m} x {self.n} matrix")

        order = np.lexsort((vn, cn))
        self.edge_cn = cn[order]
        self.edge_vn = vn[order]
        self.weight = weight[order]

        self.cn_ptr = _pointers(self.edge_cn, self.m)
        self.cn_edges = np.arange(self.edge_cn.size, dtype=np.int64)
        self.vn_ptr = _pointers(self.edge_vn, self.n)
        self.vn_edges = np.lexsort((self.edge_cn, self.edge_vn)).astype(np.int64)

        for arr in (self.edge_cn, self.edge_vn, self.weight,
                    self.cn_ptr, self.cn_edges, self.vn_ptr, self.vn_edges):
            arr.setflags(write=False)

    @classmethod
    def from_dense(cls, matrix, spec=None):
        """Build a graph from the non-zero entries of a dense matrix"""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("measurement matrix must be two-dimensional")
        if (matrix < 0).any():
            raise ValueError("measurement matrix must be non-negative")
        rows, cols = np.nonzero(matrix)
        m, n = matrix.shape
        return cls(n, m, zip(rows, cols, matrix[rows, cols]), spec=spec)

    def with_spec(self, spec):
        return TannerGraph(self.n, self.m, self.edges, spec=spec)

    @property
    def num_edges(self):
        return int(self.edge_cn.size)

    @property
    def edges(self):
        return [(int(c), int(v), float(w))
                for c, v, w in zip(self.edge_cn, self.edge_vn, self.weight)]

    @property
    def vn_adjacency(self):
        return [self.vn_edges[self.vn_ptr[v]:self.vn_ptr[v + 1]].tolist() for v in range(self.n)]

    @property
    def cn_adjacency(self):
        return [self.cn_edges[self.cn_ptr[c]:self.cn_ptr[c + 1]].tolist() for c in range(self.m)]

    @property
    def vn_degrees(self):
        return np.diff(self.vn_ptr)

    @property
    def cn_degrees(self):
        return np.diff(self.cn_ptr)

    @property
    def is_binary(self):
        return bool(np.all(self.weight == 1.0))

    def vn_neighbors(self, v):
        """CN indices adjacent to VN v, ascending"""
        return self.edge_cn[self.vn_edges[self.vn_ptr[v]:self.vn_ptr[v + 1]]]

    def cn_neighbors(self, c):
        """VN indices adjacent to CN c, ascending"""
        return self.edge_vn[self.cn_ptr[c]:self.cn_ptr[c + 1]]

    @cached_property
    def _edge_index(self):
        return {(int(c), int(v)): e for e, (c, v) in enumerate(zip(self.edge_cn, self.edge_vn))}

    def edge_id(self, c, v):
        try:
            return self._edge_index[(int(c), int(v))]
        except KeyError:
            raise KeyError(f"no edge between c{c} and v{v}") from None

    @cached_property
    def csr(self):
        return sparse.csr_matrix((self.weight, (self.edge_cn, self.edge_vn)), shape=(self.m, self.n))

    def to_dense(self):
        dense = np.zeros((self.m, self.n), dtype=np.float64)
        dense[self.edge_cn, self.edge_vn] = self.weight
        return dense

    def __eq__(self, other):
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (self.n == other.n and self.m == other.m
                and np.array_equal(self.edge_cn, other.edge_cn)
                and np.array_equal(self.edge_vn, other.edge_vn)
                and np.array_equal(self.weight, other.weight))

    __hash__ = None

    def __repr__(self):
        return f"TannerGraph(n={self.n}, m={self.m}, edges={self.num_edges})"


def _pointers(index, size):
    counts = np.bincount(index, minlength=size)
    return np.concatenate(([0], np.cumsum(counts))).astype(np.int64)


# =========================================================================
# REGULAR CONSTRUCTION
# =========================================================================

class _ParallelEdge(Exception):
    pass


def _match_sockets(spec, rng):
    """One configuration-model sample: shuffled VN sockets dealt to CNs in blocks of rho.

    Any repeated (cn, vn) pair rejects the whole sample.
    """
    blocks = rng.permutation(np.repeat(np.arange(spec.n), spec.gamma)).reshape(spec.m, spec.rho)
    blocks.sort(axis=1)
    repeated = (np.diff(blocks, axis=1) == 0).any(axis=1)
    if repeated.any():
        raise _ParallelEdge(int(np.flatnonzero(repeated)[0]))
    cns = np.repeat(np.arange(spec.m), spec.rho)
    return list(zip(cns.tolist(), blocks.ravel().tolist()))


def generate_regular(spec, max_attempts=MAX_ATTEMPTS):
    """Random (gamma, rho)-regular graph without parallel edges, a pure function of spec"""
    spec.check()
    rng = np.random.default_rng(spec.seed)

    attempts = Retrying(
        stop=stop_after_attempt(max_attempts),
        retry=retry_if_exception_type(_ParallelEdge),
        after=after_log(logger, logging.DEBUG),
    )
    try:
        pairs = attempts(_match_sockets, spec, rng)
    except RetryError as exc:
        raise GraphConstructionError(spec.seed, exc.last_attempt.attempt_number) from exc

    pairs.sort()
    if spec.field_mode == 'binary':
        weights = np.ones(len(pairs))
    else:
        # uniform on (0, 1]
        weights = 1.0 - rng.random(len(pairs))

    graph = TannerGraph(spec.n, spec.m,
                        [(c, v, w) for (c, v), w in zip(pairs, weights)], spec=spec)
    logger.debug("✅ Generated %s with %d edges", spec.label, graph.num_edges)
    return graph


# =========================================================================
# ALIST FORMAT
# =========================================================================

def to_alist(graph):
    """Serialize to alist text (1-based), with a WEIGHTS trailer for non-binary matrices"""
    vn_deg = graph.vn_degrees
    cn_deg = graph.cn_degrees
    lines = [
        f"{graph.n} {graph.m}",
        f"{int(vn_deg.max(initial=0))} {int(cn_deg.max(initial=0))}",
        " ".join(str(int(d)) for d in vn_deg),
        " ".join(str(int(d)) for d in cn_deg),
    ]
    for v in range(graph.n):
        lines.append(" ".join(str(int(c) + 1) for c in graph.vn_neighbors(v)))
    for c in range(graph.m):
        lines.append(" ".join(str(int(v) + 1) for v in graph.cn_neighbors(c)))

    if not graph.is_binary:
        lines.append(WEIGHTS_MARKER)
        lines.extend(format(float(w), '.17g') for w in graph.weight)

    return "\n".join(lines) + "\n"


class _AlistReader:
    def __init__(self, text):
        self.lines = [(no, line.strip()) for no, line in enumerate(text.splitlines(), 1)
                      if line.strip()]
        self.pos = 0
        self.last_line = len(text.splitlines())

    def at_end(self):
        return self.pos >= len(self.lines)

    def peek(self):
        return None if self.at_end() else self.lines[self.pos][1]

    def next_line(self, what):
        if self.at_end():
            raise AlistParseError(f"unexpected end of file while reading {what}", self.last_line + 1)
        no, line = self.lines[self.pos]
        self.pos += 1
        return no, line

    def next_ints(self, what, count=None):
        no, line = self.next_line(what)
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError:
            raise AlistParseError(f"non-integer token in {what}: {line!r}", no) from None
        if count is not None and len(values) != count:
            raise AlistParseError(f"{what}: expected {count} values, found {len(values)}", no)
        return no, values


def _neighbor_list(reader, what, degree, upper):
    no, values = reader.next_ints(what)
    # zero padding up to the max degree is allowed (MacKay convention)
    while values and values[-1] == 0:
        values.pop()
    if len(values) != degree:
        raise AlistParseError(f"{what}: degree {degree} declared but {len(values)} neighbors listed", no)
    for idx in values:
        if idx < 1 or idx > upper:
            raise AlistParseError(f"{what}: index {idx} out of range 1..{upper}", no)
    if len(set(values)) != len(values):
        raise AlistParseError(f"{what}: repeated neighbor", no)
    return no, [idx - 1 for idx in values]


def from_alist(text):
    """Parse alist text (plus optional WEIGHTS trailer) into a TannerGraph"""
    reader = _AlistReader(text)

    no, (n, m) = reader.next_ints("header", 2)
    if n <= 0 or m <= 0:
        raise AlistParseError(f"non-positive dimensions {n} x {m}", no)
    no, (max_vn, max_cn) = reader.next_ints("max degrees", 2)

    no, vn_deg = reader.next_ints("VN degree list", n)
    if any(d < 0 or d > max_vn for d in vn_deg):
        raise AlistParseError(f"VN degree outside 0..{max_vn}", no)
    no, cn_deg = reader.next_ints("CN degree list", m)
    if any(d < 0 or d > max_cn for d in cn_deg):
        raise AlistParseError(f"CN degree outside 0..{max_cn}", no)
    if sum(vn_deg) != sum(cn_deg):
        raise AlistParseError("VN and CN degree sums differ", no)

    by_column = set()
    for v in range(n):
        _, cns = _neighbor_list(reader, f"VN {v + 1} neighbors", vn_deg[v], m)
        by_column.update((c, v) for c in cns)

    by_row = set()
    for c in range(m):
        no, vns = _neighbor_list(reader, f"CN {c + 1} neighbors", cn_deg[c], n)
        row = {(c, v) for v in vns}
        if any(pair not in by_column for pair in row):
            raise AlistParseError(f"CN {c + 1} neighbors disagree with the VN lists", no)
        by_row.update(row)
    if by_row != by_column:
        raise AlistParseError("row and column lists describe different edge sets", no)

    pairs = sorted(by_column)
    weights = [1.0] * len(pairs)
    if not reader.at_end():
        no, marker = reader.next_line("weights marker")
        if marker != WEIGHTS_MARKER:
            raise AlistParseError(f"unexpected trailing content {marker!r}", no)
        for e in range(len(pairs)):
            no, line = reader.next_line(f"weight of edge {e}")
            try:
                weights[e] = float(line)
            except ValueError:
                raise AlistParseError(f"bad weight {line!r}", no) from None
        if not reader.at_end():
            no, _ = reader.next_line("end of file")
            raise AlistParseError(f"more weights than the {len(pairs)} edges", no)

    return TannerGraph(n, m, [(c, v, w) for (c, v), w in zip(pairs, weights)])


def load_alist(path):
    with open(path, 'r') as f:
        return from_alist(f.read())


def save_alist(graph, path):
    with open(path, 'w') as f:
        f.write(to_alist(graph))


# =========================================================================
# VALIDATION
# =========================================================================

def validate(graph):
    """List of violated graph invariants; empty iff the graph is valid. Never raises."""
    diagnostics = []

    if graph.m >= graph.n:
        diagnostics.append(f"matrix is not wide: m={graph.m} >= n={graph.n}")

    for e in np.flatnonzero(~(graph.weight > 0) | ~np.isfinite(graph.weight)):
        diagnostics.append(
            f"non-positive weight {graph.weight[e]} on edge {e} "
            f"(c{graph.edge_cn[e]}, v{graph.edge_vn[e]})"
        )

    pairs, counts = np.unique(np.stack([graph.edge_cn, graph.edge_vn], axis=1),
                              axis=0, return_counts=True) if graph.num_edges else ([], [])
    for (c, v), count in zip(pairs, counts):
        if count > 1:
            diagnostics.append(f"parallel edge between c{c} and v{v} ({count} copies)")

    diagnostics.extend(_adjacency_diagnostics(graph))

    spec = graph.spec
    if spec is not None:
        if (graph.n, graph.m) != (spec.n, spec.m):
            diagnostics.append(
                f"dimensions {graph.m} x {graph.n} differ from spec {spec.m} x {spec.n}"
            )
        for v in np.flatnonzero(graph.vn_degrees != spec.gamma):
            diagnostics.append(f"VN {v} has degree {graph.vn_degrees[v]}, expected {spec.gamma}")
        for c in np.flatnonzero(graph.cn_degrees != spec.rho):
            diagnostics.append(f"CN {c} has degree {graph.cn_degrees[c]}, expected {spec.rho}")

    return diagnostics


def _adjacency_diagnostics(graph):
    found = []
    try:
        seen = np.zeros(graph.num_edges, dtype=np.int64)
        for v, incident in enumerate(graph.vn_adjacency):
            seen[incident] += 1
            if any(graph.edge_vn[e] != v for e in incident):
                found.append(f"VN {v} adjacency lists an edge of another VN")
            if list(graph.edge_cn[incident]) != sorted(graph.edge_cn[incident]):
                found.append(f"VN {v} adjacency is not in canonical order")
        if (seen != 1).any():
            found.append("VN adjacency does not cover every edge exactly once")

        seen[:] = 0
        for c, incident in enumerate(graph.cn_adjacency):
            seen[incident] += 1
            if any(graph.edge_cn[e] != c for e in incident):
                found.append(f"CN {c} adjacency lists an edge of another CN")
        if (seen != 1).any():
            found.append("CN adjacency does not cover every edge exactly once")
    except (IndexError, ValueError) as e:
        found.append(f"adjacency lists are corrupt: {e}")
    return found
