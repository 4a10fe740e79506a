# signals.py - k-sparse test signals and their measurements y = Ax
import json
from dataclasses import dataclass

import numpy as np

SIGNAL_MODES = ('binary', 'nonneg-real')


class DimensionMismatchError(ValueError):
    """Vector length does not match the graph dimension it is used with"""


def _vector_to_text(values):
    return "".join(f"{format(float(v), '.17g')}\n" for v in values)


def _vector_from_text(text):
    return np.array([float(line) for line in text.splitlines() if line.strip()], dtype=np.float64)


def _frozen(values):
    arr = np.array(values, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SparseSignal:
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if (values < 0).any():
            raise ValueError("signal entries must be non-negative")
        object.__setattr__(self, 'values', values)

    @property
    def n(self):
        return int(self.values.size)

    @property
    def support(self):
        return np.flatnonzero(self.values)

    @property
    def k(self):
        return int(np.count_nonzero(self.values))

    @property
    def sparsity(self):
        return self.k / self.n if self.n else 0.0

    def to_text(self):
        return _vector_to_text(self.values)

    @classmethod
    def from_text(cls, text):
        return cls(_vector_from_text(text))

    def to_json(self):
        return json.dumps(self.values.tolist())

    @classmethod
    def from_json(cls, payload):
        return cls(json.loads(payload))


@dataclass(frozen=True, eq=False)
class Measurement:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen(self.values))

    @property
    def m(self):
        return int(self.values.size)

    def to_text(self):
        return _vector_to_text(self.values)

    @classmethod
    def from_text(cls, text):
        return cls(_vector_from_text(text))

    def to_json(self):
        return json.dumps(self.values.tolist())

    @classmethod
    def from_json(cls, payload):
        return cls(json.loads(payload))


def generate_sparse(n, k, mode='binary', rng=None):
    """Signal with a uniformly drawn size-k support; ones in binary mode, U(0,1] otherwise"""
    if k < 0 or k > n:
        raise ValueError(f"sparsity k={k} outside 0..{n}")
    if mode not in SIGNAL_MODES:
        raise ValueError(f"unknown signal mode {mode!r}")

    rng = np.random.default_rng(rng)
    support = rng.choice(n, size=k, replace=False)
    values = np.zeros(n, dtype=np.float64)
    if mode == 'binary':
        values[support] = 1.0
    else:
        values[support] = 1.0 - rng.random(k)
    return SparseSignal(values)


def as_vector(x, length, what):
    """Plain float vector from a SparseSignal/Measurement/array, length-checked"""
    values = np.asarray(getattr(x, 'values', x), dtype=np.float64).reshape(-1)
    if values.size != length:
        raise DimensionMismatchError(f"{what} has length {values.size}, expected {length}")
    return values


def measure(graph, x):
    """y(c) = sum of A[c,v] * x(v) over the sparse edges of c"""
    values = as_vector(x, graph.n, "signal")
    return Measurement(graph.csr @ values)
