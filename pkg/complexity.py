# complexity.py - elementary-operation cost model for interval passing
import json
from collections.abc import Iterable
from dataclasses import asdict, dataclass

import pandas as pd

from interval_passing import FLOODING, SEQUENTIAL, MessageCounters

# Row labels of the complexity table, in order
TABLE_ROWS = [
    'avg. # of CN to VN msg. fld.',
    'avg. # of CN to VN msg. seq.',
    'avg. # of VN to CN msg. fld.',
    'avg. # of VN to CN msg. seq.',
    'avg. complexity fld.',
    'avg. complexity seq.',
    'avg. % reduction of complexity',
]

CSV_FIELDS = ['variant', 'cn_to_vn_msgs', 'vn_to_cn_msgs', 'total_ops']


@dataclass(frozen=True)
class CostModel:
    """Unit costs of comparisons, subtractions, additions; o_mul prices the
    weight multiply/divide of each message and is 0 unless exploring."""
    o_cmp: float = 1.0
    o_sub: float = 1.0
    o_add: float = 1.0
    o_mul: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")


DEFAULT_COST_MODEL = CostModel()


@dataclass
class ComplexityReport:
    variant: str
    cn_to_vn_msgs: float
    vn_to_cn_msgs: float
    total_ops: float
    gamma: float
    rho: float

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())

    def to_csv_row(self):
        """variant, CN->VN msgs, VN->CN msgs, complexity (complexity table column order)"""
        return ",".join(str(getattr(self, name)) for name in CSV_FIELDS)


def vn_msg_cost(gamma, model=DEFAULT_COST_MODEL):
    if gamma < 1:
        raise ValueError(f"VN degree must be >= 1, got {gamma}")
    return (gamma - 1) * gamma * model.o_cmp + model.o_mul


def cn_msg_cost(rho, model=DEFAULT_COST_MODEL):
    if rho < 1:
        raise ValueError(f"CN degree must be >= 1, got {rho}")
    return model.o_sub + (rho - 1) * model.o_add + model.o_mul


def _average_counts(counts):
    if isinstance(counts, MessageCounters):
        return float(counts.cn_to_vn), float(counts.vn_to_cn)
    if isinstance(counts, Iterable):
        counts = list(counts)
        if not counts:
            return 0.0, 0.0
        cn = sum(c.cn_to_vn for c in counts) / len(counts)
        vn = sum(c.vn_to_cn for c in counts) / len(counts)
        return float(cn), float(vn)
    raise TypeError(f"cannot aggregate {type(counts).__name__}")


def aggregate(counts, gamma, rho, variant, model=DEFAULT_COST_MODEL):
    """Average message counts (all trials, failures included) priced under the cost model.

    SIPA pays one extra addition per VN->CN message for its update counter.
    """
    if variant not in (FLOODING, SEQUENTIAL):
        raise ValueError(f"unknown variant {variant!r}")
    cn_msgs, vn_msgs = _average_counts(counts)
    total = cn_msgs * cn_msg_cost(rho, model) + vn_msgs * vn_msg_cost(gamma, model)
    if variant == SEQUENTIAL:
        total += vn_msgs * model.o_add
    return ComplexityReport(variant, cn_msgs, vn_msgs, total, gamma, rho)


def percent_reduction(fld, seq):
    if fld.total_ops == 0:
        raise ValueError("flooding complexity is zero; reduction undefined")
    return 100.0 * (1.0 - seq.total_ops / fld.total_ops)


def complexity_table(reports):
    """Complexity rows x sparsity columns from {sparsity: (fld_report, seq_report)}"""
    columns = {}
    for sparsity, (fld, seq) in sorted(reports.items()):
        columns[sparsity] = [
            fld.cn_to_vn_msgs, seq.cn_to_vn_msgs,
            fld.vn_to_cn_msgs, seq.vn_to_cn_msgs,
            fld.total_ops, seq.total_ops,
            percent_reduction(fld, seq),
        ]
    table = pd.DataFrame(columns, index=TABLE_ROWS)
    table.columns.name = 'sparsity'
    return table
