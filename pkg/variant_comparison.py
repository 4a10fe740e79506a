# variant_comparison.py - run FIPA and SIPA on one instance and audit how they relate
import logging
from dataclasses import dataclass, field

import numpy as np

from interval_passing import IPAConfig, bound_scale, run_fipa, run_sipa
from signals import as_vector, measure

logger = logging.getLogger(__name__)

MAX_EXAMPLES = 5


def _slack(reference, exact, rel_tol, scale=0.0):
    """rel_tol * max(1, |reference|, scale); zero in exact mode"""
    if exact:
        return 0.0
    return rel_tol * np.maximum(np.maximum(1.0, np.abs(reference)), scale)


def edge_scales(graph, y):
    """(CN->VN, VN->CN) per-edge magnitudes of the terms behind each stored bound"""
    per_vn = bound_scale(graph, y)[graph.edge_vn]
    return per_vn, per_vn * graph.weight


def _describe(mask, graph, what, iteration=None):
    where = f" at iteration {iteration}" if iteration is not None else ""
    return [f"{what}{where} on edge {e} (c{graph.edge_cn[e]}, v{graph.edge_vn[e]})"
            for e in np.flatnonzero(mask)]


def check_soundness(trace, graph, x, exact=True, rel_tol=1e-9):
    """Every stored interval contains the planted value of its VN"""
    x = as_vector(x, graph.n, "signal")
    xv = x[graph.edge_vn]
    scaled = xv * graph.weight
    cv_scale, vc_scale = edge_scales(graph, measure(graph, x).values)
    found = []
    for snap in trace:
        iv = snap.intervals
        tol = _slack(xv, exact, rel_tol, cv_scale)
        found += _describe(iv.cn_to_vn_lower > xv + tol, graph, "CN->VN lower above x", snap.iteration)
        found += _describe(iv.cn_to_vn_upper < xv - tol, graph, "CN->VN upper below x", snap.iteration)
        tol = _slack(scaled, exact, rel_tol, vc_scale)
        found += _describe(iv.vn_to_cn_lower > scaled + tol, graph, "VN->CN lower above A*x", snap.iteration)
        found += _describe(iv.vn_to_cn_upper < scaled - tol, graph, "VN->CN upper below A*x", snap.iteration)
    return found


def check_monotone(trace, graph, exact=True, rel_tol=1e-9, scales=(0.0, 0.0)):
    """Stored VN->CN uppers never grow and clipped CN->VN lowers never shrink.

    ``scales`` is the (CN->VN, VN->CN) pair from edge_scales.
    """
    cv_scale, vc_scale = scales
    found = []
    for before, after in zip(trace, trace[1:]):
        a, b = before.intervals, after.intervals
        grew = b.vn_to_cn_upper > a.vn_to_cn_upper + _slack(a.vn_to_cn_upper, exact, rel_tol, vc_scale)
        shrank = b.cn_to_vn_lower < a.cn_to_vn_lower - _slack(a.cn_to_vn_lower, exact, rel_tol, cv_scale)
        found += _describe(grew, graph, "VN->CN upper increased", after.iteration)
        found += _describe(shrank, graph, "CN->VN lower decreased", after.iteration)
    return found


def check_dominance(fipa_trace, sipa_trace, graph, exact=True, rel_tol=1e-9, scales=(0.0, 0.0)):
    """Per common iteration: SIPA uppers <= FIPA uppers, SIPA lowers >= FIPA lowers,
    and a zero SIPA VN->CN lower forces a zero FIPA one."""
    cv_scale, vc_scale = scales
    found = []
    for fld, seq in zip(fipa_trace, sipa_trace):
        f, s = fld.intervals, seq.intervals
        upper = s.vn_to_cn_upper > f.vn_to_cn_upper + _slack(f.vn_to_cn_upper, exact, rel_tol, vc_scale)
        lower = s.cn_to_vn_lower < f.cn_to_vn_lower - _slack(f.cn_to_vn_lower, exact, rel_tol, cv_scale)
        zeros = (s.vn_to_cn_lower == 0) & (f.vn_to_cn_lower > _slack(0.0, exact, rel_tol, vc_scale))
        found += _describe(upper, graph, "SIPA VN->CN upper above FIPA", seq.iteration)
        found += _describe(lower, graph, "SIPA CN->VN lower below FIPA", seq.iteration)
        found += _describe(zeros, graph, "SIPA zero lower where FIPA is positive", seq.iteration)
    return found


def check_containment(fipa, sipa, x, rel_tol=0.0):
    """Coordinates FIPA recovered but SIPA did not"""
    lost = fipa.recovered(x, rel_tol) & ~sipa.recovered(x, rel_tol)
    return [f"v{v} recovered by FIPA only" for v in np.flatnonzero(lost)]


@dataclass
class ComparisonReport:
    k: int
    l_max: int
    seed: object
    fipa: object
    sipa: object
    fipa_success: bool
    sipa_success: bool
    violations: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not any(self.violations.values())

    def to_dict(self):
        summary = {}
        for name, result in (('fipa', self.fipa), ('sipa', self.sipa)):
            summary[name] = {
                'success': self.fipa_success if name == 'fipa' else self.sipa_success,
                'iterations_used': result.iterations_used,
                'decided': int(result.converged.sum()),
                'inconsistent': int(result.inconsistent.sum()),
                'cn_to_vn_msgs': result.counters.cn_to_vn,
                'vn_to_cn_msgs': result.counters.vn_to_cn,
            }
        return {
            'k': self.k,
            'l_max': self.l_max,
            'seed': self.seed,
            'ok': self.ok,
            **summary,
            'violations': {name: {'count': len(found), 'examples': found[:MAX_EXAMPLES]}
                           for name, found in self.violations.items()},
        }


def compare_variants(graph, x, l_max=50, rng=None, config=None, seed=None):
    """Paired FIPA/SIPA run on y = Ax with traces, checked against the cross-variant invariants"""
    config = config or IPAConfig()
    x = as_vector(x, graph.n, "signal")
    y = measure(graph, x).values
    exact = config.resolve_exact(graph, y)
    tol = 0.0 if exact else config.rel_tol
    scales = edge_scales(graph, y)

    fipa = run_fipa(graph, y, l_max, config=config, trace=True)
    sipa = run_sipa(graph, y, l_max, rng=rng, config=config, trace=True)

    violations = {
        'soundness_fipa': check_soundness(fipa.trace, graph, x, exact, config.rel_tol),
        'soundness_sipa': check_soundness(sipa.trace, graph, x, exact, config.rel_tol),
        'monotone_fipa': check_monotone(fipa.trace, graph, exact, config.rel_tol, scales),
        'monotone_sipa': check_monotone(sipa.trace, graph, exact, config.rel_tol, scales),
        'dominance': check_dominance(fipa.trace, sipa.trace, graph, exact, config.rel_tol,
                                     scales),
        'containment': check_containment(fipa, sipa, x, tol),
    }
    report = ComparisonReport(
        k=int(np.count_nonzero(x)), l_max=l_max, seed=seed, fipa=fipa, sipa=sipa,
        fipa_success=fipa.matches(x, tol), sipa_success=sipa.matches(x, tol),
        violations=violations,
    )

    if report.ok:
        logger.info("✅ Variants agree with every invariant (FIPA %d it., SIPA %d it.)",
                    fipa.iterations_used, sipa.iterations_used)
    else:
        for name, found in violations.items():
            if found:
                logger.warning("❌ %s: %d violation(s), first: %s", name, len(found), found[0])
    return report
