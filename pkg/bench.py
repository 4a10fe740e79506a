# bench.py - Monte Carlo sweeps comparing FIPA and SIPA on one measurement matrix
import hashlib
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import norm

from complexity import DEFAULT_COST_MODEL, CostModel, aggregate, complexity_table, percent_reduction
from interval_passing import FLOODING, SEQUENTIAL, VARIANTS, IPAConfig, MessageCounters, run_variant
from matrix_manager import MatrixManager
from signals import SIGNAL_MODES, generate_sparse, measure
from tanner_graph import MatrixSpec
from utils.config_utils import initialize_settings, load_sweep_settings
from utils.helpers import (
    convert_to_serializable, ensure_output_directory, read_json, results_basename, write_json,
)

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95

SUMMARY_COLUMNS = [
    'variant', 'sparsity', 'k', 'trials', 'pcr', 'fer', 'pcr_half_width',
    'mean_iterations', 'cn_to_vn_msgs', 'vn_to_cn_msgs', 'total_ops',
    'reduction_pct', 'iteration_savings_pct', 'containment_violations',
]


class SweepConfigError(ValueError):
    """Sweep settings that cannot be run"""


@dataclass
class SweepConfig:
    matrix_spec: MatrixSpec | None = None
    matrix_path: str | None = None
    sparsities: tuple = (0.06, 0.10, 0.14)
    ks: tuple | None = None
    trials: int = 2000
    l_max: int = 50
    seed: int = 0
    variants: tuple = VARIANTS
    output_dir: str = 'results'
    n_jobs: int = 1
    mode: str = 'binary'
    cost_model: CostModel = DEFAULT_COST_MODEL
    extrinsic: bool = False

    def validate(self, n=None):
        if self.matrix_spec is None and self.matrix_path is None:
            raise SweepConfigError("a matrix spec or an alist path is required")
        if self.trials < 1:
            raise SweepConfigError(f"trials must be >= 1, got {self.trials}")
        if self.l_max < 1:
            raise SweepConfigError(f"l_max must be >= 1, got {self.l_max}")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise SweepConfigError(f"variants must be drawn from {VARIANTS}, got {self.variants}")
        if self.mode not in SIGNAL_MODES:
            raise SweepConfigError(f"unknown signal mode {self.mode!r}")
        if not (self.ks or self.sparsities):
            raise SweepConfigError("no sparsity points to run")
        if n is not None:
            for sparsity, k in self.points(n):
                if not 0 <= k <= n:
                    raise SweepConfigError(f"sparsity {sparsity} gives k={k} outside 0..{n}")
        return self

    def points(self, n):
        """(sparsity, k) pairs; explicit ks take precedence over fractions"""
        if self.ks:
            return [(int(k) / n, int(k)) for k in self.ks]
        return [(float(s), int(round(float(s) * n))) for s in self.sparsities]

    @property
    def ipa_config(self):
        return IPAConfig(extrinsic=self.extrinsic)

    def to_dict(self):
        payload = asdict(self)
        payload['variants'] = list(self.variants)
        return convert_to_serializable(payload)

    @classmethod
    def from_settings(cls, settings):
        """Build from a flat settings dict (defaults, YAML and flags already merged)"""
        settings = initialize_settings(settings)
        spec = None
        if settings.get('gamma') is not None:
            try:
                spec = MatrixSpec(int(settings['gamma']), int(settings['rho']),
                                  int(settings['n']), int(settings['m']),
                                  seed=int(settings.get('matrix_seed', 0)),
                                  field_mode=settings.get('field_mode', 'binary'))
            except KeyError as e:
                raise SweepConfigError(f"matrix spec is missing {e.args[0]!r}") from e
        cost = settings.get('cost_model') or {}
        return cls(
            matrix_spec=spec,
            matrix_path=settings.get('matrix'),
            sparsities=tuple(settings['sparsities']) if settings.get('sparsities') else cls.sparsities,
            ks=tuple(settings['ks']) if settings.get('ks') else None,
            trials=int(settings['trials']),
            l_max=int(settings['l_max']),
            seed=int(settings['seed']),
            variants=tuple(settings['variants']),
            output_dir=str(settings['output_dir']),
            n_jobs=int(settings['n_jobs']),
            mode=settings['mode'],
            cost_model=cost if isinstance(cost, CostModel) else CostModel(**cost),
            extrinsic=bool(settings.get('extrinsic', False)),
        )

    @classmethod
    def from_yaml(cls, path):
        return cls.from_settings(load_sweep_settings(path))


def trial_streams(seed, point, trial):
    """Independent (signal, schedule) generators for one trial, a pure function of the indices"""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(point, trial))
    signal_seq, schedule_seq = seq.spawn(2)
    return np.random.default_rng(signal_seq), np.random.default_rng(schedule_seq)


def _digest(values):
    return hashlib.blake2b(values.tobytes(), digest_size=8).hexdigest()


def _run_trial(graph, config, point, sparsity, k, trial):
    signal_rng, schedule_rng = trial_streams(config.seed, point, trial)
    x = generate_sparse(graph.n, k, config.mode, rng=signal_rng)
    y = measure(graph, x).values
    ipa_config = config.ipa_config
    tol = 0.0 if ipa_config.resolve_exact(graph, y) else ipa_config.rel_tol

    records = []
    for variant in config.variants:
        result = run_variant(variant, graph, y, config.l_max, rng=schedule_rng, config=ipa_config)
        records.append({
            'variant': variant,
            'point': point,
            'sparsity': sparsity,
            'k': k,
            'trial': trial,
            'success': result.matches(x, tol),
            'all_converged': result.all_converged,
            'inconsistent': bool(result.inconsistent.any()),
            'iterations': result.iterations_used,
            'cn_to_vn_msgs': result.counters.cn_to_vn,
            'vn_to_cn_msgs': result.counters.vn_to_cn,
            'signal_digest': _digest(x.values),
        })
    return records


def _degrees(graph):
    if graph.spec is not None:
        return graph.spec.gamma, graph.spec.rho
    gamma = graph.vn_degrees.mean() if graph.n else 0.0
    rho = graph.cn_degrees.mean() if graph.m else 0.0
    return float(gamma), float(rho)


@dataclass
class SweepStats:
    config: SweepConfig
    matrix_label: str
    trials: pd.DataFrame
    summary: pd.DataFrame
    complexity: dict = field(default_factory=dict)

    def _per_sparsity(self, column):
        rows = self.summary.drop_duplicates('sparsity')
        return pd.Series(rows[column].to_numpy(), index=rows['sparsity'].to_numpy(), name=column)

    @property
    def complexity_reduction(self):
        return self._per_sparsity('reduction_pct')

    @property
    def iteration_savings(self):
        return self._per_sparsity('iteration_savings_pct')

    @property
    def containment_violations(self):
        return self._per_sparsity('containment_violations')

    def complexity_table(self):
        """Seven-row complexity table; needs both variants"""
        pairs = {s: (reports[FLOODING], reports[SEQUENTIAL])
                 for s, reports in self.complexity.items()
                 if FLOODING in reports and SEQUENTIAL in reports}
        if not pairs:
            raise ValueError("complexity table needs both fipa and sipa results")
        return complexity_table(pairs)


def summarize(trials, config, graph, matrix_label):
    """Per (variant, sparsity) statistics, with cross-variant columns filled when both ran"""
    z = norm.ppf(0.5 + CONFIDENCE / 2)
    gamma, rho = _degrees(graph)
    rows = []
    complexity = {}

    for (point, variant), group in trials.groupby(['point', 'variant'], sort=True):
        count = len(group)
        pcr = float(group['success'].mean())
        counters = [MessageCounters(int(cn), int(vn))
                    for cn, vn in zip(group['cn_to_vn_msgs'], group['vn_to_cn_msgs'])]
        report = aggregate(counters, gamma, rho, variant, config.cost_model)
        sparsity = float(group['sparsity'].iloc[0])
        complexity.setdefault(sparsity, {})[variant] = report
        rows.append({
            'variant': variant,
            'sparsity': sparsity,
            'k': int(group['k'].iloc[0]),
            'trials': count,
            'pcr': pcr,
            'fer': 1.0 - pcr,
            'pcr_half_width': float(z * np.sqrt(pcr * (1.0 - pcr) / count)),
            'mean_iterations': float(group['iterations'].mean()),
            'cn_to_vn_msgs': report.cn_to_vn_msgs,
            'vn_to_cn_msgs': report.vn_to_cn_msgs,
            'total_ops': report.total_ops,
        })

    summary = pd.DataFrame(rows)
    summary['reduction_pct'] = np.nan
    summary['iteration_savings_pct'] = np.nan
    summary['containment_violations'] = 0

    both = {FLOODING, SEQUENTIAL} <= set(config.variants)
    if both and len(summary):
        success = trials.pivot_table(index=['sparsity', 'trial'], columns='variant',
                                     values='success', aggfunc='first')
        lost = (success[FLOODING].astype(bool) & ~success[SEQUENTIAL].astype(bool))
        lost = lost.groupby(level='sparsity').sum()
        for sparsity, reports in complexity.items():
            fld, seq = reports[FLOODING], reports[SEQUENTIAL]
            at = summary['sparsity'] == sparsity
            if fld.total_ops > 0:
                summary.loc[at, 'reduction_pct'] = percent_reduction(fld, seq)
            it = summary.loc[at].set_index('variant')['mean_iterations']
            if it[FLOODING] > 0:
                summary.loc[at, 'iteration_savings_pct'] = 100.0 * (1.0 - it[SEQUENTIAL] / it[FLOODING])
            summary.loc[at, 'containment_violations'] = int(lost.get(sparsity, 0))

    summary = summary[SUMMARY_COLUMNS].sort_values(['variant', 'sparsity'], ignore_index=True)
    return SweepStats(config, matrix_label, trials, summary, complexity)


def run_sweep(config, graph=None):
    """Run every variant on the same `trials` signals per sparsity point"""
    if graph is None:
        config.validate()
        graph = MatrixManager().load_or_create(config.matrix_spec, config.matrix_path)
    config.validate(graph.n)
    matrix_label = (graph.spec.label if graph.spec is not None
                    else Path(config.matrix_path).stem if config.matrix_path else f"m{graph.m}n{graph.n}")

    records = []
    for point, (sparsity, k) in enumerate(config.points(graph.n)):
        batches = Parallel(n_jobs=config.n_jobs)(
            delayed(_run_trial)(graph, config, point, sparsity, k, trial)
            for trial in range(config.trials)
        )
        point_records = [record for batch in batches for record in batch]
        records.extend(point_records)

        frame = pd.DataFrame(point_records)
        pcrs = frame.groupby('variant')['success'].mean()
        logger.info("📊 k/n=%.4f (k=%d): %s", sparsity, k,
                    ", ".join(f"{v} PCR {pcrs[v]:.4f}" for v in config.variants))

    trials = pd.DataFrame(records)
    stats = summarize(trials, config, graph, matrix_label)
    violations = int(stats.containment_violations.sum())
    if violations:
        logger.warning("❌ %d paired trial(s) recovered by FIPA but not by SIPA", violations)
    return stats


def emit_results(stats, formats=('csv', 'json'), output_dir=None, plot=False):
    """Write the summary as CSV and/or JSON plus plot-ready series; returns written paths"""
    config = stats.config
    out = ensure_output_directory(output_dir or config.output_dir)
    base = out / results_basename(stats.matrix_label, config.seed, config.l_max)
    written = []

    for fmt in formats:
        if fmt == 'csv':
            path = base.with_name(base.name + '.csv')
            stats.summary.to_csv(path, index=False, float_format='%.10g')
            written.append(path)
            if {FLOODING, SEQUENTIAL} <= set(config.variants):
                path = base.with_name(base.name + '_complexity.csv')
                stats.complexity_table().to_csv(path, float_format='%.10g')
                written.append(path)
        elif fmt == 'json':
            path = base.with_name(base.name + '.json')
            write_json({
                'matrix': stats.matrix_label,
                'seed': config.seed,
                'l_max': config.l_max,
                'config': config.to_dict(),
                'summary': stats.summary.to_dict(orient='records'),
                'complexity': {str(s): {v: r.to_dict() for v, r in reports.items()}
                               for s, reports in stats.complexity.items()},
            }, path)
            written.append(path)
        else:
            raise ValueError(f"unknown result format {fmt!r}")

    for variant, group in stats.summary.groupby('variant'):
        path = base.with_name(f"{base.name}_{variant}_pcr.dat")
        group[['sparsity', 'pcr']].to_csv(path, sep=' ', header=False, index=False,
                                          float_format='%.10g')
        written.append(path)

    if plot:
        from utils.analytics import SweepAnalytics
        path = base.with_name(base.name + '_pcr.html')
        SweepAnalytics(stats.summary).save_pcr_figure(path)
        written.append(path)

    logger.info("✅ Results written to %s", out)
    return written


def load_results(path):
    """(payload, summary frame) from a JSON result file"""
    payload = read_json(path)
    summary = pd.DataFrame(payload['summary'], columns=SUMMARY_COLUMNS)
    numeric = [c for c in SUMMARY_COLUMNS if c != 'variant']
    summary[numeric] = summary[numeric].apply(pd.to_numeric)
    return payload, summary

