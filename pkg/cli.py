# cli.py - command-line entry point: gen, run, compare, bench, oracle, validate
import json
import logging
import sys

import click
from click.core import ParameterSource

from bench import SweepConfig, SweepConfigError, emit_results, run_sweep, trial_streams
from interval_passing import FLOODING, VARIANTS, IPAConfig, run_variant, write_trace
from oracle import OracleError, l0_exhaustive
from signals import SIGNAL_MODES, DimensionMismatchError, generate_sparse, measure
from tanner_graph import (
    FIELD_MODES, AlistParseError, GraphConstructionError, MatrixSpec, MatrixSpecError,
    generate_regular, load_alist, save_alist, to_alist, validate,
)
from utils.config_utils import DEFAULTS, load_sweep_settings
from utils.helpers import convert_to_serializable, write_json
from variant_comparison import compare_variants

logger = logging.getLogger(__name__)

# Domain errors that mean "bad input", reported as usage failures
INPUT_ERRORS = (MatrixSpecError, AlistParseError, SweepConfigError,
                DimensionMismatchError, OracleError, ValueError, OSError)


def _emit(payload):
    click.echo(json.dumps(convert_to_serializable(payload), indent=2, sort_keys=True))


def _float_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(',') if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(item) for item in value.split(',') if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def _resolve_k(k, sparsity, n):
    if (k is None) == (sparsity is None):
        raise click.UsageError("give exactly one of --k or --sparsity")
    if k is None:
        k = int(round(sparsity * n))
    if not 0 <= k <= n:
        raise click.BadParameter(f"k={k} outside 0..{n}", param_hint="--k/--sparsity")
    return k


def _planted(graph, k, mode, seed):
    """Signal, measurement and schedule generator for a single seeded instance"""
    signal_rng, schedule_rng = trial_streams(seed, 0, 0)
    x = generate_sparse(graph.n, k, mode, rng=signal_rng)
    return x, measure(graph, x), schedule_rng


matrix_option = click.option('--matrix', 'matrix', required=True,
                             type=click.Path(exists=True, dir_okay=False),
                             help="Measurement matrix in alist format.")
k_option = click.option('--k', type=click.IntRange(min=0), default=None,
                        help="Number of non-zero entries in the planted signal.")
sparsity_option = click.option('--sparsity', type=click.FloatRange(0.0, 1.0), default=None,
                               help="Planted support as a fraction k/n (exclusive with --k).")
seed_option = click.option('--seed', type=int, default=DEFAULTS['seed'], show_default=True,
                           help="Master seed for signal and schedule draws.")
lmax_option = click.option('--lmax', 'l_max', type=click.IntRange(min=1), default=DEFAULTS['l_max'],
                           show_default=True, help="Iteration cap l_max (sweeps run l_max - 1 iterations).")
mode_option = click.option('--mode', type=click.Choice(SIGNAL_MODES), default=DEFAULTS['mode'],
                           show_default=True, help="Signal values: ones, or uniform on (0, 1].")
extrinsic_option = click.option('--extrinsic', is_flag=True,
                                help="Exclude the target CN from VN bounds (experimental).")


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.option('-v', '--verbose', count=True, help="Log to stderr; repeat for debug output.")
def cli(verbose):
    """Interval-passing reconstruction of sparse non-negative signals (FIPA and SIPA)."""
    level = logging.WARNING if not verbose else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s",
                        force=True)


@cli.command()
@click.option('--gamma', type=click.IntRange(min=2), required=True, help="VN (column) degree.")
@click.option('--rho', type=click.IntRange(min=2), required=True, help="CN (row) degree.")
@click.option('--n', type=click.IntRange(min=1), required=True, help="Number of VNs (signal length).")
@click.option('--m', type=click.IntRange(min=1), required=True, help="Number of CNs (measurements).")
@click.option('--seed', type=int, default=DEFAULTS['seed'], show_default=True, help="Generator seed.")
@click.option('--field-mode', type=click.Choice(FIELD_MODES), default='binary', show_default=True,
              help="Unit weights, or weights uniform on (0, 1].")
@click.option('--out', type=click.Path(dir_okay=False, writable=True), default=None,
              help="Output alist file (standard output when omitted).")
def gen(gamma, rho, n, m, seed, field_mode, out):
    """Generate a random (gamma, rho)-regular matrix as alist."""
    spec = MatrixSpec(gamma, rho, n, m, seed=seed, field_mode=field_mode)
    graph = generate_regular(spec)
    click.echo(f"seed={seed} matrix={spec.label}", err=True)
    if out is None:
        click.echo(to_alist(graph), nl=False)
    else:
        save_alist(graph, out)
        click.echo(out)
    return 0


@cli.command()
@matrix_option
@k_option
@sparsity_option
@seed_option
@click.option('--variant', type=click.Choice(VARIANTS), default=FLOODING, show_default=True,
              help="Flooding (fipa) or sequential (sipa) schedule.")
@lmax_option
@mode_option
@extrinsic_option
@click.option('--trace', 'trace_path', type=click.Path(dir_okay=False), default=None,
              help="Write per-iteration edge bounds as NDJSON to this file.")
@click.option('--expect-success', is_flag=True, help="Exit 1 unless the signal is recovered.")
def run(matrix, k, sparsity, seed, variant, l_max, mode, extrinsic, trace_path, expect_success):
    """Reconstruct one planted signal with one variant."""
    graph = load_alist(matrix)
    k = _resolve_k(k, sparsity, graph.n)
    x, y, schedule_rng = _planted(graph, k, mode, seed)
    config = IPAConfig(extrinsic=extrinsic)
    result = run_variant(variant, graph, y, l_max, rng=schedule_rng, config=config,
                         trace=trace_path is not None)
    tol = 0.0 if config.resolve_exact(graph, y.values) else config.rel_tol
    success = result.matches(x, tol)

    if trace_path is not None:
        write_trace(result.trace, graph, trace_path)
    _emit({
        'seed': seed,
        'variant': variant,
        'k': k,
        'l_max': l_max,
        'success': success,
        'all_converged': result.all_converged,
        'decided': int(result.converged.sum()),
        'inconsistent': int(result.inconsistent.sum()),
        'iterations_used': result.iterations_used,
        'cn_to_vn_msgs': result.counters.cn_to_vn,
        'vn_to_cn_msgs': result.counters.vn_to_cn,
    })
    if expect_success and not success:
        click.echo(f"❌ {variant} did not recover the signal (seed={seed})", err=True)
        return 1
    return 0


@cli.command()
@matrix_option
@k_option
@sparsity_option
@seed_option
@lmax_option
@mode_option
@extrinsic_option
@click.option('--out', type=click.Path(dir_okay=False), default=None,
              help="Also write the report as JSON to this file.")
def compare(matrix, k, sparsity, seed, l_max, mode, extrinsic, out):
    """Run both variants on one instance and check the cross-variant invariants."""
    graph = load_alist(matrix)
    k = _resolve_k(k, sparsity, graph.n)
    x, _, schedule_rng = _planted(graph, k, mode, seed)
    report = compare_variants(graph, x, l_max, rng=schedule_rng,
                              config=IPAConfig(extrinsic=extrinsic), seed=seed)
    payload = report.to_dict()
    _emit(payload)
    if out is not None:
        write_json(payload, out)
    if not report.ok:
        click.echo(f"❌ invariant violations (seed={seed})", err=True)
        return 1
    return 0


# CLI parameter name -> sweep settings key
BENCH_SETTINGS = {
    'matrix': 'matrix', 'gamma': 'gamma', 'rho': 'rho', 'n': 'n', 'm': 'm',
    'matrix_seed': 'matrix_seed', 'field_mode': 'field_mode',
    'sparsities': 'sparsities', 'ks': 'ks', 'trials': 'trials', 'l_max': 'l_max',
    'seed': 'seed', 'variants': 'variants', 'n_jobs': 'n_jobs', 'mode': 'mode',
    'out': 'output_dir', 'extrinsic': 'extrinsic',
}


@cli.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None,
              help="YAML sweep file; flags given explicitly override it.")
@click.option('--matrix', type=click.Path(exists=True, dir_okay=False), default=None,
              help="Measurement matrix in alist format.")
@click.option('--gamma', type=click.IntRange(min=2), default=None, help="VN degree of a generated matrix.")
@click.option('--rho', type=click.IntRange(min=2), default=None, help="CN degree of a generated matrix.")
@click.option('--n', type=click.IntRange(min=1), default=None, help="VNs of a generated matrix.")
@click.option('--m', type=click.IntRange(min=1), default=None, help="CNs of a generated matrix.")
@click.option('--matrix-seed', type=int, default=0, show_default=True, help="Seed of a generated matrix.")
@click.option('--field-mode', type=click.Choice(FIELD_MODES), default='binary', show_default=True,
              help="Weights of a generated matrix.")
@click.option('--sparsities', callback=_float_list, default=None,
              help="Comma-separated sparsity fractions k/n, e.g. 0.06,0.10,0.14.")
@click.option('--ks', callback=_int_list, default=None,
              help="Comma-separated support sizes k (exclusive with --sparsities).")
@click.option('--trials', type=click.IntRange(min=1), default=DEFAULTS['trials'], show_default=True,
              help="Paired trials per sparsity point.")
@lmax_option
@seed_option
@click.option('--variants', type=click.Choice(VARIANTS), multiple=True, default=DEFAULTS['variants'],
              show_default=True, help="Variants to run (repeatable).")
@click.option('--jobs', 'n_jobs', type=int, default=DEFAULTS['n_jobs'], show_default=True,
              help="Parallel workers for trials (-1 uses every core).")
@mode_option
@extrinsic_option
@click.option('--out', type=click.Path(file_okay=False), envvar='IPA_OUTPUT_DIR',
              default=DEFAULTS['output_dir'], show_default=True, show_envvar=True,
              help="Output directory for CSV/JSON results.")
@click.option('--format', 'formats', type=click.Choice(['csv', 'json']), multiple=True,
              default=('csv', 'json'), show_default=True, help="Result formats (repeatable).")
@click.option('--plot', is_flag=True, help="Also write an HTML PCR-vs-sparsity figure.")
@click.pass_context
def bench(ctx, config_path, formats, plot, **params):
    """Monte Carlo sweep: PCR, iterations and complexity of each variant."""
    if params['sparsities'] and params['ks']:
        raise click.UsageError("--sparsities and --ks are mutually exclusive")

    settings = load_sweep_settings(config_path) if config_path else {}
    for name, key in BENCH_SETTINGS.items():
        value = params[name]
        explicit = ctx.get_parameter_source(name) not in (ParameterSource.DEFAULT, None)
        if explicit or key not in settings:
            if value is not None and value != ():
                settings[key] = list(value) if isinstance(value, tuple) else value
    if params['ks']:
        settings.pop('sparsities', None)
    elif params['sparsities']:
        settings.pop('ks', None)

    config = SweepConfig.from_settings(settings).validate()
    click.echo(f"seed={config.seed} l_max={config.l_max} trials={config.trials}", err=True)
    stats = run_sweep(config)
    for path in emit_results(stats, formats, config.output_dir, plot=plot):
        click.echo(str(path))

    violations = int(stats.containment_violations.sum())
    if violations:
        click.echo(f"❌ {violations} trial(s) recovered by FIPA but not SIPA", err=True)
        return 1
    return 0


@cli.command()
@matrix_option
@click.option('--y', 'y_text', callback=_float_list, default=None,
              help="Comma-separated measurement vector (alternative to planting a signal).")
@k_option
@sparsity_option
@seed_option
@mode_option
@click.option('--k-max', type=click.IntRange(min=0), default=None,
              help="Largest support searched (defaults to n).")
def oracle(matrix, y_text, k, sparsity, seed, mode, k_max):
    """Exhaustive l0 search for the sparsest non-negative solutions (n <= 25)."""
    graph = load_alist(matrix)
    if y_text is not None:
        if k is not None or sparsity is not None:
            raise click.UsageError("--y cannot be combined with --k/--sparsity")
        y = y_text
    else:
        _, y, _ = _planted(graph, _resolve_k(k, sparsity, graph.n), mode, seed)
        y = y.values
    solution = l0_exhaustive(graph, y, k_max=k_max)
    _emit({
        'seed': seed,
        'min_support': solution.min_support,
        'solutions': [x.tolist() for x in solution.solutions],
    })
    return 0


@cli.command(name='validate')
@matrix_option
def validate_matrix(matrix):
    """Check an alist matrix for structural problems."""
    problems = validate(load_alist(matrix))
    for problem in problems:
        click.echo(problem)
    if problems:
        click.echo(f"❌ {len(problems)} problem(s) in {matrix}", err=True)
        return 1
    click.echo(f"✅ {matrix} is a valid measurement matrix", err=True)
    return 0


def dispatch(argv=None):
    """Run the CLI and return its exit code instead of exiting"""
    try:
        rv = cli.main(args=argv, prog_name='ipa', standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except GraphConstructionError as e:
        click.echo(f"❌ {e}", err=True)
        return 1
    except INPUT_ERRORS as e:
        click.echo(f"Error: {e}", err=True)
        return 2
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(dispatch())
