import argparse
import os
import signal
import sys
from pathlib import Path

import numpy as np
from loguru import logger

from . import __version__
from .config.parse_config import ConfigParser, resolve_config_file
from .errors import (
    ConfigurationError,
    DatasetValidationError,
    NumericalError,
    StudyInterrupted,
)
from .fitting import choose_lambda, e_step_group, em_fit, initial_coefficients, kkt_check, lambda_max
from .inference.intervals import (
    contrast_wald_interval,
    naive_ci,
    selective_ci,
    selective_intervals,
    split_inference_detailed,
    unpenalized_refit,
)
from .inference.selection import build_post_selection_estimate, truncation_interval
from .model.csv_io import read_dataset_csv, write_dataset_csv, write_truth_csv
from .model.dataset import Coefficients
from .model.likelihood import aic_bic
from .study.dgp import GRID_BOUNDS, DgpConfig, default_theta, lambda_grid, pool_individual_data, simulate_dataset
from .study.presets import PRESETS, evaluate_checks, get_preset
from .study.report import format_summary, write_json, write_study_json, write_summary_json, write_tidy_csv
from .study.runner import misspecification_study, request_shutdown, run_study
from .utils.manifest import RunManifest, manifest_path

INFER_SCHEMA = 'poolselect.infer/1'
FAILURE_THRESHOLD = 0.05

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4
EXIT_INTERRUPTED = 130

shutdown_requested = False


def signal_handler(signum, frame):
    """First SIGINT/SIGTERM stops studies between replicates; a second one aborts."""
    global shutdown_requested

    signal_name = signal.Signals(signum).name
    if shutdown_requested:
        logger.warning(f"Received {signal_name} again. Aborting.")
        raise KeyboardInterrupt
    logger.info(f"Received {signal_name} signal. Finishing the current replicate...")
    shutdown_requested = True
    request_shutdown()


def configure_logging(level=None):
    level = (level or os.getenv('POOLSELECT_LOG_LEVEL') or 'INFO').upper()
    logger.remove()
    logger.add(sys.stderr, level=level)


def parse_float_list(text, what):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigurationError(f"{what} must be a comma-separated list of numbers, got {text!r}")


def parse_contrast(text, names):
    """'x1:1,x3:-1' -> {'x1': 1.0, 'x3': -1.0}."""
    weights = {}
    for term in text.split(','):
        name, sep, weight = term.strip().partition(':')
        if not sep:
            raise ConfigurationError(f"Contrast term {term!r} must look like name:weight")
        if name not in names:
            raise ConfigurationError(f"Contrast names unknown covariate {name!r}")
        try:
            weights[name] = weights.get(name, 0.0) + float(weight)
        except ValueError:
            raise ConfigurationError(f"Contrast weight {weight!r} is not a number")
    return weights


def default_truth_path(out):
    out = Path(out)
    return out.with_name(f"{out.stem}_truth.csv")


def load_config(args):
    return ConfigParser(resolve_config_file(getattr(args, 'config', None)))


def cmd_simulate(args):
    if args.theta:
        values = parse_float_list(args.theta, '--theta')
        if len(values) != args.p + 1:
            raise ConfigurationError(f"--theta needs p+1={args.p + 1} values (intercept first), got {len(values)}")
        theta = Coefficients.from_vector(values)
    else:
        theta = default_theta(args.p)
    cfg = DgpConfig(n=args.n, p=args.p, theta_true=theta, pool_size=args.pool_size,
                    se=args.se, sp=args.sp, seed=args.seed)
    simulated = simulate_dataset(cfg)
    data = simulated.dataset

    out = Path(args.out)
    truth = Path(args.truth) if args.truth else default_truth_path(out)
    write_dataset_csv(data, out)
    write_truth_csv(simulated.y_true, truth, row_order=np.concatenate(data.pools))
    logger.info(f"Wrote {data.n} rows in {data.n_pools} pools to {out} (truth: {truth})")

    manifest = RunManifest('simulate', cfg.to_dict(), args.seed, __version__)
    manifest.add_outputs([out, truth])
    manifest.write(manifest_path(out))
    return EXIT_OK


def default_lambda_bounds(data):
    if data.n in GRID_BOUNDS:
        return GRID_BOUNDS[data.n]
    top = lambda_max(e_step_group(initial_coefficients(data), data), data.X)
    if top <= 0:
        raise ConfigurationError("Cannot derive a lambda range for this dataset; pass --lambda-range")
    return top / 50.0, top


def coefficient_table(theta, names):
    return {'intercept': float(theta.alpha), 'coefficients': {names[j]: float(theta.beta[j]) for j in range(theta.p)}}


def cmd_infer(args):
    config = load_config(args)
    settings = config.get_fit_settings()
    data = read_dataset_csv(args.data, args.se, args.sp)
    names = data.covariate_names
    contrasts = [parse_contrast(text, names) for text in args.contrast or []]
    logger.info(f"Loaded {data.n} rows in {data.n_pools} pools with {data.p} covariates from {args.data}")

    lambda_selection = None
    if args.lam in ('aic', 'bic'):
        bounds = parse_float_list(args.lambda_range, '--lambda-range') if args.lambda_range \
            else default_lambda_bounds(data)
        if len(bounds) != 2:
            raise ConfigurationError("--lambda-range needs exactly two values LOW,HIGH")
        choice = choose_lambda(data, lambda_grid(data.n, args.grid_size, bounds), args.lam, settings)
        fit = choice.fit
        lambda_selection = {
            'criterion': choice.criterion,
            'grid': list(choice.grid),
            'aic': list(choice.aic),
            'bic': list(choice.bic),
        }
    else:
        try:
            lam = float(args.lam)
        except ValueError:
            raise ConfigurationError(f"--lambda must be a number, 'aic' or 'bic', got {args.lam!r}")
        fit = em_fit(data, lam, settings=settings)

    model = fit.model
    kkt = kkt_check(fit, data)
    aic, bic = aic_bic(fit.submodel(), data)
    methods = ('selective', 'naive', 'split') if args.method == 'all' else (args.method,)
    report = {
        'schema': INFER_SCHEMA,
        'version': __version__,
        'data': str(args.data),
        'n': data.n,
        'n_pools': data.n_pools,
        'se': data.se,
        'sp': data.sp,
        'lambda': fit.lam,
        'lambda_selection': lambda_selection,
        'level': args.level,
        'method': args.method,
        'information': args.information,
        'em': {'iterations': fit.iterations, 'converged': fit.converged,
               'm_step_converged': fit.m_step_converged},
        'kkt': {'ok': bool(kkt.ok), 'stationarity_gap': float(kkt.stationarity_gap),
                'max_inactive': float(kkt.max_inactive)},
        'aic': aic,
        'bic': bic,
        'model': [names[j] for j in model],
        'signs': [int(s) for s in fit.signs],
        'theta_hat': coefficient_table(fit.theta_hat, names),
        'theta_bar': None,
        'intervals': [],
        'contrasts': [],
    }

    estimate = None
    if 'selective' in methods and model:
        estimate = build_post_selection_estimate(fit, data, args.information)
        report['theta_bar'] = {
            'intercept': float(estimate.theta_bar.alpha),
            'coefficients': {names[j]: float(b) for j, b in zip(model, estimate.beta_bar)},
        }
        report['intervals'] += [iv.to_dict() for iv in selective_intervals(estimate, data, args.level)]
    if 'naive' in methods:
        report['intervals'] += [iv.to_dict() for iv in naive_ci(fit, data, args.level, settings, args.information)]
    if 'split' in methods:
        split = split_inference_detailed(data, fit.lam, args.level, args.seed, settings=settings)
        report['split'] = {'model': [names[j] for j in split.model], 'attempt': split.attempt,
                           'seed': args.seed}
        report['intervals'] += [iv.to_dict() for iv in split.intervals]

    refit = None
    for weights in contrasts:
        label = ','.join(f"{name}:{w:g}" for name, w in weights.items())
        positions = {names[j]: k for k, j in enumerate(model)}
        if any(name not in positions for name in weights):
            report['contrasts'].append({'target': label, 'estimable': False,
                                        'reason': 'involves an unselected covariate'})
            continue
        xi = np.zeros(len(model))
        for name, w in weights.items():
            xi[positions[name]] = w
        entry = {'target': label, 'estimable': True, 'intervals': []}
        if estimate is not None:
            trunc = truncation_interval(estimate, xi)
            entry['intervals'].append(selective_ci(estimate, trunc, args.level, target=label).to_dict())
        if 'naive' in methods:
            refit = refit or unpenalized_refit(data, model, fit.submodel(), settings, args.information)
            entry['intervals'].append(contrast_wald_interval(refit, xi, args.level, label).to_dict())
        report['contrasts'].append(entry)

    if not model:
        logger.info("The selected model is empty; the coefficient table is empty")
    out = write_json(report, args.out)
    manifest = RunManifest('infer', {k: v for k, v in vars(args).items() if k != 'handler'},
                           args.seed, __version__)
    manifest.add_inputs([args.data])
    manifest.add_outputs([out])
    manifest.write(manifest_path(out))
    logger.info(f"Wrote inference report for model {report['model']} to {out}")
    return EXIT_OK


def cmd_study(args):
    config = load_config(args)
    settings = config.get_study_settings()
    fit_settings = config.get_fit_settings()
    preset = get_preset(args.preset)
    replicates = args.replicates or int(settings['replicates'])
    seed = args.seed if args.seed is not None else int(settings['seed'])
    threads = args.threads or int(settings['threads'])
    information = args.information or settings['information']
    level = float(settings['level'])
    out_dir = Path(args.out_dir)
    cases = [c for c in preset.cases if not args.cases or c.name in args.cases]
    if not cases:
        raise ConfigurationError(f"No case of preset {preset.name} matches {args.cases}")

    reports, outputs = {}, []
    for case in cases:
        cfg = case.dgp(seed)
        grid = lambda_grid(case.n, int(settings['grid_size'])) if 'grid_size' in settings else preset.grid(case)
        common = dict(threads=threads, level=level, information=information,
                      fit_settings=fit_settings, progress=not args.no_progress)
        logger.info(f"[{preset.name}/{case.name}] n={case.n}, m={case.pool_size}, replicates={replicates}")
        if case.assumed is not None:
            report = misspecification_study(cfg, case.assumed[0], case.assumed[1], grid, replicates,
                                            preset.methods, seed, **common)
        else:
            report = run_study(cfg, grid, replicates, preset.methods, seed, **common)
        reports[case.name] = report
        stem = out_dir / f"{preset.name}_{case.name}"
        outputs.append(write_study_json(report, stem.with_suffix('.json')))
        outputs.append(write_tidy_csv(report, stem.with_suffix('.csv')))

    checks = evaluate_checks(preset, reports)
    outputs.append(write_summary_json(preset, reports, checks, out_dir / f"{preset.name}_summary.json"))
    print(format_summary(preset, reports, checks))

    manifest = RunManifest('study', {'preset': preset.name, 'cases': [c.name for c in cases],
                                     'replicates': replicates, 'threads': threads, 'level': level,
                                     'information': information, 'fit': vars(fit_settings)},
                           seed, __version__)
    manifest.add_outputs(outputs)
    manifest.write(out_dir / f"{preset.name}.manifest.json")

    worst = max(report.failure_fraction for report in reports.values())
    if worst > FAILURE_THRESHOLD:
        logger.error(f"{worst:.1%} of replicate evaluations failed (threshold {FAILURE_THRESHOLD:.0%})")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_pool(args):
    data = read_dataset_csv(args.data, args.se, args.sp)
    pooled = pool_individual_data(data, args.pool_size, args.se, args.sp, args.seed)
    out = write_dataset_csv(pooled, args.out)
    logger.info(f"Pooled {pooled.n} subjects into {pooled.n_pools} pools of size {args.pool_size}: {out}")
    manifest = RunManifest('pool', {'pool_size': args.pool_size, 'se': args.se, 'sp': args.sp},
                           args.seed, __version__)
    manifest.add_inputs([args.data])
    manifest.add_outputs([out])
    manifest.write(manifest_path(out))
    return EXIT_OK


def level_type(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"level must lie in (0, 1), got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog='poolselect', description="Selective inference for pooled-testing LASSO")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--log-level', type=str, help='Log level (default: INFO or POOLSELECT_LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', required=True)

    sim = sub.add_parser('simulate', help='Draw a dataset from the logistic pooled-testing model')
    sim.add_argument('--n', type=int, default=1000)
    sim.add_argument('--p', type=int, default=10)
    sim.add_argument('--theta', type=str, help='Comma list alpha,beta_1,...,beta_p')
    sim.add_argument('--pool-size', type=int, default=1)
    sim.add_argument('--se', type=float, default=0.95)
    sim.add_argument('--sp', type=float, default=0.97)
    sim.add_argument('--seed', type=int, default=0)
    sim.add_argument('--out', type=str, required=True, help='Dataset CSV path')
    sim.add_argument('--truth', type=str, help='Truth CSV path (default: <out>_truth.csv)')
    sim.set_defaults(handler=cmd_simulate)

    inf = sub.add_parser('infer', help='Fit the penalized model and report confidence intervals')
    inf.add_argument('--data', type=str, required=True)
    inf.add_argument('--lambda', dest='lam', type=str, required=True, help="Penalty value, 'aic' or 'bic'")
    inf.add_argument('--level', type=level_type, default=0.95)
    inf.add_argument('--method', choices=('selective', 'naive', 'split', 'all'), default='selective')
    inf.add_argument('--se', type=float, required=True)
    inf.add_argument('--sp', type=float, required=True)
    inf.add_argument('--seed', type=int, default=0, help='Seed for the data split')
    inf.add_argument('--information', choices=('louis', 'sandwich'), default='louis')
    inf.add_argument('--contrast', action='append', help="Linear contrast such as 'x1:1,x3:-1' (repeatable)")
    inf.add_argument('--grid-size', type=int, default=25)
    inf.add_argument('--lambda-range', type=str, help='LOW,HIGH for --lambda aic|bic')
    inf.add_argument('--config', type=str, help='Path to config file')
    inf.add_argument('--out', type=str, required=True)
    inf.set_defaults(handler=cmd_infer)

    st = sub.add_parser('study', help='Run a Monte Carlo study preset')
    st.add_argument('--preset', choices=sorted(PRESETS), required=True)
    st.add_argument('--replicates', type=int)
    st.add_argument('--seed', type=int)
    st.add_argument('--threads', type=int, help='Worker processes (overrides config)')
    st.add_argument('--cases', nargs='+', help='Subset of preset cases, e.g. m1 n2000_m4')
    st.add_argument('--information', choices=('louis', 'sandwich'))
    st.add_argument('--config', type=str, help='Path to config file')
    st.add_argument('--no-progress', action='store_true')
    st.add_argument('--out-dir', type=str, required=True)
    st.set_defaults(handler=cmd_study)

    pool = sub.add_parser('pool', help='Randomly pool an individual-testing dataset')
    pool.add_argument('--data', type=str, required=True)
    pool.add_argument('--pool-size', type=int, required=True)
    pool.add_argument('--se', type=float, default=0.95)
    pool.add_argument('--sp', type=float, default=0.97)
    pool.add_argument('--seed', type=int, default=0)
    pool.add_argument('--out', type=str, required=True)
    pool.set_defaults(handler=cmd_pool)
    return parser


def main(argv=None):
    global shutdown_requested
    shutdown_requested = False

    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    logger.debug(f"poolselect {args.command} started. PID: {os.getpid()}")

    previous = {sig: signal.signal(sig, signal_handler) for sig in (signal.SIGINT, signal.SIGTERM)}

    try:
        return args.handler(args)
    except (DatasetValidationError, ConfigurationError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except StudyInterrupted as e:
        logger.warning(str(e))
        return EXIT_INTERRUPTED
    except (NumericalError, ArithmeticError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return EXIT_INTERRUPTED
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)


if __name__ == "__main__":
    sys.exit(main())
