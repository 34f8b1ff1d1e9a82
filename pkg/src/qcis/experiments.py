"""Bodies of the command-line experiments. Each returns the process exit code."""
import csv
import json
import logging
import platform
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np
from tqdm import tqdm

from src.qcis.constants import DEFAULT_C
from src.qcis.estimator import derive_config, extract_pair
from src.qcis.gaussian_core import StatePrepParams, max_mode_energy, moments_from_state, random_params, \
    state_from_params
from src.qcis.protocol import BudgetError, ProtocolRun, SeriesOracle, pair_pauli_vector, run_protocol
from src.qcis.shadows import SyntheticNoiseSource
from src.qcis.transduction import build_pair_map, shift
from src.qcis.validation import run_checks

EXIT_OK = 0
EXIT_NUMERICAL = 2


def _fmt(value):
    return f'{value:.17g}' if isinstance(value, float) else str(value)


def write_csv(path, header, rows):
    with Path(path).open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows([[_fmt(v) for v in row] for row in rows])


def package_versions():
    versions = {'python': platform.python_version()}
    for package in ('numpy', 'scipy', 'click', 'tqdm', 'python-dotenv'):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = None
    return versions


def write_manifest(out_dir, command, cfg, runtime_seconds):
    path = Path(out_dir) / f'{command}_manifest.json'
    manifest = {
        'command': command,
        'config': cfg.to_dict(),
        'seed': cfg.seed,
        'versions': package_versions(),
        'runtime_seconds': runtime_seconds,
    }
    with path.open('w') as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
    return path


def _energy_bound(cfg, state):
    return cfg.E_max if cfg.E_max is not None else max_mode_energy(state)


def derived_config(cfg, E_max, n_modes):
    return derive_config(E_max, cfg.eps, cfg.delta, n_modes, C=cfg.C or DEFAULT_C, c_eps=cfg.c_eps, K=cfg.K,
                         gt_override=cfg.gt, rounds_override=cfg.rounds)


def run_convergence(cfg, out_dir, logger):
    params = cfg.prep_params()
    if params.n_modes != 2:
        raise ValueError(f'convergence runs on two modes, got {params.n_modes}')
    state = state_from_params(params)
    truth = moments_from_state(state).pair_slice(0, 1)
    est_cfg = cfg.estimator_config(_energy_bound(cfg, state))
    pair_map = build_pair_map(est_cfg.gt, est_cfg.gt)
    logger.info(f'Convergence run: E_max = {est_cfg.E_max:.4f}, gt = {est_cfg.gt:.4g}, {est_cfg.rounds} rounds, '
                f'Paulis from {cfg.pauli_source}')

    raw = pair_pauli_vector(params, est_cfg.gt, cfg.pauli_source, cfg.n_trunc)
    if cfg.sampling == 'synthetic':
        labels = [str(i) for i in range(len(raw))]
        noisy = SyntheticNoiseSource(dict(zip(labels, raw)), est_cfg.eps_prime).estimates(
            labels, np.random.default_rng(cfg.seed))
        raw = np.array([noisy[label].estimate for label in labels])
    _, trace = extract_pair(shift(raw, pair_map.frame_couplings), pair_map, est_cfg, truth=truth)
    trace.write_csv(Path(out_dir) / 'convergence.csv')

    for entry in trace.rounds:
        logger.info(f'round {entry.round}: residual {entry.residual:.3e}, mean error {entry.mean_err:.3e}, '
                    f'moment error {entry.cov_err:.3e}')
    final = trace.final.max_err
    if trace.diverged:
        logger.error('Iteration diverged')
        return EXIT_NUMERICAL
    if final > cfg.threshold:
        logger.error(f'Final error {final:.3e} above threshold {cfg.threshold:.1e}')
        return EXIT_NUMERICAL
    return EXIT_OK


def _map_points(function, points, threads, debug):
    progress = tqdm(total=len(points), disable=not debug)
    results = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            for result in executor.map(function, points):
                results.append(result)
                progress.update()
    else:
        for point in points:
            results.append(function(point))
            progress.update()
    progress.close()
    return results


def _summarize(errors):
    errors = np.asarray(errors)
    return float(np.median(errors)), float(np.quantile(errors, 0.9))


def _sweep_points(cfg):
    """(params, budget, label) per grid value of the configured sweep."""
    if cfg.sweep == 'T':
        params = cfg.prep_params()
        return [(params, int(budget), int(budget)) for budget in cfg.t_grid]
    if cfg.sweep == 'n':
        rng = np.random.default_rng(cfg.state_seed if cfg.state_seed is not None else cfg.seed)
        return [(random_params(int(n), rng), None, int(n)) for n in cfg.n_grid]
    if cfg.sweep == 'energy':
        budget = cfg.budget or int(cfg.t_grid[0])
        return [(StatePrepParams(thermal=(float(e) - 0.5,) * cfg.n_modes), budget, float(e)) for e in cfg.energy_grid]
    raise ValueError(f'Unknown sweep {cfg.sweep!r}, expected T, n or energy')


def run_sample_complexity(cfg, out_dir, logger):
    points = _sweep_points(cfg)
    prepared = []
    for params, budget, label in points:
        state = state_from_params(params)
        moments = moments_from_state(state)
        E_max = _energy_bound(cfg, state) if cfg.sweep != 'energy' else label
        if budget is None:
            est_cfg, sample_budget = derived_config(cfg, E_max, params.n_modes)
            budget = sample_budget.total
        else:
            est_cfg = cfg.estimator_config(E_max)
        oracle = SeriesOracle(moments, est_cfg.gt)
        prepared.append((params, moments, est_cfg, oracle, budget, label))

    tasks = [(index, trial) for index in range(len(prepared)) for trial in range(cfg.trials)]
    streams = np.random.SeedSequence(cfg.seed).spawn(len(tasks))

    def trial_error(task_stream):
        (index, _), stream = task_stream
        params, moments, est_cfg, oracle, budget, _ = prepared[index]
        run = ProtocolRun(mode='pairwise-oracle', sampling='shadows', budget=budget, delta=cfg.delta)
        estimate, _ = run_protocol(params, est_cfg, np.random.default_rng(stream), run, oracle=oracle)
        return estimate.max_error(moments.gamma)

    debug = logger.isEnabledFor(logging.DEBUG)
    errors = _map_points(trial_error, list(zip(tasks, streams)), cfg.threads, debug)

    rows = []
    for index, (params, _, _, _, budget, label) in enumerate(prepared):
        median, q90 = _summarize(errors[index * cfg.trials:(index + 1) * cfg.trials])
        logger.info(f'{cfg.sweep} = {label}: T = {budget}, median error {median:.3e}, q90 {q90:.3e}')
        if cfg.sweep == 'n':
            rows.append([label, budget, median, q90])
        else:
            rows.append([label, median, q90])
    header = {'T': ['T', 'median_err', 'q90_err'],
              'n': ['n', 'T', 'median_err', 'q90_err'],
              'energy': ['E_max', 'median_err', 'q90_err']}[cfg.sweep]
    path = Path(out_dir) / f'sample_complexity_{cfg.sweep}.csv'
    write_csv(path, header, rows)
    logger.info(f'Wrote {len(rows)} sweep points to {path}')
    return EXIT_OK


def run_protocol_command(cfg, out_dir, logger):
    params = cfg.prep_params()
    state = state_from_params(params)
    E_max = _energy_bound(cfg, state)
    budget = cfg.budget
    if budget is None:
        est_cfg, sample_budget = derived_config(cfg, E_max, params.n_modes)
        budget = sample_budget.total
        logger.info(f'Sample budget: {sample_budget.n_states} states x {sample_budget.per_state} copies '
                    f'= {budget} (reference scaling {sample_budget.reference:.3g})')
    else:
        est_cfg = cfg.estimator_config(E_max)

    run = ProtocolRun(mode=cfg.mode, sampling=cfg.sampling, budget=budget, delta=cfg.delta, n_trunc=cfg.n_trunc,
                      threads=cfg.threads, use_median=cfg.use_median, record_dir=out_dir if cfg.records else None)
    try:
        estimate, moments = run_protocol(params, est_cfg, np.random.default_rng(cfg.seed), run, logger=logger)
    except BudgetError as error:
        raise ValueError(str(error)) from error
    estimate.config.update(cfg.to_dict())
    estimate.write_json(Path(out_dir) / 'estimate.json')

    errors = np.abs(estimate.gamma_hat - moments.gamma)
    n_means = 2 * params.n_modes
    logger.info(f'{"part":<8}{"max error":>14}{"mean error":>14}')
    logger.info(f'{"means":<8}{errors[:n_means].max():>14.3e}{errors[:n_means].mean():>14.3e}')
    logger.info(f'{"moments":<8}{errors[n_means:].max():>14.3e}{errors[n_means:].mean():>14.3e}')
    logger.info(f'{"spread":<8}{estimate.spread.max():>14.3e}{estimate.spread.mean():>14.3e}')
    if estimate.diverged_pairs:
        logger.error(f'Pairs {estimate.diverged_pairs} diverged')
        return EXIT_NUMERICAL
    return EXIT_OK


def run_validate(cfg, out_dir, logger):
    results = run_checks(cfg, logger=logger)
    write_csv(Path(out_dir) / 'validation.csv', ['check', 'measured', 'threshold', 'passed'],
              [[r.name, r.measured, r.threshold, r.passed] for r in results])
    for result in results:
        status = 'PASS' if result.passed else 'FAIL'
        logger.info(f'{status} {result.name:<24} measured {result.measured:.3e} threshold {result.threshold:.1e}')
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error(f'Failed checks: {", ".join(failed)}')
        return EXIT_NUMERICAL
    return EXIT_OK


COMMANDS = {
    'convergence': run_convergence,
    'sample-complexity': run_sample_complexity,
    'protocol': run_protocol_command,
    'validate': run_validate,
}
