# -*- coding: utf-8 -*-
"""Command-line entry point: `convergence`, `sample-complexity`, `protocol` and `validate`."""
import dataclasses
import functools
import logging
import os
import sys
import time
from pathlib import Path

import click
from dotenv import find_dotenv, load_dotenv

from src.qcis.config import ExperimentConfig, load_config, parse_value
from src.qcis.experiments import COMMANDS, EXIT_NUMERICAL, EXIT_OK, write_manifest
from src.qcis.fock_engine import LeakageExceeded
from src.qcis.logs import create_logger
from src.qcis.protocol import CoverageError

EXIT_USAGE = 1

OVERRIDE_TYPES = {int: click.INT, float: click.FLOAT, bool: click.BOOL, str: click.STRING}
# options of their own, or set through --squeeze
SHARED_FIELDS = ('seed', 'out', 'threads', 'squeezing')


def config_options(function):
    """One --key option per configuration field, spelled with _ or -. Untyped fields (tuples) are
    parsed like config file values."""
    for f in reversed(dataclasses.fields(ExperimentConfig)):
        if f.name in SHARED_FIELDS:
            continue
        flags = sorted({f'--{f.name}', f'--{f.name.replace("_", "-")}'})
        function = click.option(*flags, f.name, type=OVERRIDE_TYPES.get(f.type, click.STRING), default=None,
                                help=f'Overrides `{f.name}`')(function)
    return click.option('--squeeze', type=(click.INT, click.INT, click.STRING), multiple=True, metavar='J K Z',
                        help='Squeezer z on modes J, K (1-based); repeatable')(function)


def common_options(function):
    @click.option('-c', '--config', type=click.Path(exists=True, dir_okay=False), help='key = value config file')
    @click.option('--seed', type=int, help='Seed of every random stream of the run')
    @click.option('-o', '--out', type=click.Path(file_okay=False), envvar='QCIS_OUT', help='Output directory')
    @click.option('--threads', type=click.IntRange(min=1), envvar='QCIS_THREADS', help='Worker threads')
    @click.option('-d', '--debug', is_flag=True, help='Debug logging and progress bars')
    @config_options
    @functools.wraps(function)
    def wrapper(**kwargs):
        return function(**kwargs)
    return wrapper


def run_command(command, config, seed, out, threads, debug, squeeze, **settings):
    logger = logging.getLogger('qcis')
    if debug:
        logger.setLevel(logging.DEBUG)
    values = {key: value for key, value in settings.items() if value is not None}
    for j, k, z in squeeze:
        values[f'squeeze_{j}_{k}'] = parse_value(z)
    for key, value in (('seed', seed), ('out', out), ('threads', threads)):
        if value is not None:
            values[key] = value
    cfg = load_config(config, values)

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f'Running {command} with seed {cfg.seed}, writing to {out_dir}')
    start = time.perf_counter()
    code = COMMANDS[command](cfg, out_dir, logger)
    runtime = time.perf_counter() - start
    write_manifest(out_dir, command, cfg, runtime)
    logger.info(f'{command} finished in {runtime:.1f} s with exit code {code}')
    return code


@click.group()
def cli():
    """Learning Gaussian optical states through qubit transduction and classical shadows."""


@cli.command
@common_options
def convergence(**kwargs):
    """Per-round error trace of the iterative inversion on a two-mode state."""
    return run_command('convergence', **kwargs)


@cli.command('sample-complexity')
@common_options
def sample_complexity(**kwargs):
    """Median and 90% quantile of the estimation error over a T, n or energy sweep."""
    return run_command('sample-complexity', **kwargs)


@cli.command
@common_options
def protocol(**kwargs):
    """Estimate every first and second moment of an n-mode state."""
    return run_command('protocol', **kwargs)


@cli.command
@common_options
def validate(**kwargs):
    """Oracle-equivalence and invariant checks; any failure exits with code 2."""
    return run_command('validate', **kwargs)


def main(args=None):
    load_dotenv(find_dotenv())
    logger = create_logger(os.environ.get('QCIS_LOG_LEVEL', 'INFO').upper())
    try:
        code = cli.main(args=args, prog_name='qcis', standalone_mode=False)
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.ClickException as error:
        error.show()
        return EXIT_USAGE
    except (LeakageExceeded, CoverageError) as error:
        logger.error(str(error))
        return EXIT_NUMERICAL
    except (ValueError, OSError) as error:
        logger.error(str(error))
        return EXIT_USAGE
    return EXIT_OK if code is None else code


if __name__ == '__main__':
    sys.exit(main())
