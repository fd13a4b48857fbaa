#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Run configuration, random streams and run manifests

A run is described by a JSON file with the sections

    {"grid": {...}, "jets": {...}, "episode": {...}, "ddpg": {...},
     "evaluation": {...}, "continuation": {...}, "lqr": {...},
     "seed": 0, "out": "runs/example"}

Missing keys take their default value, unknown keys are rejected.
"""

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from typing import Tuple

import numpy as np

from .errors import ConfigurationError
from .spectral import GridConfig
from .actuation import JetArray
from .environment import EpisodeConfig
from .rlcore import DdpgConfig

logger = logging.getLogger(__name__)

# named random streams, derived from the run seed
STREAMS = ('init', 'ic', 'ou', 'sampling', 'env', 'library')


@dataclass(frozen=True)
class EvaluationConfig:
    '''ensemble evaluation settings

    domain_lengths : domains of the transfer evaluation (no retraining)
    '''
    n_initial_conditions: int = 100
    workers: int = 1
    domain_lengths: Tuple[float, ...] = (21., 23.)

    def __post_init__(self):
        object.__setattr__(self, 'domain_lengths', tuple(float(L) for L in self.domain_lengths))
        if self.n_initial_conditions < 1 or self.workers < 1:
            raise ConfigurationError('n_initial_conditions and workers should be >= 1')


@dataclass(frozen=True)
class ContinuationConfig:
    '''Newton and continuation settings

    search_time : length of the unforced run scanned for Newton seeds
    L_end : target length of the domain continuation
    '''
    tol: float = 1e-10
    max_iter: int = 50
    forcing_steps: int = 20
    domain_steps: int = 20
    L_end: float = 22.
    search_time: float = 500.
    n_seeds: int = 20
    mean_action_windows: int = 200

    def __post_init__(self):
        if not self.tol > 0 or self.max_iter < 1:
            raise ConfigurationError('need tol > 0 and max_iter >= 1')
        if self.forcing_steps < 1 or self.domain_steps < 1:
            raise ConfigurationError('continuation step counts should be >= 1')


@dataclass(frozen=True)
class LqrConfig:
    '''LQR experiment: perturbation size, horizon, and the stability margin
    used to shift a non stabilizable linearization'''
    perturbation: float = 1e-2
    T_end: float = 100.
    shift_margin: float = 0.05

    def __post_init__(self):
        if not self.T_end > 0:
            raise ConfigurationError('T_end should be > 0')


_SECTIONS = {'grid': GridConfig, 'jets': JetArray, 'episode': EpisodeConfig,
             'ddpg': DdpgConfig, 'evaluation': EvaluationConfig,
             'continuation': ContinuationConfig, 'lqr': LqrConfig}


def _section_from_dict(cls, name, values):
    if not isinstance(values, dict):
        raise ConfigurationError('config section "{:s}" should be an object'.format(name))
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError('unknown key(s) in config section "{:s}": {:s}'.format(
                                 name, ', '.join(unknown)))
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError('invalid config section "{:s}": {}'.format(name, e))


@dataclass(frozen=True)
class RunConfig:
    '''complete description of a run'''
    grid: GridConfig = field(default_factory=GridConfig)
    jets: JetArray = field(default_factory=JetArray)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    continuation: ContinuationConfig = field(default_factory=ContinuationConfig)
    lqr: LqrConfig = field(default_factory=LqrConfig)
    seed: int = 0
    out: str = 'runs'

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigurationError('seed should be a non negative integer, '
                                     'not {!r}'.format(self.seed))

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigurationError('run config should be a JSON object')
        unknown = sorted(set(d) - set(_SECTIONS) - {'seed', 'out'})
        if unknown:
            raise ConfigurationError('unknown config key(s): {:s}'.format(', '.join(unknown)))
        kwargs = {name: _section_from_dict(sec_cls, name, d[name])
                  for name, sec_cls in _SECTIONS.items() if name in d}
        for key in ('seed', 'out'):
            if key in d:
                kwargs[key] = d[key]
        return cls(**kwargs)

    def to_dict(self):
        '''canonical form (JSON serializable)'''
        return json.loads(json.dumps(asdict(self)))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_mode(self, mode):
        return self.replace(episode=dataclasses.replace(self.episode, mode=mode))

    @property
    def config_hash(self):
        '''16 hex digits of the SHA-256 of the canonical JSON (seed and out excluded)'''
        d = self.to_dict()
        del d['seed'], d['out']
        canonical = json.dumps(d, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]

    def print_summary(self):
        print('Run config {:s} (seed {:d}, output in {:s})'.format(
              self.config_hash, self.seed, self.out))
        for name in _SECTIONS:
            print('* {:s}: {}'.format(name, getattr(self, name)))
    # end print_summary()
# end RunConfig


def load_config(path):
    '''RunConfig from a JSON file'''
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError('cannot read config file {:s}: {}'.format(str(path), e))
    return RunConfig.from_dict(d)


def save_config(path, cfg):
    with open(path, 'w') as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)


def seed_sequence(seed, name):
    '''SeedSequence of the named stream of run `seed`'''
    if name not in STREAMS:
        raise ConfigurationError('unknown random stream {!r}'.format(name))
    return np.random.SeedSequence(seed, spawn_key=(STREAMS.index(name),))


def rng_streams(seed):
    '''dict of independent numpy Generators, one per named stream'''
    return {name: np.random.default_rng(seed_sequence(seed, name)) for name in STREAMS}


def write_manifest(out_dir, cfg, command, extra=None):
    '''manifest.json: config, config hash, seed, command, version, UTC time'''
    from . import __version__
    os.makedirs(out_dir, exist_ok=True)
    manifest = {'command': command,
                'config': cfg.to_dict(),
                'config_hash': cfg.config_hash,
                'seed': cfg.seed,
                'version': __version__,
                'utc_time': datetime.now(timezone.utc).isoformat()}
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, 'manifest.json')
    with open(path, 'w') as fh:
        json.dump(manifest, fh, indent=2, default=float)
    logger.debug('manifest written to %s', path)
    return path
