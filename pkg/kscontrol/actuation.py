#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Gaussian jet actuation

A jet array of N Gaussian jets located at X_i turns an amplitude
vector a into the forcing field

    f(x) = sum_i a_i / sqrt(2 pi sigma_s) exp(-(x - X_i)^2 / (2 sigma_s^2))

where x - X_i is the periodic nearest-image distance.
"""

import functools
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigurationError, ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JetArray:
    '''Array of N Gaussian jets

    positions : jet positions as fractions of the domain length
        (None: equidistant jets at i/N, i.e. X_i = i L / N)
    sigma_s : Gaussian width (length units)
    amp_limit : maximal |a_i| available to the controller
    '''
    N: int = 4
    sigma_s: float = 0.4
    amp_limit: float = 1.
    positions: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ConfigurationError('jet count N should be a positive integer, '
                                     'not {!r}'.format(self.N))
        if not self.sigma_s > 0:
            raise ConfigurationError('jet width sigma_s should be > 0, '
                                     'not {!r}'.format(self.sigma_s))
        if not self.amp_limit > 0:
            raise ConfigurationError('amp_limit should be > 0, '
                                     'not {!r}'.format(self.amp_limit))
        if self.positions is not None:
            pos = tuple(float(p) for p in self.positions)
            if len(pos) != self.N:
                raise ConfigurationError('{:d} jet positions given for N={:d} jets'.format(
                                         len(pos), self.N))
            if any(not 0 <= p < 1 for p in pos):
                raise ConfigurationError('jet positions are fractions of L, '
                                         'expected in [0, 1), got {}'.format(pos))
            object.__setattr__(self, 'positions', pos)

    @classmethod
    def randomly_placed(cls, rng, N=4, **kwargs):
        '''jets at uniformly random positions (sorted)'''
        pos = np.sort(rng.uniform(0, 1, size=N))
        return cls(N=N, positions=tuple(pos), **kwargs)

    @property
    def equidistant(self):
        return self.positions is None

    def fractions(self):
        if self.positions is None:
            return np.arange(self.N) / self.N
        return np.array(self.positions)

    def centers(self, L):
        '''jet positions X_i on a domain of length `L`'''
        return self.fractions() * L

    def check_resolved(self, grid):
        '''raise ConfigurationError if the jets are narrower than 2 grid spacings

        (the width being measured as the full width at half maximum)
        '''
        fwhm = 2*np.sqrt(2*np.log(2)) * self.sigma_s
        if fwhm < 2*grid.dx:
            raise ConfigurationError('jet width sigma_s={:g} is not resolved on a grid '
                                     'of spacing {:g}'.format(self.sigma_s, grid.dx))

    def basis(self, grid):
        '''(n_points, N) matrix of the unit-amplitude jet fields'''
        return _jet_basis(self, grid)

    def forcing_field(self, a, grid):
        return forcing_field(a, self, grid)

    def clip(self, a, factor=1.):
        return clip(a, self, factor)
# end JetArray


@functools.lru_cache(maxsize=32)
def _jet_basis(jets, grid):
    jets.check_resolved(grid)
    x = grid.x[:, np.newaxis]
    X = jets.centers(grid.L)[np.newaxis, :]
    # periodic nearest image distance in [-L/2, L/2)
    d = np.mod(x - X + grid.L/2, grid.L) - grid.L/2
    B = np.exp(-d**2 / (2*jets.sigma_s**2)) / np.sqrt(2*np.pi*jets.sigma_s)
    B.setflags(write=False)
    logger.debug('jet basis for %d jets on L=%g (sigma_s=%g)', jets.N, grid.L, jets.sigma_s)
    return B


def _check_action(a, jets):
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != jets.N:
        raise ShapeMismatchError('action should be of length {:d}, not {:d}'.format(
                                 jets.N, a.shape[-1]))
    return a


def forcing_field(a, jets, grid):
    '''real forcing field of jet amplitudes `a` on `grid`

    `a` may be a stack of actions (last axis: jets).
    '''
    a = _check_action(a, jets)
    return a @ jets.basis(grid).T


def clip(a, jets, factor=1.):
    '''clamp each amplitude to [-factor*amp_limit, factor*amp_limit]'''
    a = _check_action(a, jets)
    lim = factor * jets.amp_limit
    return np.clip(a, -lim, lim)
