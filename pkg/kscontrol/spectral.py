#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Pseudospectral Kuramoto-Sivashinsky solver

Forced KS equation on a periodic domain of length L

    u_t = -u u_x - u_xx - u_xxxx + f(x)

discretized by Fourier collocation on `n_points` equispaced points
x_j = j L / n_points, and advanced in time with a three stage
implicit-explicit Runge-Kutta scheme (implicit Crank-Nicolson type
solves for the linear terms, explicit stages for the nonlinear and
forcing terms).

Representations used throughout the package:

* real field : float array of length n_points (u at the collocation points)
* spectral field : complex array of length n_points/2+1, F = rfft(u)/n_points
  so that F[0] is the spatial mean and u = cos(2pi x/L) has F[1] = 1/2.

classes : GridConfig, Stepper
"""

from __future__ import division, print_function
import json
import logging
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigurationError, IntegrationDiverged

logger = logging.getLogger(__name__)

# max |u| beyond which an integration is considered to have blown up
DIVERGENCE_THRESHOLD = 1e3

# Three stage IMEX Runge-Kutta coefficients (Spalart, Moser & Rogers).
# Stage i: explicit weights (alpha_i, beta_i) on N_{i-1}, N_{i-2}
# and implicit weight (alpha_i + beta_i)/2 on both ends of the stage.
RK3_ALPHA = (8/15, 5/12, 3/4)
RK3_BETA = (0., -17/60, -5/12)


@dataclass(frozen=True)
class GridConfig:
    '''Spatial and temporal discretization of the KS domain

    L : domain length
    n_points : number of collocation points (even, >= 16)
    dt : time step
    dealias : apply the 2/3 rule to the nonlinear term
    '''
    L: float = 22.
    n_points: int = 64
    dt: float = 0.05
    dealias: bool = False

    def __post_init__(self):
        if not (isinstance(self.n_points, (int, np.integer))
                and self.n_points >= 16 and self.n_points % 2 == 0):
            raise ConfigurationError('n_points should be an even integer >= 16, '
                                     'not {!r}'.format(self.n_points))
        if not self.L > 0:
            raise ConfigurationError('domain length L should be > 0, '
                                     'not {!r}'.format(self.L))
        if not self.dt > 0:
            raise ConfigurationError('time step dt should be > 0, '
                                     'not {!r}'.format(self.dt))

    @property
    def n_modes(self):
        '''number of one-sided Fourier modes n_points/2+1'''
        return self.n_points//2 + 1

    @property
    def x(self):
        '''collocation points x_j = j L / n_points'''
        return np.arange(self.n_points) * self.L / self.n_points

    @property
    def dx(self):
        return self.L / self.n_points

    def wavenumbers(self):
        '''spatial wavenumbers q_k = 2 pi k / L, k = 0..n_points/2'''
        return 2*np.pi/self.L * np.arange(self.n_modes)

    def steps_in(self, duration):
        '''number of time steps in `duration`, which should be a multiple of dt'''
        n = int(round(duration / self.dt))
        if n < 0 or abs(n*self.dt - duration) > 1e-9*max(1., abs(duration)):
            raise ConfigurationError('duration {:g} is not a multiple of dt={:g}'.format(
                                     duration, self.dt))
        return n

    def replace(self, **changes):
        '''copy of the grid with some fields changed'''
        params = asdict(self)
        params.update(changes)
        return GridConfig(**params)
# end GridConfig


################################################################################
# Transforms and spectral operators

def _check_length(arr, length, name):
    if arr.shape[-1] != length:
        raise ConfigurationError('array `{:s}` should be of length {:d}, not {:d}'.format(
                                 name, length, arr.shape[-1]))


def to_spectral(u, grid):
    '''one-sided Fourier coefficients F_k, k = 0..n/2, of the real field `u`

    `u` may also be a stack of fields (last axis is space).
    '''
    u = np.asarray(u, dtype=float)
    _check_length(u, grid.n_points, 'u')
    return np.fft.rfft(u, axis=-1) / grid.n_points


def from_spectral(F, grid):
    '''real field on the collocation points from its coefficients `F`'''
    F = np.asarray(F, dtype=complex)
    _check_length(F, grid.n_modes, 'F')
    return np.fft.irfft(F * grid.n_points, n=grid.n_points, axis=-1)


def derivative_symbol(grid, order):
    '''Fourier symbol (i q)^order of the spatial derivative of `order`

    The Nyquist wavenumber is zeroed for odd orders, so that derivatives
    of real fields stay real.
    '''
    symb = (1j * grid.wavenumbers())**order
    if order % 2 == 1:
        symb[-1] = 0.
    return symb


def dealias_mask(grid):
    '''2/3 rule mask: keeps modes k <= n_points/3'''
    k = np.arange(grid.n_modes)
    return (k <= grid.n_points//3).astype(float)


def linear_symbol(grid):
    '''lambda_k = q^2 - q^4 of the linear operator -d_xx - d_xxxx'''
    q = grid.wavenumbers()
    return q**2 - q**4


def nonlinear_term(F, grid, mask=None):
    '''Fourier transform of -u u_x

    evaluated in the conservative form -(u^2)_x / 2: product on the grid,
    derivative in Fourier space. `mask` (if not None) is applied
    to the input and to the output (dealiasing).
    '''
    if mask is None and grid.dealias:
        mask = dealias_mask(grid)
    if mask is not None:
        F = F * mask
    u = from_spectral(F, grid)
    N = -0.5 * derivative_symbol(grid, 1) * to_spectral(u*u, grid)
    if mask is not None:
        N *= mask
    return N


################################################################################
# Time stepping

class Stepper(object):
    '''Semi-implicit time stepper of the forced KS equation

    Holds the precomputed per-mode implicit-stage factors of the
    three stage IMEX Runge-Kutta scheme for a given `grid`.
    Steppers are immutable after construction.
    '''
    def __init__(self, grid, name=''):
        self.grid = grid
        self.name = name
        self.linear_symbol = linear_symbol(grid)
        self.dealias_mask = dealias_mask(grid) if grid.dealias else None
        dt = grid.dt
        lam = self.linear_symbol
        self._rhs_factor = []
        self._inv_lhs = []
        for alpha, beta in zip(RK3_ALPHA, RK3_BETA):
            half = 0.5 * dt * (alpha + beta)
            self._rhs_factor.append(1 + half*lam)
            self._inv_lhs.append(1 / (1 - half*lam))
        for arr in self._rhs_factor + self._inv_lhs + [self.linear_symbol]:
            arr.setflags(write=False)

    def nonlinear(self, F):
        return nonlinear_term(F, self.grid, self.dealias_mask)

    def step(self, F, f_hat=None):
        '''advance the spectral state `F` by one dt

        `f_hat` is the (spectral) forcing, held constant over the step.
        Raises IntegrationDiverged on non finite values or if
        max|u| exceeds DIVERGENCE_THRESHOLD.
        '''
        dt = self.grid.dt
        y = F
        N_prev = 0.
        for i in range(3):
            N = self.nonlinear(y)
            if f_hat is not None:
                N = N + f_hat
            explicit = RK3_ALPHA[i]*N + RK3_BETA[i]*N_prev
            y = (self._rhs_factor[i]*y + dt*explicit) * self._inv_lhs[i]
            N_prev = N
        self._check(y)
        return y

    def _check(self, F, t=None):
        if not np.all(np.isfinite(F)):
            logger.debug('non finite coefficients at t=%s', t)
            raise IntegrationDiverged('non finite Fourier coefficients', time=t)
        max_abs = np.abs(from_spectral(F, self.grid)).max()
        if max_abs > DIVERGENCE_THRESHOLD:
            raise IntegrationDiverged('max|u| = {:.3g} exceeds {:.3g}'.format(
                                      max_abs, DIVERGENCE_THRESHOLD),
                                      time=t, max_abs=max_abs)

    def advance(self, F, n_steps, f=None):
        '''`n_steps` steps from `F` under constant real forcing `f`,
        returning the array of the n_steps+1 sampled states (F included)
        '''
        f_hat = None if f is None else to_spectral(f, self.grid)
        traj = np.empty((n_steps+1, self.grid.n_modes), dtype=complex)
        traj[0] = F
        for i in range(n_steps):
            try:
                traj[i+1] = self.step(traj[i], f_hat)
            except IntegrationDiverged as e:
                if e.time is None:
                    e.time = (i+1) * self.grid.dt
                raise
        return traj

    def print_summary(self):
        '''summary information about the solver'''
        g = self.grid
        print('KS stepper "{}"'.format(self.name))
        print('* domain L = {:g}, {:d} collocation points (dx = {:.4g})'.format(
              g.L, g.n_points, g.dx))
        print('* time step dt = {:g}, 3 stage IMEX Runge-Kutta'.format(g.dt))
        print('* dealiasing: {}'.format('2/3 rule' if g.dealias else 'none'))
        n_unstable = int(np.sum(self.linear_symbol > 0))
        print('* {:d} linearly unstable Fourier modes (q < 1)'.format(n_unstable))
    # end print_summary()

    def __repr__(self):
        return '<Stepper "{:s}" at 0x{:x}>'.format(self.name, id(self))
# end Stepper class


def step(F, f, stepper):
    '''advance spectral state `F` by one time step under real forcing `f`'''
    f_hat = None if f is None else to_spectral(f, stepper.grid)
    return stepper.step(np.asarray(F, dtype=complex), f_hat)


def evolve(F0, schedule, stepper, jets=None):
    '''integrate through a piecewise constant forcing schedule

    `schedule` is a sequence of (action, hold_duration) pairs. Each action
    is turned into a forcing field with `jets.forcing_field` when `jets`
    is given, otherwise it is taken as the real forcing field itself
    (None meaning unforced). Each hold duration should be a multiple of dt.

    Returns the sampled spectral states at every dt, F0 included,
    as an array of shape (n_samples, n_modes).
    '''
    grid = stepper.grid
    F0 = np.asarray(F0, dtype=complex)
    _check_length(F0, grid.n_modes, 'F0')
    pieces = [F0[np.newaxis]]
    F = F0
    t = 0.
    for action, hold in schedule:
        n_steps = grid.steps_in(hold)
        if action is None:
            f = None
        elif jets is not None:
            f = jets.forcing_field(action, grid)
        else:
            f = np.asarray(action, dtype=float)
        try:
            traj = stepper.advance(F, n_steps, f)
        except IntegrationDiverged as e:
            e.time = t + (e.time or 0.)
            raise
        pieces.append(traj[1:])
        F = traj[-1]
        t += n_steps * grid.dt
    return np.concatenate(pieces)


################################################################################
# Diagnostics (spatial averages by Parseval's identity)

def _parseval_weights(grid):
    w = 2*np.ones(grid.n_modes)
    w[0] = 1.
    w[-1] = 1.
    return w


def _mean_product(F, G, grid):
    '''spatial average <u v> from the coefficients of u and v'''
    return np.sum(_parseval_weights(grid) * (F * np.conj(G)).real, axis=-1)


def dissipation(u, grid):
    '''D = <u_xx^2>'''
    Fxx = derivative_symbol(grid, 2) * to_spectral(u, grid)
    return _mean_product(Fxx, Fxx, grid)


def power_input(u, f, grid):
    '''P_f = <u_x^2> + <u f>, u_x without its Nyquist mode'''
    F = to_spectral(u, grid)
    Fx = derivative_symbol(grid, 1) * F
    P = _mean_product(Fx, Fx, grid)
    if f is not None:
        P = P + _mean_product(F, to_spectral(f, grid), grid)
    return P


def energy(u, grid):
    '''E = <u^2/2>'''
    F = to_spectral(u, grid)
    return 0.5 * _mean_product(F, F, grid)


################################################################################
# Initial conditions and trajectory dumps

def smooth_random_field(grid, rng, amplitude=0.1, n_modes=8):
    '''zero mean random field made of the `n_modes` first Fourier modes'''
    F = np.zeros(grid.n_modes, dtype=complex)
    F[1:n_modes+1] = amplitude * (rng.standard_normal(n_modes)
                                  + 1j*rng.standard_normal(n_modes))
    return from_spectral(F, grid)


def sidecar_path(path):
    '''path of the JSON metadata written next to a CSV dump'''
    path = str(path)
    if path.endswith('.csv'):
        path = path[:-4]
    return path + '.json'


def save_trajectory(path, t, U, grid, seed=None, config_hash=None):
    '''write a trajectory dump: CSV `t,x0..x{n-1}` + JSON sidecar

    `U` is the array of real fields, one row per sample time `t`.
    '''
    U = np.atleast_2d(U)
    t = np.asarray(t, dtype=float)
    _check_length(U, grid.n_points, 'U')
    header = ','.join(['t'] + ['x{:d}'.format(j) for j in range(grid.n_points)])
    np.savetxt(path, np.column_stack([t, U]), delimiter=',', header=header,
               comments='', fmt='%.17g')
    meta = {'L': grid.L, 'n_points': grid.n_points, 'dt': grid.dt,
            'seed': seed, 'config_hash': config_hash}
    with open(sidecar_path(path), 'w') as fh:
        json.dump(meta, fh, indent=2)


def load_trajectory(path):
    '''read a trajectory dump, returns (t, U, metadata)'''
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    with open(sidecar_path(path)) as fh:
        meta = json.load(fh)
    return data[:, 0], data[:, 1:], meta
