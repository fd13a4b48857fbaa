#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Symmetries of the KS equation with N equidistant jets

Operators act on the interleaved Fourier state vector
F = [b_0, c_0, b_1, c_1, ...] (b_k = Re F_k, c_k = Im F_k):

* shift tau(theta):          F_k <- exp(-i k theta) F_k
* reflection sigma:          F_k <- -conj(F_k), i.e. u(x) -> -u(-x)
* discrete shift tau_N:      F_k <- exp(+i k theta_N) F_k
* reduced reflection sigma_N = exp(i 2 pi k/N) sigma

`reduce` maps a state into the fundamental domain of the 2N-element group
generated by the shift of L/N and the reflection, and records the group
element used in a SymmetryTag. `restore_action` maps an action chosen in
the reduced frame back to the physical frame.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePhaseWarning, ShapeMismatchError, ConfigurationError
from .fourier_core import reflect_pattern4, rotate_modes
from .spectral import to_spectral, from_spectral

logger = logging.getLogger(__name__)

# |F_1| below which the phase theta_1 is considered undefined
DEGENERATE_PHASE_TOL = 1e-12


################################################################################
# Interleaved vector

def to_interleaved(F):
    '''[b_0, c_0, b_1, c_1, ...] from complex coefficients'''
    F = np.asarray(F, dtype=complex)
    v = np.empty(F.shape[:-1] + (2*F.shape[-1],))
    v[..., 0::2] = F.real
    v[..., 1::2] = F.imag
    return v


def from_interleaved(v):
    '''complex coefficients from the interleaved vector'''
    v = np.asarray(v, dtype=float)
    if v.shape[-1] % 2 != 0:
        raise ShapeMismatchError('interleaved vector should be of even length, '
                                 'not {:d}'.format(v.shape[-1]))
    return v[..., 0::2] + 1j*v[..., 1::2]


################################################################################
# Group operators

def phase_angle(F):
    '''theta_1 = arctan2(b_1, c_1) in (-pi, pi]

    Emits a DegeneratePhaseWarning (and returns 0) when |F_1| < 1e-12.
    '''
    b1, c1 = F[2], F[3]
    if np.hypot(b1, c1) < DEGENERATE_PHASE_TOL:
        warnings.warn('|F_1| = {:.3g}, phase of the first mode undefined'.format(
                      np.hypot(b1, c1)), DegeneratePhaseWarning, stacklevel=2)
        return 0.
    theta = np.arctan2(b1, c1)
    if theta == -np.pi:
        theta = np.pi
    return float(theta)


def shift(theta, F):
    '''continuous shift operator tau(theta): F_k <- exp(-i k theta) F_k

    On the real field, a shift to the right by theta L / (2 pi).
    '''
    return rotate_modes(F, -theta)


def reflect(F):
    '''reflection sigma: [-b_0, c_0, -b_1, c_1, ...], u(x) -> -u(-x)'''
    G = np.array(F, dtype=float)
    G[..., 0::2] *= -1
    return G


def discrete_phase_index(theta_1, N):
    '''m = ceil(theta_1 / (2 pi/N)) mod N'''
    return int(np.ceil(theta_1 / (2*np.pi/N))) % N


def discrete_phase(theta_1, N):
    '''theta_N = (2 pi/N) ceil(theta_1 / (2 pi/N)), rounded up discrete phase'''
    return 2*np.pi/N * np.ceil(theta_1 / (2*np.pi/N))


def discrete_shift(theta_N, F):
    '''discrete shift reduction operator tau_N: F_k <- exp(+i k theta_N) F_k'''
    return rotate_modes(F, theta_N)


def reflect_reduced(F, N=4):
    '''reflection within the discrete shift reduced subspace

    sigma_N(F) = exp(i 2 pi k/N) sigma(F)
    (for N = 4, the interleaved pattern [-b0, c0, -c1, -b1, b2, -c2, c3, b3, ...])
    '''
    if N == 4:
        return reflect_pattern4(F)
    return rotate_modes(reflect(F), 2*np.pi/N)


################################################################################
# Reduction

@dataclass(frozen=True)
class SymmetryTag:
    '''group element which reduced a state

    index : m, discrete phase theta_N = 2 pi m / N
    rho : reflection indicator (+1 or -1)
    N : number of jets
    degenerate : the first Fourier mode was too small to define a phase
    '''
    index: int
    rho: int
    N: int = 4
    degenerate: bool = False

    def __post_init__(self):
        if self.rho not in (-1, 1):
            raise ConfigurationError('reflection indicator should be +1 or -1, '
                                     'not {!r}'.format(self.rho))
        if not 0 <= self.index < self.N:
            raise ConfigurationError('discrete phase index should be in [0, {:d}), '
                                     'not {!r}'.format(self.N, self.index))

    @property
    def theta_N(self):
        return 2*np.pi*self.index/self.N

    def to_tuple(self):
        '''(theta_N index, rho), as stored in experience logs'''
        return (self.index, self.rho)


@dataclass(frozen=True)
class ReducedState:
    state: np.ndarray
    tag: SymmetryTag


def indicator(F, N=4):
    '''reflection indicator sign(c_{N/2}), with sign(0) = +1'''
    return -1 if F[2*(N//2) + 1] < 0 else 1


def reduce(F, N=4):
    '''reduce the interleaved state `F` into the fundamental domain

    1. theta_1 = phase_angle(F), theta_N its rounded up discrete phase
    2. F^ = tau_N(theta_N, F), phase of F^ in (-2 pi/N, 0]
    3. rho = sign(c^_{N/2}); F^ <- sigma_N(F^) if rho < 0
    '''
    if N % 2 != 0:
        raise ConfigurationError('symmetry reduction needs an even jet count, '
                                 'not N={:d}'.format(N))
    F = np.asarray(F, dtype=float)
    degenerate = np.hypot(F[2], F[3]) < DEGENERATE_PHASE_TOL
    if degenerate:
        logger.debug('degenerate phase in reduction, using theta_N = 0')
    theta_1 = phase_angle(F)
    m = discrete_phase_index(theta_1, N)
    F_hat = discrete_shift(2*np.pi*m/N, F)
    rho = indicator(F_hat, N)
    if rho < 0:
        F_hat = reflect_reduced(F_hat, N)
    return ReducedState(F_hat, SymmetryTag(m, rho, N, bool(degenerate)))


def boundary_distance(F, N=4):
    '''distance of `F` to the discontinuities of the reduction

    min of the distance of theta_1 to the nearest multiple of 2 pi/N
    and of |c_{N/2}| after the discrete shift.
    '''
    theta_1 = np.arctan2(F[2], F[3])
    sector = 2*np.pi/N
    d_phase = abs(theta_1 - sector*np.round(theta_1/sector))
    m = discrete_phase_index(theta_1, N)
    F_hat = discrete_shift(2*np.pi*m/N, np.asarray(F, dtype=float))
    return min(d_phase, abs(F_hat[2*(N//2) + 1]))


def restore_action(a_reduced, tag):
    '''map an action chosen for the reduced state back to the physical frame

    undoes sigma_N (when rho < 0) then tau_N at the level of the
    forcing field, which for N equidistant jets is
    a -> -reversed(a) followed by a cyclic roll of m jets.
    '''
    a = np.asarray(a_reduced, dtype=float)
    if a.shape[-1] != tag.N:
        raise ShapeMismatchError('action should be of length {:d}, not {:d}'.format(
                                 tag.N, a.shape[-1]))
    if tag.rho < 0:
        a = -a[..., ::-1]
    return np.roll(a, tag.index, axis=-1)


def reduce_field(u, grid, N=4):
    '''reduce a real field, returns (reduced real field, tag)'''
    red = reduce(to_interleaved(to_spectral(u, grid)), N)
    return from_spectral(from_interleaved(red.state), grid), red.tag


################################################################################
# Action of the 2N-element group on fields and jet amplitudes

@dataclass(frozen=True)
class GroupElement:
    '''g = tau(2 pi m/N) o sigma^reflection (reflection applied first)'''
    m: int = 0
    reflection: bool = False
    N: int = 4

    @classmethod
    def all(cls, N=4):
        '''the 2N elements of the group'''
        return [cls(m, r, N) for r in (False, True) for m in range(N)]

    def on_spectral(self, F):
        '''action on an interleaved Fourier state vector'''
        if self.reflection:
            F = reflect(F)
        return shift(2*np.pi*self.m/self.N, F)

    def on_field(self, u):
        '''action on real fields (last axis is space)'''
        u = np.asarray(u, dtype=float)
        n = u.shape[-1]
        if n % self.N != 0:
            raise ConfigurationError('{:d} points grid not compatible with shifts '
                                     'of L/{:d}'.format(n, self.N))
        if self.reflection:
            # u(x_j) -> -u(x_{-j})
            u = -np.roll(u[..., ::-1], 1, axis=-1)
        return np.roll(u, self.m * n//self.N, axis=-1)

    def on_action(self, a):
        '''action on equidistant jet amplitudes'''
        a = np.asarray(a, dtype=float)
        if a.shape[-1] != self.N:
            raise ShapeMismatchError('action should be of length {:d}, not {:d}'.format(
                                     self.N, a.shape[-1]))
        if self.reflection:
            # a_j -> -a_{-j mod N}
            a = -np.roll(a[..., ::-1], 1, axis=-1)
        return np.roll(a, self.m, axis=-1)

    def __str__(self):
        return 'tau({:d}L/{:d}){}'.format(self.m, self.N, ' sigma' if self.reflection else '')


def equivariant_policy(policy, grid, N=4):
    '''wrap `policy` (reduced real field -> reduced action) into a control law

    returns a function u -> (action, tag) acting on the physical field.
    '''
    def wrapped(u):
        u_hat, tag = reduce_field(u, grid, N)
        return restore_action(policy(u_hat), tag), tag
    return wrapped
