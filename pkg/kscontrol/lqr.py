#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Linear-quadratic regulation of the KS equation about a steady state

* linearize : x' = A x + B a about a target state, A being the dense KS
  Jacobian and B the unit jet fields
* pbh_controllability / pbh_stabilizability : Popov-Belevitch-Hautus
  rank tests rank[A - lambda I, B] = n at the eigenvalues of A
* solve_care : stabilizing solution of the continuous algebraic Riccati
  equation and the gain K = R^-1 B^T P
* closed_loop_sim : full nonlinear integration under saturated state feedback
  a = -K (u - target), updated every time step
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (ConfigurationError, NotStabilizable, NoStabilizingSolution,
                     NumericalFailure)
from .equilibria import kse_jacobian
from .spectral import Stepper, to_spectral, from_spectral

logger = logging.getLogger(__name__)

# saturation of the LQR actuation, in units of the agent's amp_limit
LQR_SATURATION = 10.


@dataclass
class LinearModel:
    '''linearization x' = A x + B a about `target` under frozen forcing `f`'''
    A: np.ndarray
    B: np.ndarray
    target: np.ndarray
    f: np.ndarray
    grid: object
    jets: object


def linearize(target, f, grid, jets):
    '''LinearModel of the KS equation about `target`'''
    target = np.asarray(target, dtype=float)
    f = np.zeros(grid.n_points) if f is None else np.asarray(f, dtype=float)
    A = kse_jacobian(target, f, grid)
    B = np.array(jets.basis(grid))
    return LinearModel(A, B, target, f, grid, jets)


################################################################################
# PBH tests

@dataclass
class PbhReport:
    '''outcome of a PBH rank test

    min_singular_values[i] is the smallest singular value of
    [A - lambda_i I, B] for the tested eigenvalue eigenvalues[i]
    '''
    test: str
    passed: bool
    failing_eigenvalues: list
    eigenvalues: list = field(repr=False)
    min_singular_values: list = field(repr=False)
    tolerances: list = field(repr=False)

    def to_dict(self):
        def cplx(values):
            return [[float(np.real(v)), float(np.imag(v))] for v in values]
        return {'test': self.test, 'passed': self.passed,
                'failing_eigenvalues': cplx(self.failing_eigenvalues),
                'eigenvalues': cplx(self.eigenvalues),
                'min_singular_values': [float(s) for s in self.min_singular_values],
                'tolerances': [float(t) for t in self.tolerances]}


def _pbh(A, B, test):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ConfigurationError('A should be square, not of shape {}'.format(A.shape))
    if B.ndim == 1:
        B = B.reshape(n, 1)
    if B.shape[0] != n:
        raise ConfigurationError('B should have {:d} rows, not {:d}'.format(n, B.shape[0]))
    eigs = scipy.linalg.eigvals(A)
    if test == 'stabilizability':
        eigs = eigs[eigs.real >= 0]
    failing, min_sv, tols = [], [], []
    eps = np.finfo(float).eps
    for lam in eigs:
        M = np.hstack([A - lam*np.eye(n), B.astype(complex)])
        sv = scipy.linalg.svdvals(M)
        tol = n * eps * sv[0]
        rank = int(np.sum(sv > tol))
        min_sv.append(sv[n-1] if len(sv) >= n else 0.)
        tols.append(tol)
        if rank < n:
            failing.append(lam)
        logger.debug('PBH %s at lambda = %.6g%+.6gj: rank %d/%d, sigma_min = %.3g (tol %.3g)',
                     test, lam.real, lam.imag, rank, n, min_sv[-1], tol)
    passed = not failing
    if not passed:
        logger.info('PBH %s test fails at %d eigenvalue(s), max Re = %.5g', test,
                    len(failing), max(l.real for l in failing))
    return PbhReport(test, passed, failing, list(eigs), min_sv, tols)


def pbh_controllability(A, B):
    '''PBH controllability test: rank[A - lambda I, B] = n at every eigenvalue of A

    rank is counted with the singular values above n eps sigma_max
    '''
    return _pbh(A, B, 'controllability')


def pbh_stabilizability(A, B):
    '''PBH stabilizability test: rank condition at the eigenvalues with Re >= 0'''
    return _pbh(A, B, 'stabilizability')


################################################################################
# Riccati solution

@dataclass
class LqrGain:
    '''LQR state feedback a = -K x

    shift : the Riccati equation was solved for A + shift I
    residual : Frobenius norm of the CARE residual
    closed_loop_eigs : eigenvalues of A - B K (unshifted A)
    '''
    K: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    shift: float
    residual: float
    closed_loop_eigs: np.ndarray = field(repr=False)

    @property
    def stable(self):
        return bool(np.max(self.closed_loop_eigs.real) < 0)


def care_residual(A, B, Q, R, P):
    '''A^T P + P A - P B R^-1 B^T P + Q'''
    return A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q


def solve_care(A, B, Q=None, R=None, shift=0., refine=2):
    '''stabilizing solution P of the CARE for (A + shift I, B, Q, R)

    The (A + shift I, B) pair is checked for stabilizability first.
    The Schur-method solution of scipy is refined by Newton-Kleinman
    iterations (Lyapunov solves), kept while they decrease the residual.

    A negative `shift` gives a gain for the stabilizable part of a
    system whose uncontrollable modes have real part below -shift.

    Raises NotStabilizable or NoStabilizingSolution.
    '''
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    m = B.shape[1]
    Q = np.eye(n) if Q is None else np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.eye(m) if R is None else np.atleast_2d(np.asarray(R, dtype=float))
    As = A + shift*np.eye(n)
    report = pbh_stabilizability(As, B)
    if not report.passed:
        raise NotStabilizable('(A{}, B) is not stabilizable, {:d} failing eigenvalue(s)'.format(
                              ' + {:g} I'.format(shift) if shift else '',
                              len(report.failing_eigenvalues)),
                              report.failing_eigenvalues)
    try:
        P = scipy.linalg.solve_continuous_are(As, B, Q, R)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NoStabilizingSolution('Riccati solver failed: {}'.format(e))
    P = (P + P.T) / 2
    res = np.linalg.norm(care_residual(As, B, Q, R, P))
    for i in range(refine):
        K = np.linalg.solve(R, B.T @ P)
        Ac = As - B @ K
        if np.max(np.linalg.eigvals(Ac).real) >= 0:
            break
        try:
            P_new = scipy.linalg.solve_continuous_lyapunov(Ac.T, -(Q + K.T @ R @ K))
        except (np.linalg.LinAlgError, ValueError):
            break
        P_new = (P_new + P_new.T) / 2
        res_new = np.linalg.norm(care_residual(As, B, Q, R, P_new))
        logger.debug('Newton-Kleinman refinement %d: residual %.3g -> %.3g', i+1, res, res_new)
        if not res_new < res:
            break
        P, res = P_new, res_new
    K = np.linalg.solve(R, B.T @ P)
    shifted_eigs = np.linalg.eigvals(As - B @ K)
    if not np.max(shifted_eigs.real) < 0:
        raise NoStabilizingSolution('closed loop not Hurwitz (max Re = {:.3g})'.format(
                                    np.max(shifted_eigs.real)))
    eigs = np.linalg.eigvals(A - B @ K)
    logger.info('CARE solved: residual %.3g, closed loop max Re = %.5g', res, np.max(eigs.real))
    return LqrGain(K, P, Q, R, shift, float(res), eigs)


################################################################################
# Closed loop simulation

@dataclass
class ClosedLoopLog:
    t: np.ndarray
    fields: np.ndarray = field(repr=False)
    actions: np.ndarray = field(repr=False)
    deviation: np.ndarray = None
    diverged: bool = False


def closed_loop_sim(model, gain, u0, T_end, sat=None, stop_on_divergence=False):
    '''nonlinear KS integration under the saturated feedback a = -K (u - target)

    the action is recomputed every dt, clipped to +-sat (default
    10 times the jets amp_limit) and added to the frozen forcing of `model`.
    With `stop_on_divergence`, an integration blow up ends the simulation
    (flagged in the log) instead of raising IntegrationDiverged.
    '''
    grid, jets = model.grid, model.jets
    if sat is None:
        sat = LQR_SATURATION * jets.amp_limit
    stepper = Stepper(grid, 'lqr')
    n_steps = grid.steps_in(T_end)
    B = model.B
    F = to_spectral(u0, grid)
    u = np.asarray(u0, dtype=float)
    fields, actions = [u], []
    diverged = False
    for i in range(n_steps):
        a = np.clip(-gain.K @ (u - model.target), -sat, sat)
        f = model.f + B @ a
        try:
            F = stepper.step(F, to_spectral(f, grid))
        except NumericalFailure as e:
            if not stop_on_divergence:
                raise
            logger.warning('closed loop simulation diverged at t = %g: %s', (i+1)*grid.dt, e)
            diverged = True
            break
        u = from_spectral(F, grid)
        fields.append(u)
        actions.append(a)
    fields = np.array(fields)
    actions = np.array(actions).reshape(-1, B.shape[1])
    t = grid.dt * np.arange(len(fields))
    deviation = np.sqrt(grid.L * np.mean((fields - model.target)**2, axis=1))
    return ClosedLoopLog(t, fields, actions, deviation, diverged)


def save_gain(path, gain):
    '''gain matrix K as CSV (one row per jet)'''
    np.savetxt(path, gain.K, delimiter=',', fmt='%.17g')
