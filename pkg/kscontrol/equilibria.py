#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Equilibria of the forced KS equation

Steady states 0 = -u u_x - u_xx - u_xxxx + f are found by damped Newton
iterations on the collocation values u(x_j). The residual and the dense
Jacobian use the same discretization as the time stepper, so that a
converged equilibrium is a fixed point of `Stepper.step`.

The Jacobian always has the spatial mean as a left null vector: the mean
of u is conserved by the dynamics and steady states come in one parameter
families (translations of an unforced solution, or a curve along which
the mean varies under forcing). Newton steps therefore solve the Jacobian
bordered by one constraint row, in the least squares sense:

* 'mean' : the spatial mean is pinned to the guess's (forced and
  trivial solutions)
* 'mode' : Im F_k = 0 on the first significant mode k, the guess being
  shifted beforehand (unforced nontrivial solutions)
* 'slice' : the projection on the translation direction of the guess plus
  its mean stays fixed, used by continuation so that the branch is
  followed without jumps (well posed for forced, unforced and constant
  solutions alike)

Continuation in the forcing amplitude and in the domain length
(`continue_forcing`, `continue_domain`) halves the parameter step on
failure before giving up.
"""

import functools
import logging
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np
import scipy.linalg

from .errors import (ConfigurationError, NoConvergence, SingularJacobian, BranchLost)
from .spectral import (to_spectral, from_spectral, derivative_symbol, linear_symbol,
                       dealias_mask, nonlinear_term, dissipation, power_input,
                       save_trajectory)
from .symmetry import shift, to_interleaved, from_interleaved

logger = logging.getLogger(__name__)

# relative amplitude of the first Fourier mode used for phase pinning
PHASE_MODE_THRESHOLD = 1e-3
# unforced states with all |F_k|, k >= 1, below this are the trivial solution
TRIVIAL_AMPLITUDE = 1e-8


def l2_norm(u, grid):
    '''L2 norm sqrt(int u^2 dx)'''
    return float(np.sqrt(grid.L * np.mean(np.asarray(u)**2, axis=-1)))


@functools.lru_cache(maxsize=16)
def _operator_matrices(grid):
    '''dense (first derivative, linear operator, dealias projection) matrices'''
    n = grid.n_points
    E = np.eye(n)
    def dense(symbol):
        return from_spectral(symbol * to_spectral(E, grid), grid).T
    D1 = dense(derivative_symbol(grid, 1))
    Lin = dense(linear_symbol(grid))
    P = dense(dealias_mask(grid)) if grid.dealias else None
    for M in (D1, Lin) + ((P,) if P is not None else ()):
        M.setflags(write=False)
    return D1, Lin, P


def _forcing(f, grid):
    if f is None:
        return np.zeros(grid.n_points)
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n_points,):
        raise ConfigurationError('forcing should be of length {:d}, not {:d}'.format(
                                 grid.n_points, f.size))
    return f


def kse_residual(u, f, grid):
    '''R(u) = -u u_x - u_xx - u_xxxx + f on the collocation points'''
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != grid.n_points:
        raise ConfigurationError('field should be of length {:d}, not {:d}'.format(
                                 grid.n_points, u.shape[-1]))
    F = to_spectral(u, grid)
    R = from_spectral(linear_symbol(grid)*F + nonlinear_term(F, grid), grid)
    return R + _forcing(f, grid)


def kse_jacobian(u, f, grid):
    '''dense n x n Jacobian of `kse_residual` at `u`

    J = -d_x diag(u) - d_xx - d_xxxx (projected by the dealias mask if enabled)
    '''
    D1, Lin, P = _operator_matrices(grid)
    u = np.asarray(u, dtype=float)
    if P is None:
        return Lin - D1 * u[np.newaxis, :]
    Pu = P @ u
    return Lin - P @ D1 @ (Pu[:, np.newaxis] * P)


################################################################################
# Newton solver

@dataclass
class Equilibrium:
    '''converged steady state u of the KS equation under frozen forcing f'''
    u: np.ndarray
    f: np.ndarray
    grid: object
    residual_norm: float
    leading_eigs: np.ndarray
    iterations: int = 0
    residual_history: list = field(default_factory=list, repr=False)

    @property
    def L(self):
        return self.grid.L

    @property
    def forced(self):
        return bool(np.any(self.f != 0))

    @property
    def D(self):
        return float(dissipation(self.u, self.grid))

    @property
    def Pf(self):
        return float(power_input(self.u, self.f, self.grid))

    @property
    def max_real_eig(self):
        return float(np.max(self.leading_eigs.real))

    def print_summary(self):
        print('Equilibrium of the {} KS equation on L = {:g}'.format(
              'forced' if self.forced else 'unforced', self.L))
        print('* residual |R|_2 = {:.3g} after {:d} Newton iterations'.format(
              self.residual_norm, self.iterations))
        print('* D = {:.6g}, P_f = {:.6g}, max|u| = {:.4g}'.format(
              self.D, self.Pf, np.abs(self.u).max()))
        print('* leading eigenvalues:')
        for lam in self.leading_eigs:
            print('  {:+.6f} {:+.6f}j'.format(lam.real, lam.imag))
    # end print_summary()


def leading_eigenvalues(u, f, grid, count=6):
    '''`count` eigenvalues of the Jacobian at `u` of largest real part

    sorted by descending real part (then descending imaginary part)
    '''
    lam = scipy.linalg.eigvals(kse_jacobian(u, f, grid))
    order = np.lexsort((-lam.imag, -lam.real))
    return lam[order][:count]


def _phase_mode(F):
    '''first Fourier mode k >= 1 of significant amplitude'''
    amp = np.abs(F[1:])
    return 1 + int(np.argmax(amp > PHASE_MODE_THRESHOLD * amp.max()))


def newton_solve(guess, f, grid, tol=1e-10, max_iter=50, pin=None, polish=3,
                 n_eigs=6):
    '''damped Newton solve of the steady forced KS equation

    guess : initial real field
    f : frozen forcing field (None: unforced). Its mean is projected out.
    pin : constraint fixing the solution within its family, 'mean', 'mode'
        or 'slice' (see the module docstring). None: 'mean' for forced
        problems, 'mode' for unforced ones. A trivial guess is always
        solved with 'mean'.
    polish : extra Newton iterations after convergence, kept while they
        decrease the residual

    Returns an Equilibrium. Raises NoConvergence or SingularJacobian.
    '''
    if pin not in (None, 'mean', 'mode', 'slice'):
        raise ConfigurationError("pin should be 'mean', 'mode' or 'slice', not {!r}".format(pin))
    u = np.array(guess, dtype=float)
    if u.shape != (grid.n_points,) or not np.all(np.isfinite(u)):
        raise ConfigurationError('guess should be a finite field of length {:d}'.format(
                                 grid.n_points))
    f = _forcing(f, grid).copy()
    if abs(f.mean()) > 0:
        logger.warning('forcing has nonzero mean %.3g, projected out', f.mean())
        f -= f.mean()
    n = grid.n_points
    D1 = _operator_matrices(grid)[0]
    forced = bool(np.any(f != 0))
    F = to_spectral(u, grid)
    if pin is None:
        pin = 'mean' if forced else 'mode'
    if np.abs(F[1:]).max() < TRIVIAL_AMPLITUDE:
        pin = 'mean'

    # constraint row c . u = target
    if pin == 'mean':
        c_row = np.ones(n) / n
        target = u.mean()
    elif pin == 'mode':
        k = _phase_mode(F)
        theta = np.angle(F[k]) / k
        u = from_spectral(from_interleaved(shift(theta, to_interleaved(F))), grid)
        # Im F_k as a linear function of u
        c_row = -np.sin(2*np.pi*k*np.arange(n)/n) / n
        target = 0.
    else:
        c_row = D1 @ u
        norm = np.linalg.norm(c_row)
        c_row = c_row/norm if norm > TRIVIAL_AMPLITUDE else np.zeros(n)
        c_row = c_row + np.ones(n)/np.sqrt(n)
        c_row /= np.linalg.norm(c_row)
        target = c_row @ u

    def newton_step(u):
        A = np.vstack([kse_jacobian(u, f, grid), c_row])
        b = np.concatenate([-kse_residual(u, f, grid), [target - c_row @ u]])
        delta, _, rank, sv = scipy.linalg.lstsq(A, b)
        if rank < n:
            raise SingularJacobian('bordered Jacobian of rank {:d} < {:d} '
                                   '(smallest singular value {:.3g})'.format(rank, n, sv[-1]))
        return delta

    res = np.linalg.norm(kse_residual(u, f, grid))
    history = [res]
    it = 0
    while res > tol:
        if it >= max_iter or not np.isfinite(res):
            raise NoConvergence('no convergence after {:d} Newton iterations, '
                                '|R| = {:.3g}'.format(it, res), res, it)
        delta = newton_step(u)
        lam = 1.
        while True:
            u_try = u + lam*delta
            res_try = np.linalg.norm(kse_residual(u_try, f, grid))
            if res_try < res:
                break
            lam /= 2
            if lam < 1/128:
                raise NoConvergence('line search failed at iteration {:d}, '
                                    '|R| = {:.3g}'.format(it, res), res, it)
        u, res = u_try, res_try
        it += 1
        history.append(res)
        logger.debug('newton iteration %d: |R| = %.3g (step %g)', it, res, lam)
    for _ in range(polish if it > 0 else 0):
        u_try = u + newton_step(u)
        res_try = np.linalg.norm(kse_residual(u_try, f, grid))
        if not res_try < res:
            break
        u, res = u_try, res_try
    eigs = leading_eigenvalues(u, f, grid, n_eigs)
    return Equilibrium(u, f, grid, float(res), eigs, it, history)


################################################################################
# Continuation

@dataclass
class ContinuationRun:
    '''branch of equilibria along a parameter path

    kind : 'forcing' (parameter: forcing scale s) or 'domain' (parameter: L)
    n_steps : number of scheduled steps (accepted points may be more,
        when steps were halved)
    '''
    kind: str
    params: list
    solutions: list
    n_steps: int

    @property
    def terminal(self):
        return self.solutions[-1]

    @property
    def continuity_constant(self):
        '''C = max |u_{j+1} - u_j|_2 / |p_{j+1} - p_j|'''
        C = 0.
        for j in range(len(self.params) - 1):
            du = self.solutions[j+1].u - self.solutions[j].u
            dp = abs(self.params[j+1] - self.params[j])
            C = max(C, l2_norm(du, self.solutions[j+1].grid) / dp)
        return C

    def save_csv(self, path, fields_path=None, seed=None, config_hash=None):
        '''CSV `param,residual,D,Pf,max_real_eig`, and the solution fields
        in the trajectory dump format (param in the `t` column)'''
        rows = [(p, eq.residual_norm, eq.D, eq.Pf, eq.max_real_eig)
                for p, eq in zip(self.params, self.solutions)]
        np.savetxt(path, np.array(rows), delimiter=',', comments='', fmt='%.17g',
                   header='param,residual,D,Pf,max_real_eig')
        if fields_path is not None:
            save_trajectory(fields_path, self.params,
                            np.array([eq.u for eq in self.solutions]),
                            self.terminal.grid, seed, config_hash)

    def print_summary(self):
        print('{} continuation: {:g} -> {:g}, {:d} steps ({:d} points)'.format(
              self.kind, self.params[0], self.params[-1], self.n_steps, len(self.params)))
        print('* continuity constant C = {:.4g}'.format(self.continuity_constant))
        print('* terminal residual {:.3g}, max Re(lambda) = {:+.5f}'.format(
              self.terminal.residual_norm, self.terminal.max_real_eig))
    # end print_summary()


def _follow(solve, eq, path, max_halvings):
    '''solutions along `path` from `eq`, halving the step on failures'''
    params = [path[0]]
    solutions = [eq]
    p, u = path[0], eq.u
    for p_next in path[1:]:
        h = p_next - p
        halvings = 0
        while p != p_next:
            p_try = p_next if abs(p_next - p) <= abs(h)*(1 + 1e-12) else p + h
            try:
                sol = solve(u, p_try)
            except (NoConvergence, SingularJacobian) as e:
                halvings += 1
                if halvings > max_halvings:
                    raise BranchLost('branch lost at parameter {:g} after {:d} step '
                                     'halvings ({})'.format(p_try, max_halvings, e), p_try)
                h /= 2
                logger.info('continuation step failed at %g, step halved to %g', p_try, h)
                continue
            params.append(p_try)
            solutions.append(sol)
            p, u = p_try, sol.u
            logger.debug('continuation point %g: |R| = %.3g in %d iterations',
                         p, sol.residual_norm, sol.iterations)
    return params, solutions


def continue_forcing(eq, steps, tol=1e-10, max_iter=50, max_halvings=5, report_time=True):
    '''forcing continuation s: 1 -> 0 of the frozen forcing of `eq`

    each step s_j = (steps-j)/steps is Newton solved from the previous
    solution. The terminal solution is an unforced equilibrium.
    '''
    t_start = datetime.now()
    if not eq.forced:
        return ContinuationRun('forcing', [1.], [eq], 0)
    f = eq.f
    grid = eq.grid
    def solve(u, s):
        return newton_solve(u, s*f if s > 0 else None, grid, tol, max_iter, pin='slice')
    path = [(steps - j) / steps for j in range(steps + 1)]
    params, solutions = _follow(solve, eq, path, max_halvings)
    run = ContinuationRun('forcing', params, solutions, steps)
    exec_time = (datetime.now() - t_start).total_seconds()
    if report_time:
        logger.info('forcing continuation run in %.2f s (C = %.3g)', exec_time,
                    run.continuity_constant)
    return run


def continue_domain(eq, L_end, steps, tol=1e-10, max_iter=50, max_halvings=5, report_time=True):
    '''domain length continuation L_start -> L_end of an unforced equilibrium

    the collocation values (i.e. the Fourier coefficients) are kept and
    reinterpreted on each new domain length.
    '''
    t_start = datetime.now()
    if eq.forced:
        raise ConfigurationError('domain continuation needs an unforced equilibrium')
    L_start = eq.grid.L
    if L_end == L_start or steps == 0:
        return ContinuationRun('domain', [L_start], [eq], 0)
    grid0 = eq.grid
    def solve(u, L):
        return newton_solve(u, None, grid0.replace(L=L), tol, max_iter, pin='slice')
    path = list(np.linspace(L_start, L_end, steps + 1))
    params, solutions = _follow(solve, eq, path, max_halvings)
    run = ContinuationRun('domain', params, solutions, steps)
    exec_time = (datetime.now() - t_start).total_seconds()
    if report_time:
        logger.info('domain continuation run in %.2f s (C = %.3g)', exec_time,
                    run.continuity_constant)
    return run


def two_stage_continuation(eq, forcing_steps, L_end, domain_steps, **kwargs):
    '''forcing continuation to f = 0, then domain continuation to `L_end`'''
    first = continue_forcing(eq, forcing_steps, **kwargs)
    second = continue_domain(first.terminal, L_end, domain_steps, **kwargs)
    return first, second


################################################################################
# Newton seeds

def recurrence_seeds(U, grid, n_seeds=10, min_separation=20):
    '''indices of Newton seeds along an unforced trajectory `U`

    local minima of |u_t| = |R(u)|, ranked by increasing norm, at least
    `min_separation` samples apart. Returns (indices, norms).
    '''
    U = np.atleast_2d(U)
    norms = np.linalg.norm(kse_residual(U, None, grid), axis=-1)
    is_min = np.r_[False, (norms[1:-1] < norms[:-2]) & (norms[1:-1] <= norms[2:]), False]
    candidates = np.flatnonzero(is_min)
    candidates = candidates[np.argsort(norms[candidates])]
    chosen = []
    for i in candidates:
        if all(abs(i - j) >= min_separation for j in chosen):
            chosen.append(i)
        if len(chosen) == n_seeds:
            break
    chosen = np.array(chosen, dtype=int)
    return chosen, norms[chosen]


def search_equilibria(U, grid, n_seeds=10, min_separation=20, tol=1e-10, min_amplitude=0.1):
    '''Newton solves from the recurrence seeds of the trajectory `U`

    returns the converged nontrivial (max|u| > min_amplitude) unforced
    equilibria, in seed order.
    '''
    idx, norms = recurrence_seeds(U, grid, n_seeds, min_separation)
    found = []
    for i, norm in zip(idx, norms):
        try:
            eq = newton_solve(U[i], None, grid, tol)
        except (NoConvergence, SingularJacobian) as e:
            logger.debug('seed %d (|u_t| = %.3g) failed: %s', i, norm, e)
            continue
        if np.abs(eq.u).max() > min_amplitude:
            logger.info('seed %d (|u_t| = %.3g): equilibrium with D = %.4g, '
                        'max Re(lambda) = %.4g', i, norm, eq.D, eq.max_real_eig)
            found.append(eq)
    return found
