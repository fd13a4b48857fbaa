#!/usr/bin/python
# -*- coding: utf-8 -*-
""" tests for the Newton solver and the continuation of KS equilibria
"""

import logging

import numpy as np
from numpy.testing import assert_allclose
import pytest

from kscontrol.errors import ConfigurationError, NoConvergence
from kscontrol.spectral import (GridConfig, Stepper, to_spectral, from_spectral,
                                linear_symbol, smooth_random_field)
from kscontrol.actuation import JetArray
from kscontrol.equilibria import (l2_norm, kse_residual, kse_jacobian, leading_eigenvalues,
                                  newton_solve, continue_forcing, continue_domain,
                                  two_stage_continuation, recurrence_seeds, search_equilibria,
                                  ContinuationRun)

grid = GridConfig()
jets = JetArray()


def _forcing(amplitude=0.05):
    f = jets.forcing_field(amplitude*np.array([1., -0.5, 0.3, 0.2]), grid)
    return f - f.mean()


def test_residual():
    q = 2*np.pi/grid.L
    assert_allclose(kse_residual(np.zeros(grid.n_points), None, grid), 0.)
    # linear mode: R = lambda_1 u, the nonlinear term of a single mode is a k = 2 mode
    u = 1e-6*np.cos(q*grid.x)
    R = kse_residual(u, None, grid)
    assert_allclose(R, (q**2 - q**4)*u, atol=1e-12)
    assert kse_residual(np.array([u, u]), None, grid).shape == (2, grid.n_points)
    with pytest.raises(ConfigurationError):
        kse_residual(np.zeros(5), None, grid)
    assert l2_norm(np.ones(grid.n_points), grid) == pytest.approx(np.sqrt(grid.L))


@pytest.mark.parametrize('dealias', [False, True])
def test_jacobian(dealias):
    'the dense Jacobian matches central differences of the (quadratic) residual'
    g = grid.replace(dealias=dealias)
    rng = np.random.default_rng(0)
    u = smooth_random_field(g, rng, amplitude=1.)
    v = smooth_random_field(g, rng, amplitude=1.)
    f = _forcing()
    eps = 1e-3
    fd = (kse_residual(u + eps*v, f, g) - kse_residual(u - eps*v, f, g)) / (2*eps)
    assert_allclose(kse_jacobian(u, f, g) @ v, fd, atol=1e-9)


def test_trivial_spectrum():
    'leading eigenvalues of the linearization about u = 0'
    lam = leading_eigenvalues(np.zeros(grid.n_points), None, grid, count=6)
    sym = linear_symbol(grid)
    assert_allclose(lam.real, [sym[2], sym[2], sym[3], sym[3], sym[1], sym[1]], atol=1e-9)
    assert_allclose(lam.real[[0, 2, 4]], [0.21982, 0.19520, 0.07491], atol=1e-5)


def test_forced_equilibrium():
    'forced steady state: converged, mean pinned, fixed point of the time stepper'
    f = _forcing()
    eq = newton_solve(np.zeros(grid.n_points), f, grid)
    assert eq.residual_norm < 1e-10
    assert eq.forced
    assert abs(eq.u.mean()) < 1e-12
    assert eq.residual_history[0] > eq.residual_history[-1]
    F = to_spectral(eq.u, grid)
    F1 = Stepper(grid).step(F, to_spectral(f, grid))
    assert np.abs(from_spectral(F1, grid) - eq.u).max() < 1e-10
    assert len(eq.leading_eigs) == 6
    assert eq.max_real_eig == pytest.approx(eq.leading_eigs[0].real)


def test_forcing_mean_projected(caplog):
    f = _forcing() + 0.1
    with caplog.at_level(logging.WARNING, logger='kscontrol.equilibria'):
        eq = newton_solve(np.zeros(grid.n_points), f, grid)
    assert 'nonzero mean' in caplog.text
    assert abs(eq.f.mean()) < 1e-15


def test_newton_iterations():
    'trivial solve takes no iteration, a tiny forcing a few'
    eq = newton_solve(np.zeros(grid.n_points), None, grid)
    assert eq.iterations == 0
    assert eq.residual_norm == 0.
    assert np.all(eq.u == 0)
    tiny = newton_solve(eq.u, 1e-6*_forcing(1.), grid)
    assert 1 <= tiny.iterations <= 3
    assert tiny.residual_norm < 1e-10
    assert 0 < np.abs(tiny.u).max() < 1e-3


def test_newton_failures():
    with pytest.raises(ConfigurationError):
        newton_solve(np.zeros(grid.n_points), None, grid, pin='phase')
    with pytest.raises(ConfigurationError):
        newton_solve(np.full(grid.n_points, np.nan), None, grid)
    with pytest.raises(NoConvergence):
        newton_solve(np.zeros(grid.n_points), _forcing(), grid, tol=1e-30, max_iter=3)


def test_continue_forcing():
    'forcing continuation s: 1 -> 0 ends on an unforced state'
    eq = newton_solve(np.zeros(grid.n_points), _forcing(), grid)
    run = continue_forcing(eq, 4, report_time=False)
    assert isinstance(run, ContinuationRun) and run.kind == 'forcing'
    assert_allclose(run.params, [1., 0.75, 0.5, 0.25, 0.])
    assert not run.terminal.forced
    # the unforced states near 0 are the constants
    assert np.ptp(run.terminal.u) < 1e-8
    assert np.isfinite(run.continuity_constant)
    assert all(sol.residual_norm < 1e-10 for sol in run.solutions)
    unforced = continue_forcing(run.terminal, 4, report_time=False)
    assert unforced.n_steps == 0 and len(unforced.solutions) == 1


def test_continue_domain():
    eq = newton_solve(np.zeros(grid.n_points), None, grid)
    run = continue_domain(eq, 22.5, 2, report_time=False)
    assert_allclose(run.params, [22., 22.25, 22.5])
    assert run.terminal.L == 22.5
    same = continue_domain(eq, 22., 5, report_time=False)
    assert len(same.params) == 1
    forced = newton_solve(np.zeros(grid.n_points), _forcing(), grid)
    with pytest.raises(ConfigurationError):
        continue_domain(forced, 22.5, 2)
    first, second = two_stage_continuation(forced, 2, 22.5, 2, report_time=False)
    assert second.terminal.L == 22.5 and not second.terminal.forced


def test_continuation_dump(tmp_path):
    eq = newton_solve(np.zeros(grid.n_points), _forcing(), grid)
    run = continue_forcing(eq, 2, report_time=False)
    path = str(tmp_path / 'cont.csv')
    run.save_csv(path, str(tmp_path / 'fields.csv'), seed=1, config_hash='h')
    data = np.loadtxt(path, delimiter=',', skiprows=1)
    assert data.shape == (3, 5)
    assert_allclose(data[:, 0], [1., 0.5, 0.])
    assert (tmp_path / 'fields.json').exists()


def test_recurrence_seeds():
    'local minima of |u_t| along a trajectory, ranked and separated'
    q = 2*np.pi/grid.L
    w = np.cos(q*grid.x)
    s = 1e-4*np.array([5., 4., 3., 2., 1., 0.5, 1., 2., 0.8, 2., 3.])
    U = s[:, np.newaxis] * w
    idx, norms = recurrence_seeds(U, grid, n_seeds=3, min_separation=5)
    assert list(idx) == [5]
    idx, norms = recurrence_seeds(U, grid, n_seeds=3, min_separation=2)
    assert list(idx) == [5, 8]
    assert norms[0] < norms[1]


@pytest.mark.slow
def test_search_equilibria():
    'nontrivial equilibria found from an unforced chaotic trajectory are steady'
    stepper = Stepper(grid)
    F = to_spectral(smooth_random_field(grid, np.random.default_rng(0)), grid)
    F = stepper.advance(F, grid.steps_in(100.))[-1]
    U = from_spectral(stepper.advance(F, grid.steps_in(500.)), grid)
    found = search_equilibria(U, grid, n_seeds=20)
    assert len(found) > 0
    eq = min(found, key=lambda e: e.max_real_eig)
    assert np.abs(eq.u).max() > 0.1
    assert eq.residual_norm <= 1e-10
    assert eq.max_real_eig > 0
    traj = stepper.advance(to_spectral(eq.u, grid), grid.steps_in(100.))
    drift = max(l2_norm(u - eq.u, grid) for u in from_spectral(traj, grid))
    assert drift <= 1e-6
    # small parameter steps from the equilibrium converge quickly
    nudged = newton_solve(eq.u, 1e-6*_forcing(1.), grid, pin='slice')
    assert nudged.iterations <= 3
    stretched = newton_solve(eq.u, None, grid.replace(L=grid.L + 0.01), pin='slice')
    assert stretched.iterations <= 3
    assert stretched.residual_norm <= 1e-10
    # a small forcing, continued back to zero, returns to the same equilibrium
    forced = newton_solve(eq.u, _forcing(0.01), grid, pin='slice')
    run = continue_forcing(forced, 10, report_time=False)
    assert_allclose(np.abs(to_spectral(run.terminal.u, grid)),
                    np.abs(to_spectral(eq.u, grid)), atol=1e-6)
