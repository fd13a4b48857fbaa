#!/usr/bin/python
# -*- coding: utf-8 -*-
""" tests for the PBH tests, the Riccati solver and the LQR closed loop
"""

import numpy as np
from numpy.testing import assert_allclose
import pytest

from kscontrol.errors import ConfigurationError, NotStabilizable
from kscontrol.spectral import GridConfig, linear_symbol, smooth_random_field
from kscontrol.actuation import JetArray
from kscontrol.equilibria import kse_residual, newton_solve
from kscontrol.lqr import (linearize, pbh_controllability, pbh_stabilizability, solve_care,
                           care_residual, closed_loop_sim, save_gain, LQR_SATURATION)

grid = GridConfig()


def test_scalar_care():
    'closed form solutions of scalar Riccati equations'
    gain = solve_care([[-1.]], [[1.]])
    assert_allclose(gain.P, [[np.sqrt(2) - 1]], rtol=1e-12)
    assert_allclose(gain.K, gain.P)
    assert gain.stable
    gain = solve_care([[0.]], [[1.]])
    assert_allclose(gain.P, [[1.]], rtol=1e-12)
    gain = solve_care([[1.]], [[1.]], Q=[[1.]], R=[[1.]])
    assert_allclose(gain.P, [[1 + np.sqrt(2)]], rtol=1e-12)
    assert gain.residual < 1e-12


def test_care_residual():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((8, 8))
    B = rng.standard_normal((8, 2))
    gain = solve_care(A, B)
    Q, R = np.eye(8), np.eye(2)
    assert np.linalg.norm(care_residual(A, B, Q, R, gain.P)) < 1e-8
    assert_allclose(gain.P, gain.P.T)
    assert np.max(gain.closed_loop_eigs.real) < 0


def test_not_stabilizable():
    'an unstable uncontrollable mode, and the shifted synthesis'
    A = np.diag([1., 2.])
    B = np.array([[1.], [0.]])
    report = pbh_stabilizability(A, B)
    assert not report.passed
    assert_allclose(report.failing_eigenvalues, [2.])
    with pytest.raises(NotStabilizable) as info:
        solve_care(A, B)
    assert_allclose(np.real(info.value.failing_eigenvalues), [2.])
    gain = solve_care(A, B, shift=-2.05)
    assert gain.shift == -2.05
    assert not gain.stable
    assert_allclose(sorted(gain.closed_loop_eigs.real)[-1], 2.)


def test_pbh_checks():
    with pytest.raises(ConfigurationError):
        pbh_controllability(np.zeros((2, 3)), np.zeros((2, 1)))
    with pytest.raises(ConfigurationError):
        pbh_controllability(np.eye(2), np.zeros((3, 1)))
    report = pbh_controllability(np.diag([-1., 1.]), np.ones(2))
    assert report.passed
    d = report.to_dict()
    assert d['test'] == 'controllability' and len(d['eigenvalues']) == 2


def test_symmetric_jets_not_stabilizable():
    'equidistant jets sit on the nodes of the unstable k = 2 sine mode'
    model = linearize(np.zeros(grid.n_points), None, grid, JetArray())
    report = pbh_stabilizability(model.A, model.B)
    assert not report.passed
    assert not pbh_controllability(model.A, model.B).passed
    lam2 = linear_symbol(grid)[2]
    assert lam2 == pytest.approx(0.21982, abs=1e-5)
    assert np.any(np.isclose(report.failing_eigenvalues, lam2, atol=1e-8))
    assert all(abs(l - lam2) < 1e-8 for l in report.failing_eigenvalues)
    with pytest.raises(NotStabilizable):
        solve_care(model.A, model.B)


def test_random_jets_stabilizable():
    'randomly placed jets are generically controlling and stabilizing'
    controllable = stabilizable = 0
    for seed in range(10):
        jets = JetArray.randomly_placed(np.random.default_rng(seed))
        model = linearize(np.zeros(grid.n_points), None, grid, jets)
        controllable += pbh_controllability(model.A, model.B).passed
        stabilizable += pbh_stabilizability(model.A, model.B).passed
    assert controllable >= 9
    assert stabilizable >= 9


def test_pbh_examples():
    'hand checked rank conditions'
    report = pbh_controllability(np.eye(2), [[1.], [0.]])
    assert not report.passed
    assert_allclose(report.failing_eigenvalues, [1., 1.])
    assert pbh_controllability(np.zeros((3, 3)), np.eye(3)).passed
    # nothing to stabilize
    hurwitz = np.diag([-1., -2.])
    assert pbh_stabilizability(hurwitz, np.zeros((2, 1))).passed
    assert not pbh_controllability(hurwitz, np.zeros((2, 1))).passed
    report = pbh_stabilizability(np.diag([1., -1.]), [[0.], [1.]])
    assert not report.passed
    assert_allclose(report.failing_eigenvalues, [1.])


def test_pbh_similarity_invariance():
    'PBH outcomes do not depend on the state basis'
    # exact integer similarity T = [[1, 1], [0, 1]]
    T, T_inv = np.array([[1., 1.], [0., 1.]]), np.array([[1., -1.], [0., 1.]])
    A, B = np.diag([1., 2.]), np.array([[1.], [0.]])
    for test in (pbh_controllability, pbh_stabilizability):
        report, moved = test(A, B), test(T @ A @ T_inv, T @ B)
        assert not report.passed and not moved.passed
        assert_allclose(moved.failing_eigenvalues, report.failing_eigenvalues)
    # orthogonal change of basis of the KS linearization
    T, _ = np.linalg.qr(np.random.default_rng(4).standard_normal((grid.n_points, grid.n_points)))
    for jets in (JetArray(), JetArray.randomly_placed(np.random.default_rng(0))):
        model = linearize(np.zeros(grid.n_points), None, grid, jets)
        A2, B2 = T @ model.A @ T.T, T @ model.B
        assert (pbh_controllability(model.A, model.B).passed ==
                pbh_controllability(A2, B2).passed)
        report, moved = pbh_stabilizability(model.A, model.B), pbh_stabilizability(A2, B2)
        assert report.passed == moved.passed == (not jets.equidistant)
        assert_allclose(np.sort(np.real(moved.failing_eigenvalues)),
                        np.sort(np.real(report.failing_eigenvalues)), atol=1e-8)


def test_linearization_error():
    'the linearization error about u = 0 is quadratic in the perturbation'
    jets = JetArray()
    model = linearize(np.zeros(grid.n_points), None, grid, jets)
    assert model.B.shape == (grid.n_points, 4)
    v = smooth_random_field(grid, np.random.default_rng(0), amplitude=1.)
    def error(eps):
        return np.linalg.norm(kse_residual(eps*v, None, grid) - model.A @ (eps*v))
    assert error(1e-2) / error(5e-3) == pytest.approx(4., rel=1e-3)


def test_closed_loop():
    'LQR with controllable jets brings a small perturbation back to the target'
    jets = JetArray.randomly_placed(np.random.default_rng(1))
    model = linearize(np.zeros(grid.n_points), None, grid, jets)
    gain = solve_care(model.A, model.B)
    assert gain.stable and gain.shift == 0.
    du = smooth_random_field(grid, np.random.default_rng(2), amplitude=1.)
    u0 = 1e-2 * du / np.abs(du).max()
    log = closed_loop_sim(model, gain, u0, 50.)
    assert not log.diverged
    assert log.fields.shape == (1001, grid.n_points)
    assert log.actions.shape == (1000, 4)
    assert np.abs(log.actions).max() <= LQR_SATURATION * jets.amp_limit
    assert log.deviation[-1] < 0.1 * log.deviation[0]


def test_closed_loop_divergence():
    'a runaway closed loop is flagged, or raised'
    from kscontrol.errors import IntegrationDiverged
    from kscontrol.lqr import LqrGain
    jets = JetArray()
    model = linearize(np.zeros(grid.n_points), None, grid, jets)
    # destabilizing feedback
    K = -1e4 * model.B.T
    bad = LqrGain(K, None, None, None, 0., 0., np.zeros(1))
    u0 = 1e-1 * np.cos(2*np.pi*grid.x/grid.L)
    log = closed_loop_sim(model, bad, u0, 50., sat=1e6, stop_on_divergence=True)
    assert log.diverged
    with pytest.raises(IntegrationDiverged):
        closed_loop_sim(model, bad, u0, 50., sat=1e6)


def test_zero_target_runaway():
    'with equidistant jets the saturated LQR loses the trivial solution'
    model = linearize(np.zeros(grid.n_points), None, grid, JetArray())
    failing = pbh_stabilizability(model.A, model.B).failing_eigenvalues
    gain = solve_care(model.A, model.B, shift=-(max(l.real for l in failing) + 0.05))
    assert not gain.stable
    du = smooth_random_field(grid, np.random.default_rng(3), amplitude=1.)
    u0 = 1e-2 * du / np.abs(du).max()
    log = closed_loop_sim(model, gain, u0, 100., stop_on_divergence=True)
    assert log.diverged or log.deviation.max() > 1.
    assert log.deviation[0] < 0.1


def test_forced_target_stabilized():
    'a perturbed forced equilibrium is held by the LQR of stabilizing jets'
    jets = JetArray.randomly_placed(np.random.default_rng(1))
    f = jets.forcing_field([0.05, -0.05, 0.025, -0.025], grid)
    eq = newton_solve(np.zeros(grid.n_points), f, grid)
    assert eq.forced and eq.max_real_eig > 0
    model = linearize(eq.u, eq.f, grid, jets)
    assert pbh_stabilizability(model.A, model.B).passed
    gain = solve_care(model.A, model.B)
    assert gain.stable
    at_target = closed_loop_sim(model, gain, eq.u, 5.)
    assert at_target.deviation.max() < 1e-8
    du = smooth_random_field(grid, np.random.default_rng(5), amplitude=1.)
    log = closed_loop_sim(model, gain, eq.u + 1e-2 * du / np.abs(du).max(), 50.)
    assert not log.diverged
    assert log.deviation[-1] < 0.1 * log.deviation[0]


def test_save_gain(tmp_path):
    gain = solve_care(np.diag([-1., 0.5]), np.eye(2))
    path = str(tmp_path / 'gain.csv')
    save_gain(path, gain)
    assert_allclose(np.loadtxt(path, delimiter=',', ndmin=2), gain.K)
