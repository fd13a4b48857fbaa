#!/usr/bin/python
# -*- coding: utf-8 -*-
""" tests for the Gaussian jet actuation
"""

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
import pytest

from kscontrol.errors import ConfigurationError, ShapeMismatchError
from kscontrol.spectral import GridConfig
from kscontrol.actuation import JetArray, forcing_field, clip

grid = GridConfig()


def test_jet_array_validation():
    with pytest.raises(ConfigurationError):
        JetArray(N=0)
    with pytest.raises(ConfigurationError):
        JetArray(sigma_s=-0.1)
    with pytest.raises(ConfigurationError):
        JetArray(N=2, positions=(0.1, 0.2, 0.3))
    with pytest.raises(ConfigurationError):
        JetArray(N=2, positions=(0.1, 22.))
    jets = JetArray(N=2, positions=[0.25, 0.5])
    assert jets.positions == (0.25, 0.5)
    assert not jets.equidistant
    assert JetArray().equidistant


def test_centers():
    assert_allclose(JetArray().centers(22.), [0., 5.5, 11., 16.5])
    assert_allclose(JetArray(N=2, positions=(0.1, 0.6)).centers(10.), [1., 6.])
    rng = np.random.default_rng(0)
    jets = JetArray.randomly_placed(rng, N=5, sigma_s=0.5)
    assert jets.N == 5 and jets.sigma_s == 0.5
    assert np.all(np.diff(jets.fractions()) > 0)


def test_resolution():
    'jets narrower than two grid spacings are rejected'
    JetArray(sigma_s=0.4).check_resolved(grid)
    with pytest.raises(ConfigurationError):
        JetArray(sigma_s=0.1).check_resolved(grid)
    with pytest.raises(ConfigurationError):
        JetArray(sigma_s=0.1).basis(grid)


def test_basis():
    'peak value, periodicity and caching of the unit jet fields'
    jets = JetArray()
    B = jets.basis(grid)
    assert B.shape == (grid.n_points, 4)
    assert_allclose(B[0, 0], 1/np.sqrt(2*np.pi*0.4))
    # jet 0 sits at x = 0: nearest image distance is symmetric across the boundary
    assert_allclose(B[1, 0], B[-1, 0])
    assert_allclose(B[16, 1], B[0, 0])
    assert B.max() == pytest.approx(B[0, 0])
    assert jets.basis(grid) is B
    with pytest.raises(ValueError):
        B[0, 0] = 1.
    # integral of a jet field: sqrt(sigma_s)
    assert_allclose(B[:, 2].sum() * grid.dx, np.sqrt(0.4), rtol=1e-6)


def test_forcing_field():
    jets = JetArray()
    B = jets.basis(grid)
    a = np.array([0.5, -1., 0., 0.25])
    f = forcing_field(a, jets, grid)
    assert_allclose(f, B @ a)
    assert_allclose(jets.forcing_field(a, grid), f)
    stack = jets.forcing_field(np.array([a, 2*a]), grid)
    assert stack.shape == (2, grid.n_points)
    assert_allclose(stack[1], 2*f)
    with pytest.raises(ShapeMismatchError):
        forcing_field(np.zeros(3), jets, grid)


def test_clip():
    jets = JetArray(amp_limit=0.5)
    assert_array_equal(clip([1., -2., 0.2, -0.1], jets), [0.5, -0.5, 0.2, -0.1])
    assert_array_equal(jets.clip([1., -2., 0.2, -0.1], factor=10.), [1., -2., 0.2, -0.1])
