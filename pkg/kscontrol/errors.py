#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Exceptions and warnings raised by the KS control workbench

Configuration problems derive from ValueError, numerical failures
from ArithmeticError, so that callers (and the command line front end)
can tell them apart.
"""


class ConfigurationError(ValueError):
    '''invalid grid, configuration file or argument length'''


class ShapeMismatchError(ConfigurationError):
    '''arrays, symmetry tags or checkpoints with incompatible shapes'''


class InsufficientDataError(ValueError):
    '''empty batch, or replay buffer smaller than the requested batch'''


class NumericalFailure(ArithmeticError):
    '''base class of the numerical failures'''


class IntegrationDiverged(NumericalFailure):
    '''time integration produced non-finite or runaway values'''
    def __init__(self, message, time=None, max_abs=None):
        super().__init__(message)
        self.time = time
        self.max_abs = max_abs


class NoConvergence(NumericalFailure):
    '''Newton iteration did not reach the requested tolerance'''
    def __init__(self, message, residual_norm=None, iterations=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class SingularJacobian(NumericalFailure):
    '''rank deficient (bordered) Jacobian in a Newton step'''


class BranchLost(NumericalFailure):
    '''continuation step failed even after step-halving retries'''
    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class NotStabilizable(NumericalFailure):
    '''(A, B) fails the PBH stabilizability test'''
    def __init__(self, message, failing_eigenvalues=()):
        super().__init__(message)
        self.failing_eigenvalues = list(failing_eigenvalues)


class NoStabilizingSolution(NumericalFailure):
    '''the Riccati solver found no stabilizing solution'''


class DegeneratePhaseWarning(RuntimeWarning):
    '''first Fourier mode too small to define a phase'''
