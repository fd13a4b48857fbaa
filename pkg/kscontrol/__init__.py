#!/usr/bin/python
# -*- coding: utf-8 -*-
"""  Kuramoto-Sivashinsky control workbench

Pseudo-spectral simulation of the KS equation actuated by Gaussian jets,
reinforcement learning of the jet amplitudes (DDPG, with or without the
discrete symmetry reduction), Newton continuation of steady states and
a linear-quadratic regulation baseline.

classes : GridConfig, Stepper, JetArray, Environment, Trainer, DdpgAgent,
          ReplayBuffer, OuNoise, RunConfig
"""

__version__ = '0.2.0'

from .spectral import GridConfig, Stepper
from .actuation import JetArray
from .environment import Environment, EpisodeConfig, Trainer
from .rlcore import DdpgAgent, DdpgConfig, ReplayBuffer, OuNoise
from .equilibria import newton_solve, continue_forcing, continue_domain
from .lqr import linearize, solve_care
from .config import RunConfig, load_config

from . import tests
