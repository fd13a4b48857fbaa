#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Example of a DDPG control of the KS equation for the documentation

This code closely matches the code chunks of example_control.rst

Plots are in separate files (for embedded plot generation)
 * example_control_plot_simulation.py
 * example_control_plot_training.py
"""

import logging
import sys

import numpy as np

try:
    import kscontrol
except ImportError:
    sys.path.append('..')
    import kscontrol

from kscontrol import GridConfig, JetArray, Environment, EpisodeConfig
from kscontrol import DdpgConfig, DdpgAgent, ReplayBuffer, OuNoise, Trainer
from kscontrol.config import rng_streams
from kscontrol.environment import attractor_library, controller, rollout
from kscontrol.rlcore import torch_generator

logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

grid = GridConfig(L=22., n_points=64, dt=0.05)
jets = JetArray(N=4, sigma_s=0.4, amp_limit=1.)

# 20 episodes of 20 time units, for a quick look
episode = EpisodeConfig(length=20., window=0.25, mode='reduced',
                        library_time=500., library_transient=100.)
ddpg = DdpgConfig(episodes=20)

rngs = rng_streams(seed=1)
env = Environment(grid, jets, episode, rngs['env'], name='reduced')

library = attractor_library(env, rngs['library'])

agent = DdpgAgent(env.obs_dim, env.act_dim, ddpg, torch_generator(rngs['init']))
n_decay = ddpg.decay_fraction * ddpg.episodes * episode.n_actions
noise = OuNoise.from_config(ddpg, env.act_dim, rngs['ou'], n_decay)
buffer = ReplayBuffer(env.obs_dim, env.act_dim, ddpg.buffer_size)

trainer = Trainer(env, agent, buffer, noise, rngs['sampling'], rngs['ic'], library)


if __name__ == '__main__':
    env.print_summary()
    curve = trainer.train(ddpg.episodes)
    rewards = np.array([c[1] for c in curve])
    print('reward of the first/last 5 episodes: {:.3f} / {:.3f}'.format(
          rewards[:5].mean(), rewards[-5:].mean()))

    F0 = kscontrol.spectral.to_spectral(library[0], grid)
    free = rollout(env, F0, 50.)
    controlled = rollout(env, F0, 50., controller(agent.actor, env))
    print('mean D + P_f without/with control: {:.4f} / {:.4f}'.format(
          np.mean(free.D + free.Pf), np.mean(controlled.D + controlled.Pf)))
