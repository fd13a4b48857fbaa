#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Training curves of the naive, augmented and reduced agents,
3 seeds x 300 episodes each (see example_control.rst)

The trainings take hours: the curves are cached in training_curves.npz,
delete the file to train again.
"""

import logging
import os

import numpy as np
import matplotlib.pyplot as plt

from kscontrol import RunConfig, Environment, DdpgAgent, ReplayBuffer, OuNoise, Trainer
from kscontrol.config import rng_streams
from kscontrol.environment import attractor_library, MODES
from kscontrol.rlcore import torch_generator

logging.basicConfig(level=logging.INFO,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

SEEDS = (1, 2, 3)
EPISODES = 300
CACHE = 'training_curves.npz'


def training_curve(cfg):
    '''total reward of each training episode'''
    rngs = rng_streams(cfg.seed)
    env = Environment(cfg.grid, cfg.jets, cfg.episode, rngs['env'], name=cfg.episode.mode)
    library = attractor_library(env, rngs['library'])
    agent = DdpgAgent(env.obs_dim, env.act_dim, cfg.ddpg, torch_generator(rngs['init']))
    n_decay = cfg.ddpg.decay_fraction * EPISODES * cfg.episode.n_actions
    noise = OuNoise.from_config(cfg.ddpg, env.act_dim, rngs['ou'], n_decay)
    buffer = ReplayBuffer(env.obs_dim, env.act_dim, cfg.ddpg.buffer_size)
    trainer = Trainer(env, agent, buffer, noise, rngs['sampling'], rngs['ic'], library,
                      name=cfg.episode.mode)
    return np.array([c[1] for c in trainer.train(EPISODES)])


if os.path.exists(CACHE):
    curves = dict(np.load(CACHE))
else:
    curves = {}
    for mode in MODES:
        cfg = RunConfig().with_mode(mode)
        curves[mode] = np.array([training_curve(cfg.replace(seed=s)) for s in SEEDS])
    np.savez(CACHE, **curves)

fig, ax = plt.subplots(figsize=(8, 4))
episodes = np.arange(1, EPISODES + 1)
for mode in MODES:
    r = curves[mode]
    ax.plot(episodes, r.mean(axis=0), label=mode)
    ax.fill_between(episodes, r.min(axis=0), r.max(axis=0), alpha=0.2)
ax.set_xlabel('episode')
ax.set_ylabel('episode reward')
ax.set_title('DDPG training, {:d} seeds'.format(len(SEEDS)))
ax.legend(loc='lower right')
fig.tight_layout()
plt.show()
