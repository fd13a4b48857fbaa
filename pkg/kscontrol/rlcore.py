#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Deep Deterministic Policy Gradient machinery

* Mlp : multilayer perceptron (ReLU hidden layers, tanh or linear output)
* DdpgAgent : actor, critic, their target copies and Adam optimizers
* ReplayBuffer : FIFO ring of experiences with uniform minibatch sampling
* OuNoise : Ornstein-Uhlenbeck exploration noise with a decaying scale

Networks run in double precision on the CPU.

classes : DdpgConfig, Mlp, DdpgAgent, Experience, ReplayBuffer, OuNoise
"""

import copy
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch
from torch import nn

from .errors import ConfigurationError, InsufficientDataError, ShapeMismatchError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
DTYPE = torch.float64


@dataclass(frozen=True)
class DdpgConfig:
    '''DDPG hyperparameters

    tau is the target network rate alpha_T.
    The exploration scale beta goes from beta_initial to beta_final
    over `decay_fraction` of the training episodes ('geometric' or 'linear'
    schedule) and stays at beta_final afterwards.
    '''
    gamma: float = 0.99
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    tau: float = 0.005
    hidden: Tuple[int, ...] = (256, 128)
    buffer_size: int = 500000
    batch_size: int = 128
    episodes: int = 300
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    ou_dt: float = 1.
    beta_initial: float = 1.
    beta_final: float = 0.05
    decay_fraction: float = 0.8
    decay: str = 'geometric'

    def __post_init__(self):
        object.__setattr__(self, 'hidden', tuple(int(h) for h in self.hidden))
        if not 0 <= self.gamma <= 1:
            raise ConfigurationError('discount gamma should be in [0, 1], not {!r}'.format(self.gamma))
        if not 0 <= self.tau <= 1:
            raise ConfigurationError('target rate tau should be in [0, 1], not {!r}'.format(self.tau))
        if self.actor_lr < 0 or self.critic_lr < 0:
            raise ConfigurationError('learning rates should be >= 0')
        if self.batch_size < 1 or self.buffer_size < self.batch_size:
            raise ConfigurationError('need 1 <= batch_size ({:d}) <= buffer_size ({:d})'.format(
                                     self.batch_size, self.buffer_size))
        if self.episodes < 1:
            raise ConfigurationError('episodes should be >= 1, not {!r}'.format(self.episodes))
        if not 0 <= self.beta_final <= self.beta_initial <= 1:
            raise ConfigurationError('need 0 <= beta_final <= beta_initial <= 1')
        if not 0 < self.decay_fraction <= 1:
            raise ConfigurationError('decay_fraction should be in (0, 1]')
        if self.decay not in ('geometric', 'linear'):
            raise ConfigurationError("decay should be 'geometric' or 'linear', "
                                     "not {!r}".format(self.decay))
# end DdpgConfig


################################################################################
# Networks

class Mlp(nn.Module):
    '''Multilayer perceptron

    sizes : (input, hidden..., output) layer sizes
    output : 'tanh' (actor) or 'linear' (critic)
    generator : torch.Generator for the weight initialization

    Hidden layers use uniform fan-in initialization (+-1/sqrt(fan_in)),
    the output layer is initialized in +-final_init.
    '''
    def __init__(self, sizes, output='linear', generator=None, final_init=3e-3):
        super().__init__()
        if output not in ('tanh', 'linear'):
            raise ConfigurationError("output activation should be 'tanh' or 'linear', "
                                     "not {!r}".format(output))
        self.sizes = tuple(int(s) for s in sizes)
        self.output = output
        self.layers = nn.ModuleList(
            nn.Linear(n_in, n_out, dtype=DTYPE)
            for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]))
        with torch.no_grad():
            for i, layer in enumerate(self.layers):
                last = i == len(self.layers) - 1
                bound = final_init if last else 1/np.sqrt(layer.in_features)
                layer.weight.uniform_(-bound, bound, generator=generator)
                layer.bias.uniform_(-bound, bound, generator=generator)

    def forward(self, x):
        for layer in self.layers[:-1]:
            x = torch.relu(layer(x))
        x = self.layers[-1](x)
        if self.output == 'tanh':
            x = torch.tanh(x)
        return x

    def __repr__(self):
        return '<Mlp {} ({}) at 0x{:x}>'.format(
               '-'.join(str(s) for s in self.sizes), self.output, id(self))


def as_tensor(x):
    return torch.as_tensor(np.asarray(x, dtype=float), dtype=DTYPE)


def forward(net, x):
    '''evaluate `net` on the array `x` (single vector or batch), returns an array'''
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.sizes[0]:
        raise ShapeMismatchError('network input should be of length {:d}, not {:d}'.format(
                                 net.sizes[0], x.shape[-1]))
    with torch.no_grad():
        return net(as_tensor(x)).numpy()


################################################################################
# Experience replay

@dataclass
class Experience:
    '''transition (s, a, r, s_next), or a batch of them (stacked arrays)'''
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray

    def __len__(self):
        return len(np.atleast_1d(self.r))


class ReplayBuffer(object):
    '''FIFO ring buffer of experiences

    Storage grows on demand up to `capacity`, beyond which the oldest
    experiences are overwritten. Each experience may carry the
    (theta_N index, rho) symmetry tag of its reduced state.
    '''
    _initial_alloc = 1024

    def __init__(self, obs_dim, act_dim, capacity=500000):
        if capacity < 1:
            raise ConfigurationError('buffer capacity should be >= 1, not {!r}'.format(capacity))
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.capacity = int(capacity)
        self._size = 0
        self._next = 0
        self.n_pushed = 0
        self._alloc(min(self.capacity, self._initial_alloc))

    def _alloc(self, n):
        old = getattr(self, '_s', None)
        arrays = {'_s': (self.obs_dim,), '_a': (self.act_dim,), '_r': (),
                  '_s_next': (self.obs_dim,), '_tags': (2,)}
        for name, shape in arrays.items():
            dtype = np.int64 if name == '_tags' else float
            new = np.zeros((n,) + shape, dtype=dtype)
            if old is not None:
                new[:self._size] = getattr(self, name)[:self._size]
            setattr(self, name, new)

    def __len__(self):
        return self._size

    def push(self, s, a, r, s_next, tag=(0, 1)):
        '''store one experience, evicting the oldest one at capacity'''
        s = np.asarray(s, dtype=float)
        a = np.asarray(a, dtype=float)
        s_next = np.asarray(s_next, dtype=float)
        if s.shape != (self.obs_dim,) or s_next.shape != (self.obs_dim,):
            raise ShapeMismatchError('observations should be of length {:d}'.format(self.obs_dim))
        if a.shape != (self.act_dim,):
            raise ShapeMismatchError('action should be of length {:d}, not {:d}'.format(
                                     self.act_dim, a.size))
        if self._next >= len(self._r):
            self._alloc(min(2*len(self._r), self.capacity))
        i = self._next
        self._s[i] = s
        self._a[i] = a
        self._r[i] = r
        self._s_next[i] = s_next
        self._tags[i] = tag
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        self.n_pushed += 1

    def discard_last(self, n):
        '''remove the `n` most recent experiences

        experiences they evicted at capacity are not restored
        '''
        n = min(int(n), self._size)
        self._next = (self._next - n) % self.capacity
        self._size -= n
        self.n_pushed -= n

    def _ordered(self):
        '''storage indices from the oldest to the newest experience'''
        oldest = (self._next - self._size) % self.capacity
        return (oldest + np.arange(self._size)) % self.capacity

    def experiences(self):
        '''all the stored experiences (oldest first), as a batch'''
        idx = self._ordered()
        return Experience(self._s[idx], self._a[idx], self._r[idx], self._s_next[idx])

    def sample(self, batch_size, rng):
        '''uniform minibatch, without replacement within the batch'''
        if batch_size < 1 or self._size < batch_size:
            raise InsufficientDataError('cannot sample {:d} experiences from a buffer '
                                        'of {:d}'.format(batch_size, self._size))
        idx = self._ordered()[rng.choice(self._size, size=batch_size, replace=False)]
        return Experience(self._s[idx], self._a[idx], self._r[idx], self._s_next[idx])

    def save(self, path):
        '''experience log (.npz) with the symmetry tags'''
        idx = self._ordered()
        np.savez_compressed(path, s=self._s[idx], a=self._a[idx], r=self._r[idx],
                            s_next=self._s_next[idx], tags=self._tags[idx])

    def __repr__(self):
        return '<ReplayBuffer {:d}/{:d} at 0x{:x}>'.format(self._size, self.capacity, id(self))
# end ReplayBuffer


################################################################################
# Exploration noise

class OuNoise(object):
    '''Ornstein-Uhlenbeck exploration noise, scaled by beta

    x <- x + theta (0 - x) dt + sigma sqrt(dt) eta, returns beta x

    `decay()` applies one step of the exploration schedule: beta <- rate*beta
    (geometric) or beta <- beta - rate (linear), never below beta_final.
    '''
    def __init__(self, dim, rng, theta=0.15, sigma=0.2, dt=1., beta=1.,
                 beta_final=0., rate=None, schedule='geometric'):
        self.dim = dim
        self.rng = rng
        self.theta = theta
        self.sigma = sigma
        self.dt = dt
        self.beta = beta
        self.beta_final = beta_final
        self.schedule = schedule
        if rate is None:
            rate = 1. if schedule == 'geometric' else 0.
        self.rate = rate
        self.reset()

    @classmethod
    def from_config(cls, cfg, dim, rng, n_decay_steps):
        '''noise whose scale reaches beta_final after `n_decay_steps` decays'''
        n = max(int(n_decay_steps), 1)
        if cfg.decay == 'geometric':
            if cfg.beta_final > 0:
                rate = (cfg.beta_final / cfg.beta_initial)**(1/n)
            else:
                rate = 0.
        else:
            rate = (cfg.beta_initial - cfg.beta_final) / n
        return cls(dim, rng, cfg.ou_theta, cfg.ou_sigma, cfg.ou_dt, cfg.beta_initial,
                   cfg.beta_final, rate, cfg.decay)

    def reset(self):
        self.x = np.zeros(self.dim)

    def sample(self):
        eta = self.rng.standard_normal(self.dim)
        self.x = self.x + self.theta*(0 - self.x)*self.dt + self.sigma*np.sqrt(self.dt)*eta
        return self.beta * self.x

    def decay(self):
        if self.schedule == 'geometric':
            beta = self.beta * self.rate
        else:
            beta = self.beta - self.rate
        self.beta = max(beta, self.beta_final)
        return self.beta
# end OuNoise


################################################################################
# Agent

class DdpgAgent(object):
    '''actor-critic agent with target networks

    The actor maps an observation to an action in [-1, 1]^act_dim,
    the critic maps (observation, action) to a scalar Q value.
    '''
    def __init__(self, obs_dim, act_dim, cfg=None, generator=None, name=''):
        self.cfg = cfg if cfg is not None else DdpgConfig()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.name = name
        hidden = self.cfg.hidden
        self.actor = Mlp((obs_dim,) + hidden + (act_dim,), 'tanh', generator)
        self.critic = Mlp((obs_dim + act_dim,) + hidden + (1,), 'linear', generator)
        self.target_actor = copy.deepcopy(self.actor)
        self.target_critic = copy.deepcopy(self.critic)
        for p in list(self.target_actor.parameters()) + list(self.target_critic.parameters()):
            p.requires_grad_(False)
        self.actor_optim = torch.optim.Adam(self.actor.parameters(), lr=self.cfg.actor_lr)
        self.critic_optim = torch.optim.Adam(self.critic.parameters(), lr=self.cfg.critic_lr)

    @property
    def gamma(self):
        return self.cfg.gamma

    @property
    def tau(self):
        return self.cfg.tau

    def q_value(self, s, a, target=False):
        critic = self.target_critic if target else self.critic
        return critic(torch.cat([s, a], dim=-1)).squeeze(-1)

    def act(self, obs):
        '''deterministic action of the live actor'''
        return forward(self.actor, obs)

    def _batch_tensors(self, batch):
        if len(batch) == 0:
            raise InsufficientDataError('empty batch')
        s = as_tensor(np.atleast_2d(batch.s))
        a = as_tensor(np.atleast_2d(batch.a))
        r = as_tensor(np.atleast_1d(batch.r))
        s_next = as_tensor(np.atleast_2d(batch.s_next))
        if s.shape[-1] != self.obs_dim or a.shape[-1] != self.act_dim:
            raise ShapeMismatchError('batch of shapes s{}, a{} does not match the agent '
                                     '({:d}, {:d})'.format(tuple(s.shape), tuple(a.shape),
                                                           self.obs_dim, self.act_dim))
        return s, a, r, s_next

    def td_target(self, r, s_next):
        '''y = r + gamma Q'(s_next, P'(s_next))'''
        with torch.no_grad():
            a_next = self.target_actor(s_next)
            return r + self.gamma * self.q_value(s_next, a_next, target=True)

    def critic_update(self, batch):
        '''one gradient step on the mean squared Bellman residual, returns the loss'''
        s, a, r, s_next = self._batch_tensors(batch)
        y = self.td_target(r, s_next)
        loss = torch.mean((y - self.q_value(s, a))**2)
        self.critic_optim.zero_grad()
        loss.backward()
        self.critic_optim.step()
        return float(loss)

    def actor_update(self, batch):
        '''one deterministic policy gradient step, returns the gradient norm

        ascends mean Q(s, P(s)) with the critic held fixed
        '''
        s, _, _, _ = self._batch_tensors(batch)
        objective = -torch.mean(self.q_value(s, self.actor(s)))
        self.actor_optim.zero_grad()
        objective.backward()
        grad_norm = torch.sqrt(sum(torch.sum(p.grad**2) for p in self.actor.parameters()))
        self.actor_optim.step()
        # the critic only served as a fixed function
        self.critic.zero_grad(set_to_none=True)
        return float(grad_norm)

    def soft_update(self):
        '''target <- tau live + (1 - tau) target'''
        with torch.no_grad():
            for live, target in ((self.actor, self.target_actor),
                                 (self.critic, self.target_critic)):
                for p, p_t in zip(live.parameters(), target.parameters()):
                    p_t.lerp_(p, self.tau)

    def update(self, batch):
        '''critic step, actor step, target update. Returns (critic loss, actor grad norm)'''
        loss = self.critic_update(batch)
        grad_norm = self.actor_update(batch)
        self.soft_update()
        return loss, grad_norm

    def print_summary(self):
        print('DDPG agent "{}"'.format(self.name))
        print('* actor  : {}'.format(self.actor))
        print('* critic : {}'.format(self.critic))
        c = self.cfg
        print('* gamma = {:g}, tau = {:g}, lr actor = {:g}, lr critic = {:g}'.format(
              c.gamma, c.tau, c.actor_lr, c.critic_lr))
    # end print_summary()

    def __repr__(self):
        return '<DdpgAgent "{:s}" at 0x{:x}>'.format(self.name, id(self))
# end DdpgAgent


################################################################################
# Checkpoints

def save_checkpoint(path, agent, noise=None, rngs=None, extra=None):
    '''write the agent (networks, optimizers), exploration noise and RNG states

    `rngs` maps stream names to numpy Generators, their bit generator
    states are stored so that a resumed run draws the same numbers.
    '''
    record = {
        'version': CHECKPOINT_VERSION,
        'obs_dim': agent.obs_dim,
        'act_dim': agent.act_dim,
        'actor_sizes': list(agent.actor.sizes),
        'critic_sizes': list(agent.critic.sizes),
        'actor': agent.actor.state_dict(),
        'critic': agent.critic.state_dict(),
        'target_actor': agent.target_actor.state_dict(),
        'target_critic': agent.target_critic.state_dict(),
        'actor_optim': agent.actor_optim.state_dict(),
        'critic_optim': agent.critic_optim.state_dict(),
        'beta': None if noise is None else noise.beta,
        'ou_state': None if noise is None else noise.x.copy(),
        'rng_states': {name: rng.bit_generator.state for name, rng in (rngs or {}).items()},
        'extra': extra or {},
    }
    torch.save(record, path)
    logger.debug('checkpoint written to %s', path)


def load_checkpoint(path, agent, noise=None, rngs=None):
    '''restore `agent` in place from a checkpoint, returns the checkpoint record

    `noise` and the Generators of `rngs` (same names as at saving time)
    are restored too when given.
    Raises ShapeMismatchError if the layer sizes differ.
    '''
    record = torch.load(path, map_location='cpu', weights_only=False)
    if record.get('version') != CHECKPOINT_VERSION:
        raise ShapeMismatchError('unsupported checkpoint version {!r}'.format(record.get('version')))
    for key, net in (('actor_sizes', agent.actor), ('critic_sizes', agent.critic)):
        if tuple(record[key]) != net.sizes:
            raise ShapeMismatchError('checkpoint {:s} {} do not match the agent {}'.format(
                                     key.replace('_', ' '), tuple(record[key]), net.sizes))
    agent.actor.load_state_dict(record['actor'])
    agent.critic.load_state_dict(record['critic'])
    agent.target_actor.load_state_dict(record['target_actor'])
    agent.target_critic.load_state_dict(record['target_critic'])
    agent.actor_optim.load_state_dict(record['actor_optim'])
    agent.critic_optim.load_state_dict(record['critic_optim'])
    if noise is not None and record['beta'] is not None:
        noise.beta = record['beta']
        if record.get('ou_state') is not None:
            noise.x = np.array(record['ou_state'], dtype=float)
    saved = record.get('rng_states', {})
    for name, rng in (rngs or {}).items():
        if name not in saved:
            logger.warning('no state for the random stream %r in %s', name, path)
            continue
        rng.bit_generator.state = saved[name]
    return record


def torch_generator(rng):
    '''torch.Generator seeded from the numpy Generator `rng`'''
    gen = torch.Generator()
    gen.manual_seed(int(rng.integers(2**62)))
    return gen
