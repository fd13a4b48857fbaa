#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Control environment of the forced KS equation

The environment binds the spectral solver, the jet actuation and the
reward r_t = -mean(D + P_f) over one action window. A `Trainer` runs
DDPG episodes in one of three modes:

* naive : the agent sees the raw field
* augmented : as naive, and every experience is stored together with
  its 2N-1 symmetry transformed copies
* reduced : the agent sees the symmetry reduced field, its actions are
  restored to the physical frame before being applied

Evaluation rollouts (`rollout`, `evaluate_ensemble`) run a frozen actor
from a set of initial conditions, optionally in a pool of processes.

classes : EpisodeConfig, Environment, Transition, EpisodeLog, Trainer,
          RolloutLog, EnsembleResult
"""

import csv
import logging
import multiprocessing
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

import numpy as np

from .errors import ConfigurationError, IntegrationDiverged
from .spectral import (Stepper, from_spectral, to_spectral, dissipation, power_input,
                       smooth_random_field)
from .symmetry import reduce_field, restore_action, GroupElement
from .rlcore import Mlp, forward

logger = logging.getLogger(__name__)

MODES = ('naive', 'augmented', 'reduced')
# divergent episodes restarted from a new initial condition before giving up
MAX_EPISODE_RESTARTS = 10


def _is_multiple(a, b):
    n = round(a / b)
    return n >= 1 and abs(n*b - a) <= 1e-9*a


@dataclass(frozen=True)
class EpisodeConfig:
    '''episode, noise and initial condition library settings

    length : episode duration (100 time units, i.e. 400 actions)
    window : action hold duration T
    obs_noise, act_noise : std of the Gaussian observation/actuation noise
    mode : 'naive', 'augmented' or 'reduced'
    library_* : unforced run generating the attractor snapshot library
    eval_time : duration of evaluation rollouts
    control_on, control_off : controller active on [control_on, control_off)
        during evaluation (control_off None: until the end)
    '''
    length: float = 100.
    window: float = 0.25
    obs_noise: float = 0.
    act_noise: float = 0.
    mode: str = 'reduced'
    library_time: float = 2500.
    library_transient: float = 500.
    library_interval: float = 5.
    eval_time: float = 250.
    control_on: float = 0.
    control_off: Optional[float] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError('mode should be one of {}, not {!r}'.format(MODES, self.mode))
        if not (self.window > 0 and _is_multiple(self.length, self.window)):
            raise ConfigurationError('episode length {:g} should be a multiple of the '
                                     'action window {:g}'.format(self.length, self.window))
        if self.obs_noise < 0 or self.act_noise < 0:
            raise ConfigurationError('noise std should be >= 0')
        if not 0 <= self.library_transient < self.library_time:
            raise ConfigurationError('library transient should be in [0, library_time)')
        if not self.library_interval > 0:
            raise ConfigurationError('library_interval should be > 0')
        if self.control_off is not None and self.control_off <= self.control_on:
            raise ConfigurationError('control_off should be > control_on')

    @property
    def n_actions(self):
        '''number of actions per episode'''
        return int(round(self.length / self.window))
# end EpisodeConfig


def reward(U_window, f, grid):
    '''r = -mean(D + P_f) over one action window

    `U_window` holds the real fields sampled at every dt over the window,
    both ends included. The average uses the left-endpoint samples
    (all but the last); a single sample is used as is.
    '''
    U = np.atleast_2d(U_window)
    if U.shape[0] > 1:
        U = U[:-1]
    return -float(np.mean(dissipation(U, grid) + power_input(U, f, grid)))


################################################################################
# Environment

@dataclass
class Transition:
    '''outcome of one action window'''
    state: np.ndarray
    reward: float
    observation: np.ndarray
    tag: object
    D: float
    Pf: float
    action: np.ndarray
    fields: np.ndarray = field(repr=False, default=None)


class Environment(object):
    '''KS equation actuated by a jet array, stepped one action window at a time

    `rng` draws the observation and actuation noise.
    '''
    def __init__(self, grid, jets, cfg, rng=None, name=''):
        self.grid = grid
        self.jets = jets
        self.cfg = cfg
        self.name = name
        self.rng = rng if rng is not None else np.random.default_rng()
        self.stepper = Stepper(grid, name)
        self.steps_per_action = grid.steps_in(cfg.window)
        if self.steps_per_action < 1:
            raise ConfigurationError('action window {:g} shorter than dt'.format(cfg.window))
        jets.check_resolved(grid)
        if cfg.mode != 'naive':
            if not jets.equidistant:
                raise ConfigurationError('{:s} mode needs equidistant jets'.format(cfg.mode))
            if jets.N % 2 != 0 or grid.n_points % jets.N != 0:
                raise ConfigurationError('{:s} mode needs an even jet count dividing '
                                         'n_points'.format(cfg.mode))

    @property
    def obs_dim(self):
        return self.grid.n_points

    @property
    def act_dim(self):
        return self.jets.N

    @property
    def reduced(self):
        return self.cfg.mode == 'reduced'

    def with_domain(self, L):
        '''same environment on a domain of length `L` (domain transfer)'''
        return Environment(self.grid.replace(L=L), self.jets, self.cfg, self.rng, self.name)

    def observe(self, F):
        '''observation of the spectral state `F`, returns (observation, tag)

        observation noise is added to the field before the symmetry reduction
        '''
        u = from_spectral(F, self.grid)
        if self.cfg.obs_noise > 0:
            u = u + self.cfg.obs_noise * self.rng.standard_normal(u.shape)
        if self.reduced:
            return reduce_field(u, self.grid, self.jets.N)
        return u, None

    def step(self, F, action):
        '''apply the jet amplitudes `action` over one window from state `F`

        The action is clipped, perturbed by the actuation noise (if any)
        and clipped again, then held constant over the window.
        '''
        a = self.jets.clip(action)
        if self.cfg.act_noise > 0:
            a = self.jets.clip(a + self.cfg.act_noise * self.rng.standard_normal(a.shape))
        f = self.jets.forcing_field(a, self.grid)
        traj = self.stepper.advance(F, self.steps_per_action, f)
        U = from_spectral(traj, self.grid)
        D = dissipation(U[:-1], self.grid)
        P = power_input(U[:-1], f, self.grid)
        obs, tag = self.observe(traj[-1])
        return Transition(traj[-1], -float(np.mean(D + P)), obs, tag,
                          float(np.mean(D)), float(np.mean(P)), a, U)

    def print_summary(self):
        g, j, c = self.grid, self.jets, self.cfg
        print('KS control environment "{}"'.format(self.name))
        print('* domain L = {:g}, {:d} points, dt = {:g}'.format(g.L, g.n_points, g.dt))
        print('* {:d} jets (sigma_s = {:g}, |a| <= {:g}){}'.format(
              j.N, j.sigma_s, j.amp_limit, '' if j.equidistant else ' at custom positions'))
        print('* episodes of {:g} time units, {:d} actions of T = {:g} ({:d} steps)'.format(
              c.length, c.n_actions, c.window, self.steps_per_action))
        print('* mode: {}, noise std obs/act = {:g}/{:g}'.format(c.mode, c.obs_noise, c.act_noise))
    # end print_summary()

    def __repr__(self):
        return '<Environment "{:s}" at 0x{:x}>'.format(self.name, id(self))
# end Environment


def attractor_library(env, rng, report_time=True):
    '''snapshots of the unforced chaotic attractor

    integrates the unforced KS equation from a smooth random field for
    `library_time`, drops the first `library_transient` time units and
    keeps a snapshot every `library_interval`. Returns real fields.
    '''
    t_start = datetime.now()
    cfg, grid = env.cfg, env.grid
    n_interval = grid.steps_in(cfg.library_interval)
    n_snap = int(round(cfg.library_time / cfg.library_interval))
    n_skip = int(round(cfg.library_transient / cfg.library_interval))
    F = to_spectral(smooth_random_field(grid, rng), grid)
    snapshots = []
    for i in range(1, n_snap+1):
        F = env.stepper.advance(F, n_interval)[-1]
        if i > n_skip:
            snapshots.append(from_spectral(F, grid))
    exec_time = (datetime.now() - t_start).total_seconds()
    if report_time:
        logger.info('attractor library of %d snapshots run in %.2f s', len(snapshots), exec_time)
    return np.array(snapshots)


################################################################################
# Training

@dataclass
class EpisodeLog:
    '''per action log of an episode'''
    t: np.ndarray
    r: np.ndarray
    D: np.ndarray
    Pf: np.ndarray
    actions: np.ndarray
    tags: list = field(default_factory=list, repr=False)
    fields: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def total_reward(self):
        return float(np.sum(self.r))

    def save_csv(self, path):
        '''CSV `step,t,r,D,Pf,a1..aN`'''
        n_jets = self.actions.shape[1]
        with open(path, 'w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(['step', 't', 'r', 'D', 'Pf'] +
                            ['a{:d}'.format(i+1) for i in range(n_jets)])
            for k in range(len(self.r)):
                writer.writerow([k] + [repr(float(v)) for v in
                                       (self.t[k], self.r[k], self.D[k], self.Pf[k])] +
                                [repr(float(v)) for v in self.actions[k]])


class Trainer(object):
    '''DDPG training loop (with optional symmetry reduction or augmentation)

    env : Environment (its mode selects the algorithm)
    agent : DdpgAgent, acting in [-1, 1]^N (scaled by the jets amp_limit)
    buffer : ReplayBuffer
    noise : OuNoise, sampled in the agent's (possibly reduced) frame
    sampling_rng : minibatch sampling
    ic_rng : choice of initial conditions in `library`
    '''
    def __init__(self, env, agent, buffer, noise, sampling_rng, ic_rng=None,
                 library=None, name=''):
        if (agent.obs_dim, agent.act_dim) != (env.obs_dim, env.act_dim):
            raise ConfigurationError('agent dims ({:d}, {:d}) do not match the environment '
                                     '({:d}, {:d})'.format(agent.obs_dim, agent.act_dim,
                                                           env.obs_dim, env.act_dim))
        self.env = env
        self.agent = agent
        self.buffer = buffer
        self.noise = noise
        self.sampling_rng = sampling_rng
        self.ic_rng = ic_rng
        self.library = library
        self.name = name
        self.n_diverged = 0
        self._group = GroupElement.all(env.jets.N) if env.cfg.mode == 'augmented' else None

    def select_action(self, obs, tag, explore=True):
        '''returns (agent frame action in [-1, 1], physical jet amplitudes)'''
        a_hat = self.agent.act(obs)
        if explore:
            a_hat = a_hat + self.noise.sample()
        a_hat = np.clip(a_hat, -1., 1.)
        a = a_hat if tag is None else restore_action(a_hat, tag)
        return a_hat, self.env.jets.amp_limit * a

    def store(self, obs, a_hat, r, obs_next, tag):
        if self._group is not None:
            for g in self._group:
                self.buffer.push(g.on_field(obs), g.on_action(a_hat), r, g.on_field(obs_next))
        else:
            self.buffer.push(obs, a_hat, r, obs_next,
                             (0, 1) if tag is None else tag.to_tuple())

    def run_episode(self, F0, learn=True, keep_fields=False):
        '''one episode from the spectral state `F0`

        per action: observe, act (with exploration when learning), step the
        environment, store the experience, one DDPG update once the buffer
        holds a batch, decay the exploration scale.
        '''
        env = self.env
        n = env.cfg.n_actions
        batch_size = self.agent.cfg.batch_size
        r = np.zeros(n)
        D = np.zeros(n)
        Pf = np.zeros(n)
        actions = np.zeros((n, env.act_dim))
        tags = []
        fields = [] if keep_fields else None
        self.noise.reset()
        F = np.asarray(F0, dtype=complex)
        obs, tag = env.observe(F)
        for k in range(n):
            a_hat, a = self.select_action(obs, tag, explore=learn)
            tr = env.step(F, a)
            if learn:
                self.store(obs, a_hat, tr.reward, tr.observation, tag)
                if len(self.buffer) >= batch_size:
                    self.agent.update(self.buffer.sample(batch_size, self.sampling_rng))
                self.noise.decay()
            r[k], D[k], Pf[k] = tr.reward, tr.D, tr.Pf
            actions[k] = tr.action
            tags.append(None if tag is None else tag.to_tuple())
            if keep_fields:
                fields.append(tr.fields[:-1])
            F, obs, tag = tr.state, tr.observation, tr.tag
        if keep_fields:
            fields.append(from_spectral(F, env.grid)[np.newaxis])
            fields = np.concatenate(fields)
        t = env.cfg.window * np.arange(n)
        return EpisodeLog(t, r, D, Pf, actions, tags, fields)

    def initial_condition(self):
        if self.library is None or self.ic_rng is None:
            raise ConfigurationError('training needs an initial condition library and its RNG')
        u0 = self.library[self.ic_rng.integers(len(self.library))]
        return to_spectral(u0, self.env.grid)

    def train(self, n_episodes, callback=None, report_time=True):
        '''run `n_episodes` learning episodes from library initial conditions

        An episode which diverges is restarted from a new initial condition:
        the exploration scale goes back to its value at the episode start and
        the experiences the episode stored are discarded, its gradient steps
        are kept.
        `callback(episode, log)` is called after each episode.
        Returns the training curve as a list of (episode, reward, beta, n_diverged).
        '''
        t_start = datetime.now()
        curve = []
        for ep in range(n_episodes):
            restarts = 0
            while True:
                beta, n_pushed = self.noise.beta, self.buffer.n_pushed
                try:
                    log = self.run_episode(self.initial_condition())
                    break
                except IntegrationDiverged as e:
                    self.noise.beta = beta
                    self.buffer.discard_last(self.buffer.n_pushed - n_pushed)
                    restarts += 1
                    self.n_diverged += 1
                    logger.warning('episode %d diverged at t=%s (%s), restarting',
                                   ep, e.time, e)
                    if restarts > MAX_EPISODE_RESTARTS:
                        raise
            curve.append((ep, log.total_reward, self.noise.beta, restarts))
            logger.info('episode %d/%d: reward %.4g, beta %.3g', ep+1, n_episodes,
                        log.total_reward, self.noise.beta)
            if callback is not None:
                callback(ep, log)
        exec_time = (datetime.now() - t_start).total_seconds()
        if report_time:
            logger.info('training of %d episodes run in %.2f s', n_episodes, exec_time)
        return curve

    def __repr__(self):
        return '<Trainer "{:s}" at 0x{:x}>'.format(self.name, id(self))
# end Trainer


################################################################################
# Evaluation

def controller(actor, env):
    '''deterministic control law F -> (physical action, tag) of a frozen actor

    `actor` is an Mlp (or None: no control). Observation noise of `env`
    applies; in reduced mode the action is restored to the physical frame.
    '''
    amp = env.jets.amp_limit
    def control(F):
        obs, tag = env.observe(F)
        if actor is None:
            return np.zeros(env.act_dim), tag
        a_hat = np.clip(forward(actor, obs), -1., 1.)
        a = a_hat if tag is None else restore_action(a_hat, tag)
        return amp * a, tag
    return control


@dataclass
class RolloutLog:
    '''controlled trajectory sampled at every dt'''
    t: np.ndarray
    fields: np.ndarray = field(repr=False)
    D: np.ndarray
    Pf: np.ndarray
    actions: np.ndarray
    action_t: np.ndarray
    rewards: np.ndarray

    @property
    def total_reward(self):
        return float(np.sum(self.rewards))


def rollout(env, F0, duration, control=None):
    '''integrate `duration` time units from `F0` under the control law `control`

    `control(F)` returns (jet amplitudes, tag). The controller acts on
    [control_on, control_off) of the environment config, the
    system runs unforced otherwise.
    '''
    cfg, grid = env.cfg, env.grid
    n_windows = int(round(duration / cfg.window))
    if abs(n_windows*cfg.window - duration) > 1e-9*duration:
        raise ConfigurationError('duration {:g} not a multiple of the window {:g}'.format(
                                 duration, cfg.window))
    t_off = np.inf if cfg.control_off is None else cfg.control_off
    n_sub = env.steps_per_action
    n_t = n_windows*n_sub + 1
    U = np.empty((n_t, grid.n_points))
    D = np.empty(n_t)
    Pf = np.empty(n_t)
    actions = np.zeros((n_windows, env.act_dim))
    rewards = np.zeros(n_windows)
    F = np.asarray(F0, dtype=complex)
    for k in range(n_windows):
        t_k = k * cfg.window
        if control is not None and cfg.control_on <= t_k < t_off:
            a, _ = control(F)
        else:
            a = np.zeros(env.act_dim)
        tr = env.step(F, a)
        sl = slice(k*n_sub, (k+1)*n_sub + 1)
        U[sl] = tr.fields
        D[sl] = dissipation(tr.fields, grid)
        Pf[sl] = power_input(tr.fields, env.jets.forcing_field(tr.action, grid), grid)
        actions[k] = tr.action
        rewards[k] = tr.reward
        F = tr.state
    t = grid.dt * np.arange(n_t)
    return RolloutLog(t, U, D, Pf, actions, cfg.window*np.arange(n_windows), rewards)


def mean_action(actions, n_last=None):
    '''long-time mean of the applied actions over the last `n_last` windows'''
    actions = np.atleast_2d(actions)
    if n_last is not None:
        actions = actions[-n_last:]
    return actions.mean(axis=0)


def control_deviation(actions, n_last=None):
    '''actions minus their long-time mean'''
    actions = np.atleast_2d(actions)
    return actions - mean_action(actions, n_last)


@dataclass
class EnsembleResult:
    '''D + P_f time series of an ensemble of rollouts'''
    t: np.ndarray
    D_plus_Pf: np.ndarray   # (n_ic, n_t)
    D: np.ndarray
    Pf: np.ndarray
    returns: np.ndarray     # per initial condition
    mean_actions: np.ndarray
    final_fields: np.ndarray = field(repr=False, default=None)

    @property
    def mean(self):
        return self.D_plus_Pf.mean(axis=0)

    @property
    def std(self):
        return self.D_plus_Pf.std(axis=0)

    def save_csv(self, prefix):
        '''per-IC `t,D,Pf,D_plus_Pf` CSVs and the ensemble `t,mean,std` CSV'''
        for i in range(len(self.returns)):
            np.savetxt('{}_ic{:03d}.csv'.format(prefix, i),
                       np.column_stack([self.t, self.D[i], self.Pf[i], self.D_plus_Pf[i]]),
                       delimiter=',', header='t,D,Pf,D_plus_Pf', comments='', fmt='%.17g')
        np.savetxt('{}_ensemble.csv'.format(prefix),
                   np.column_stack([self.t, self.mean, self.std]),
                   delimiter=',', header='t,mean,std', comments='', fmt='%.17g')


def _rollout_worker(args):
    '''rollout of one initial condition, run in a worker process'''
    grid, jets, cfg, actor_sizes, actor_state, u0, duration, seed_seq = args
    env = Environment(grid, jets, cfg, np.random.default_rng(seed_seq))
    actor = None
    if actor_state is not None:
        actor = Mlp(actor_sizes, 'tanh')
        actor.load_state_dict(actor_state)
        actor.eval()
    control = controller(actor, env) if actor is not None else None
    log = rollout(env, to_spectral(u0, grid), duration, control)
    return log.D, log.Pf, log.total_reward, mean_action(log.actions, len(log.actions)//2 or None), \
        log.fields[-1], log.t


def evaluate_ensemble(env, actor, initial_fields, duration, seed_seq, workers=1,
                      report_time=True):
    '''rollouts of the frozen `actor` (None: no control) from each initial field

    Each rollout gets its own noise stream spawned from `seed_seq`.
    With `workers` > 1 the rollouts are distributed over a process pool.
    '''
    t_start = datetime.now()
    initial_fields = np.atleast_2d(initial_fields)
    sizes = None if actor is None else actor.sizes
    state = None if actor is None else {k: v.detach().clone()
                                        for k, v in actor.state_dict().items()}
    children = seed_seq.spawn(len(initial_fields))
    jobs = [(env.grid, env.jets, env.cfg, sizes, state, u0, duration, ss)
            for u0, ss in zip(initial_fields, children)]
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            out = pool.map(_rollout_worker, jobs)
    else:
        out = [_rollout_worker(job) for job in jobs]
    D = np.array([o[0] for o in out])
    Pf = np.array([o[1] for o in out])
    res = EnsembleResult(out[0][5], D + Pf, D, Pf,
                         np.array([o[2] for o in out]),
                         np.array([o[3] for o in out]),
                         np.array([o[4] for o in out]))
    exec_time = (datetime.now() - t_start).total_seconds()
    if report_time:
        logger.info('ensemble of %d rollouts run in %.2f s', len(initial_fields), exec_time)
    return res


def equivariance_audit(control, env, states):
    '''max forcing-field equivariance error of the control law over the group

    for each spectral state F in `states` and each of the 2N group elements g:
    | field(a(g F)) - g field(a(F)) |_inf
    '''
    grid, jets = env.grid, env.jets
    worst = 0.
    for F in states:
        u = from_spectral(F, grid)
        f = jets.forcing_field(control(F)[0], grid)
        for g in GroupElement.all(jets.N):
            Fg = to_spectral(g.on_field(u), grid)
            fg = jets.forcing_field(control(Fg)[0], grid)
            worst = max(worst, np.max(np.abs(fg - g.on_field(f))))
    return worst
