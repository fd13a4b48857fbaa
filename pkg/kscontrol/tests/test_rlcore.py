#!/usr/bin/python
# -*- coding: utf-8 -*-
""" tests for the DDPG machinery: networks, replay buffer, noise, agent, checkpoints
"""

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
import pytest
import torch
from torch import nn
from scipy import stats

from kscontrol.errors import ConfigurationError, InsufficientDataError, ShapeMismatchError
from kscontrol.rlcore import (DdpgConfig, Mlp, forward, Experience, ReplayBuffer, OuNoise,
                              DdpgAgent, save_checkpoint, load_checkpoint, torch_generator)
from kscontrol.config import rng_streams

small = DdpgConfig(hidden=(16, 8), batch_size=8, buffer_size=100)


def _generator(seed=0):
    return torch_generator(np.random.default_rng(seed))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        DdpgConfig(gamma=1.5)
    with pytest.raises(ConfigurationError):
        DdpgConfig(batch_size=200, buffer_size=100)
    with pytest.raises(ConfigurationError):
        DdpgConfig(decay='cosine')
    with pytest.raises(ConfigurationError):
        DdpgConfig(beta_final=2.)
    assert DdpgConfig(hidden=[32, 32]).hidden == (32, 32)


def test_mlp():
    'layer sizes, bounded actor output, small final layer, reproducible init'
    net = Mlp((6, 16, 8, 3), 'tanh', _generator())
    assert net.sizes == (6, 16, 8, 3)
    assert all(p.dtype == torch.float64 for p in net.parameters())
    last = net.layers[-1]
    assert last.weight.abs().max() <= 3e-3
    assert net.layers[0].weight.abs().max() <= 1/np.sqrt(6)
    x = np.random.default_rng(0).standard_normal((5, 6)) * 100
    y = forward(net, x)
    assert y.shape == (5, 3)
    assert np.all(np.abs(y) <= 1)
    assert forward(net, x[0]).shape == (3,)
    twin = Mlp((6, 16, 8, 3), 'tanh', _generator())
    assert_array_equal(forward(twin, x), y)
    with pytest.raises(ShapeMismatchError):
        forward(net, np.zeros(5))
    with pytest.raises(ConfigurationError):
        Mlp((2, 2), 'relu')


def test_buffer_fifo():
    'oldest experiences are evicted at capacity'
    buf = ReplayBuffer(2, 1, capacity=3)
    for i in range(5):
        buf.push([i, i], [0.], float(i), [i+1, i+1], tag=(i % 4, 1))
    assert len(buf) == 3
    exp = buf.experiences()
    assert_array_equal(exp.r, [2., 3., 4.])
    assert_array_equal(exp.s_next[:, 0], [3., 4., 5.])
    with pytest.raises(ShapeMismatchError):
        buf.push([0.], [0.], 0., [0., 0.])
    with pytest.raises(ConfigurationError):
        ReplayBuffer(2, 1, capacity=0)


def test_buffer_growth():
    buf = ReplayBuffer(3, 2, capacity=5000)
    for i in range(1500):
        buf.push(np.full(3, i), np.zeros(2), float(i), np.zeros(3))
    assert len(buf) == 1500
    assert_array_equal(buf.experiences().r, np.arange(1500.))


def test_buffer_sample():
    buf = ReplayBuffer(1, 1, capacity=50)
    rng = np.random.default_rng(0)
    with pytest.raises(InsufficientDataError):
        buf.sample(1, rng)
    for i in range(10):
        buf.push([i], [0.], float(i), [i])
    batch = buf.sample(10, rng)
    assert isinstance(batch, Experience) and len(batch) == 10
    assert sorted(batch.r) == list(range(10))
    assert_array_equal(batch.s[:, 0], batch.r)
    with pytest.raises(InsufficientDataError):
        buf.sample(11, rng)


def test_buffer_save(tmp_path):
    buf = ReplayBuffer(2, 1, capacity=10)
    buf.push([1., 2.], [0.5], -1., [3., 4.], tag=(2, -1))
    path = str(tmp_path / 'exp.npz')
    buf.save(path)
    data = np.load(path)
    assert_array_equal(data['tags'], [[2, -1]])
    assert_array_equal(data['s_next'], [[3., 4.]])


def test_buffer_discard():
    'the newest experiences are removed, also across the ring boundary'
    buf = ReplayBuffer(1, 1, capacity=4)
    for i in range(6):
        buf.push([i], [0.], float(i), [i])
    buf.discard_last(3)
    assert len(buf) == 1 and buf.n_pushed == 3
    assert_array_equal(buf.experiences().r, [2.])
    assert_array_equal(buf.sample(1, np.random.default_rng(0)).r, [2.])
    for i in range(6, 9):
        buf.push([i], [0.], float(i), [i])
    assert_array_equal(buf.experiences().r, [2., 6., 7., 8.])
    buf.discard_last(10)
    assert len(buf) == 0


def test_noise_decay():
    'exploration scale reaches beta_final after the decay steps and stays there'
    for decay in ('geometric', 'linear'):
        cfg = DdpgConfig(decay=decay)
        noise = OuNoise.from_config(cfg, 4, np.random.default_rng(0), 100)
        for _ in range(100):
            noise.decay()
        assert noise.beta == pytest.approx(0.05)
        for _ in range(50):
            noise.decay()
        assert noise.beta == pytest.approx(0.05)


def test_noise_process():
    noise = OuNoise(3, np.random.default_rng(1), beta=0.5)
    samples = np.array([noise.sample() for _ in range(20000)])
    assert samples.shape == (20000, 3)
    # stationary std of the discrete process: sigma / sqrt(theta (2 - theta))
    std = 0.2 / np.sqrt(0.15 * 1.85)
    assert_allclose(samples[1000:].std(axis=0), 0.5*std, rtol=0.1)
    noise.reset()
    assert_array_equal(noise.x, 0.)


def _batch(n=8, obs_dim=4, act_dim=2, seed=0):
    rng = np.random.default_rng(seed)
    return Experience(rng.standard_normal((n, obs_dim)), rng.uniform(-1, 1, (n, act_dim)),
                      rng.standard_normal(n), rng.standard_normal((n, obs_dim)))


def test_agent_targets():
    agent = DdpgAgent(4, 2, small, _generator())
    assert agent.act(np.zeros(4)).shape == (2,)
    batch = _batch()
    r = torch.as_tensor(batch.r)
    s_next = torch.as_tensor(batch.s_next)
    # target networks start as copies of the live ones
    y = agent.td_target(r, s_next)
    with torch.no_grad():
        q = agent.q_value(s_next, agent.actor(s_next))
    assert_allclose(y.numpy(), batch.r + 0.99*q.numpy(), rtol=1e-12)
    assert all(not p.requires_grad for p in agent.target_critic.parameters())


def test_soft_update():
    from dataclasses import replace
    agent = DdpgAgent(4, 2, replace(small, tau=1.), _generator())
    with torch.no_grad():
        for p in agent.actor.parameters():
            p.add_(1.)
    agent.soft_update()
    for p, p_t in zip(agent.actor.parameters(), agent.target_actor.parameters()):
        assert_allclose(p_t.detach().numpy(), p.detach().numpy(), rtol=1e-15)
    frozen = DdpgAgent(4, 2, replace(small, tau=0.), _generator())
    before = [p.clone() for p in frozen.target_actor.parameters()]
    with torch.no_grad():
        for p in frozen.actor.parameters():
            p.add_(1.)
    frozen.soft_update()
    for p, p_t in zip(before, frozen.target_actor.parameters()):
        assert torch.equal(p, p_t)


def test_critic_learns():
    'with gamma = 0, the critic regresses the rewards'
    from dataclasses import replace
    agent = DdpgAgent(4, 2, replace(small, gamma=0., critic_lr=1e-2), _generator())
    batch = _batch(32)
    first = agent.critic_update(batch)
    for _ in range(300):
        last = agent.critic_update(batch)
    assert last < first
    grad_norm = agent.actor_update(batch)
    assert np.isfinite(grad_norm)
    assert all(p.grad is None for p in agent.critic.parameters())
    loss, grad_norm = agent.update(batch)
    assert np.isfinite(loss) and np.isfinite(grad_norm)
    with pytest.raises(ShapeMismatchError):
        agent.critic_update(_batch(8, obs_dim=3))


def test_checkpoint(tmp_path):
    path = str(tmp_path / 'agent.pt')
    agent = DdpgAgent(4, 2, small, _generator(1))
    agent.update(_batch())
    rngs = rng_streams(0)
    noise = OuNoise(2, rngs['ou'], beta=0.3)
    for _ in range(3):
        noise.sample()
    rngs['sampling'].integers(100, size=5)
    save_checkpoint(path, agent, noise, rngs, extra={'episode': 3})
    # what the original run draws next
    expected = {name: rng.standard_normal(4) for name, rng in rngs.items()}
    other = DdpgAgent(4, 2, small, _generator(2))
    fresh = rng_streams(0)
    other_noise = OuNoise(2, fresh['ou'])
    record = load_checkpoint(path, other, other_noise, fresh)
    assert record['extra'] == {'episode': 3}
    assert other_noise.beta == 0.3
    assert_array_equal(other_noise.x, noise.x)
    for name, rng in fresh.items():
        assert_array_equal(rng.standard_normal(4), expected[name])
    x = np.random.default_rng(5).standard_normal((3, 4))
    assert_array_equal(other.act(x), agent.act(x))
    for p, q in zip(other.actor_optim.state_dict()['state'][0].values(),
                    agent.actor_optim.state_dict()['state'][0].values()):
        assert torch.equal(torch.as_tensor(p), torch.as_tensor(q))
    wrong = DdpgAgent(4, 3, small)
    with pytest.raises(ShapeMismatchError):
        load_checkpoint(path, wrong)


def test_gradients():
    'autograd gradients of both networks match finite differences'
    agent = DdpgAgent(4, 2, small, _generator(3))
    rng = np.random.default_rng(3)
    s = torch.tensor(rng.standard_normal((3, 4)), requires_grad=True)
    a = torch.tensor(rng.uniform(-1, 1, (3, 2)), requires_grad=True)
    assert torch.autograd.gradcheck(agent.q_value, (s, a), eps=1e-6, atol=1e-5, rtol=1e-5)
    assert torch.autograd.gradcheck(agent.actor, (s,), eps=1e-6, atol=1e-5, rtol=1e-5)


def test_update_determinism():
    'same seeds, same batches: bitwise identical networks after 100 updates'
    agents = [DdpgAgent(4, 2, small, _generator(4)) for _ in range(2)]
    for k in range(100):
        batch = _batch(8, seed=k)
        for agent in agents:
            agent.update(batch)
    first, second = agents
    for net in ('actor', 'critic', 'target_actor', 'target_critic'):
        for p, q in zip(getattr(first, net).parameters(), getattr(second, net).parameters()):
            assert torch.equal(p, q)


def test_buffer_uniform():
    'every stored experience is drawn equally often'
    buf = ReplayBuffer(1, 1, capacity=10)
    for i in range(10):
        buf.push([i], [0.], float(i), [i])
    rng = np.random.default_rng(7)
    counts = np.zeros(10)
    for _ in range(5000):
        batch = buf.sample(4, rng)
        counts[batch.r.astype(int)] += 1
    assert counts.sum() == 20000
    assert stats.chisquare(counts).pvalue > 1e-3


def test_critic_loss():
    'the critic loss is the mean squared TD error before the step'
    agent = DdpgAgent(4, 2, small, _generator(6))
    batch = _batch(16, seed=6)
    s, a, r, s_next = (torch.as_tensor(x) for x in (batch.s, batch.a, batch.r, batch.s_next))
    with torch.no_grad():
        y = r + 0.99 * agent.q_value(s_next, agent.target_actor(s_next), target=True)
        expected = float(torch.mean((y - agent.q_value(s, a))**2))
    assert agent.critic_update(batch) == pytest.approx(expected, rel=1e-12)

    from dataclasses import replace
    agent = DdpgAgent(4, 2, replace(small, gamma=0.), _generator(6))
    with torch.no_grad():
        q = agent.q_value(s, a).numpy()
    before = [p.clone() for p in agent.critic.parameters()]
    # rewards equal to the critic values: the TD error vanishes
    assert agent.critic_update(Experience(batch.s, batch.a, q, batch.s_next)) == 0.
    for p, p0 in zip(agent.critic.parameters(), before):
        assert torch.equal(p, p0)


def test_frozen_actor():
    'a zero actor learning rate leaves the actor untouched'
    from dataclasses import replace
    agent = DdpgAgent(4, 2, replace(small, actor_lr=0.), _generator(8))
    before = [p.clone() for p in agent.actor.parameters()]
    for k in range(5):
        grad_norm = agent.actor_update(_batch(8, seed=k))
    assert grad_norm > 0
    for p, p0 in zip(agent.actor.parameters(), before):
        assert torch.equal(p, p0)


class _Parabola(nn.Module):
    'Q(s, a) = -(a - 1)^2 on the last input column'
    def forward(self, x):
        return -(x[..., -1:] - 1)**2


def test_actor_climbs_critic():
    'the actor output moves toward the maximizer of a fixed critic'
    from dataclasses import replace
    agent = DdpgAgent(1, 1, replace(small, actor_lr=1e-2), _generator(9))
    agent.critic = _Parabola()
    batch = _batch(16, obs_dim=1, act_dim=1, seed=9)
    start = forward(agent.actor, batch.s)
    for _ in range(200):
        agent.actor_update(batch)
    end = forward(agent.actor, batch.s)
    assert np.all(np.abs(end - 1) < np.abs(start - 1))
    assert end.mean() > 0.5


def test_soft_update_convex():
    'targets move to tau live + (1 - tau) target, inside the segment'
    from dataclasses import replace
    agent = DdpgAgent(4, 2, replace(small, tau=0.3), _generator(10))
    with torch.no_grad():
        for p in list(agent.actor.parameters()) + list(agent.critic.parameters()):
            p.add_(torch.randn(p.shape, dtype=p.dtype, generator=_generator(11)))
    old = [p.clone() for p in list(agent.target_actor.parameters()) +
           list(agent.target_critic.parameters())]
    live = [p.detach().clone() for p in list(agent.actor.parameters()) +
            list(agent.critic.parameters())]
    agent.soft_update()
    new = list(agent.target_actor.parameters()) + list(agent.target_critic.parameters())
    for p_old, p, p_new in zip(old, live, new):
        assert_allclose(p_new.numpy(), 0.7*p_old.numpy() + 0.3*p.numpy(), rtol=1e-12, atol=1e-15)
        lo, hi = torch.minimum(p_old, p), torch.maximum(p_old, p)
        assert torch.all((p_new >= lo - 1e-12) & (p_new <= hi + 1e-12))
