#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Command line front end

    kscontrol simulate           unforced (or constantly forced) trajectory dumps
    kscontrol train              DDPG training (naive, augmented or reduced mode)
    kscontrol evaluate           ensemble evaluation of a checkpoint, domain transfer
    kscontrol continue-forcing   forced equilibrium, forcing continuation to f = 0
    kscontrol continue-domain    domain length continuation of an unforced equilibrium
    kscontrol lqr                PBH tests, LQR gain and saturated closed loop run
    kscontrol audit-symmetry     equivariance audit of the symmetry reduced control

Common options: --config PATH --seed N --out DIR --mode MODE --verbose.
Exit codes: 0 ok, 2 configuration error (or too little data), 3 numerical failure.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .errors import (ConfigurationError, InsufficientDataError, NumericalFailure,
                     NotStabilizable)
from .config import RunConfig, load_config, rng_streams, seed_sequence, write_manifest
from .spectral import (Stepper, to_spectral, from_spectral, smooth_random_field,
                       save_trajectory, load_trajectory)
from .symmetry import GroupElement, boundary_distance, to_interleaved
from .environment import (Environment, Trainer, attractor_library, controller,
                          rollout, evaluate_ensemble, equivariance_audit, MODES)
from .rlcore import (DdpgAgent, ReplayBuffer, OuNoise, Mlp, save_checkpoint,
                     load_checkpoint, torch_generator)
from .equilibria import (newton_solve, continue_forcing, continue_domain,
                         search_equilibria, l2_norm)
from .lqr import (linearize, pbh_controllability, pbh_stabilizability, solve_care,
                  closed_loop_sim, save_gain)

logger = logging.getLogger('kscontrol')

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


################################################################################
# Shared helpers

def _setup_logging(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')


def _run_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace(out=args.out)
    if args.mode is not None:
        cfg = cfg.with_mode(args.mode)
    return cfg


def _environment(cfg, rng, L=None):
    grid = cfg.grid if L is None else cfg.grid.replace(L=L)
    return Environment(grid, cfg.jets, cfg.episode, rng, name=cfg.episode.mode)


def _library(cfg, env, out_dir, label='library'):
    '''attractor snapshot library, cached in the run directory'''
    path = os.path.join(out_dir, '{:s}.npy'.format(label))
    if os.path.exists(path):
        lib = np.load(path)
        if lib.shape[1:] == (env.grid.n_points,):
            return lib
    seed_seq = seed_sequence(cfg.seed, 'library')
    if label != 'library':
        seed_seq = np.random.SeedSequence(seed_seq.entropy,
                                          spawn_key=seed_seq.spawn_key + (int(env.grid.L*1000),))
    lib = attractor_library(env, np.random.default_rng(seed_seq))
    np.save(path, lib)
    return lib


def _agent(cfg, env, rngs):
    return DdpgAgent(env.obs_dim, env.act_dim, cfg.ddpg, torch_generator(rngs['init']),
                     name=cfg.episode.mode)


def _read_state(path):
    '''last row of a trajectory dump'''
    _, U, meta = load_trajectory(path)
    return U[-1], meta


def _write_json(path, obj):
    with open(path, 'w') as fh:
        json.dump(obj, fh, indent=2, default=float)


def _cplx(values):
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


################################################################################
# Commands

def cmd_simulate(cfg, args):
    '''trajectory dump of the (constantly forced) KS equation'''
    rngs = rng_streams(cfg.seed)
    grid = cfg.grid
    if args.initial == 'random':
        u0 = smooth_random_field(grid, rngs['ic'])
    elif args.initial == 'zero':
        u0 = np.zeros(grid.n_points)
    else:
        u0, _ = _read_state(args.initial)
    f = None
    if args.action is not None:
        f = cfg.jets.forcing_field(args.action, grid)
    duration = args.time if args.time is not None else cfg.episode.eval_time
    stepper = Stepper(grid, 'simulate')
    traj = stepper.advance(to_spectral(u0, grid), grid.steps_in(duration), f)
    U = from_spectral(traj, grid)[::args.every]
    t = grid.dt * np.arange(len(traj))[::args.every]
    save_trajectory(os.path.join(cfg.out, 'trajectory.csv'), t, U, grid, cfg.seed,
                    cfg.config_hash)
    logger.info('%g time units simulated, max|u| = %.3g', duration, np.abs(U).max())
    return {'max_abs_u': float(np.abs(U).max())}


def cmd_train(cfg, args):
    '''DDPG training, writes the training curve and checkpoints'''
    rngs = rng_streams(cfg.seed)
    env = _environment(cfg, rngs['env'])
    env.print_summary()
    library = _library(cfg, env, cfg.out)
    agent = _agent(cfg, env, rngs)
    n_episodes = args.episodes if args.episodes is not None else cfg.ddpg.episodes
    n_decay = cfg.ddpg.decay_fraction * n_episodes * cfg.episode.n_actions
    noise = OuNoise.from_config(cfg.ddpg, env.act_dim, rngs['ou'], n_decay)
    buffer = ReplayBuffer(env.obs_dim, env.act_dim, cfg.ddpg.buffer_size)
    trainer = Trainer(env, agent, buffer, noise, rngs['sampling'], rngs['ic'], library,
                      name=cfg.episode.mode)
    ckpt_path = os.path.join(cfg.out, 'checkpoint.pt')

    def checkpoint(ep, log):
        if (ep + 1) % args.checkpoint_every == 0 or ep + 1 == n_episodes:
            save_checkpoint(ckpt_path, agent, noise, rngs, extra={'episode': ep + 1,
                            'config_hash': cfg.config_hash, 'seed': cfg.seed})
            log.save_csv(os.path.join(cfg.out, 'episode_last.csv'))

    curve = trainer.train(n_episodes, callback=checkpoint)
    np.savetxt(os.path.join(cfg.out, 'training_curve.csv'), np.array(curve),
               delimiter=',', header='episode,reward,beta,diverged', comments='',
               fmt=['%d', '%.17g', '%.17g', '%d'])
    if args.save_buffer:
        buffer.save(os.path.join(cfg.out, 'experiences.npz'))
    return {'episodes': n_episodes, 'diverged_episodes': trainer.n_diverged,
            'final_reward': curve[-1][1]}


def _load_actor(cfg, env, path):
    agent = DdpgAgent(env.obs_dim, env.act_dim, cfg.ddpg)
    load_checkpoint(path, agent)
    return agent.actor


def cmd_evaluate(cfg, args):
    '''no control vs frozen actor ensembles, optionally on transfer domains'''
    rngs = rng_streams(cfg.seed)
    env = _environment(cfg, rngs['env'])
    actor = _load_actor(cfg, env, args.checkpoint) if args.checkpoint else None
    n_ic = cfg.evaluation.n_initial_conditions
    duration = cfg.episode.eval_time
    domains = [cfg.grid.L]
    if args.transfer:
        domains += list(cfg.evaluation.domain_lengths)
    summary = {}
    for L in domains:
        env_L = env if L == cfg.grid.L else env.with_domain(L)
        label = 'library' if L == cfg.grid.L else 'library_L{:g}'.format(L)
        library = _library(cfg, env_L, cfg.out, label)
        pick = rngs['ic'].choice(len(library), size=min(n_ic, len(library)), replace=False)
        ics = library[pick]
        for name, act in (('nocontrol', None), ('control', actor)):
            if name == 'control' and actor is None:
                continue
            ss = seed_sequence(cfg.seed, 'env')
            res = evaluate_ensemble(env_L, act, ics, duration, ss, cfg.evaluation.workers)
            prefix = os.path.join(cfg.out, '{:s}_L{:g}'.format(name, L))
            res.save_csv(prefix)
            key = '{:s}_L{:g}'.format(name, L)
            summary[key] = {'mean_D_plus_Pf': float(res.D_plus_Pf.mean()),
                            'returns': res.returns.tolist(),
                            'mean_action': res.mean_actions.mean(axis=0).tolist()}
            if act is not None:
                save_trajectory(prefix + '_final_state.csv', [duration],
                                res.final_fields[:1], env_L.grid, cfg.seed, cfg.config_hash)
            logger.info('%s: ensemble mean D+Pf = %.4g', key, summary[key]['mean_D_plus_Pf'])
    _write_json(os.path.join(cfg.out, 'evaluation.json'), summary)
    return {'summary_keys': sorted(summary)}


def _find_unforced_equilibrium(cfg, grid, rng):
    '''Newton solves from recurrence seeds of an unforced trajectory'''
    cc = cfg.continuation
    stepper = Stepper(grid, 'search')
    F0 = to_spectral(smooth_random_field(grid, rng), grid)
    transient = stepper.advance(F0, grid.steps_in(100.))[-1]
    U = from_spectral(stepper.advance(transient, grid.steps_in(cc.search_time)), grid)
    found = search_equilibria(U, grid, cc.n_seeds, tol=cc.tol)
    if not found:
        raise NumericalFailure('no nontrivial equilibrium found from {:d} seeds'.format(cc.n_seeds))
    return min(found, key=lambda eq: eq.D)


def _forced_equilibrium(cfg, args, grid, rngs):
    '''forced equilibrium from --state/--action, or from a perturbed unforced one'''
    cc = cfg.continuation
    if args.state is not None:
        guess, _ = _read_state(args.state)
        if args.action is None:
            raise ConfigurationError('--state needs the (mean) --action of the forcing')
        f = cfg.jets.forcing_field(args.action, grid)
        return newton_solve(guess, f, grid, cc.tol, cc.max_iter)
    eq0 = _find_unforced_equilibrium(cfg, grid, rngs['library'])
    a = 0.05 * cfg.jets.amp_limit * rngs['ic'].standard_normal(cfg.jets.N)
    f = cfg.jets.forcing_field(a, grid)
    logger.info('no --state given: forcing %s applied to an unforced equilibrium (D = %.4g)',
                np.round(a, 4), eq0.D)
    return newton_solve(eq0.u, f - f.mean(), grid, cc.tol, cc.max_iter, pin='slice')


def cmd_continue_forcing(cfg, args):
    '''forced equilibrium, continued to f = 0 (and optionally to L_end)'''
    rngs = rng_streams(cfg.seed)
    cc = cfg.continuation
    eq = _forced_equilibrium(cfg, args, cfg.grid, rngs)
    eq.print_summary()
    run = continue_forcing(eq, cc.forcing_steps, cc.tol, cc.max_iter)
    run.print_summary()
    run.save_csv(os.path.join(cfg.out, 'continuation_forcing.csv'),
                 os.path.join(cfg.out, 'continuation_forcing_fields.csv'),
                 cfg.seed, cfg.config_hash)
    out = {'forced_eigs': _cplx(eq.leading_eigs), 'terminal_eigs': _cplx(run.terminal.leading_eigs),
           'continuity_constant': run.continuity_constant}
    if args.then_domain:
        drun = continue_domain(run.terminal, cc.L_end, cc.domain_steps, cc.tol, cc.max_iter)
        drun.print_summary()
        drun.save_csv(os.path.join(cfg.out, 'continuation_domain.csv'),
                      os.path.join(cfg.out, 'continuation_domain_fields.csv'),
                      cfg.seed, cfg.config_hash)
        out['domain_terminal_eigs'] = _cplx(drun.terminal.leading_eigs)
    return out


def cmd_continue_domain(cfg, args):
    '''domain length continuation of an unforced equilibrium to L_end'''
    rngs = rng_streams(cfg.seed)
    cc = cfg.continuation
    L_start = args.L_start if args.L_start is not None else cfg.grid.L
    grid = cfg.grid.replace(L=L_start)
    if args.state is not None:
        guess, _ = _read_state(args.state)
        eq = newton_solve(guess, None, grid, cc.tol, cc.max_iter)
    else:
        eq = _find_unforced_equilibrium(cfg, grid, rngs['library'])
    eq.print_summary()
    run = continue_domain(eq, cc.L_end, cc.domain_steps, cc.tol, cc.max_iter)
    run.print_summary()
    run.save_csv(os.path.join(cfg.out, 'continuation_domain.csv'),
                 os.path.join(cfg.out, 'continuation_domain_fields.csv'),
                 cfg.seed, cfg.config_hash)
    return {'terminal_eigs': _cplx(run.terminal.leading_eigs),
            'continuity_constant': run.continuity_constant}


def cmd_lqr(cfg, args):
    '''PBH tests, LQR gain and saturated closed loop run about a target'''
    rngs = rng_streams(cfg.seed)
    grid, jets, lc = cfg.grid, cfg.jets, cfg.lqr
    if args.state is not None:
        guess, _ = _read_state(args.state)
        f = None if args.action is None else jets.forcing_field(args.action, grid)
        eq = newton_solve(guess, f, grid, cfg.continuation.tol, cfg.continuation.max_iter)
        target, f = eq.u, eq.f
    else:
        target, f = np.zeros(grid.n_points), None
    model = linearize(target, f, grid, jets)
    ctrb = pbh_controllability(model.A, model.B)
    stab = pbh_stabilizability(model.A, model.B)
    _write_json(os.path.join(cfg.out, 'pbh.json'),
                {'controllability': ctrb.to_dict(), 'stabilizability': stab.to_dict()})
    logger.info('PBH controllability: %s, stabilizability: %s',
                'pass' if ctrb.passed else 'fail', 'pass' if stab.passed else 'fail')
    shift = 0.
    try:
        gain = solve_care(model.A, model.B)
    except NotStabilizable as e:
        shift = -(max(l.real for l in e.failing_eigenvalues) + lc.shift_margin)
        logger.warning('%s; gain synthesized for A %+g I', e, shift)
        gain = solve_care(model.A, model.B, shift=shift)
    save_gain(os.path.join(cfg.out, 'gain.csv'), gain)
    du = smooth_random_field(grid, rngs['env'], amplitude=1.)
    u0 = target + lc.perturbation * du / np.abs(du).max()
    log = closed_loop_sim(model, gain, u0, lc.T_end, stop_on_divergence=True)
    save_trajectory(os.path.join(cfg.out, 'closed_loop.csv'), log.t, log.fields, grid,
                    cfg.seed, cfg.config_hash)
    logger.info('closed loop: deviation %.3g -> %.3g (diverged: %s)', log.deviation[0],
                log.deviation[-1], log.diverged)
    return {'controllable': ctrb.passed, 'stabilizable': stab.passed, 'shift': shift,
            'care_residual': gain.residual,
            'closed_loop_max_real_eig': float(np.max(gain.closed_loop_eigs.real)),
            'initial_deviation': float(log.deviation[0]),
            'final_deviation': float(log.deviation[-1]), 'diverged': log.diverged}


def cmd_audit_symmetry(cfg, args):
    '''forcing field equivariance of the wrapped control, and group related rollouts'''
    cfg = cfg.with_mode('reduced')
    rngs = rng_streams(cfg.seed)
    env = _environment(cfg, rngs['env'])
    if args.checkpoint:
        actor = _load_actor(cfg, env, args.checkpoint)
    else:
        actor = Mlp((env.obs_dim,) + cfg.ddpg.hidden + (env.act_dim,), 'tanh',
                    torch_generator(rngs['init']))
    library = _library(cfg, env, cfg.out)
    states = []
    for u in library:
        F = to_spectral(u, env.grid)
        if boundary_distance(to_interleaved(F), env.jets.N) > args.margin:
            states.append(F)
        if len(states) == args.states:
            break
    if not states:
        raise InsufficientDataError('no library state farther than {:g} from the sector '
                                    'boundaries'.format(args.margin))
    control = controller(actor, env)
    field_error = equivariance_audit(control, env, states)
    logger.info('forcing field equivariance error over %d states x %d group elements: %.3g',
                len(states), 2*env.jets.N, field_error)
    group = GroupElement.all(env.jets.N)[1:]
    g = group[rngs['ic'].integers(len(group))]
    u0 = from_spectral(states[0], env.grid)
    duration = args.time if args.time is not None else cfg.episode.length
    log1 = rollout(env, to_spectral(u0, env.grid), duration, control)
    log2 = rollout(env, to_spectral(g.on_field(u0), env.grid), duration, control)
    traj_error = np.array([l2_norm(d, env.grid) for d in g.on_field(log1.fields) - log2.fields])
    logger.info('trajectories related by %s: max L2 error %.3g', g, traj_error.max())
    np.savetxt(os.path.join(cfg.out, 'audit_trajectory_error.csv'),
               np.column_stack([log1.t, traj_error]), delimiter=',', header='t,l2_error',
               comments='', fmt='%.17g')
    result = {'n_states': len(states), 'field_error': float(field_error),
              'group_element': str(g), 'trajectory_error_max': float(traj_error.max())}
    _write_json(os.path.join(cfg.out, 'audit.json'), result)
    return result


COMMANDS = {'simulate': cmd_simulate, 'train': cmd_train, 'evaluate': cmd_evaluate,
            'continue-forcing': cmd_continue_forcing, 'continue-domain': cmd_continue_domain,
            'lqr': cmd_lqr, 'audit-symmetry': cmd_audit_symmetry}


################################################################################
# Argument parsing

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='PATH', help='JSON run config')
    common.add_argument('--seed', type=int, help='run seed (overrides the config)')
    common.add_argument('--out', metavar='DIR', help='output directory (overrides the config)')
    common.add_argument('--mode', choices=MODES, help='agent mode (overrides the config)')
    common.add_argument('--verbose', '-v', action='store_true', help='debug logging')

    parser = argparse.ArgumentParser(prog='kscontrol', description=__doc__.splitlines()[0].strip(),
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', parents=[common], help=cmd_simulate.__doc__)
    p.add_argument('--initial', default='random', help="'random', 'zero' or a trajectory dump")
    p.add_argument('--action', type=float, nargs='+', help='constant jet amplitudes')
    p.add_argument('--time', type=float, help='duration (default: episode eval_time)')
    p.add_argument('--every', type=int, default=1, help='keep one sample every EVERY steps')

    p = sub.add_parser('train', parents=[common], help=cmd_train.__doc__)
    p.add_argument('--episodes', type=int, help='number of episodes (overrides the config)')
    p.add_argument('--checkpoint-every', type=int, default=50)
    p.add_argument('--save-buffer', action='store_true', help='write the experience log')

    p = sub.add_parser('evaluate', parents=[common], help=cmd_evaluate.__doc__)
    p.add_argument('--checkpoint', metavar='PATH', help='trained agent (none: no control only)')
    p.add_argument('--transfer', action='store_true', help='also evaluate on the transfer domains')

    for name, fun in (('continue-forcing', cmd_continue_forcing),
                      ('continue-domain', cmd_continue_domain), ('lqr', cmd_lqr)):
        p = sub.add_parser(name, parents=[common], help=fun.__doc__)
        p.add_argument('--state', metavar='PATH', help='trajectory dump, last row used as guess')
        if name != 'continue-domain':
            p.add_argument('--action', type=float, nargs='+', help='frozen jet amplitudes')
        if name == 'continue-forcing':
            p.add_argument('--then-domain', action='store_true',
                           help='continue the unforced solution to continuation.L_end')
        if name == 'continue-domain':
            p.add_argument('--L-start', type=float, help='initial domain length')

    p = sub.add_parser('audit-symmetry', parents=[common], help=cmd_audit_symmetry.__doc__)
    p.add_argument('--checkpoint', metavar='PATH', help='trained agent (none: random actor)')
    p.add_argument('--states', type=int, default=20, help='number of attractor states')
    p.add_argument('--margin', type=float, default=1e-6, help='min distance to sector boundaries')
    p.add_argument('--time', type=float, help='rollout duration (default: episode length)')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        cfg = _run_config(args)
        os.makedirs(cfg.out, exist_ok=True)
        result = COMMANDS[args.command](cfg, args)
        write_manifest(cfg.out, cfg, args.command, {'result': result})
    except ConfigurationError as e:
        logger.error('configuration error: %s', e)
        return EXIT_CONFIG
    except InsufficientDataError as e:
        logger.error('insufficient data: %s', e)
        return EXIT_CONFIG
    except NumericalFailure as e:
        logger.error('numerical failure: %s', e)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
