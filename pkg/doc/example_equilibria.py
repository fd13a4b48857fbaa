#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Forced equilibrium of the KS equation, continued to the unforced
problem, and LQR stabilization of u = 0 (see example_equilibria.rst)
"""

import numpy as np
import matplotlib.pyplot as plt

from kscontrol import GridConfig, JetArray, newton_solve, continue_forcing
from kscontrol import linearize, solve_care
from kscontrol.lqr import pbh_stabilizability, closed_loop_sim
from kscontrol.spectral import smooth_random_field

grid = GridConfig()
jets = JetArray()

# mean action of a controlled run, frozen
a_mean = np.array([0.3, -0.2, 0.1, -0.25])
f = jets.forcing_field(a_mean, grid)
eq = newton_solve(np.zeros(grid.n_points), f - f.mean(), grid)
run = continue_forcing(eq, 10)

# LQR about u = 0 with randomly placed jets
rand_jets = JetArray.randomly_placed(np.random.default_rng(1))
model = linearize(np.zeros(grid.n_points), None, grid, rand_jets)
stab = pbh_stabilizability(model.A, model.B)
gain = solve_care(model.A, model.B)
du = smooth_random_field(grid, np.random.default_rng(2), amplitude=1.)
log = closed_loop_sim(model, gain, 1e-2 * du / np.abs(du).max(), 50.)

if __name__ == '__main__':
    eq.print_summary()
    run.print_summary()
    print('stabilizable: {}, closed loop max Re(lambda) = {:.4f}'.format(
          stab.passed, gain.closed_loop_eigs.real.max()))

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.5))
    for s, sol in zip(run.params, run.solutions):
        ax0.plot(grid.x, sol.u, color=plt.cm.viridis(s), label='s = {:g}'.format(s)
                 if s in (run.params[0], run.params[-1]) else None)
    ax0.set_xlabel('$x$')
    ax0.set_ylabel('$u$')
    ax0.set_title('forcing continuation')
    ax0.legend()
    ax1.semilogy(log.t, log.deviation)
    ax1.set_xlabel('time $t$')
    ax1.set_ylabel('$\\|u - u_{eq}\\|$')
    ax1.set_title('LQR closed loop')
    fig.tight_layout()
    plt.show()
