#!/usr/bin/python
# -*- coding: utf-8 -*-
""" Space-time diagram of the unforced KS equation on L = 22,
and its dissipation (see example_control.py)
"""

import numpy as np
import matplotlib.pyplot as plt

from kscontrol.spectral import (GridConfig, Stepper, to_spectral, from_spectral,
                                smooth_random_field, dissipation)

grid = GridConfig()
stepper = Stepper(grid, 'doc')

rng = np.random.default_rng(0)
F0 = to_spectral(smooth_random_field(grid, rng), grid)
# leave the transient out
F0 = stepper.advance(F0, grid.steps_in(100.))[-1]

T = 150.
traj = stepper.advance(F0, grid.steps_in(T))
U = from_spectral(traj, grid)
t = grid.dt * np.arange(len(U))

fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(8, 5),
                               gridspec_kw={'height_ratios': [3, 1]})
im = ax0.pcolormesh(t, grid.x, U.T, shading='auto', cmap='RdBu_r')
fig.colorbar(im, ax=[ax0], label='$u(x, t)$')
ax0.set_ylabel('$x$')
ax0.set_title('Unforced KS equation, L = {:g}'.format(grid.L))

ax1.plot(t, dissipation(U, grid))
ax1.set_xlabel('time $t$')
ax1.set_ylabel('$D$')

plt.show()
