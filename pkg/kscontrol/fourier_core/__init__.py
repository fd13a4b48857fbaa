# -*- coding: utf-8 -*-
"""Numerical core routines on the interleaved Fourier state vector
[b_0, c_0, b_1, c_1, ...], with b_k = Re F_k and c_k = Im F_k.

Modules
-------
interleaved
    Python entry points, dispatching to the compiled loops when available.
interleaved_cython
    Cython loops (built by setup.py), see `interleaved_cython.pyx`.
"""
from .interleaved import reflect_pattern4, rotate_modes, HAVE_CYTHON
