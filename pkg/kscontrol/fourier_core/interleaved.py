# -*- coding: utf-8 -*-
'''Loops on the interleaved Fourier state vector

Uses the compiled `interleaved_cython` routines when the extension was built
(`python setup.py build_ext --inplace`), and equivalent NumPy code otherwise.
Stacked vectors (any leading axes) are processed along the last axis.
'''
import numpy as np

try:
    from . import interleaved_cython as _compiled
    HAVE_CYTHON = True
except ImportError:
    _compiled = None
    HAVE_CYTHON = False


def _as_interleaved(F):
    F = np.ascontiguousarray(F, dtype=np.float64)
    if F.ndim == 0 or F.shape[-1] % 2 != 0:
        raise ValueError('interleaved state vectors should have an even last axis, '
                         'not shape {:s}'.format(str(F.shape)))
    return F


def _rowwise(loop, F, *args):
    '''apply the 1D compiled `loop` to each vector of the stack `F`'''
    if F.ndim == 1:
        return loop(F, *args)
    flat = F.reshape(-1, F.shape[-1])
    out = np.empty_like(flat)
    for i in range(len(flat)):
        out[i] = loop(flat[i], *args)
    return out.reshape(F.shape)


def _reflect_pattern4_numpy(F):
    b = F[..., 0::2]
    c = F[..., 1::2]
    k4 = np.broadcast_to(np.arange(b.shape[-1]) % 4, b.shape)
    G = np.empty_like(F)
    # (new b, new c) for k mod 4 = 0, 1, 2, 3
    G[..., 0::2] = np.choose(k4, [-b, -c, b, c])
    G[..., 1::2] = np.choose(k4, [c, -b, -c, b])
    return G


def _rotate_modes_numpy(F, theta):
    k = np.arange(F.shape[-1]//2)
    Fk = (F[..., 0::2] + 1j*F[..., 1::2]) * np.exp(1j*k*theta)
    G = np.empty_like(F)
    G[..., 0::2] = Fk.real
    G[..., 1::2] = Fk.imag
    return G


def reflect_pattern4(F):
    '''period-4 reflection pattern [-b0, c0, -c1, -b1, b2, -c2, c3, b3, ...]'''
    F = _as_interleaved(F)
    if HAVE_CYTHON:
        return _rowwise(_compiled.reflect_pattern4, F)
    return _reflect_pattern4_numpy(F)


def rotate_modes(F, theta):
    '''F_k <- exp(i k theta) F_k on the interleaved vector'''
    F = _as_interleaved(F)
    if HAVE_CYTHON:
        return _rowwise(_compiled.rotate_modes, F, float(theta))
    return _rotate_modes_numpy(F, float(theta))
