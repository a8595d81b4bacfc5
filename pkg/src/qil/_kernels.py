"""Fused per-sample kernels for the data-encoding layer.

The encoding layer applies a different ``R_Y`` angle to every qubit of every
sample, which numpy can only express as strided elementwise passes over the
whole batch.  These loops keep one sample's amplitudes hot in cache instead.
The numpy kernels in :mod:`qil.qsim` remain the reference implementation.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def ry_layer_inplace(states, angles, sign):
    """``states[b] <- prod_q R_Y(sign * angles[b, q]) states[b]`` (qubit 0 = MSB)."""
    batch, dim = states.shape
    n = angles.shape[1]
    for b in range(batch):
        for q in range(n):
            half = 0.5 * sign * angles[b, q]
            c = np.cos(half)
            s = np.sin(half)
            stride = 1 << (n - 1 - q)
            for i in range(dim):
                if i & stride == 0:
                    j = i | stride
                    a0 = states[b, i]
                    a1 = states[b, j]
                    states[b, i] = c * a0 - s * a1
                    states[b, j] = s * a0 + c * a1


@njit(cache=True)
def y_inner_imag(lam, psi, n):
    """``out[b, q] = Im <lam_b| Y_q |psi_b>``."""
    batch, dim = psi.shape
    out = np.zeros((batch, n))
    for b in range(batch):
        for q in range(n):
            stride = 1 << (n - 1 - q)
            acc = 0.0
            for i in range(dim):
                if i & stride == 0:
                    j = i | stride
                    # Y|0> = i|1>, Y|1> = -i|0>
                    z = lam[b, j].conjugate() * psi[b, i] - lam[b, i].conjugate() * psi[b, j]
                    acc += z.real
            out[b, q] = acc
    return out
