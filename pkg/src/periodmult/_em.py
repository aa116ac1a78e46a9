"""Compiled Euler-Maruyama block update."""

import numpy as np
from numba import njit

from ._kernels import rhs


@njit(cache=True, nogil=True)
def em_chunk(a, alive, t0, dt, xi, amp, delta, gamma1, alpha, eps, n, zeta, probe_det,
             escape_radius, path):
    """Advance each trajectory in ``a`` through xi.shape[1] steps in place.

    xi has shape (B, C, 2) of standard normals; path (B, C) receives the state
    after every step. Trajectories leaving ``escape_radius`` are frozen and
    flagged dead in ``alive``.
    """
    scale = amp / np.sqrt(2.0)
    n_b, n_c = xi.shape[0], xi.shape[1]
    for b in range(n_b):
        y = a[b]
        ok = alive[b]
        for c in range(n_c):
            if ok:
                t = t0 + c * dt
                y = y + dt * rhs(y, t, delta, gamma1, alpha, eps, n, zeta, probe_det) \
                    + scale * (xi[b, c, 0] + 1j * xi[b, c, 1])
                if escape_radius > 0 and not (abs(y) < escape_radius):
                    ok = False
            path[b, c] = y
        a[b] = y
        alive[b] = ok
