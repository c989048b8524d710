"""Pure-numpy twin of the profile integrator for callable source terms.

Same Dormand-Prince 5(4) scheme, tolerances and dense output as
:mod:`._kernels`, but the right-hand side is an arbitrary Python callable,
which the jitted kernel cannot accept.  Affine runs route here as well when
numba is disabled via ``SPHERE_OEP_NO_NUMBA``.
"""

import math

import numpy as np

from ._kernels import (DOPRI_A, DOPRI_B, DOPRI_C, DOPRI_E, DOPRI_P,
                       STATUS_MAX_STEPS, STATUS_NO_ZERO, STATUS_OK,
                       STATUS_STEP_FAIL)

__all__ = ["integrate_profile_generic"]


def integrate_profile_generic(rhs, s_start, y_start, s_limit, rtol, atol,
                              max_steps):
    """Integrate y' = rhs(s, y) from s_start toward s_limit until y[0] <= 0.

    Same return convention as :func:`._kernels.integrate_profile`; atol is
    the per-component vector described there.
    """
    y = np.asarray(y_start, dtype=float).copy()
    atol = np.asarray(atol, dtype=float)
    dim = y.size
    direction = 1.0 if s_limit > s_start else -1.0

    ts = [float(s_start)]
    ys = [y.copy()]
    qs = []

    K = np.empty((7, dim))
    K[0] = rhs(s_start, y)

    h = min(1e-3, 1e-4 * abs(s_limit - s_start))

    status = STATUS_MAX_STEPS
    n = 0
    while n < max_steps:
        s = ts[-1]
        remaining = direction * (s_limit - s)
        if remaining <= 0.0:
            status = STATUS_NO_ZERO
            break
        h = min(h, remaining)
        if h < 1e-14 * max(abs(s), 1e-290):
            status = STATUS_STEP_FAIL
            break

        hs = direction * h
        for st in range(1, 6):
            y_stage = y + hs * (DOPRI_A[st, :st] @ K[:st])
            K[st] = rhs(s + DOPRI_C[st] * hs, y_stage)
        y_new = y + hs * (DOPRI_B @ K[:6])
        K[6] = rhs(s + hs, y_new)

        e = hs * (DOPRI_E @ K)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new)) + 1e-300
        err = math.sqrt(float(np.mean((e / sc) ** 2)))

        if err <= 1.0:
            qs.append(K.T @ DOPRI_P)
            ts.append(s + hs)
            ys.append(y_new.copy())
            y = y_new
            K[0] = K[6]
            n += 1
            if y[0] <= 0.0:
                status = STATUS_OK
                break
            factor = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
            h = h * factor
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)

    return (status, n, np.array(ts), np.array(ys),
            np.array(qs) if qs else np.empty((0, dim, 4)))
