"""Adaptive Runge-Kutta kernel for the rotational profile systems.

Everything here is written against the numba nopython subset; the module is
imported twice by :mod:`.accel` (once plain, once jit-compiled) so the same
source provides the fast path and the fallback.

The profile ODEs are integrated in geodesic polar coordinates s = arccos(r)
(s is the colatitude), where the systems read

    annulus (4 states: V, V', T, T')   V'' = -cot(s) V' - f(V)
                                       T'' = -cot(s) T' - f'(V) T
    disk    (2 states: V, V')          V'' = -cot(s) V' - f(V)

with affine f(x) = fa*x + fb.  The pole-side leg of the annulus runs in the
substitution x = ln(s), states (V, V_x=s V', T, T_x=s T'):

    V_xx = (1 - s cot s) V_x - s^2 f(V),   s = e^x.

For sources with f(0) = 0 the outer zero approaches the pole like
exp(-c/(1-R)) as R -> 1; in x the near-pole solution V ~ A + B x is linear
with bounded derivatives, whereas in s the step count diverges and
V'' = O(1/s^2) overflows double precision around s ~ 1e-153.

Integration stops at the first step whose endpoint has V <= 0 (the zero is
then bracketed by the final step and refined by the caller on the dense
output) or when the independent-variable window is exhausted.
"""

import math

import numpy as np

# Dormand-Prince 5(4) tableau, propagating the 5th-order solution, with the
# quartic dense-output interpolant.
DOPRI_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
DOPRI_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])
DOPRI_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
DOPRI_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                    -17253 / 339200, 22 / 525, -1 / 40])
DOPRI_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

MODEL_ANNULUS = 0
MODEL_DISK = 1
MODEL_ANNULUS_LOG = 2

STATUS_OK = 0
STATUS_NO_ZERO = 1
STATUS_STEP_FAIL = 2
STATUS_MAX_STEPS = 3


def profile_rhs(model_id, fa, fb, t, y, out):
    """Right-hand side of the profile systems (affine f).

    t is the colatitude s for the plain models, x = ln(s) for the log one.
    """
    if model_id == MODEL_ANNULUS_LOG:
        s = math.exp(t)
        w = 1.0 - s * math.cos(s) / math.sin(s)
        s2 = s * s
        out[0] = y[1]
        out[1] = w * y[1] - s2 * (fa * y[0] + fb)
        out[2] = y[3]
        out[3] = w * y[3] - s2 * fa * y[2]
    else:
        cot = math.cos(t) / math.sin(t)
        out[0] = y[1]
        out[1] = -cot * y[1] - (fa * y[0] + fb)
        if model_id == MODEL_ANNULUS:
            out[2] = y[3]
            out[3] = -cot * y[3] - fa * y[2]


def integrate_profile(model_id, fa, fb, s_start, y_start, s_limit,
                      rtol, atol, max_steps):
    """Integrate from s_start toward s_limit until the first zero of V.

    atol is a per-component vector; the derivative components get a zero
    floor so that pure relative control tracks the log-singular tail near
    the poles (V' grows like 1/s there while V stays order one).

    Returns (status, n, ts, ys, qs) where n is the number of accepted
    steps, ts has n+1 nodes, ys the states at the nodes, and qs[k] the
    dense-output matrix of step k: for x = (s - ts[k]) / h_k in [0, 1],

        y(s) = ys[k] + h_k * (qs[k] @ [x, x^2, x^3, x^4]).
    """
    dim = 2 if model_id == MODEL_DISK else 4
    direction = 1.0 if s_limit > s_start else -1.0

    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, dim))
    qs = np.empty((cap, dim, 4))

    y = np.empty(dim)
    for i in range(dim):
        y[i] = y_start[i]
    ts[0] = s_start
    for i in range(dim):
        ys[0, i] = y[i]

    K = np.empty((7, dim))
    y_stage = np.empty(dim)
    y_new = np.empty(dim)
    f_out = np.empty(dim)

    profile_rhs(model_id, fa, fb, s_start, y, f_out)
    for i in range(dim):
        K[0, i] = f_out[i]

    # Conservative initial step; the controller expands it geometrically.
    dist = abs(s_limit - s_start)
    h = 1e-4 * dist
    if h > 1e-3:
        h = 1e-3

    n = 0
    status = STATUS_MAX_STEPS
    while n < max_steps:
        s = ts[n]
        remaining = direction * (s_limit - s)
        if remaining <= 0.0:
            status = STATUS_NO_ZERO
            break
        if h > remaining:
            h = remaining
        h_min = 1e-14 * max(abs(s), 1e-290)
        if h < h_min:
            status = STATUS_STEP_FAIL
            break

        hs = direction * h
        # Stages 2..6.
        for st in range(1, 6):
            for i in range(dim):
                acc = 0.0
                for kk in range(st):
                    acc += DOPRI_A[st, kk] * K[kk, i]
                y_stage[i] = y[i] + hs * acc
            profile_rhs(model_id, fa, fb, s + DOPRI_C[st] * hs, y_stage, f_out)
            for i in range(dim):
                K[st, i] = f_out[i]
        # 5th-order solution and FSAL stage.
        for i in range(dim):
            acc = 0.0
            for kk in range(6):
                acc += DOPRI_B[kk] * K[kk, i]
            y_new[i] = y[i] + hs * acc
        profile_rhs(model_id, fa, fb, s + hs, y_new, f_out)
        for i in range(dim):
            K[6, i] = f_out[i]

        # Error estimate against mixed tolerance.
        err = 0.0
        for i in range(dim):
            e = 0.0
            for kk in range(7):
                e += DOPRI_E[kk] * K[kk, i]
            e *= hs
            sc = atol[i] + rtol * max(abs(y[i]), abs(y_new[i])) + 1e-300
            err += (e / sc) ** 2
        err = math.sqrt(err / dim)

        if err <= 1.0:
            # Accept: store dense coefficients, advance, FSAL reuse.
            if n + 1 >= cap:
                cap2 = cap * 2
                ts2 = np.empty(cap2)
                ys2 = np.empty((cap2, dim))
                qs2 = np.empty((cap2, dim, 4))
                ts2[:cap] = ts
                ys2[:cap] = ys
                qs2[:cap] = qs
                ts, ys, qs = ts2, ys2, qs2
                cap = cap2
            for i in range(dim):
                for j in range(4):
                    acc = 0.0
                    for kk in range(7):
                        acc += K[kk, i] * DOPRI_P[kk, j]
                    qs[n, i, j] = acc
            ts[n + 1] = s + hs
            for i in range(dim):
                ys[n + 1, i] = y_new[i]
                y[i] = y_new[i]
                K[0, i] = K[6, i]
            n += 1
            if y[0] <= 0.0:
                status = STATUS_OK
                break
            if err == 0.0:
                factor = 10.0
            else:
                factor = 0.9 * err ** -0.2
                if factor > 10.0:
                    factor = 10.0
                if factor < 0.2:
                    factor = 0.2
            h = h * factor
        else:
            factor = 0.9 * err ** -0.2
            if factor < 0.2:
                factor = 0.2
            h = h * factor

    return status, n, ts[:n + 1], ys[:n + 1], qs[:n]


def dense_eval(ts, ys, qs, k, s, out):
    """Evaluate the dense output of step k at colatitude s."""
    h = ts[k + 1] - ts[k]
    x = (s - ts[k]) / h
    x1 = x
    x2 = x * x
    x3 = x2 * x
    x4 = x2 * x2
    dim = ys.shape[1]
    for i in range(dim):
        out[i] = ys[k, i] + h * (qs[k, i, 0] * x1 + qs[k, i, 1] * x2 +
                                 qs[k, i, 2] * x3 + qs[k, i, 3] * x4)
