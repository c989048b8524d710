"""Rotationally symmetric model solutions on the unit sphere.

The annulus family solves, in cylindrical height r = cos(s),

    (1 - r^2) U'' - 2 r U' + f(U) = 0,   U(R) = M, U'(R) = 0,

on the maximal interval [r1, r2] where U > 0, together with the variational
field Z = dU/dR solving (1 - r^2) Z'' - 2 r Z' + f'(U) Z = 0 with Z(R) = 0,
Z'(R) = f(M) / (1 - R^2).  The disk family solves the geodesic-polar form

    V'' + cot(s) V' + f(V) = 0,   V(0) = M, V'(0) = 0,

started from a quadratic series at a small s0 to clear the cot singularity.

Integration always runs in the colatitude s = arccos(r).  This keeps the
outer zero representable at heights R close to 1, where 1 - r2 underflows
double precision for sources with f(0) = 0, and it makes the boundary
gradient |grad u| = |V'(s)| directly available without the cancellation in
sqrt(1 - r^2) |U'(r)|.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import accel, nonlinearity
from ._generic import integrate_profile_generic
from ._kernels import (MODEL_ANNULUS, MODEL_ANNULUS_LOG, MODEL_DISK,
                       STATUS_MAX_STEPS, STATUS_NO_ZERO, STATUS_OK,
                       STATUS_STEP_FAIL)
from .errors import DomainError, NoZeroFoundError, StepFailureError
from .nonlinearity import NonlinearitySpec

__all__ = ["ModelProfile", "DiskProfile", "SignReport", "solve_annulus_profile",
           "solve_disk_profile", "compute_h", "check_sign_lemmas",
           "boundary_gradient", "write_profile_csv", "write_disk_csv"]

# Window bounds: integration beyond these without a zero of V signals a
# non-admissible source term.  The north leg runs in x = ln(s).
X_NORTH_LIMIT = math.log(1e-290)
S_SOUTH_LIMIT = math.pi - 1e-13

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-14
DEFAULT_MAX_STEPS = 1_000_000
DISK_SERIES_S0 = 1e-4


class _DenseTable:
    """Merged dense-output table of one or two integrator runs.

    Stores per-step quartic interpolants keyed by the ascending left edge
    of each step interval; evaluation is vectorized over query points.
    """

    def __init__(self, runs):
        t0s, hs, y0s, Qs = [], [], [], []
        for ts, ys, qs in runs:
            for k in range(len(qs)):
                t0s.append(ts[k])
                hs.append(ts[k + 1] - ts[k])
                y0s.append(ys[k])
                Qs.append(qs[k])
        t0 = np.array(t0s)
        h = np.array(hs)
        lo = np.minimum(t0, t0 + h)
        order = np.argsort(lo)
        self.t0 = t0[order]
        self.h = h[order]
        self.lo = lo[order]
        self.y0 = np.array(y0s)[order]
        self.Q = np.array(Qs)[order]
        self.s_min = float(self.lo[0])
        self.s_max = float(np.max(np.maximum(self.t0, self.t0 + self.h)))

    def eval(self, s):
        """State vector(s) at colatitude(s) s, shape (..., dim)."""
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        sq = np.clip(np.atleast_1d(s), self.s_min, self.s_max)
        idx = np.clip(np.searchsorted(self.lo, sq, side="right") - 1,
                      0, len(self.lo) - 1)
        x = ((sq - self.t0[idx]) / self.h[idx])[:, None]
        pows = np.concatenate([x, x * x, x ** 3, x ** 4], axis=1)
        y = self.y0[idx] + self.h[idx, None] * np.einsum(
            "nij,nj->ni", self.Q[idx], pows)
        return y[0] if scalar else y


def _status_error(status, what):
    if status == STATUS_NO_ZERO:
        raise NoZeroFoundError(
            f"{what}: solution did not vanish inside the colatitude window "
            "(source term violating positivity assumptions?)")
    if status == STATUS_STEP_FAIL:
        raise StepFailureError(f"{what}: integrator step size underflowed")
    if status == STATUS_MAX_STEPS:
        raise StepFailureError(f"{what}: step budget exhausted")


def _run_integration(f: NonlinearitySpec, model_id, s_start, y0, s_limit,
                     rtol, atol, max_steps):
    y0 = np.asarray(y0, dtype=float)
    # Absolute floor on the value components only; the derivative components
    # run under pure relative control so the near-pole tail stays resolvable.
    atol_vec = np.zeros(y0.size)
    atol_vec[0::2] = atol
    if f.kind == "affine":
        kern = (accel.integrate_profile_fast if accel.USING_NUMBA
                else accel.integrate_profile_plain)
        return kern(model_id, f.a, f.b, float(s_start), y0, float(s_limit),
                    rtol, atol_vec, max_steps)
    fe, fd = f.evaluator, f.d_evaluator
    f_at_0 = float(fe(0.0))
    df_at_0 = float(fd(0.0))

    def fval(x):
        # C1 linear extension below zero; stage values may dip slightly
        # negative inside the step that crosses the zero.
        return fe(x) if x >= 0.0 else f_at_0 + df_at_0 * x

    def dfval(x):
        return fd(x) if x >= 0.0 else df_at_0

    if model_id == MODEL_ANNULUS:
        def rhs(s, y):
            cot = math.cos(s) / math.sin(s)
            return np.array([y[1], -cot * y[1] - fval(y[0]),
                             y[3], -cot * y[3] - dfval(y[0]) * y[2]])
    elif model_id == MODEL_ANNULUS_LOG:
        def rhs(x, y):
            s = math.exp(x)
            w = 1.0 - s * math.cos(s) / math.sin(s)
            s2 = s * s
            return np.array([y[1], w * y[1] - s2 * fval(y[0]),
                             y[3], w * y[3] - s2 * dfval(y[0]) * y[2]])
    else:
        def rhs(s, y):
            cot = math.cos(s) / math.sin(s)
            return np.array([y[1], -cot * y[1] - fval(y[0])])

    return integrate_profile_generic(rhs, float(s_start), y0, float(s_limit),
                                     rtol, atol_vec, max_steps)


def _refine_zero(table: _DenseTable, s_hi_positive, s_lo_sign, tol, what):
    """Zero of the V component inside [bracket], on the dense output."""
    va = float(table.eval(s_hi_positive)[0])
    vb = float(table.eval(s_lo_sign)[0])
    if vb == 0.0:
        return float(s_lo_sign)
    if va <= 0.0 or vb > 0.0:
        raise StepFailureError(f"{what}: lost the zero bracket")
    s_zero = brentq(lambda s: float(table.eval(s)[0]),
                    min(s_hi_positive, s_lo_sign),
                    max(s_hi_positive, s_lo_sign),
                    xtol=1e-300, rtol=8.9e-16, maxiter=200)
    if abs(float(table.eval(s_zero)[0])) > tol:
        raise StepFailureError(f"{what}: zero refinement stalled above tol")
    return float(s_zero)


class _ProfileDense:
    """Dense profile states (V, V', T, T') over the full colatitude range.

    The north leg is stored in x = ln(s) with derivative states s V' and
    s T'; queries convert back to colatitude derivatives.  The conversion
    V' = V_x / s can overflow for colatitudes below ~1e-210, which only
    occurs past R ~ 0.999 for sources with f(0) = 0.
    """

    def __init__(self, north: _DenseTable, south: _DenseTable, s_split: float):
        self.north = north
        self.south = south
        self.s_split = s_split

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        sq = np.atleast_1d(s).copy()
        out = np.empty(sq.shape + (4,))
        mask = sq < self.s_split
        if np.any(mask):
            sn = sq[mask]
            y = self.north.eval(np.log(sn))
            out[mask, 0] = y[:, 0]
            out[mask, 1] = y[:, 1] / sn
            out[mask, 2] = y[:, 2]
            out[mask, 3] = y[:, 3] / sn
        if np.any(~mask):
            out[~mask] = self.south.eval(sq[~mask])
        return out[0] if scalar else out


@dataclass(frozen=True)
class ModelProfile:
    """One annular model solution with its variational fields.

    samples columns: r, U, dU, Z, dZ, G on a uniform r mesh of [r1, r2];
    between samples the profile is evaluated on the integrator's quartic
    dense output (interpolation_order 4).  At heights R close to 1 the
    outer colatitude s_north underflows cos, so r2 can round to 1.0; the
    s-based fields stay exact.
    """

    f: NonlinearitySpec
    R: float
    M: float
    r1: float
    r2: float
    s_north: float  # arccos(r2)
    s_south: float  # arccos(r1)
    tol: float
    samples: np.ndarray
    interpolation_order: int = 4
    _table: _DenseTable = field(repr=False, default=None)

    @property
    def sin_S(self) -> float:
        return math.sqrt(1.0 - self.R * self.R)

    @property
    def S(self) -> float:
        return math.acos(self.R)

    # --- geographic evaluators -------------------------------------------
    def v_at(self, s):
        return self._table.eval(s)[..., 0]

    def dv_at(self, s):
        return self._table.eval(s)[..., 1]

    def state_at(self, s):
        return self._table.eval(s)

    # --- cylindrical evaluators ------------------------------------------
    def _s_of_r(self, r):
        # Clamp to the profile's colatitude range: r-queries at a saturated
        # endpoint (r2 rounding to 1.0 at extreme R) land on the zero.
        s = np.arccos(np.clip(np.asarray(r, dtype=float), -1.0, 1.0))
        return np.clip(s, self.s_north, self.s_south)

    def u_at(self, r):
        return self._table.eval(self._s_of_r(r))[..., 0]

    def du_at(self, r):
        s = self._s_of_r(r)
        return -self._table.eval(s)[..., 1] / np.sin(s)

    def z_at(self, r):
        return -self._table.eval(self._s_of_r(r))[..., 2] / self.sin_S

    def dz_at(self, r):
        s = self._s_of_r(r)
        return self._table.eval(s)[..., 3] / (self.sin_S * np.sin(s))

    def d2u_at(self, r):
        # ODE closure for U''; 1 - r^2 comes from the clamped colatitude so
        # saturated endpoint queries (r2 rounding to 1) stay finite.
        s = self._s_of_r(r)
        sins = np.sin(s)
        y = self._table.eval(s)
        fu = nonlinearity.evaluate(self.f, np.maximum(y[..., 0], 0.0))
        du = -y[..., 1] / sins
        return (2.0 * np.cos(s) * du - fu) / (sins * sins)

    def g_at(self, r):
        return self.d2u_at(r) * self.z_at(r) - self.du_at(r) * self.dz_at(r)

    def gw_at(self, r):
        """Pole-corrected Wronskian (1-r^2) G - r U' Z.

        Computed from the geodesic-polar fields, where it is the Wronskian
        of (V', T) up to the positive factor sin(S); its sign pattern
        (positive on [r1, R), negative on (R, r2]) holds for every R,
        unlike the raw cylindrical G pattern which acquires a first-order
        defect term r U' Z for R > 0.
        """
        s = self._s_of_r(r)
        y = self._table.eval(s)
        v, dv, t, dt = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
        d2v = -np.cos(s) / np.sin(s) * dv - nonlinearity.evaluate(
            self.f, np.maximum(v, 0.0))
        return -(d2v * t - dt * dv) / self.sin_S

    def gradient_norm_at(self, r):
        """|grad u| on the parallel at height r (= |V'(s)|)."""
        return np.abs(self._table.eval(self._s_of_r(r))[..., 1])


@dataclass(frozen=True)
class DiskProfile:
    """The geodesic-disk model solution and its boundary slope h(M)."""

    f: NonlinearitySpec
    M: float
    s_M: float
    h: float
    tol: float
    samples: np.ndarray  # columns s, V, dV on [0, s_M]
    series_s0: float
    interpolation_order: int = 4
    _table: _DenseTable = field(repr=False, default=None)

    def v_at(self, s):
        s = np.asarray(s, dtype=float)
        fM = float(nonlinearity.evaluate(self.f, self.M))
        series = self.M - fM * s * s / 4.0
        dense = self._table.eval(np.maximum(s, self.series_s0))[..., 0]
        return np.where(s < self.series_s0, series, dense)

    def dv_at(self, s):
        s = np.asarray(s, dtype=float)
        fM = float(nonlinearity.evaluate(self.f, self.M))
        series = -fM * s / 2.0
        dense = self._table.eval(np.maximum(s, self.series_s0))[..., 1]
        return np.where(s < self.series_s0, series, dense)


def solve_annulus_profile(f: NonlinearitySpec, R: float, M: float,
                          tol: float = 1e-12, rtol: float = DEFAULT_RTOL,
                          atol: float = DEFAULT_ATOL,
                          n_samples: int = 2001,
                          max_steps: int = DEFAULT_MAX_STEPS) -> ModelProfile:
    """Solve the annular Cauchy problem and refine both zeros to |U| < tol."""
    if not -1.0 < R < 1.0:
        raise DomainError(f"R must lie in (-1, 1), got {R}")
    if M <= 0.0:
        raise DomainError(f"M must be positive, got {M}")
    if tol <= 0.0:
        raise DomainError("tol must be positive")

    S = math.acos(R)
    fM = float(nonlinearity.evaluate(f, M))
    y0 = np.array([M, 0.0, 0.0, fM])

    status_n, nn, ts_n, ys_n, qs_n = _run_integration(
        f, MODEL_ANNULUS, S, y0, S_NORTH_LIMIT, rtol, atol, max_steps)
    if status_n != STATUS_OK:
        _status_error(status_n, f"annulus profile (R={R}, M={M}), north leg")
    status_s, ns, ts_s, ys_s, qs_s = _run_integration(
        f, MODEL_ANNULUS, S, y0, S_SOUTH_LIMIT, rtol, atol, max_steps)
    if status_s != STATUS_OK:
        _status_error(status_s, f"annulus profile (R={R}, M={M}), south leg")

    table = _DenseTable([(ts_n, ys_n, qs_n), (ts_s, ys_s, qs_s)])
    s_north = _refine_zero(table, ts_n[-2], ts_n[-1], tol, "north zero")
    s_south = _refine_zero(table, ts_s[-2], ts_s[-1], tol, "south zero")
    r2 = math.cos(s_north)
    r1 = math.cos(s_south)

    prof = ModelProfile(f=f, R=R, M=M, r1=r1, r2=r2, s_north=s_north,
                        s_south=s_south, tol=tol, samples=None, _table=table)
    rs = np.linspace(r1, r2, n_samples)
    samples = np.column_stack([rs, prof.u_at(rs), prof.du_at(rs),
                               prof.z_at(rs), prof.dz_at(rs), prof.g_at(rs)])
    object.__setattr__(prof, "samples", samples)
    return prof


def solve_disk_profile(f: NonlinearitySpec, M: float, tol: float = 1e-12,
                       rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                       n_samples: int = 2001,
                       max_steps: int = DEFAULT_MAX_STEPS) -> DiskProfile:
    """Solve the disk Cauchy problem from the series start at s0."""
    if M <= 0.0:
        raise DomainError(f"M must be positive, got {M}")
    s0 = DISK_SERIES_S0
    fM = float(nonlinearity.evaluate(f, M))
    # Two-term expansion V = M - f(M) s^2 / 4 + O(s^4) clears the cot
    # singularity; the truncation O(s0^4) ~ 1e-16 sits below the integrator
    # tolerances.
    y0 = np.array([M - fM * s0 * s0 / 4.0, -fM * s0 / 2.0])

    status, n, ts, ys, qs = _run_integration(
        f, MODEL_DISK, s0, y0, S_SOUTH_LIMIT, rtol, atol, max_steps)
    if status != STATUS_OK:
        _status_error(status, f"disk profile (M={M})")

    table = _DenseTable([(ts, ys, qs)])
    s_M = _refine_zero(table, ts[-2], ts[-1], tol, "disk zero")
    h = -float(table.eval(s_M)[1])

    prof = DiskProfile(f=f, M=M, s_M=s_M, h=h, tol=tol, samples=None,
                       series_s0=s0, _table=table)
    ss = np.linspace(0.0, s_M, n_samples)
    samples = np.column_stack([ss, prof.v_at(ss), prof.dv_at(ss)])
    object.__setattr__(prof, "samples", samples)
    return prof


def compute_h(f: NonlinearitySpec, M: float, **kw) -> float:
    """Boundary slope h(M) = -V'(s_M) of the disk model solution."""
    return solve_disk_profile(f, M, **kw).h


def boundary_gradient(profile: ModelProfile, end: str) -> float:
    """|grad u| = sqrt(1 - r_i^2) |U'(r_i)| at a zero of the profile.

    end is "r1" (south zero) or "r2" (north zero).  Evaluated as |V'(s_i)|
    in colatitude, which stays finite-precision even when r_i rounds to 1.
    """
    if end == "r1":
        s = profile.s_south
    elif end == "r2":
        s = profile.s_north
    else:
        raise ValueError("end must be 'r1' or 'r2'")
    return float(abs(profile._table.eval(s)[1]))


@dataclass(frozen=True)
class SignReport:
    """Sign-pattern margins for one profile, outside the critical collar.

    Margins are minima of the correctly-signed quantity over the sampled
    mesh; positive margin means the pattern holds strictly.  g_* refers to
    the raw cylindrical Wronskian G = U'' Z - U' Z' (pattern + on [r1, R),
    - on (R, r2]); that pattern only holds as stated at R = 0.  gw_* is the
    pole-corrected Wronskian (1 - r^2) G - r U' Z with the same expected
    pattern, which holds for every R and is the quantity that actually
    drives the boundary-gradient monotonicity.
    """

    z_ok: bool
    z_margin: float
    z_worst_r: float
    g_ok: bool
    g_margin: float
    g_worst_r: float
    gw_ok: bool
    gw_margin: float
    gw_worst_r: float
    concave_ok: bool
    concave_margin: float
    concave_worst_r: float
    collar: float

    @property
    def all_ok(self) -> bool:
        return self.z_ok and self.g_ok and self.gw_ok and self.concave_ok


def _signed_margin(rs, vals, left_mask, right_mask):
    # expected: vals > 0 on the left set, vals < 0 on the right set
    signed = np.where(left_mask, vals, np.where(right_mask, -vals, np.inf))
    k = int(np.argmin(signed))
    return float(signed[k]), float(rs[k])


def check_sign_lemmas(profile: ModelProfile,
                      collar_width: Optional[float] = None) -> SignReport:
    """Check the variational sign patterns and concavity on the sample mesh."""
    rs = profile.samples[:, 0]
    Z = profile.samples[:, 3]
    G = profile.samples[:, 5]
    GW = profile.gw_at(rs)
    D2U = profile.d2u_at(rs)

    R = profile.R
    if collar_width is None:
        collar_width = 1e-3 * (profile.r2 - profile.r1)
    outside = np.abs(rs - R) >= collar_width
    left = (rs < R) & outside
    right = (rs > R) & outside

    z_margin, z_r = _signed_margin(rs, -Z, left, right)       # Z<0 left, >0 right
    g_margin, g_r = _signed_margin(rs, G, left, right)        # G>0 left, <0 right
    gw_margin, gw_r = _signed_margin(rs, GW, left, right)
    cm = np.where(outside, -D2U, np.inf)
    k = int(np.argmin(cm))
    concave_margin, concave_r = float(cm[k]), float(rs[k])

    return SignReport(
        z_ok=z_margin > 0.0, z_margin=z_margin, z_worst_r=z_r,
        g_ok=g_margin > 0.0, g_margin=g_margin, g_worst_r=g_r,
        gw_ok=gw_margin > 0.0, gw_margin=gw_margin, gw_worst_r=gw_r,
        concave_ok=concave_margin > 0.0, concave_margin=concave_margin,
        concave_worst_r=concave_r, collar=collar_width)


def write_profile_csv(profile: ModelProfile, path: str) -> None:
    """CSV `r,U,dU,Z,dZ,G` plus a JSON sidecar with the defining data."""
    np.savetxt(path, profile.samples, delimiter=",",
               header="r,U,dU,Z,dZ,G", comments="")
    sidecar = {"R": profile.R, "M": profile.M, "r1": profile.r1,
               "r2": profile.r2, "tol": profile.tol,
               "f": profile.f.config()}
    with open(_sidecar_path(path), "w") as fh:
        json.dump(sidecar, fh, indent=1)


def write_disk_csv(profile: DiskProfile, path: str) -> None:
    np.savetxt(path, profile.samples, delimiter=",",
               header="s,V,dV", comments="")
    sidecar = {"M": profile.M, "s_M": profile.s_M, "h": profile.h,
               "tol": profile.tol, "f": profile.f.config()}
    with open(_sidecar_path(path), "w") as fh:
        json.dump(sidecar, fh, indent=1)


def _sidecar_path(path: str) -> str:
    return (path[:-4] if path.endswith(".csv") else path) + ".json"
