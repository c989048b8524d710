"""Admissible source terms f(u) and their structural conditions.

A source term is either affine, f(x) = a*x + b, or a user-supplied pair of
callables (value and derivative).  The structural conditions checked by
:func:`validate_conditions` are

    (i)   f(x) >= f'(x) * x     on (0, x_max],
    (ii)  f'(x) >= 2            on (0, x_max],
    (nn)  f(x) >= 0             on [0, x_max].

Affine terms are checked exactly; callable terms on a sample grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

__all__ = ["NonlinearitySpec", "ConditionReport", "affine", "from_callables",
           "evaluate", "derivative", "validate_conditions", "parse_f"]


@dataclass(frozen=True)
class NonlinearitySpec:
    """A source term f with first derivative.

    kind is "affine" (a, b meaningful) or "callable" (evaluator pair
    meaningful).  domain_cap is the largest argument up to which the
    evaluators are trusted.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    evaluator: Optional[Callable[[float], float]] = None
    d_evaluator: Optional[Callable[[float], float]] = None
    domain_cap: float = field(default=float("inf"))

    def __post_init__(self):
        if self.kind not in ("affine", "callable"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "callable" and (self.evaluator is None or self.d_evaluator is None):
            raise ValueError("callable kind needs evaluator and d_evaluator")

    # Convenience wrappers mirroring the module-level operations.
    def __call__(self, x):
        return evaluate(self, x)

    def deriv(self, x):
        return derivative(self, x)

    def label(self) -> str:
        if self.kind == "affine":
            return f"affine:{self.a:g},{self.b:g}"
        return "callable"

    def config(self) -> dict:
        if self.kind == "affine":
            return {"kind": "affine", "a": self.a, "b": self.b}
        return {"kind": "callable"}


def affine(a: float, b: float = 0.0, domain_cap: float = float("inf")) -> NonlinearitySpec:
    return NonlinearitySpec(kind="affine", a=float(a), b=float(b), domain_cap=domain_cap)


def from_callables(f, df, domain_cap: float = float("inf")) -> NonlinearitySpec:
    return NonlinearitySpec(kind="callable", evaluator=f, d_evaluator=df,
                            domain_cap=domain_cap)


def _check_domain(spec: NonlinearitySpec, x) -> None:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > spec.domain_cap):
        raise DomainError(
            f"argument outside [0, {spec.domain_cap}] for f={spec.label()}")


def evaluate(spec: NonlinearitySpec, x):
    """f(x) for 0 <= x <= domain_cap; exact for the affine kind."""
    _check_domain(spec, x)
    if spec.kind == "affine":
        return spec.a * np.asarray(x, dtype=float) + spec.b
    return spec.evaluator(x)


def derivative(spec: NonlinearitySpec, x):
    """f'(x) for 0 <= x <= domain_cap."""
    _check_domain(spec, x)
    if spec.kind == "affine":
        return spec.a * np.ones_like(np.asarray(x, dtype=float))
    return spec.d_evaluator(x)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the structural checks over (0, x_max].

    cond_i:      f >= f' * x
    cond_ii:     f' >= 2
    cond_nonneg: f >= 0 on [0, x_max]
    f0:          value of f at 0 (f(0) >= 0 and f(0) == 0 are distinct
                 hypotheses in different statements; both are derivable
                 from this field and reported separately).
    first_violation: (condition name, x, margin) of the first failing
                 sample, or None.
    """

    cond_i: bool
    cond_ii: bool
    cond_nonneg: bool
    f0: float
    f0_nonneg: bool
    f0_zero: bool
    first_violation: Optional[tuple] = None

    @property
    def all_ok(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_nonneg


def validate_conditions(spec: NonlinearitySpec, x_max: float,
                        n_samples: int = 256) -> ConditionReport:
    """Check the structural conditions on (0, x_max] (affine: exactly).

    Callable terms are sampled on a uniform grid including both endpoints;
    the open-interval conditions use samples at x >= x_max / n_samples.
    """
    if x_max <= 0.0:
        raise ValueError("x_max must be positive")
    if n_samples < 2:
        raise ValueError("need at least two samples")

    f0 = float(evaluate(spec, 0.0))
    if spec.kind == "affine":
        # cond_i reduces to b >= 0; cond_ii to a >= 2; nonnegativity on
        # [0, x_max] to min(f(0), f(x_max)) >= 0.
        a, b = spec.a, spec.b
        cond_i = b >= 0.0
        cond_ii = a >= 2.0
        fmin = min(b, a * min(x_max, spec.domain_cap) + b)
        cond_nonneg = fmin >= 0.0
        viol = None
        if not cond_i:
            viol = ("cond_i", x_max, b)
        elif not cond_ii:
            viol = ("cond_ii", x_max, a - 2.0)
        elif not cond_nonneg:
            viol = ("cond_nonneg", x_max if b >= 0 else 0.0, fmin)
        return ConditionReport(cond_i, cond_ii, cond_nonneg, f0,
                               f0 >= 0.0, f0 == 0.0, viol)

    xs = np.linspace(0.0, min(x_max, spec.domain_cap), n_samples + 1)
    fx = np.asarray(evaluate(spec, xs), dtype=float)
    dfx = np.asarray(derivative(spec, xs), dtype=float)

    open_xs = xs[1:]
    m_i = fx[1:] - dfx[1:] * open_xs
    m_ii = dfx[1:] - 2.0
    m_nn = fx

    viol = None
    for name, grid, margins in (("cond_i", open_xs, m_i),
                                ("cond_ii", open_xs, m_ii),
                                ("cond_nonneg", xs, m_nn)):
        bad = np.flatnonzero(margins < 0.0)
        if bad.size and viol is None:
            k = bad[0]
            viol = (name, float(grid[k]), float(margins[k]))
    return ConditionReport(bool(np.all(m_i >= 0.0)), bool(np.all(m_ii >= 0.0)),
                           bool(np.all(m_nn >= 0.0)), f0, f0 >= 0.0, f0 == 0.0,
                           viol)


def derivative_consistency(spec: NonlinearitySpec, x_max: float,
                           n_samples: int = 64, h: float = 1e-5) -> float:
    """Worst deviation of a central difference of f from f' on a grid.

    Useful to sanity-check callable pairs; O(h^2) for smooth f.
    """
    xs = np.linspace(h, min(x_max, spec.domain_cap) - h, n_samples)
    fd = (np.asarray(evaluate(spec, xs + h)) - np.asarray(evaluate(spec, xs - h))) / (2 * h)
    return float(np.max(np.abs(fd - np.asarray(derivative(spec, xs)))))


def parse_f(text: str) -> NonlinearitySpec:
    """Parse a CLI descriptor like "affine:2,0" or "affine:2" (b=0)."""
    kind, _, rest = text.partition(":")
    if kind != "affine":
        raise ValueError(f"unsupported nonlinearity descriptor {text!r}")
    parts = [p for p in rest.split(",") if p]
    if not 1 <= len(parts) <= 2:
        raise ValueError(f"expected affine:a[,b], got {text!r}")
    a = float(parts[0])
    b = float(parts[1]) if len(parts) == 2 else 0.0
    return affine(a, b)


def from_config(cfg: dict) -> NonlinearitySpec:
    """Build a spec from a config mapping like {"kind": "affine", "a": 2.0, "b": 0.0}."""
    if cfg.get("kind") != "affine":
        raise ValueError("config nonlinearities must be affine")
    return affine(float(cfg.get("a", 0.0)), float(cfg.get("b", 0.0)),
                  float(cfg.get("domain_cap", float("inf"))))
