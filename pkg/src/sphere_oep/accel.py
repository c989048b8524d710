"""Numba wiring for the hot kernels.

The jitted twins of :mod:`._kernels` are used whenever numba imports cleanly
and the environment variable ``SPHERE_OEP_NO_NUMBA`` is unset/empty; setting
it to any non-empty value selects the plain-python path (the same source,
un-jitted).  ``benchmarks/bench_integrator.py`` compares the two.

The kernel module is loaded a second time and jitted inside the clone, so
the plain module stays pure python for the fallback path.
"""

import importlib.util
import os

from . import _kernels as _plain

NUMBA_ENV_FLAG = "SPHERE_OEP_NO_NUMBA"

NUMBA_DISABLED = bool(os.environ.get(NUMBA_ENV_FLAG, ""))
HAS_NUMBA = False

if not NUMBA_DISABLED:
    try:
        import numba

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False


def _kernels_clone():
    spec = importlib.util.find_spec("sphere_oep._kernels")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


if HAS_NUMBA:
    _fast = _kernels_clone()
    _fast.profile_rhs = numba.njit(cache=True, nogil=True)(_fast.profile_rhs)
    _fast.integrate_profile = numba.njit(cache=True, nogil=True)(
        _fast.integrate_profile)
    integrate_profile_fast = _fast.integrate_profile
else:
    integrate_profile_fast = _plain.integrate_profile

integrate_profile_plain = _plain.integrate_profile

USING_NUMBA = HAS_NUMBA


def backend_name() -> str:
    return "numba" if USING_NUMBA else "python"
