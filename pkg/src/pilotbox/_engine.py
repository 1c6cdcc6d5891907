"""Selects the trajectory kernel: compiled extension if available, else Python.

Set ``PILOTBOX_ENGINE=python`` to force the pure-Python kernel (mainly for
benchmarks and debugging) or ``PILOTBOX_ENGINE=compiled`` to insist on the
extension.  ``PILOTBOX_WORKERS`` overrides the worker (thread) count used
for lattice batches.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pycore

_requested = os.environ.get("PILOTBOX_ENGINE", "").strip().lower()

if _requested in ("python", "py"):
    _kernel = _pycore
else:
    try:
        from . import _core as _kernel  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "PILOTBOX_ENGINE=compiled but the pilotbox._core extension "
                "is not built; reinstall with a C compiler available"
            ) from None
        _kernel = _pycore

ENGINE = _kernel.KERNEL

MAX_MODE_INDEX = 32


def kernel_module(name: str | None = None):
    """The active kernel module, or a specific one by name ('compiled'/'python')."""
    if name is None or name == ENGINE:
        return _kernel
    if name == "python":
        return _pycore
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown engine {name!r}")


def default_workers() -> int:
    env = os.environ.get("PILOTBOX_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _mode_args(state):
    m, n, coef, theta, energy = state.mode_arrays()
    if m.max() > MAX_MODE_INDEX or n.max() > MAX_MODE_INDEX:
        raise ValueError(f"mode indices above {MAX_MODE_INDEX} are not supported")
    return m, n, coef, theta, energy


def _cfg_args(cfg):
    return (cfg.initial_step, cfg.abs_tol, cfg.rel_tol, cfg.safety,
            cfg.min_step, cfg.max_step, cfg.max_steps)


def integrate_guided(state, mu, fchoice, floor, x0, t0, t1, cfg, engine=None):
    """One trajectory via the kernel. Returns (x_final, status_code, steps)."""
    kern = kernel_module(engine)
    x1, x2, status, steps = kern.integrate_one(
        *_mode_args(state), mu, fchoice, floor,
        float(x0[0]), float(x0[1]), float(t0), float(t1), *_cfg_args(cfg))
    return np.array([x1, x2]), int(status), int(steps)


def backtrack_points(state, mu, fchoice, floor, pts, t0, t1, cfg,
                     workers: int | None = None, engine=None):
    """Batch trajectory integration; returns (endpoints, status, steps) arrays."""
    kern = kernel_module(engine)
    pts = np.ascontiguousarray(pts, dtype=float)
    nthreads = workers if workers is not None else default_workers()
    return kern.backtrack_batch(
        *_mode_args(state), mu, fchoice, floor,
        pts, float(t0), float(t1), *_cfg_args(cfg), nthreads)


def velocity_raw(state, mu, fchoice, floor, x, t, engine=None):
    """Kernel-level velocity sample (v1, v2, vs1, vs2, density, ok)."""
    kern = kernel_module(engine)
    return kern.velocity_eval(*_mode_args(state), mu, fchoice, floor,
                              float(x[0]), float(x[1]), float(t))


def jet_raw(state, x, t, engine=None) -> np.ndarray:
    """Kernel-level 10-entry complex jet of psi."""
    kern = kernel_module(engine)
    return kern.jet_eval(*_mode_args(state), float(x[0]), float(x[1]), float(t))
