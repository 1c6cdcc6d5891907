"""Adaptive trajectory integration with a Cash-Karp embedded 5(4) pair.

The accept/reject loop follows the classic embedded-pair recipe: accept when
the per-component error estimate is within abs_tol + rel_tol*|x|, grow the
step with exponent 1/5, shrink with 1/4, clamp to [min_step, max_step], and
never step past the requested end time.  Node singularities raised by the
velocity field are handled like rejected steps (halve and retry); a step
pinned at min_step that still fails ends the trajectory with StepUnderflow.

:func:`integrate` runs on the selected kernel (compiled when available);
:func:`integrate_field` is the same loop in plain Python over an arbitrary
velocity callable, used for oracles and stub fields in tests.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _engine, _pycore
from .guidance import GuidanceSpec, NodeSingularityError
from .wavefield import BOX_SIDE, WaveState
from .wavefield import period as state_period

_BOX_EPS = 1e-12


@dataclass(frozen=True)
class IntegratorConfig:
    initial_step: float = 1e-5
    max_steps: int = 100_000
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    safety: float = 0.9
    min_step: float = 1e-14
    max_step: float = 1e-1

    def __post_init__(self):
        if not (0.0 < self.min_step <= self.initial_step <= self.max_step):
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def with_tolerances(self, abs_tol: float, rel_tol: float) -> "IntegratorConfig":
        return IntegratorConfig(initial_step=self.initial_step, max_steps=self.max_steps,
                                abs_tol=abs_tol, rel_tol=rel_tol, safety=self.safety,
                                min_step=self.min_step, max_step=self.max_step)

    @staticmethod
    def parse(mapping) -> "IntegratorConfig":
        known = ("initial_step", "max_steps", "abs_tol", "rel_tol",
                 "safety", "min_step", "max_step")
        unknown = set(mapping) - set(known)
        if unknown:
            raise ValueError(f"unknown integrator settings: {sorted(unknown)}")
        kwargs = {k: (int(v) if k == "max_steps" else float(v))
                  for k, v in mapping.items()}
        return IntegratorConfig(**kwargs)


class Status(enum.IntEnum):
    OK = 0
    MAX_STEPS_EXCEEDED = 1
    STEP_UNDERFLOW = 2
    LEFT_BOX = 3


@dataclass(frozen=True)
class TrajectoryResult:
    x_final: np.ndarray
    status: Status
    steps_taken: int
    path: Optional[np.ndarray] = None  # (k, 3) rows of (t, x1, x2) when sampled

    @property
    def ok(self) -> bool:
        return self.status is Status.OK


VelocityFn = Callable[[np.ndarray, float], np.ndarray]


def rk_step(f: VelocityFn, x, t: float, h: float):
    """One Cash-Karp step of dx/dt = f(x, t).

    Returns the 5th-order solution and the (5th minus 4th)-order error
    estimate.  Node singularities from f propagate to the caller.
    """
    if h == 0.0:
        raise ValueError("step size must be nonzero")
    x = np.asarray(x, dtype=float)
    p = _pycore
    k1 = np.asarray(f(x, t), dtype=float)
    k2 = np.asarray(f(x + h * (p.B21 * k1), t + p.A2 * h), dtype=float)
    k3 = np.asarray(f(x + h * (p.B31 * k1 + p.B32 * k2), t + p.A3 * h), dtype=float)
    k4 = np.asarray(f(x + h * (p.B41 * k1 + p.B42 * k2 + p.B43 * k3), t + p.A4 * h), dtype=float)
    k5 = np.asarray(f(x + h * (p.B51 * k1 + p.B52 * k2 + p.B53 * k3 + p.B54 * k4),
                      t + p.A5 * h), dtype=float)
    k6 = np.asarray(f(x + h * (p.B61 * k1 + p.B62 * k2 + p.B63 * k3 + p.B64 * k4 + p.B65 * k5),
                      t + p.A6 * h), dtype=float)
    x_new = x + h * (p.C1 * k1 + p.C3 * k3 + p.C4 * k4 + p.C6 * k6)
    err = h * (p.D1 * k1 + p.D3 * k3 + p.D4 * k4 + p.D5 * k5 + p.D6 * k6)
    return x_new, err


def integrate_field(f: VelocityFn, x0, t0: float, t1: float,
                    cfg: IntegratorConfig = IntegratorConfig()) -> TrajectoryResult:
    """Adaptive integration of an arbitrary velocity callable (Python loop)."""
    x = np.asarray(x0, dtype=float).copy()
    if t1 == t0:
        return TrajectoryResult(x_final=x, status=Status.OK, steps_taken=0)
    direction = 1.0 if t1 > t0 else -1.0
    h = direction * min(cfg.initial_step, cfg.max_step)
    t = t0
    steps = 0
    while direction * (t1 - t) > 0.0:
        if steps >= cfg.max_steps:
            return TrajectoryResult(x, Status.MAX_STEPS_EXCEEDED, steps)
        end_clamped = False
        if direction * (t + h - t1) > 0.0:
            h = t1 - t
            end_clamped = True
        steps += 1
        try:
            x_new, err_vec = rk_step(f, x, t, h)
            scale = cfg.abs_tol + cfg.rel_tol * np.abs(x)
            err = float(np.max(np.abs(err_vec) / scale))
            failed = not (math.isfinite(err) and np.all(np.isfinite(x_new)))
        except NodeSingularityError:
            failed = True
        if failed:
            if abs(h) <= cfg.min_step * (1.0 + 1e-12):
                return TrajectoryResult(x, Status.STEP_UNDERFLOW, steps)
            h = 0.5 * h
            if abs(h) < cfg.min_step:
                h = direction * cfg.min_step
            continue
        if np.any(x_new < -_BOX_EPS) or np.any(x_new > BOX_SIDE + _BOX_EPS):
            if abs(h) <= cfg.min_step * (1.0 + 1e-12):
                return TrajectoryResult(x, Status.LEFT_BOX, steps)
            h = 0.5 * h
            if abs(h) < cfg.min_step:
                h = direction * cfg.min_step
            continue
        if err <= 1.0:
            x = x_new
            t = t1 if end_clamped else t + h
            if err == 0.0:
                h = direction * cfg.max_step
            else:
                h = cfg.safety * h * err ** -0.2
                if abs(h) > cfg.max_step:
                    h = direction * cfg.max_step
                elif abs(h) < cfg.min_step:
                    h = direction * cfg.min_step
        else:
            if abs(h) <= cfg.min_step * (1.0 + 1e-12):
                return TrajectoryResult(x, Status.STEP_UNDERFLOW, steps)
            h = cfg.safety * h * err ** -0.25
            if abs(h) < cfg.min_step:
                h = direction * cfg.min_step
    if not (0.0 < x[0] < BOX_SIDE and 0.0 < x[1] < BOX_SIDE):
        return TrajectoryResult(x, Status.LEFT_BOX, steps)
    return TrajectoryResult(x, Status.OK, steps)


def integrate(state: WaveState, spec: GuidanceSpec, x0, t0: float, t1: float,
              cfg: IntegratorConfig = IntegratorConfig(),
              engine: str | None = None) -> TrajectoryResult:
    """Integrate one guided trajectory on the selected kernel."""
    x_final, status, steps = _engine.integrate_guided(
        state, spec.mu, spec.f_choice.code, spec.density_floor,
        np.asarray(x0, dtype=float), t0, t1, cfg, engine=engine)
    return TrajectoryResult(x_final=x_final, status=Status(status), steps_taken=steps)


def trajectory_samples(state: WaveState, spec: GuidanceSpec, x0, t0: float, t1: float,
                       n_samples: int = 2000,
                       cfg: IntegratorConfig = IntegratorConfig()) -> TrajectoryResult:
    """Trajectory with a (t, x1, x2) sample at n_samples+1 evenly spaced times.

    Integrates segment by segment so the samples are exact integrator output,
    not interpolation.  Statistics elsewhere never depend on this path.
    """
    times = np.linspace(t0, t1, n_samples + 1)
    x = np.asarray(x0, dtype=float)
    rows = [(times[0], x[0], x[1])]
    total_steps = 0
    for t_prev, t_next in zip(times[:-1], times[1:]):
        result = integrate(state, spec, x, t_prev, t_next, cfg)
        total_steps += result.steps_taken
        if not result.ok:
            return TrajectoryResult(result.x_final, result.status, total_steps,
                                    path=np.array(rows))
        x = result.x_final
        rows.append((t_next, x[0], x[1]))
    return TrajectoryResult(x, Status.OK, total_steps, path=np.array(rows))


def flow_compose_check(state: WaveState, spec: GuidanceSpec, x0, t_a: float,
                       cfg: IntegratorConfig = IntegratorConfig(),
                       tau: float | None = None) -> float:
    """Endpoint distance between the direct and the composed flow.

    Direct: x0 evolved over [0, tau + t_a].  Composed: x0 evolved over
    [0, tau], then that endpoint evolved over [tau, tau + t_a].  For a
    wavefunction with period tau the two must agree up to integration error.
    """
    if tau is None:
        tau = state_period(state)
    direct = integrate(state, spec, x0, 0.0, tau + t_a, cfg)
    first = integrate(state, spec, x0, 0.0, tau, cfg)
    if not (direct.ok and first.ok):
        raise RuntimeError(f"flow composition legs failed: "
                           f"{direct.status.name}, {first.status.name}")
    second = integrate(state, spec, first.x_final, tau, tau + t_a, cfg)
    if not second.ok:
        raise RuntimeError(f"flow composition second leg failed: {second.status.name}")
    return float(np.linalg.norm(direct.x_final - second.x_final))
