"""Velocity fields guiding the particle.

The family is v = v_s + mu * eps grad(f) / |psi|^2, where v_s = j_s/|psi|^2
is the standard velocity, eps is the 2D antisymmetric symbol with
eps_12 = +1, and f is one of |psi|^2, curl(j_s), div(j_s).  Any such
additive term is divergence-free as a current, so |psi|^2 stays equivariant
under the modified flow; mu = 0 (or f = none) is the ordinary guidance law.

Evaluation at points where the density is below the configured floor raises
:class:`NodeSingularityError`; the integrator treats that like a rejected
step, which keeps the node-handling policy in one place.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import wavefield
from .wavefield import WaveState, current_jet, eval_jet


class FChoice(enum.Enum):
    """Choice of the stream function f in the additive velocity term."""

    NONE = "none"
    F1 = "f1"   # |psi|^2
    F2 = "f2"   # curl of the standard current
    F3 = "f3"   # divergence of the standard current

    @property
    def code(self) -> int:
        return _F_CODES[self]


_F_CODES = {FChoice.NONE: 0, FChoice.F1: 1, FChoice.F2: 2, FChoice.F3: 3}


class NodeSingularityError(RuntimeError):
    """Velocity requested where |psi|^2 is (numerically) zero."""


@dataclass(frozen=True)
class GuidanceSpec:
    """Parameters selecting one member of the velocity-field family."""

    mu: float = 0.0
    f_choice: FChoice = FChoice.NONE
    density_floor: float = 1e-300

    @staticmethod
    def parse(mapping) -> "GuidanceSpec":
        """Build from a config mapping {mu: float, f: none|f1|f2|f3}."""
        mu = float(mapping.get("mu", 0.0))
        f = FChoice(str(mapping.get("f", "none")).lower())
        floor = float(mapping.get("density_floor", 1e-300))
        return GuidanceSpec(mu=mu, f_choice=f, density_floor=floor)

    @property
    def label(self) -> str:
        if self.mu == 0.0 or self.f_choice is FChoice.NONE:
            return "mu=0"
        return f"mu={self.mu:g}, {self.f_choice.value}"

    @property
    def is_standard(self) -> bool:
        return self.mu == 0.0 or self.f_choice is FChoice.NONE


@dataclass(frozen=True)
class VelocitySample:
    """Velocity at one point: total, standard part, and |psi|^2 there."""

    v: np.ndarray
    v_s: np.ndarray
    density: float


def f_value_and_grad(state: WaveState, choice: FChoice, x, t: float):
    """The stream function f and its gradient at (x, t)."""
    if choice is FChoice.NONE:
        return 0.0, np.zeros(2)
    cj = current_jet(state, x, t)
    if choice is FChoice.F1:
        return cj.density, cj.grad_density
    if choice is FChoice.F2:
        return cj.curl_j, cj.grad_curl_j
    return cj.div_j, cj.grad_div_j


def velocity(state: WaveState, spec: GuidanceSpec, x, t: float) -> VelocitySample:
    """Total guidance velocity at a strictly interior point."""
    cj = current_jet(state, x, t)
    dens = cj.density
    if not (dens >= spec.density_floor) or not math.isfinite(dens):
        raise NodeSingularityError(
            f"density {dens:g} below floor {spec.density_floor:g} at x={tuple(x)}, t={t}")
    v_s = cj.j / dens
    if spec.is_standard:
        return VelocitySample(v=v_s, v_s=v_s, density=dens)
    if spec.f_choice is FChoice.F1:
        grad_f = cj.grad_density
    elif spec.f_choice is FChoice.F2:
        grad_f = cj.grad_curl_j
    else:
        grad_f = cj.grad_div_j
    v = v_s + spec.mu * np.array([grad_f[1], -grad_f[0]]) / dens
    return VelocitySample(v=v, v_s=v_s, density=dens)


def velocity_field(state: WaveState, spec: GuidanceSpec):
    """The guidance law as a plain callable f(x, t) -> velocity vector."""
    def field(x, t):
        return velocity(state, spec, x, t).v
    return field


def _laplacian_of_f(state: WaveState, spec: GuidanceSpec, x, t: float) -> float:
    """Laplacian of the selected stream function, from analytic jets."""
    jet = eval_jet(state, x, t)
    p = jet.value
    d1, d2 = jet.grad
    d11, d12, d22 = jet.hess
    d111, d112, d122, d222 = jet.third
    if spec.f_choice is FChoice.F1:
        # lap |psi|^2 = 2|grad psi|^2 + 2 Re(psi* lap psi)
        return float(2.0 * (abs(d1) ** 2 + abs(d2) ** 2)
                     + 2.0 * (np.conjugate(p) * (d11 + d22)).real)
    if spec.f_choice is FChoice.F2:
        # lap curl j = 2 Im(lap(d1* d2))
        return float(2.0 * (np.conjugate(d111 + d122) * d2
                            + 2.0 * (np.conjugate(d11) * d12 + np.conjugate(d12) * d22)
                            + np.conjugate(d1) * (d112 + d222)).imag)
    # lap div j = 2 Im(grad psi* . grad lap psi) + Im(psi* lap lap psi);
    # modes are eigenfunctions, so lap^2 psi is a (-2E)^2-weighted mode sum.
    lap_grad1 = d111 + d122
    lap_grad2 = d112 + d222
    lap2_value = wavefield._jet_sum(state, x, t, 2)[0]
    return float(2.0 * (np.conjugate(d1) * lap_grad1 + np.conjugate(d2) * lap_grad2).imag
                 + (np.conjugate(p) * lap2_value).imag)


def vorticity(state: WaveState, spec: GuidanceSpec, x, t: float,
              min_density: float = 1e-12) -> float:
    """Scalar curl of the guidance velocity, assembled analytically.

    With J the total current (standard plus mu eps grad f) and D = |psi|^2:
    curl(J/D) = (curl J)/D - (J x grad D)/D^2, and curl of the additive term
    is -mu lap(f).
    """
    cj = current_jet(state, x, t)
    dens = cj.density
    if dens < min_density:
        raise NodeSingularityError(f"vorticity requested too close to a node "
                                   f"(density {dens:g} at x={tuple(x)})")
    if spec.is_standard:
        j_tot = cj.j
        curl_tot = cj.curl_j
    else:
        _, grad_f = f_value_and_grad(state, spec.f_choice, x, t)
        j_tot = cj.j + spec.mu * np.array([grad_f[1], -grad_f[0]])
        curl_tot = cj.curl_j - spec.mu * _laplacian_of_f(state, spec, x, t)
    return float(curl_tot / dens
                 - (j_tot[1] * cj.grad_density[0] - j_tot[0] * cj.grad_density[1]) / dens ** 2)


def circulation(state: WaveState, spec: GuidanceSpec, loop: np.ndarray, t: float,
                quadrature_n: int = 1024) -> float:
    """Line integral of v around a closed polyline, by composite midpoints.

    ``loop`` is an (k, 2) array of vertices, closed implicitly (last back to
    first).  Hitting a node on the loop raises NodeSingularityError.
    """
    loop = np.asarray(loop, dtype=float)
    if loop.ndim != 2 or loop.shape[1] != 2 or loop.shape[0] < 3:
        raise ValueError("loop must be an (k >= 3, 2) array of vertices")
    if np.any(loop <= 0.0) or np.any(loop >= wavefield.BOX_SIDE):
        raise ValueError("loop must lie strictly inside the box")
    total = 0.0
    for a, b in zip(loop, np.roll(loop, -1, axis=0)):
        dl = (b - a) / quadrature_n
        for i in range(quadrature_n):
            mid = a + (i + 0.5) * dl
            total += float(np.dot(velocity(state, spec, mid, t).v, dl))
    return total


def square_loop(center, half_side: float) -> np.ndarray:
    """Axis-aligned square loop (counterclockwise) around a point."""
    cx, cy = float(center[0]), float(center[1])
    h = float(half_side)
    return np.array([[cx - h, cy - h], [cx + h, cy - h],
                     [cx + h, cy + h], [cx - h, cy + h]])
