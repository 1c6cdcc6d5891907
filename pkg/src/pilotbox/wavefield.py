"""Analytic wavefunctions for a particle in a 2D square box.

Units are hbar = mass = 1 and the box is [0, pi] x [0, pi], so the
eigenmodes are (2/pi) sin(m x1) sin(n x2) with energies (m^2 + n^2)/2.
A :class:`WaveState` is a finite superposition of such modes.  The value,
all spatial derivatives up to third order, and the probability current with
its derivatives are evaluated as exact mode sums: the only error anywhere
in the field evaluation is floating-point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

BOX_SIDE = math.pi
MODE_NORM = 2.0 / math.pi

# Phases of the four lowest modes used by the reference superpositions
# (originally randomly generated; kept verbatim for reproducibility).
PHASE_11 = 1.1525988926093297
PHASE_12 = 4.2775762116024665
PHASE_21 = 2.1660329888555025
PHASE_22 = 2.8960554218806349


def mode_energy(m: int, n: int) -> float:
    """Energy (m^2 + n^2)/2 of box eigenmode (m, n)."""
    return 0.5 * (m * m + n * n)


@dataclass(frozen=True)
class Mode:
    """One box eigenmode with its superposition weight and phase."""

    m: int
    n: int
    amplitude: float
    phase: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"mode numbers must be >= 1, got ({self.m}, {self.n})")
        if self.amplitude < 0:
            raise ValueError("mode amplitude must be >= 0")

    @property
    def energy(self) -> float:
        return mode_energy(self.m, self.n)


@dataclass(frozen=True)
class WaveState:
    """Immutable superposition of box eigenmodes.

    The squared amplitudes must sum to 1 (the modes are orthonormal, so this
    is the normalization of psi).  All evaluation methods are pure functions
    and the state is safe to share across threads.
    """

    modes: tuple[Mode, ...]
    box_side: float = field(default=BOX_SIDE, init=False)

    def __post_init__(self):
        if len(self.modes) == 0:
            raise ValueError("a WaveState needs at least one mode")
        total = sum(mode.amplitude ** 2 for mode in self.modes)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"amplitudes not normalized: sum of squares = {total!r}")

    def mode_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Mode data as flat arrays (m, n, coefficient, phase, energy).

        The coefficient column already includes the 2/pi eigenmode norm;
        this is the layout the trajectory kernels consume.
        """
        m = np.array([mode.m for mode in self.modes], dtype=np.int32)
        n = np.array([mode.n for mode in self.modes], dtype=np.int32)
        coef = np.array([mode.amplitude * MODE_NORM for mode in self.modes])
        theta = np.array([mode.phase for mode in self.modes])
        energy = np.array([mode.energy for mode in self.modes])
        return m, n, coef, theta, energy

    def psi(self, x1, x2, t: float) -> np.ndarray:
        """psi at broadcastable coordinate arrays x1, x2 and time t."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros(np.broadcast(x1, x2).shape, dtype=complex)
        for mode in self.modes:
            coef = mode.amplitude * MODE_NORM * np.exp(1j * (mode.phase - mode.energy * t))
            out += coef * np.sin(mode.m * x1) * np.sin(mode.n * x2)
        return out

    def psi_grid(self, x1: np.ndarray, x2: np.ndarray, t: float) -> np.ndarray:
        """psi on the tensor grid x1 (axis 0) by x2 (axis 1).

        Uses the separability of each mode, so a full 1024^2 lattice costs
        four outer products.
        """
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.zeros((x1.size, x2.size), dtype=complex)
        for mode in self.modes:
            coef = mode.amplitude * MODE_NORM * np.exp(1j * (mode.phase - mode.energy * t))
            out += coef * np.outer(np.sin(mode.m * x1), np.sin(mode.n * x2))
        return out

    def density(self, x1, x2, t: float) -> np.ndarray:
        """|psi|^2 at broadcastable coordinates."""
        psi = self.psi(x1, x2, t)
        return psi.real ** 2 + psi.imag ** 2

    def density_grid(self, x1: np.ndarray, x2: np.ndarray, t: float) -> np.ndarray:
        psi = self.psi_grid(x1, x2, t)
        return psi.real ** 2 + psi.imag ** 2


def eigenmode(m: int, n: int, x) -> float:
    """Box eigenfunction (2/pi) sin(m x1) sin(n x2) at a point in the box."""
    if m < 1 or n < 1:
        raise ValueError("mode numbers must be >= 1")
    x1, x2 = float(x[0]), float(x[1])
    if not (0.0 <= x1 <= BOX_SIDE and 0.0 <= x2 <= BOX_SIDE):
        raise ValueError(f"point {(x1, x2)} outside the box [0, pi]^2")
    return MODE_NORM * math.sin(m * x1) * math.sin(n * x2)


def make_psi1() -> WaveState:
    """Equal-weight superposition of the four lowest modes (has one node)."""
    return WaveState(modes=(
        Mode(1, 1, 0.5, PHASE_11),
        Mode(1, 2, 0.5, PHASE_12),
        Mode(2, 1, 0.5, PHASE_21),
        Mode(2, 2, 0.5, PHASE_22),
    ))


def make_psi2() -> WaveState:
    """Ground-state-dominated superposition of the same modes, nodeless."""
    minor = 1.0 / (2.0 * math.sqrt(3.0))
    return WaveState(modes=(
        Mode(1, 1, math.sqrt(3.0) / 2.0, PHASE_11),
        Mode(1, 2, minor, PHASE_12),
        Mode(2, 1, minor, PHASE_21),
        Mode(2, 2, minor, PHASE_22),
    ))


BUILDERS = {"psi1": make_psi1, "psi2": make_psi2}


@dataclass(frozen=True)
class ComplexJet:
    """psi and its spatial derivatives at one point.

    grad   = (d1, d2)
    hess   = (d11, d12, d22)
    third  = (d111, d112, d122, d222)
    Mixed partials are symmetric, so only one entry per multi-index is kept.
    """

    value: complex
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray


@dataclass(frozen=True)
class CurrentJet:
    """Standard probability current and the derivatives the guidance fields use."""

    j: np.ndarray
    div_j: float
    curl_j: float
    grad_div_j: np.ndarray
    grad_curl_j: np.ndarray
    density: float
    grad_density: np.ndarray


def _jet_sum(state: WaveState, x, t: float, energy_weight: float) -> np.ndarray:
    """Mode-sum of the 10 jet entries; energy_weight = k applies (-2E)^k per mode."""
    x1, x2 = float(x[0]), float(x[1])
    out = np.zeros(10, dtype=complex)
    for mode in state.modes:
        m, n = mode.m, mode.n
        coef = mode.amplitude * MODE_NORM * np.exp(1j * (mode.phase - mode.energy * t))
        if energy_weight:
            coef *= (-2.0 * mode.energy) ** energy_weight
        s1, c1 = math.sin(m * x1), math.cos(m * x1)
        s2, c2 = math.sin(n * x2), math.cos(n * x2)
        ss, cs, sc = s1 * s2, c1 * s2, s1 * c2
        out[0] += coef * ss
        out[1] += coef * (m * cs)
        out[2] += coef * (n * sc)
        out[3] += coef * (-m * m * ss)
        out[4] += coef * (m * n * c1 * c2)
        out[5] += coef * (-n * n * ss)
        out[6] += coef * (-m ** 3 * cs)
        out[7] += coef * (-m * m * n * sc)
        out[8] += coef * (-m * n * n * cs)
        out[9] += coef * (-n ** 3 * sc)
    return out


def eval_jet(state: WaveState, x, t: float) -> ComplexJet:
    """Exact value and derivatives of psi at point x and time t."""
    e = _jet_sum(state, x, t, 0)
    return ComplexJet(value=e[0], grad=e[1:3], hess=e[3:6], third=e[6:10])


def _laplacian_jet(state: WaveState, x, t: float) -> ComplexJet:
    """Jet of the Laplacian of psi (each mode scales by -2E, modes being eigenfunctions)."""
    e = _jet_sum(state, x, t, 1)
    return ComplexJet(value=e[0], grad=e[1:3], hess=e[3:6], third=e[6:10])


def _im_prod(a: complex, b: complex) -> float:
    """Im(conj(a) * b)."""
    return (np.conjugate(a) * b).imag


def current_jet(state: WaveState, x, t: float) -> CurrentJet:
    """Standard current j = Im(psi* grad psi) plus div/curl and their gradients."""
    jet = eval_jet(state, x, t)
    p = jet.value
    d1, d2 = jet.grad
    d11, d12, d22 = jet.hess
    d111, d112, d122, d222 = jet.third
    lap = d11 + d22

    density = float(p.real ** 2 + p.imag ** 2)
    j = np.array([_im_prod(p, d1), _im_prod(p, d2)])
    grad_density = 2.0 * np.array([(np.conjugate(p) * d1).real,
                                   (np.conjugate(p) * d2).real])
    div_j = _im_prod(p, lap)
    curl_j = 2.0 * _im_prod(d1, d2)
    grad_div_j = np.array([
        _im_prod(d1, lap) + _im_prod(p, d111 + d122),
        _im_prod(d2, lap) + _im_prod(p, d112 + d222),
    ])
    grad_curl_j = 2.0 * np.array([
        _im_prod(d11, d2) + _im_prod(d1, d12),
        _im_prod(d12, d2) + _im_prod(d1, d22),
    ])
    return CurrentJet(j=j, div_j=float(div_j), curl_j=float(curl_j),
                      grad_div_j=grad_div_j, grad_curl_j=grad_curl_j,
                      density=density, grad_density=grad_density)


def psi_time_derivative(state: WaveState, x, t: float) -> complex:
    """d(psi)/dt at a point, from the mode energies."""
    x1, x2 = float(x[0]), float(x[1])
    out = 0j
    for mode in state.modes:
        coef = mode.amplitude * MODE_NORM * np.exp(1j * (mode.phase - mode.energy * t))
        out += (-1j * mode.energy) * coef * math.sin(mode.m * x1) * math.sin(mode.n * x2)
    return out


def period(state: WaveState) -> float:
    """Smallest tau > 0 with E*tau = 0 mod 2*pi for every mode.

    Energies are half-integers (m^2 + n^2)/2, so tau = 4*pi / gcd(m^2 + n^2).
    """
    doubled = [mode.m ** 2 + mode.n ** 2 for mode in state.modes]
    return 4.0 * math.pi / reduce(math.gcd, doubled)
