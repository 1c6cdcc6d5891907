"""Locating and tracking the moving zeros of the wavefunction.

A node is an isolated point where Re(psi) and Im(psi) vanish together
transversally.  States that are a single eigenmode (or any global phase
times a real profile) have line zeros instead, which are deliberately not
reported: the Newton Jacobian is singular there and the transversality
check rejects such roots.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .wavefield import BOX_SIDE, WaveState, eval_jet

_CONVERGED = 1e-12
_DEDUPE = 1e-6
_WALL_CLEARANCE = 1e-6
_MAX_ITER = 50


@dataclass(frozen=True)
class NodePath:
    """Samples (t, x) of one tracked node."""

    times: np.ndarray           # (k,)
    points: np.ndarray          # (k, 2)
    state_id: str = ""

    def __len__(self) -> int:
        return self.times.size


def _psi_and_jacobian(state: WaveState, x, t: float):
    jet = eval_jet(state, x, t)
    f = np.array([jet.value.real, jet.value.imag])
    jac = np.array([[jet.grad[0].real, jet.grad[1].real],
                    [jet.grad[0].imag, jet.grad[1].imag]])
    return f, jac


def _newton(state: WaveState, x0, t: float):
    """Damped 2D Newton on (Re psi, Im psi); returns the root or None."""
    x = np.asarray(x0, dtype=float).copy()
    f, jac = _psi_and_jacobian(state, x, t)
    norm = math.hypot(f[0], f[1])
    for _ in range(_MAX_ITER):
        if norm < _CONVERGED:
            break
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        grad_scale = float(np.sum(jac ** 2))
        if abs(det) <= 1e-9 * max(grad_scale, 1e-30):
            return None  # degenerate zero (line zero or saddle), not an isolated node
        step = np.linalg.solve(jac, -f)
        x_new = x + step
        f_new, jac_new = _psi_and_jacobian(state, x_new, t)
        norm_new = math.hypot(f_new[0], f_new[1])
        while norm_new >= norm and np.linalg.norm(step) > 1e-15:
            step = 0.5 * step
            x_new = x + step
            f_new, jac_new = _psi_and_jacobian(state, x_new, t)
            norm_new = math.hypot(f_new[0], f_new[1])
        if norm_new >= norm:
            return None
        x, f, jac, norm = x_new, f_new, jac_new, norm_new
    if norm >= _CONVERGED:
        return None
    if not (_WALL_CLEARANCE < x[0] < BOX_SIDE - _WALL_CLEARANCE
            and _WALL_CLEARANCE < x[1] < BOX_SIDE - _WALL_CLEARANCE):
        return None
    # transversality at the root
    _, jac = _psi_and_jacobian(state, x, t)
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if abs(det) <= 1e-9 * max(float(np.sum(jac ** 2)), 1e-30):
        return None
    return x


def find_nodes(state: WaveState, t: float, seed_resolution: int = 64) -> list[np.ndarray]:
    """All isolated nodes at time t, from sign-change seeding plus Newton."""
    if seed_resolution < 32:
        raise ValueError("seed_resolution must be >= 32")
    edge = BOX_SIDE / (2 * seed_resolution)
    xs = np.linspace(edge, BOX_SIDE - edge, seed_resolution + 1)
    psi = state.psi_grid(xs, xs, t)
    re, im = psi.real, psi.imag

    def changes(sign_grid):
        corners = np.stack([sign_grid[:-1, :-1], sign_grid[1:, :-1],
                            sign_grid[:-1, 1:], sign_grid[1:, 1:]])
        return (corners.min(axis=0) <= 0.0) & (corners.max(axis=0) >= 0.0)

    cells = changes(re) & changes(im)
    roots: list[np.ndarray] = []
    seeds = np.argwhere(cells)
    for i, j in seeds:
        center = np.array([0.5 * (xs[i] + xs[i + 1]), 0.5 * (xs[j] + xs[j + 1])])
        root = _newton(state, center, t)
        if root is None:
            continue
        if all(np.linalg.norm(root - r) > _DEDUPE for r in roots):
            roots.append(root)
    if len(seeds) > 0 and not roots:
        # Sign changes without any converged isolated root: either a line
        # zero (degenerate by design) or a genuinely missed node.
        warnings.warn(f"sign-change cells at t={t} produced no isolated node",
                      stacklevel=2)
    return roots


def track_node(state: WaveState, t0: float, t1: float, dt: float,
               state_id: str = "") -> NodePath:
    """Follow a single node from t0 to t1 by Newton continuation.

    Requires exactly one node at t0.  If continuation loses the node and a
    global re-search does not find exactly one again, the path stops there
    with a warning.
    """
    start = find_nodes(state, t0)
    if len(start) != 1:
        raise ValueError(f"expected exactly one node at t={t0}, found {len(start)}")
    times = [t0]
    points = [start[0]]
    steps = int(round((t1 - t0) / dt))
    for k in range(1, steps + 1):
        t = t0 + k * dt
        root = _newton(state, points[-1], t)
        if root is None:
            found = find_nodes(state, t)
            if len(found) != 1:
                warnings.warn(f"node count changed to {len(found)} at t={t}; "
                              f"stopping the path there", stacklevel=2)
                break
            root = found[0]
        times.append(t)
        points.append(root)
    return NodePath(times=np.array(times), points=np.array(points), state_id=state_id)


def save_node_path(path: NodePath, file) -> None:
    """Write (t, x1, x2) rows as plain text."""
    data = np.column_stack([path.times, path.points])
    np.savetxt(file, data, fmt="%.17g", header="t x1 x2")
