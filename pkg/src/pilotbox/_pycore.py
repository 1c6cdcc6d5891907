"""Pure-Python trajectory kernel.

Mirror of the compiled kernel in ``_core.pyx``: same mode-sum jet
evaluation, same Cash-Karp embedded pair, same accept/reject policy.  It is
the import-time fallback when the extension is unavailable, and the slow
half of the engine benchmark.  Scalar math throughout; anything vectorized
lives in the higher-level modules.
"""

from __future__ import annotations

import math

import numpy as np

KERNEL = "python"

BOX = math.pi
BOX_EPS = 1e-12

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_STEP_UNDERFLOW = 2
STATUS_LEFT_BOX = 3

F_NONE = 0
F_DENSITY = 1
F_CURL = 2
F_DIV = 3

# Cash-Karp 5(4) tableau.
A2, A3, A4, A5, A6 = 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8
B21 = 1 / 5
B31, B32 = 3 / 40, 9 / 40
B41, B42, B43 = 3 / 10, -9 / 10, 6 / 5
B51, B52, B53, B54 = -11 / 54, 5 / 2, -70 / 27, 35 / 27
B61, B62, B63, B64, B65 = 1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096
C1, C3, C4, C6 = 37 / 378, 250 / 621, 125 / 594, 512 / 1771
# c - c*: weights of the 5th-minus-4th order error estimate.
D1 = C1 - 2825 / 27648
D3 = C3 - 18575 / 48384
D4 = C4 - 13525 / 55296
D5 = -277 / 14336
D6 = C6 - 1 / 4


def _depth_for(mu: float, fchoice: int) -> int:
    if mu == 0.0 or fchoice == F_NONE:
        return 1
    if fchoice == F_DENSITY:
        return 1
    if fchoice == F_CURL:
        return 2
    return 3


def _jet(mj, nj, coef, theta, energy, x1, x2, t, depth):
    """Jet entries of psi as (re, im) lists, to the requested derivative depth.

    Order: value, d1, d2 [, d11, d12, d22 [, d111, d112, d122, d222]].
    """
    nterms = (3, 6, 10)[depth - 1]
    re = [0.0] * nterms
    im = [0.0] * nterms
    mmax = int(max(mj))
    nmax = int(max(nj))
    s1 = [0.0] * (mmax + 1)
    c1 = [1.0] * (mmax + 1)
    s2 = [0.0] * (nmax + 1)
    c2 = [1.0] * (nmax + 1)
    s1[1] = math.sin(x1)
    c1[1] = math.cos(x1)
    s2[1] = math.sin(x2)
    c2[1] = math.cos(x2)
    for k in range(2, mmax + 1):
        s1[k] = s1[k - 1] * c1[1] + c1[k - 1] * s1[1]
        c1[k] = c1[k - 1] * c1[1] - s1[k - 1] * s1[1]
    for k in range(2, nmax + 1):
        s2[k] = s2[k - 1] * c2[1] + c2[k - 1] * s2[1]
        c2[k] = c2[k - 1] * c2[1] - s2[k - 1] * s2[1]

    for k in range(len(mj)):
        m = int(mj[k])
        n = int(nj[k])
        ang = theta[k] - energy[k] * t
        ar = coef[k] * math.cos(ang)
        ai = coef[k] * math.sin(ang)
        ss = s1[m] * s2[n]
        cs = c1[m] * s2[n]
        sc = s1[m] * c2[n]
        re[0] += ar * ss
        im[0] += ai * ss
        re[1] += ar * m * cs
        im[1] += ai * m * cs
        re[2] += ar * n * sc
        im[2] += ai * n * sc
        if depth >= 2:
            cc = c1[m] * c2[n]
            re[3] += ar * (-m * m) * ss
            im[3] += ai * (-m * m) * ss
            re[4] += ar * (m * n) * cc
            im[4] += ai * (m * n) * cc
            re[5] += ar * (-n * n) * ss
            im[5] += ai * (-n * n) * ss
        if depth >= 3:
            re[6] += ar * (-m ** 3) * cs
            im[6] += ai * (-m ** 3) * cs
            re[7] += ar * (-m * m * n) * sc
            im[7] += ai * (-m * m * n) * sc
            re[8] += ar * (-m * n * n) * cs
            im[8] += ai * (-m * n * n) * cs
            re[9] += ar * (-n ** 3) * sc
            im[9] += ai * (-n ** 3) * sc
    return re, im


def _velocity(mj, nj, coef, theta, energy, mu, fchoice, floor, x1, x2, t):
    """Total and standard velocity at one point.

    Returns (ok, v1, v2, vs1, vs2, density); ok is False at node
    singularities (density under the floor) or non-finite input.
    """
    depth = _depth_for(mu, fchoice)
    re, im = _jet(mj, nj, coef, theta, energy, x1, x2, t, depth)
    dens = re[0] * re[0] + im[0] * im[0]
    if not (dens >= floor) or not math.isfinite(dens):
        return False, 0.0, 0.0, 0.0, 0.0, dens
    # j_k = Im(psi* dk psi)
    j1 = re[0] * im[1] - im[0] * re[1]
    j2 = re[0] * im[2] - im[0] * re[2]
    vs1 = j1 / dens
    vs2 = j2 / dens
    if mu == 0.0 or fchoice == F_NONE:
        return True, vs1, vs2, vs1, vs2, dens
    if fchoice == F_DENSITY:
        g1 = 2.0 * (re[0] * re[1] + im[0] * im[1])
        g2 = 2.0 * (re[0] * re[2] + im[0] * im[2])
    elif fchoice == F_CURL:
        # curl j = 2 Im(d1* d2); gradient needs second derivatives
        g1 = 2.0 * ((re[3] * im[2] - im[3] * re[2]) + (re[1] * im[4] - im[1] * re[4]))
        g2 = 2.0 * ((re[4] * im[2] - im[4] * re[2]) + (re[1] * im[5] - im[1] * re[5]))
    else:
        # div j = Im(psi* lap psi); gradient needs third derivatives
        lr = re[3] + re[5]
        li = im[3] + im[5]
        g1 = (re[1] * li - im[1] * lr) + (re[0] * (im[6] + im[8]) - im[0] * (re[6] + re[8]))
        g2 = (re[2] * li - im[2] * lr) + (re[0] * (im[7] + im[9]) - im[0] * (re[7] + re[9]))
    v1 = vs1 + mu * g2 / dens
    v2 = vs2 - mu * g1 / dens
    return True, v1, v2, vs1, vs2, dens


def _ck_step(mj, nj, coef, theta, energy, mu, fchoice, floor, x1, x2, t, h):
    """One Cash-Karp step. Returns (ok, xn1, xn2, err1, err2)."""
    ok, k11, k12, _, _, _ = _velocity(mj, nj, coef, theta, energy, mu, fchoice, floor, x1, x2, t)
    if not ok:
        return False, 0.0, 0.0, 0.0, 0.0
    ok, k21, k22, _, _, _ = _velocity(mj, nj, coef, theta, energy, mu, fchoice, floor,
                                      x1 + h * B21 * k11, x2 + h * B21 * k12, t + A2 * h)
    if not ok:
        return False, 0.0, 0.0, 0.0, 0.0
    ok, k31, k32, _, _, _ = _velocity(mj, nj, coef, theta, energy, mu, fchoice, floor,
                                      x1 + h * (B31 * k11 + B32 * k21),
                                      x2 + h * (B31 * k12 + B32 * k22), t + A3 * h)
    if not ok:
        return False, 0.0, 0.0, 0.0, 0.0
    ok, k41, k42, _, _, _ = _velocity(mj, nj, coef, theta, energy, mu, fchoice, floor,
                                      x1 + h * (B41 * k11 + B42 * k21 + B43 * k31),
                                      x2 + h * (B41 * k12 + B42 * k22 + B43 * k32), t + A4 * h)
    if not ok:
        return False, 0.0, 0.0, 0.0, 0.0
    ok, k51, k52, _, _, _ = _velocity(mj, nj, coef, theta, energy, mu, fchoice, floor,
                                      x1 + h * (B51 * k11 + B52 * k21 + B53 * k31 + B54 * k41),
                                      x2 + h * (B51 * k12 + B52 * k22 + B53 * k32 + B54 * k42),
                                      t + A5 * h)
    if not ok:
        return False, 0.0, 0.0, 0.0, 0.0
    ok, k61, k62, _, _, _ = _velocity(mj, nj, coef, theta, energy, mu, fchoice, floor,
                                      x1 + h * (B61 * k11 + B62 * k21 + B63 * k31 + B64 * k41 + B65 * k51),
                                      x2 + h * (B61 * k12 + B62 * k22 + B63 * k32 + B64 * k42 + B65 * k52),
                                      t + A6 * h)
    if not ok:
        return False, 0.0, 0.0, 0.0, 0.0
    xn1 = x1 + h * (C1 * k11 + C3 * k31 + C4 * k41 + C6 * k61)
    xn2 = x2 + h * (C1 * k12 + C3 * k32 + C4 * k42 + C6 * k62)
    err1 = h * (D1 * k11 + D3 * k31 + D4 * k41 + D5 * k51 + D6 * k61)
    err2 = h * (D1 * k12 + D3 * k32 + D4 * k42 + D5 * k52 + D6 * k62)
    return True, xn1, xn2, err1, err2


def integrate_one(mj, nj, coef, theta, energy, mu, fchoice, floor,
                  x01, x02, t0, t1,
                  initial_step, abs_tol, rel_tol, safety, min_step, max_step,
                  max_steps):
    """Adaptive integration of one trajectory from (x0, t0) to t1.

    Returns (x1, x2, status, attempted_steps).  Steps are counted whether
    accepted or rejected; the node/box failure policy is: reject and shrink,
    report only when the step is already at min_step.
    """
    x1, x2 = x01, x02
    if t1 == t0:
        return x1, x2, STATUS_OK, 0
    direction = 1.0 if t1 > t0 else -1.0
    h = direction * min(initial_step, max_step)
    t = t0
    steps = 0
    while direction * (t1 - t) > 0.0:
        if steps >= max_steps:
            return x1, x2, STATUS_MAX_STEPS, steps
        end_clamped = False
        if direction * (t + h - t1) > 0.0:
            h = t1 - t
            end_clamped = True
        steps += 1
        ok, xn1, xn2, e1, e2 = _ck_step(mj, nj, coef, theta, energy, mu, fchoice, floor,
                                        x1, x2, t, h)
        if ok:
            sc1 = abs_tol + rel_tol * abs(x1)
            sc2 = abs_tol + rel_tol * abs(x2)
            err = max(abs(e1) / sc1, abs(e2) / sc2)
            if not math.isfinite(err) or not math.isfinite(xn1) or not math.isfinite(xn2):
                ok = False
        if not ok:
            if abs(h) <= min_step * (1.0 + 1e-12):
                return x1, x2, STATUS_STEP_UNDERFLOW, steps
            h = 0.5 * h
            if abs(h) < min_step:
                h = direction * min_step
            continue
        if (xn1 < -BOX_EPS or xn1 > BOX + BOX_EPS
                or xn2 < -BOX_EPS or xn2 > BOX + BOX_EPS):
            if abs(h) <= min_step * (1.0 + 1e-12):
                return x1, x2, STATUS_LEFT_BOX, steps
            h = 0.5 * h
            if abs(h) < min_step:
                h = direction * min_step
            continue
        if err <= 1.0:
            x1, x2 = xn1, xn2
            t = t1 if end_clamped else t + h
            if err == 0.0:
                h = direction * max_step
            else:
                h = safety * h * err ** -0.2
                if abs(h) > max_step:
                    h = direction * max_step
                elif abs(h) < min_step:
                    h = direction * min_step
        else:
            if abs(h) <= min_step * (1.0 + 1e-12):
                return x1, x2, STATUS_STEP_UNDERFLOW, steps
            h = safety * h * err ** -0.25
            if abs(h) < min_step:
                h = direction * min_step
    if not (0.0 < x1 < BOX and 0.0 < x2 < BOX):
        return x1, x2, STATUS_LEFT_BOX, steps
    return x1, x2, STATUS_OK, steps


def backtrack_batch(mj, nj, coef, theta, energy, mu, fchoice, floor,
                    pts, t0, t1,
                    initial_step, abs_tol, rel_tol, safety, min_step, max_step,
                    max_steps, nthreads=0):
    """Integrate every row of pts from t0 to t1 (nthreads ignored here)."""
    n = pts.shape[0]
    out = np.empty((n, 2))
    status = np.empty(n, dtype=np.int32)
    steps = np.empty(n, dtype=np.int64)
    for i in range(n):
        x1, x2, st, ns = integrate_one(mj, nj, coef, theta, energy, mu, fchoice, floor,
                                       pts[i, 0], pts[i, 1], t0, t1,
                                       initial_step, abs_tol, rel_tol, safety,
                                       min_step, max_step, max_steps)
        out[i, 0] = x1
        out[i, 1] = x2
        status[i] = st
        steps[i] = ns
    return out, status, steps


def velocity_eval(mj, nj, coef, theta, energy, mu, fchoice, floor, x1, x2, t):
    """Engine-level velocity sample: (v1, v2, vs1, vs2, density, ok)."""
    ok, v1, v2, vs1, vs2, dens = _velocity(mj, nj, coef, theta, energy,
                                           mu, fchoice, floor, x1, x2, t)
    return v1, v2, vs1, vs2, dens, ok


def jet_eval(mj, nj, coef, theta, energy, x1, x2, t):
    """Full 10-entry complex jet as a numpy array (cross-validation hook)."""
    re, im = _jet(mj, nj, coef, theta, energy, x1, x2, t, 3)
    return np.array([complex(a, b) for a, b in zip(re, im)])
