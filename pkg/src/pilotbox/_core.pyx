# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory kernel.

Same algorithm as ``_pycore.py`` (mode-sum jets, Cash-Karp 5(4), identical
accept/reject policy), compiled for the inner loops.  The lattice batch runs
the points in parallel with OpenMP; every point is independent and writes
only its own output slot, so results are bit-identical for any thread count.
"""

from libc.math cimport sin, cos, fabs, pow, isfinite
from cython.parallel cimport prange

import numpy as np

KERNEL = "compiled"

cdef double BOX = 3.141592653589793
cdef double BOX_EPS = 1e-12

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_STEP_UNDERFLOW = 2
STATUS_LEFT_BOX = 3

F_NONE = 0
F_DENSITY = 1
F_CURL = 2
F_DIV = 3

cdef enum:
    C_OK = 0
    C_MAX_STEPS = 1
    C_STEP_UNDERFLOW = 2
    C_LEFT_BOX = 3

# Cash-Karp 5(4) tableau.
cdef double A2 = 1.0 / 5.0, A3 = 3.0 / 10.0, A4 = 3.0 / 5.0, A5 = 1.0, A6 = 7.0 / 8.0
cdef double B21 = 1.0 / 5.0
cdef double B31 = 3.0 / 40.0, B32 = 9.0 / 40.0
cdef double B41 = 3.0 / 10.0, B42 = -9.0 / 10.0, B43 = 6.0 / 5.0
cdef double B51 = -11.0 / 54.0, B52 = 5.0 / 2.0, B53 = -70.0 / 27.0, B54 = 35.0 / 27.0
cdef double B61 = 1631.0 / 55296.0, B62 = 175.0 / 512.0, B63 = 575.0 / 13824.0
cdef double B64 = 44275.0 / 110592.0, B65 = 253.0 / 4096.0
cdef double C1 = 37.0 / 378.0, C3 = 250.0 / 621.0, C4 = 125.0 / 594.0, C6 = 512.0 / 1771.0
cdef double D1 = 37.0 / 378.0 - 2825.0 / 27648.0
cdef double D3 = 250.0 / 621.0 - 18575.0 / 48384.0
cdef double D4 = 125.0 / 594.0 - 13525.0 / 55296.0
cdef double D5 = -277.0 / 14336.0
cdef double D6 = 512.0 / 1771.0 - 0.25


cdef struct Field:
    int nmodes
    const int* m
    const int* n
    const double* coef
    const double* theta
    const double* energy
    int mmax
    int nmax
    double mu
    int fchoice
    double floor
    int depth


cdef struct StepCfg:
    double initial_step
    double abs_tol
    double rel_tol
    double safety
    double min_step
    double max_step
    long max_steps


cdef inline void _jet(const Field* f, double x1, double x2, double t, int depth,
                      double* re, double* im) noexcept nogil:
    cdef double s1[33]
    cdef double c1[33]
    cdef double s2[33]
    cdef double c2[33]
    cdef int i, k, m, n, nterms
    cdef double ang, ar, ai, ss, cs, sc, cc, w

    nterms = 3 if depth == 1 else (6 if depth == 2 else 10)
    for i in range(nterms):
        re[i] = 0.0
        im[i] = 0.0
    s1[1] = sin(x1)
    c1[1] = cos(x1)
    s2[1] = sin(x2)
    c2[1] = cos(x2)
    for i in range(2, f.mmax + 1):
        s1[i] = s1[i - 1] * c1[1] + c1[i - 1] * s1[1]
        c1[i] = c1[i - 1] * c1[1] - s1[i - 1] * s1[1]
    for i in range(2, f.nmax + 1):
        s2[i] = s2[i - 1] * c2[1] + c2[i - 1] * s2[1]
        c2[i] = c2[i - 1] * c2[1] - s2[i - 1] * s2[1]

    for k in range(f.nmodes):
        m = f.m[k]
        n = f.n[k]
        ang = f.theta[k] - f.energy[k] * t
        ar = f.coef[k] * cos(ang)
        ai = f.coef[k] * sin(ang)
        ss = s1[m] * s2[n]
        cs = c1[m] * s2[n]
        sc = s1[m] * c2[n]
        re[0] += ar * ss
        im[0] += ai * ss
        w = m * cs
        re[1] += ar * w
        im[1] += ai * w
        w = n * sc
        re[2] += ar * w
        im[2] += ai * w
        if depth >= 2:
            cc = c1[m] * c2[n]
            w = -m * m * ss
            re[3] += ar * w
            im[3] += ai * w
            w = m * n * cc
            re[4] += ar * w
            im[4] += ai * w
            w = -n * n * ss
            re[5] += ar * w
            im[5] += ai * w
        if depth >= 3:
            w = -m * m * m * cs
            re[6] += ar * w
            im[6] += ai * w
            w = -m * m * n * sc
            re[7] += ar * w
            im[7] += ai * w
            w = -m * n * n * cs
            re[8] += ar * w
            im[8] += ai * w
            w = -n * n * n * sc
            re[9] += ar * w
            im[9] += ai * w


cdef inline bint _velocity(const Field* f, double x1, double x2, double t,
                           double* v1, double* v2, double* vs1, double* vs2,
                           double* dens) noexcept nogil:
    cdef double re[10]
    cdef double im[10]
    cdef double d, j1, j2, g1, g2, lr, li
    _jet(f, x1, x2, t, f.depth, re, im)
    d = re[0] * re[0] + im[0] * im[0]
    dens[0] = d
    if not (d >= f.floor) or not isfinite(d):
        return 0
    j1 = re[0] * im[1] - im[0] * re[1]
    j2 = re[0] * im[2] - im[0] * re[2]
    vs1[0] = j1 / d
    vs2[0] = j2 / d
    if f.mu == 0.0 or f.fchoice == 0:
        v1[0] = vs1[0]
        v2[0] = vs2[0]
        return 1
    if f.fchoice == 1:
        g1 = 2.0 * (re[0] * re[1] + im[0] * im[1])
        g2 = 2.0 * (re[0] * re[2] + im[0] * im[2])
    elif f.fchoice == 2:
        g1 = 2.0 * ((re[3] * im[2] - im[3] * re[2]) + (re[1] * im[4] - im[1] * re[4]))
        g2 = 2.0 * ((re[4] * im[2] - im[4] * re[2]) + (re[1] * im[5] - im[1] * re[5]))
    else:
        lr = re[3] + re[5]
        li = im[3] + im[5]
        g1 = (re[1] * li - im[1] * lr) + (re[0] * (im[6] + im[8]) - im[0] * (re[6] + re[8]))
        g2 = (re[2] * li - im[2] * lr) + (re[0] * (im[7] + im[9]) - im[0] * (re[7] + re[9]))
    v1[0] = vs1[0] + f.mu * g2 / d
    v2[0] = vs2[0] - f.mu * g1 / d
    return 1


cdef inline bint _ck_step(const Field* f, double x1, double x2, double t, double h,
                          double* xn1, double* xn2, double* e1, double* e2) noexcept nogil:
    cdef double k11, k12, k21, k22, k31, k32, k41, k42, k51, k52, k61, k62
    cdef double u1, u2, d
    if not _velocity(f, x1, x2, t, &k11, &k12, &u1, &u2, &d):
        return 0
    if not _velocity(f, x1 + h * B21 * k11, x2 + h * B21 * k12, t + A2 * h,
                     &k21, &k22, &u1, &u2, &d):
        return 0
    if not _velocity(f, x1 + h * (B31 * k11 + B32 * k21),
                     x2 + h * (B31 * k12 + B32 * k22), t + A3 * h,
                     &k31, &k32, &u1, &u2, &d):
        return 0
    if not _velocity(f, x1 + h * (B41 * k11 + B42 * k21 + B43 * k31),
                     x2 + h * (B41 * k12 + B42 * k22 + B43 * k32), t + A4 * h,
                     &k41, &k42, &u1, &u2, &d):
        return 0
    if not _velocity(f, x1 + h * (B51 * k11 + B52 * k21 + B53 * k31 + B54 * k41),
                     x2 + h * (B51 * k12 + B52 * k22 + B53 * k32 + B54 * k42), t + A5 * h,
                     &k51, &k52, &u1, &u2, &d):
        return 0
    if not _velocity(f, x1 + h * (B61 * k11 + B62 * k21 + B63 * k31 + B64 * k41 + B65 * k51),
                     x2 + h * (B61 * k12 + B62 * k22 + B63 * k32 + B64 * k42 + B65 * k52),
                     t + A6 * h, &k61, &k62, &u1, &u2, &d):
        return 0
    xn1[0] = x1 + h * (C1 * k11 + C3 * k31 + C4 * k41 + C6 * k61)
    xn2[0] = x2 + h * (C1 * k12 + C3 * k32 + C4 * k42 + C6 * k62)
    e1[0] = h * (D1 * k11 + D3 * k31 + D4 * k41 + D5 * k51 + D6 * k61)
    e2[0] = h * (D1 * k12 + D3 * k32 + D4 * k42 + D5 * k52 + D6 * k62)
    return 1


cdef int _integrate_one(const Field* f, double x01, double x02, double t0, double t1,
                        const StepCfg* cfg, double* xf1, double* xf2,
                        long* steps_out) noexcept nogil:
    cdef double x1 = x01
    cdef double x2 = x02
    cdef double t = t0
    cdef double h, direction, xn1, xn2, e1, e2, sc1, sc2, err
    cdef long steps = 0
    cdef bint ok, end_clamped

    xf1[0] = x1
    xf2[0] = x2
    steps_out[0] = 0
    if t1 == t0:
        return C_OK

    direction = 1.0 if t1 > t0 else -1.0
    h = direction * (cfg.initial_step if cfg.initial_step < cfg.max_step else cfg.max_step)
    while direction * (t1 - t) > 0.0:
        if steps >= cfg.max_steps:
            steps_out[0] = steps
            xf1[0] = x1
            xf2[0] = x2
            return C_MAX_STEPS
        end_clamped = 0
        if direction * (t + h - t1) > 0.0:
            h = t1 - t
            end_clamped = 1
        steps += 1
        ok = _ck_step(f, x1, x2, t, h, &xn1, &xn2, &e1, &e2)
        if ok:
            sc1 = cfg.abs_tol + cfg.rel_tol * fabs(x1)
            sc2 = cfg.abs_tol + cfg.rel_tol * fabs(x2)
            err = fabs(e1) / sc1
            if fabs(e2) / sc2 > err:
                err = fabs(e2) / sc2
            if not isfinite(err) or not isfinite(xn1) or not isfinite(xn2):
                ok = 0
        if not ok:
            if fabs(h) <= cfg.min_step * (1.0 + 1e-12):
                steps_out[0] = steps
                xf1[0] = x1
                xf2[0] = x2
                return C_STEP_UNDERFLOW
            h = 0.5 * h
            if fabs(h) < cfg.min_step:
                h = direction * cfg.min_step
            continue
        if (xn1 < -BOX_EPS or xn1 > BOX + BOX_EPS
                or xn2 < -BOX_EPS or xn2 > BOX + BOX_EPS):
            if fabs(h) <= cfg.min_step * (1.0 + 1e-12):
                steps_out[0] = steps
                xf1[0] = x1
                xf2[0] = x2
                return C_LEFT_BOX
            h = 0.5 * h
            if fabs(h) < cfg.min_step:
                h = direction * cfg.min_step
            continue
        if err <= 1.0:
            x1 = xn1
            x2 = xn2
            t = t1 if end_clamped else t + h
            if err == 0.0:
                h = direction * cfg.max_step
            else:
                h = cfg.safety * h * pow(err, -0.2)
                if fabs(h) > cfg.max_step:
                    h = direction * cfg.max_step
                elif fabs(h) < cfg.min_step:
                    h = direction * cfg.min_step
        else:
            if fabs(h) <= cfg.min_step * (1.0 + 1e-12):
                steps_out[0] = steps
                xf1[0] = x1
                xf2[0] = x2
                return C_STEP_UNDERFLOW
            h = cfg.safety * h * pow(err, -0.25)
            if fabs(h) < cfg.min_step:
                h = direction * cfg.min_step

    steps_out[0] = steps
    xf1[0] = x1
    xf2[0] = x2
    if not (0.0 < x1 < BOX and 0.0 < x2 < BOX):
        return C_LEFT_BOX
    return C_OK


cdef int _depth_for(double mu, int fchoice) noexcept nogil:
    if mu == 0.0 or fchoice == 0:
        return 1
    if fchoice == 1:
        return 1
    if fchoice == 2:
        return 2
    return 3


cdef Field _make_field(const int[:] mj, const int[:] nj, const double[:] coef,
                       const double[:] theta, const double[:] energy,
                       double mu, int fchoice, double floor) noexcept nogil:
    cdef Field f
    cdef int k
    f.nmodes = <int> mj.shape[0]
    f.m = &mj[0]
    f.n = &nj[0]
    f.coef = &coef[0]
    f.theta = &theta[0]
    f.energy = &energy[0]
    f.mmax = 1
    f.nmax = 1
    for k in range(f.nmodes):
        if mj[k] > f.mmax:
            f.mmax = mj[k]
        if nj[k] > f.nmax:
            f.nmax = nj[k]
    f.mu = mu
    f.fchoice = fchoice
    f.floor = floor
    f.depth = _depth_for(mu, fchoice)
    return f


def integrate_one(const int[:] mj, const int[:] nj, const double[:] coef,
                  const double[:] theta, const double[:] energy,
                  double mu, int fchoice, double floor,
                  double x01, double x02, double t0, double t1,
                  double initial_step, double abs_tol, double rel_tol,
                  double safety, double min_step, double max_step, long max_steps):
    cdef Field f = _make_field(mj, nj, coef, theta, energy, mu, fchoice, floor)
    cdef StepCfg cfg
    cfg.initial_step = initial_step
    cfg.abs_tol = abs_tol
    cfg.rel_tol = rel_tol
    cfg.safety = safety
    cfg.min_step = min_step
    cfg.max_step = max_step
    cfg.max_steps = max_steps
    cdef double xf1 = 0.0, xf2 = 0.0
    cdef long steps = 0
    cdef int status
    with nogil:
        status = _integrate_one(&f, x01, x02, t0, t1, &cfg, &xf1, &xf2, &steps)
    return xf1, xf2, status, steps


def backtrack_batch(const int[:] mj, const int[:] nj, const double[:] coef,
                    const double[:] theta, const double[:] energy,
                    double mu, int fchoice, double floor,
                    const double[:, ::1] pts, double t0, double t1,
                    double initial_step, double abs_tol, double rel_tol,
                    double safety, double min_step, double max_step, long max_steps,
                    int nthreads=1):
    cdef Field f = _make_field(mj, nj, coef, theta, energy, mu, fchoice, floor)
    cdef StepCfg cfg
    cfg.initial_step = initial_step
    cfg.abs_tol = abs_tol
    cfg.rel_tol = rel_tol
    cfg.safety = safety
    cfg.min_step = min_step
    cfg.max_step = max_step
    cfg.max_steps = max_steps

    cdef Py_ssize_t n = pts.shape[0]
    out = np.empty((n, 2))
    status = np.empty(n, dtype=np.int32)
    steps = np.empty(n, dtype=np.int64)
    cdef double[:, ::1] vout = out
    cdef int[:] vstatus = status
    cdef long[:] vsteps = steps
    cdef Py_ssize_t i
    cdef double xf1, xf2
    cdef long ns
    cdef int nt = nthreads if nthreads > 0 else 1

    with nogil:
        for i in prange(n, schedule='dynamic', chunksize=32, num_threads=nt):
            xf1 = 0.0
            xf2 = 0.0
            ns = 0
            vstatus[i] = <int> _integrate_one(&f, pts[i, 0], pts[i, 1], t0, t1,
                                              &cfg, &xf1, &xf2, &ns)
            vout[i, 0] = xf1
            vout[i, 1] = xf2
            vsteps[i] = ns
    return out, status, steps


def velocity_eval(const int[:] mj, const int[:] nj, const double[:] coef,
                  const double[:] theta, const double[:] energy,
                  double mu, int fchoice, double floor,
                  double x1, double x2, double t):
    cdef Field f = _make_field(mj, nj, coef, theta, energy, mu, fchoice, floor)
    cdef double v1 = 0.0, v2 = 0.0, vs1 = 0.0, vs2 = 0.0, dens = 0.0
    cdef bint ok
    ok = _velocity(&f, x1, x2, t, &v1, &v2, &vs1, &vs2, &dens)
    return v1, v2, vs1, vs2, dens, bool(ok)


def jet_eval(const int[:] mj, const int[:] nj, const double[:] coef,
             const double[:] theta, const double[:] energy,
             double x1, double x2, double t):
    cdef Field f = _make_field(mj, nj, coef, theta, energy, 0.0, 0, 0.0)
    cdef double re[10]
    cdef double im[10]
    _jet(&f, x1, x2, t, 3, re, im)
    return np.array([complex(re[i], im[i]) for i in range(10)])
