# cython: language_level=3
"""Compiled hot kernels: RK4 rollouts, Bellman sweeps, interval enclosures.

Same contracts as optrta._pykernels; see that module for documentation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan2, sqrt, ceil, floor, fabs, nextafter, isfinite, INFINITY, M_PI

cnp.import_array()

DEF MAXD = 6

cdef double TWO_PI = 2.0 * M_PI


cdef inline double _dn(double x) nogil:
    return nextafter(x, -INFINITY)


cdef inline double _up(double x) nogil:
    return nextafter(x, INFINITY)


cdef inline double wrap(double a) nogil:
    if a > M_PI or a <= -M_PI:
        a = a - TWO_PI * ceil((a - M_PI) / TWO_PI)
    return a


cdef inline void f_eval(int model, double* s, double* u, double* out) nogil:
    cdef double v, cg
    if model == 0:
        out[0] = s[1]
        out[1] = u[0]
    elif model == 1:
        v = s[3]
        out[0] = v * cos(s[2])
        out[1] = v * sin(s[2])
        out[2] = u[0]
        out[3] = u[1]
    else:
        v = s[5]
        cg = cos(s[4])
        out[0] = v * cos(s[3]) * cg
        out[1] = v * sin(s[3]) * cg
        out[2] = v * sin(s[4])
        out[3] = u[0]
        out[4] = u[1]
        out[5] = u[2]


def derivative(int model, state, u):
    cdef double s[MAXD]
    cdef double uu[MAXD]
    cdef double out[MAXD]
    cdef int n = len(state), i
    for i in range(n):
        s[i] = state[i]
    for i in range(len(u)):
        uu[i] = u[i]
    f_eval(model, s, uu, out)
    return np.array([out[i] for i in range(n)])


def rk4(int model, state, u, double dt, int steps):
    cdef double s[MAXD]
    cdef double tmp[MAXD]
    cdef double uu[MAXD]
    cdef double k1[MAXD]
    cdef double k2[MAXD]
    cdef double k3[MAXD]
    cdef double k4[MAXD]
    cdef int n = len(state), i, step
    cdef int bad = -1
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    for i in range(n):
        s[i] = state[i]
    for i in range(len(u)):
        uu[i] = u[i]
    with nogil:
        for step in range(steps):
            f_eval(model, s, uu, k1)
            for i in range(n):
                tmp[i] = s[i] + half * k1[i]
            f_eval(model, tmp, uu, k2)
            for i in range(n):
                tmp[i] = s[i] + half * k2[i]
            f_eval(model, tmp, uu, k3)
            for i in range(n):
                tmp[i] = s[i] + dt * k3[i]
            f_eval(model, tmp, uu, k4)
            for i in range(n):
                s[i] = s[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if model == 1:
                s[2] = wrap(s[2])
            elif model == 2:
                s[3] = wrap(s[3])
                s[4] = wrap(s[4])
            for i in range(n):
                if not isfinite(s[i]):
                    bad = step + 1
                    break
            if bad >= 0:
                break
    return np.array([s[i] for i in range(n)]), bad


def value_iteration_det(const cnp.int64_t[:, ::1] nxt, const double[:, ::1] rew, double gamma, double thr, long max_iter):
    cdef Py_ssize_t n = rew.shape[0], m = rew.shape[1], s, a
    cdef cnp.ndarray[double, ndim=1] v_arr = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] vn_arr = np.zeros(n)
    cdef cnp.ndarray[double, ndim=2] q_arr = np.zeros((n, m))
    cdef double[::1] v = v_arr
    cdef double[::1] vn = vn_arr
    cdef double[:, ::1] q = q_arr
    cdef double best, val, residual = INFINITY, d
    cdef long it = 0
    with nogil:
        while it < max_iter:
            residual = 0.0
            for s in range(n):
                best = -INFINITY
                for a in range(m):
                    val = rew[s, a] + gamma * v[nxt[s, a]]
                    q[s, a] = val
                    if val > best:
                        best = val
                vn[s] = best
            for s in range(n):
                d = fabs(vn[s] - v[s])
                if d > residual:
                    residual = d
                v[s] = vn[s]
            it += 1
            if residual <= thr:
                break
    return v_arr, q_arr, it, residual


def value_iteration_prob(const double[:, :, ::1] P, const double[:, ::1] rew, double gamma, double thr, long max_iter):
    cdef Py_ssize_t n = rew.shape[0], m = rew.shape[1], s, a, t
    cdef cnp.ndarray[double, ndim=1] v_arr = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] vn_arr = np.zeros(n)
    cdef cnp.ndarray[double, ndim=2] q_arr = np.zeros((n, m))
    cdef double[::1] v = v_arr
    cdef double[::1] vn = vn_arr
    cdef double[:, ::1] q = q_arr
    cdef double best, val, acc, residual = INFINITY, d
    cdef long it = 0
    with nogil:
        while it < max_iter:
            residual = 0.0
            for s in range(n):
                best = -INFINITY
                for a in range(m):
                    acc = 0.0
                    for t in range(n):
                        acc = acc + P[s, a, t] * v[t]
                    val = rew[s, a] + gamma * acc
                    q[s, a] = val
                    if val > best:
                        best = val
                vn[s] = best
            for s in range(n):
                d = fabs(vn[s] - v[s])
                if d > residual:
                    residual = d
                v[s] = vn[s]
            it += 1
            if residual <= thr:
                break
    return v_arr, q_arr, it, residual


# ---------------------------------------------------------------- intervals

cdef inline void imul(double al, double ah, double bl, double bh, double* rl, double* rh) nogil:
    cdef double p1 = al * bl, p2 = al * bh, p3 = ah * bl, p4 = ah * bh
    cdef double lo = p1, hi = p1
    if p2 < lo: lo = p2
    if p3 < lo: lo = p3
    if p4 < lo: lo = p4
    if p2 > hi: hi = p2
    if p3 > hi: hi = p3
    if p4 > hi: hi = p4
    rl[0] = _dn(lo)
    rh[0] = _up(hi)


cdef inline void icos(double lo, double hi, double* rl, double* rh) nogil:
    cdef double c1, c2, a, b
    cdef long m, m_lo, m_hi
    if not (isfinite(lo) and isfinite(hi)) or hi - lo >= TWO_PI:
        rl[0] = -1.0
        rh[0] = 1.0
        return
    c1 = cos(lo)
    c2 = cos(hi)
    a = c1 if c1 < c2 else c2
    b = c2 if c1 < c2 else c1
    a = _dn(_dn(a))
    b = _up(_up(b))
    m_lo = <long>ceil(lo / M_PI - 1e-12)
    m_hi = <long>floor(hi / M_PI + 1e-12)
    m = m_lo
    while m <= m_hi:
        if m % 2 == 0:
            b = 1.0
        else:
            a = -1.0
        m += 1
    rl[0] = a if a > -1.0 else -1.0
    rh[0] = b if b < 1.0 else 1.0


cdef inline void isin(double lo, double hi, double* rl, double* rh) nogil:
    cdef double hp_lo = _dn(M_PI / 2), hp_hi = _up(M_PI / 2)
    icos(_dn(lo - hp_hi), _up(hi - hp_lo), rl, rh)


cdef void F_eval(int model, double* xl, double* xh, double* ul, double* uh, double* fl, double* fh) nogil:
    cdef double cl, ch, sl, sh, gl, gh, tl, th
    if model == 0:
        fl[0] = xl[1]; fh[0] = xh[1]
        fl[1] = ul[0]; fh[1] = uh[0]
    elif model == 1:
        icos(xl[2], xh[2], &cl, &ch)
        isin(xl[2], xh[2], &sl, &sh)
        imul(xl[3], xh[3], cl, ch, &fl[0], &fh[0])
        imul(xl[3], xh[3], sl, sh, &fl[1], &fh[1])
        fl[2] = ul[0]; fh[2] = uh[0]
        fl[3] = ul[1]; fh[3] = uh[1]
    else:
        icos(xl[4], xh[4], &gl, &gh)
        icos(xl[3], xh[3], &cl, &ch)
        imul(xl[5], xh[5], cl, ch, &tl, &th)
        imul(tl, th, gl, gh, &fl[0], &fh[0])
        isin(xl[3], xh[3], &sl, &sh)
        imul(xl[5], xh[5], sl, sh, &tl, &th)
        imul(tl, th, gl, gh, &fl[1], &fh[1])
        isin(xl[4], xh[4], &sl, &sh)
        imul(xl[5], xh[5], sl, sh, &fl[2], &fh[2])
        fl[3] = ul[0]; fh[3] = uh[0]
        fl[4] = ul[1]; fh[4] = uh[1]
        fl[5] = ul[2]; fh[5] = uh[2]


cdef inline void sweep(int n, double* xl, double* xh, double* fl, double* fh, double h, double* cl, double* ch) nogil:
    cdef int i
    cdef double t
    for i in range(n):
        t = _dn(h * fl[i])
        cl[i] = _dn(xl[i] + (t if t < 0.0 else 0.0))
        t = _up(h * fh[i])
        ch[i] = _up(xh[i] + (t if t > 0.0 else 0.0))


def enclose_period(int model, lo, hi, ulo, uhi, double h, int nsub, double pad):
    cdef double xl[MAXD]
    cdef double xh[MAXD]
    cdef double ul[MAXD]
    cdef double uh[MAXD]
    cdef double fl[MAXD]
    cdef double fh[MAXD]
    cdef double bl[MAXD]
    cdef double bh[MAXD]
    cdef double cl[MAXD]
    cdef double ch[MAXD]
    cdef int n = len(lo), i, k, attempt
    cdef bint ok = True, inside
    cdef double w
    for i in range(n):
        xl[i] = lo[i]
        xh[i] = hi[i]
    for i in range(len(ulo)):
        ul[i] = ulo[i]
        uh[i] = uhi[i]
    with nogil:
        for k in range(nsub):
            F_eval(model, xl, xh, ul, uh, fl, fh)
            sweep(n, xl, xh, fl, fh, h, bl, bh)
            for i in range(n):
                w = bh[i] - bl[i]
                bl[i] = bl[i] - 0.1 * w - pad
                bh[i] = bh[i] + 0.1 * w + pad
            inside = False
            for attempt in range(12):
                F_eval(model, bl, bh, ul, uh, fl, fh)
                sweep(n, xl, xh, fl, fh, h, cl, ch)
                inside = True
                for i in range(n):
                    if not (bl[i] <= cl[i] and ch[i] <= bh[i]):
                        inside = False
                        break
                if inside:
                    break
                for i in range(n):
                    if bl[i] <= cl[i] and ch[i] <= bh[i]:
                        continue
                    if cl[i] < bl[i]:
                        bl[i] = cl[i]
                    if ch[i] > bh[i]:
                        bh[i] = ch[i]
                    w = bh[i] - bl[i]
                    bl[i] = bl[i] - 0.1 * w - pad
                    bh[i] = bh[i] + 0.1 * w + pad
            if not inside:
                ok = False
                break
            for i in range(n):
                xl[i] = _dn(_dn(xl[i] + _dn(h * fl[i])) - pad)
                xh[i] = _up(_up(xh[i] + _up(h * fh[i])) + pad)
                if not (isfinite(xl[i]) and isfinite(xh[i])):
                    ok = False
            if not ok:
                break
    return np.array([xl[i] for i in range(n)]), np.array([xh[i] for i in range(n)]), bool(ok)
