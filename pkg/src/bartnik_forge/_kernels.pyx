# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled radial march u' = sqrt(V(u)) for the analytic profile presets."""

from libc.math cimport sqrt, fabs
import numpy as np


cdef inline double _x(int kind, double p0, double p1, double u) noexcept nogil:
    if kind == 0:
        return p0
    elif kind == 1:
        return p0 / sqrt(u)
    elif kind == 2:
        return p0 * u - p1 / (u * u)
    return p0 * sqrt(2.0 / u)


cdef inline double _v(int kind, double p0, double p1, double m, double u) noexcept nogil:
    cdef double x
    if u <= 0.0:
        return -1.0
    x = _x(kind, p0, p1, u)
    return 1.0 - 2.0 * m / u + x * x


cdef int _rk4(int kind, double p0, double p1, double m, double u, double h,
              long nsub, double* out) noexcept nogil:
    # accumulates the increment over the step separately from u
    cdef double dt = h / nsub
    cdef double k1, k2, k3, k4, v, du = 0.0
    cdef long i
    for i in range(nsub):
        v = _v(kind, p0, p1, m, u + du)
        if v <= 0.0:
            return 1
        k1 = sqrt(v)
        v = _v(kind, p0, p1, m, u + du + 0.5 * dt * k1)
        if v <= 0.0:
            return 1
        k2 = sqrt(v)
        v = _v(kind, p0, p1, m, u + du + 0.5 * dt * k2)
        if v <= 0.0:
            return 1
        k3 = sqrt(v)
        v = _v(kind, p0, p1, m, u + du + dt * k3)
        if v <= 0.0:
            return 1
        k4 = sqrt(v)
        du += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    out[0] = du
    return 0


def march_preset(int kind, double p0, double p1, double m, double u0, double h,
                 long n, double tol, int max_halvings):
    """March n steps of size h from u0.

    Returns (u, status, index): status 0 ok, 1 domain exit, 2 step failure;
    index is the step at which marching stopped (-1 when status is 0).
    Step increments are summed with Kahan compensation, since equal
    increments would otherwise round the same way at every step.
    """
    u = np.empty(n + 1)
    cdef double[::1] uv = u
    cdef long i, nsub
    cdef int status = 0, level
    cdef long fail = -1
    cdef double ui, coarse = 0.0, fine = 0.0, err, comp = 0.0, y, t
    uv[0] = u0
    with nogil:
        for i in range(n):
            ui = uv[i]
            if _rk4(kind, p0, p1, m, ui, h, 1, &coarse):
                status = 1
                fail = i
                break
            nsub = 1
            level = 0
            while True:
                if _rk4(kind, p0, p1, m, ui, h, 2 * nsub, &fine):
                    status = 1
                    break
                err = fabs(fine - coarse) / 15.0
                if err <= tol * (1.0 + fabs(ui)) * fabs(h):
                    break
                nsub *= 2
                coarse = fine
                level += 1
                if level > max_halvings:
                    status = 2
                    break
            if status:
                fail = i
                break
            y = fine - comp
            t = ui + y
            comp = (t - ui) - y
            uv[i + 1] = t
    return u, status, fail
