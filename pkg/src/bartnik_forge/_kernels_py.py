"""Pure-Python radial march; same contract as the compiled kernel."""

from __future__ import annotations

import math

import numpy as np


def _rk4(vfun, u, h, nsub):
    """Increment of u over one step of size h taken as nsub RK4 sub-steps."""
    dt = h / nsub
    du = 0.0
    for _ in range(nsub):
        v = vfun(u + du)
        if not v > 0.0:
            return None
        k1 = math.sqrt(v)
        v = vfun(u + du + 0.5 * dt * k1)
        if not v > 0.0:
            return None
        k2 = math.sqrt(v)
        v = vfun(u + du + 0.5 * dt * k2)
        if not v > 0.0:
            return None
        k3 = math.sqrt(v)
        v = vfun(u + du + dt * k3)
        if not v > 0.0:
            return None
        k4 = math.sqrt(v)
        du += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return du


def march_callable(vfun, u0, h, n, tol, max_halvings):
    """Richardson-controlled RK4 march of u' = sqrt(vfun(u)); see ``march_preset``."""
    u = np.empty(n + 1)
    u[0] = u0
    comp = 0.0
    for i in range(n):
        ui = float(u[i])
        coarse = _rk4(vfun, ui, h, 1)
        if coarse is None:
            return u, 1, i
        nsub, level = 1, 0
        while True:
            fine = _rk4(vfun, ui, h, 2 * nsub)
            if fine is None:
                return u, 1, i
            if abs(fine - coarse) / 15.0 <= tol * (1.0 + abs(ui)) * abs(h):
                break
            nsub *= 2
            coarse = fine
            level += 1
            if level > max_halvings:
                return u, 2, i
        y = fine - comp
        t = ui + y
        comp = (t - ui) - y
        u[i + 1] = t
    return u, 0, -1


def preset_v(kind, p0, p1, m):
    sqrt = math.sqrt
    if kind == 0:
        def xf(u):
            return p0
    elif kind == 1:
        def xf(u):
            return p0 / sqrt(u)
    elif kind == 2:
        def xf(u):
            return p0 * u - p1 / (u * u)
    else:
        def xf(u):
            return p0 * sqrt(2.0 / u)

    def vfun(u):
        if u <= 0.0:
            return -1.0
        x = xf(u)
        return 1.0 - 2.0 * m / u + x * x

    return vfun


def march_preset(kind, p0, p1, m, u0, h, n, tol, max_halvings):
    return march_callable(preset_v(kind, p0, p1, m), u0, h, n, tol, max_halvings)
