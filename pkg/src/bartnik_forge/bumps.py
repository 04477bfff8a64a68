"""Smooth steps, cut-offs and the mollifier bump."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.integrate import quad


def _h(y):
    """exp(-1/y) for y > 0, zero otherwise, with its first two derivatives."""
    y = np.asarray(y, dtype=float)
    pos = y > 0
    ys = np.where(pos, y, 1.0)
    h = np.where(pos, np.exp(-1.0 / ys), 0.0)
    h1 = np.where(pos, h / ys**2, 0.0)
    h2 = np.where(pos, h * (1.0 - 2.0 * ys) / ys**4, 0.0)
    return h, h1, h2


def smoothstep(y):
    """C-infinity step: 0 for y <= 0, 1 for y >= 1. Returns (S, S', S'')."""
    y = np.asarray(y, dtype=float)
    a, a1, a2 = _h(y)
    b, b1, b2 = _h(1.0 - y)
    b1 = -b1
    den = a + b
    num = a1 * b - a * b1
    s = a / den
    s1 = num / den**2
    dnum = a2 * b - a * b2
    s2 = (dnum * den - 2.0 * num * (a1 + b1)) / den**3
    return s, s1, s2


def septic(y):
    """C3 polynomial step on [0, 1], clamped outside. Returns (P, P')."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    p = y**4 * (35.0 - 84.0 * y + 70.0 * y**2 - 20.0 * y**3)
    dp = 140.0 * y**3 * (1.0 - y) ** 3
    return p, dp


def septic_integral(y):
    """Integral of the septic step from 0 to y, continued linearly past 1."""
    y = np.asarray(y, dtype=float)
    yc = np.clip(y, 0.0, 1.0)
    core = yc**5 * (7.0 - 14.0 * yc + 10.0 * yc**2 - 2.5 * yc**3)
    return core + np.maximum(y - 1.0, 0.0)


def quintic(y):
    """C2 polynomial step 6y^5 - 15y^4 + 10y^3 on [0, 1]. Returns (q, q')."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    q = y**3 * (10.0 - 15.0 * y + 6.0 * y**2)
    dq = 30.0 * y**2 * (1.0 - y) ** 2
    return q, dq


def _bump_raw(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    w = np.where(inside, 1.0 - t * t, 1.0)
    return np.where(inside, np.exp(-1.0 / w), 0.0)


@lru_cache(maxsize=1)
def bump_constant() -> float:
    """Normalisation so that the bump has unit mass on [-1, 1]."""
    val, _ = quad(lambda t: float(_bump_raw(t)), -1.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return 1.0 / val


def bump(t):
    """Mollifier c*exp(-1/(1-t^2)) supported in [-1, 1] with unit mass."""
    return bump_constant() * _bump_raw(t)


@lru_cache(maxsize=4)
def gauss_legendre(n: int = 64):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w
