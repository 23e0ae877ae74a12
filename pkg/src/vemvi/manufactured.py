"""Oscillating-circle benchmark on [-1, 1]^2 x [0, 1/2].

The contact set is a disk of radius r0(t) = 1/3 + 0.3 sin(4 pi t) whose
center travels on the circle of radius 1/3,

    u = (r^2 - r0^2)^2 / 2   outside the disk,   u = 0 inside.

Outside the disk the forcing is f = u_t - Laplace(u), differentiated by
hand; inside it is -4 r0^2 (1 - r^2 + r0^2), which is negative, as the
complementarity conditions require.
"""

from __future__ import annotations

import numpy as np

from .stepper import Problem

T_FINAL = 0.5
SNAPSHOT_TIME = 0.25
OMEGA = 4.0 * np.pi


def center(t):
    return np.cos(OMEGA * t) / 3.0, np.sin(OMEGA * t) / 3.0


def center_velocity(t):
    return -OMEGA * np.sin(OMEGA * t) / 3.0, OMEGA * np.cos(OMEGA * t) / 3.0


def free_boundary_radius(t):
    return 1.0 / 3.0 + 0.3 * np.sin(OMEGA * t)


def free_boundary_radius_rate(t):
    return 0.3 * OMEGA * np.cos(OMEGA * t)


def radius_squared(x, y, t):
    c1, c2 = center(t)
    return (x - c1) ** 2 + (y - c2) ** 2


def in_contact(x, y, t):
    """True on the contact set r <= r0."""
    return radius_squared(x, y, t) <= free_boundary_radius(t) ** 2


def exact_u(x, y, t):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    s = radius_squared(x, y, t) - free_boundary_radius(t) ** 2
    return np.where(s > 0.0, 0.5 * s * s, 0.0)


def exact_grad_u(x, y, t):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c1, c2 = center(t)
    s = radius_squared(x, y, t) - free_boundary_radius(t) ** 2
    s = np.where(s > 0.0, s, 0.0)
    return 2.0 * s * (x - c1), 2.0 * s * (y - c2)


def exact_u_t(x, y, t):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c1, c2 = center(t)
    d1, d2 = center_velocity(t)
    r0 = free_boundary_radius(t)
    s = radius_squared(x, y, t) - r0 ** 2
    p = (x - c1) * d1 + (y - c2) * d2
    return np.where(s > 0.0, -2.0 * s * (p + r0 * free_boundary_radius_rate(t)), 0.0)


def forcing_f(x, y, t):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c1, c2 = center(t)
    d1, d2 = center_velocity(t)
    r0 = free_boundary_radius(t)
    r2 = radius_squared(x, y, t)
    p = (x - c1) * d1 + (y - c2) * d2
    outside = 4.0 * (r0 ** 2 - 2.0 * r2 - 0.5 * (r2 - r0 ** 2) * (p + r0 * free_boundary_radius_rate(t)))
    inside = -4.0 * r0 ** 2 * (1.0 - r2 + r0 ** 2)
    return np.where(r2 > r0 ** 2, outside, inside)


def boundary_g(x, y, t):
    return exact_u(x, y, t)


def initial_u0(x, y):
    return exact_u(x, y, 0.0)


def oscillating_circle() -> Problem:
    return Problem(f=forcing_f, g=boundary_g, u0=initial_u0, exact=exact_u, name="oscillating-circle")
