"""Coordinate maps between the normalized square [-1, 1]^2 and the unit disc.

All functions are vectorized: ``x`` and ``y`` may be scalars or arrays of
matching shape, and results come back with the same shape.
"""
from __future__ import annotations

import numpy as np

from .exceptions import DomainError

EPS = 1e-9
# Inputs this far past a domain boundary are projected back onto it rather
# than rejected, so 7-digit rounded boundary points are still accepted.
DOMAIN_TOL = 1e-6
#: Largest radius ``squeeze`` can produce (image of the unit circle).
MAX_SQUEEZED_RADIUS = float(np.exp(-0.25))

_SQRT2 = np.sqrt(2.0)


def _as_float(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.broadcast_arrays(x, y)


def _out(x, y):
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def square_to_disc(x, y):
    """Elliptical grid mapping of the square onto the unit disc."""
    x, y = _as_float(x, y)
    if np.any(np.maximum(np.abs(x), np.abs(y)) > 1.0 + DOMAIN_TOL):
        raise DomainError("square_to_disc: point outside [-1, 1]^2")
    x = np.clip(x, -1.0, 1.0)
    y = np.clip(y, -1.0, 1.0)
    u = x * np.sqrt(1.0 - 0.5 * y * y)
    v = y * np.sqrt(1.0 - 0.5 * x * x)
    return _out(u, v)


def _renormalize(u, v, limit):
    r = np.hypot(u, v)
    if np.any(r > limit + DOMAIN_TOL):
        raise DomainError(f"point radius exceeds {limit:.9f}")
    over = r > limit
    if np.any(over):
        scale = np.where(over, limit / np.where(over, r, 1.0), 1.0)
        u = u * scale
        v = v * scale
    return u, v


def disc_to_square(u, v):
    """Closed-form inverse of :func:`square_to_disc`.

    Points with radius in ``(1, 1 + DOMAIN_TOL]`` are pulled back onto the
    circle first; anything further out raises :class:`DomainError`.
    """
    u, v = _as_float(u, v)
    u, v = _renormalize(u, v, 1.0)
    a = 2.0 + u * u - v * v
    b = 2.0 - u * u + v * v
    tu = 2.0 * _SQRT2 * u
    tv = 2.0 * _SQRT2 * v
    # radicands can dip a hair below zero on the boundary
    x = 0.5 * np.sqrt(np.maximum(a + tu, 0.0)) - 0.5 * np.sqrt(np.maximum(a - tu, 0.0))
    y = 0.5 * np.sqrt(np.maximum(b + tv, 0.0)) - 0.5 * np.sqrt(np.maximum(b - tv, 0.0))
    return _out(np.clip(x, -1.0, 1.0), np.clip(y, -1.0, 1.0))


def squeeze(u, v):
    """Radial barrel squeeze: scale by ``exp(-r**2 / 4)``."""
    u, v = _as_float(u, v)
    u, v = _renormalize(u, v, 1.0)
    scale = np.exp(-0.25 * (u * u + v * v))
    return _out(u * scale, v * scale)


def _solve_radius(rho, tol=1e-12, max_iter=100):
    # r * exp(-r^2/4) is strictly increasing on [0, 1]; Newton with a bisection bracket
    lo = np.zeros_like(rho)
    hi = np.ones_like(rho)
    r = rho.copy()
    for _ in range(max_iter):
        e = np.exp(-0.25 * r * r)
        f = r * e - rho
        lo = np.where(f < 0, r, lo)
        hi = np.where(f > 0, r, hi)
        step = f / (e * (1.0 - 0.5 * r * r))
        r_new = r - step
        outside = (r_new <= lo) | (r_new >= hi) | ~np.isfinite(r_new)
        r_new = np.where(outside, 0.5 * (lo + hi), r_new)
        done = np.abs(r_new - r) < tol
        r = r_new
        if np.all(done):
            break
    return r


def unsqueeze(u, v):
    """Invert :func:`squeeze` by solving ``rho = r exp(-r^2/4)`` for ``r``."""
    u, v = _as_float(u, v)
    u, v = _renormalize(u, v, MAX_SQUEEZED_RADIUS)
    rho = np.hypot(u, v)
    r = _solve_radius(np.atleast_1d(rho).astype(float)).reshape(rho.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(rho > 0, r / np.where(rho > 0, rho, 1.0), 1.0)
    return _out(u * scale, v * scale)


def forward_warp(x, y):
    """Square -> squeezed disc; the map applied to annotation points."""
    return squeeze(*square_to_disc(x, y))


def inverse_warp(u, v):
    """Squeezed disc -> square; used for inverse-lookup resampling."""
    return disc_to_square(*unsqueeze(u, v))


def pixel_to_norm(col, row, side):
    """Continuous pixel coordinates of a ``side`` x ``side`` patch to [-1, 1]."""
    return (2.0 * np.asarray(col, dtype=float) / side - 1.0,
            2.0 * np.asarray(row, dtype=float) / side - 1.0)


def norm_to_pixel(x, y, side):
    return ((np.asarray(x, dtype=float) + 1.0) * 0.5 * side,
            (np.asarray(y, dtype=float) + 1.0) * 0.5 * side)
