"""Shared quadrature machinery for the fundamental solution and image series.

The memory integral behind the fundamental solution is

    integral over y in (0, t) of  G(x, eps*y) * rho(y; t) dy,

where G is a plain heat Gaussian and

    rho(y; t) = y * exp(-a*y - beta*(t-y)) * phi(b*y*(t-y)),
    phi(w)    = J1(2*sqrt(w)) / sqrt(w)   (entire in w).

phi absorbs the 1/sqrt(t-y) quadrature weight, so the only true endpoint
trouble is a sqrt(y) kink at y = 0 (visible when |x| is small) plus the
Gaussian boundary layer of G at scales y ~ x^2.  Both are handled by the
substitution y = q^2 with geometrically graded panels toward q = 0; the
upper half of the interval uses the substitution y = t - s^2, which keeps
the classical product-integration form near y = t.

Everything here is x-independent per (t, level): callers get back node and
weight vectors and contract them against Gaussian (image) sums themselves.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .special_functions import j1_over_half_z

#: refinement ladder: (gauss order, graded head panels, tail panels)
MEMORY_LEVELS = (
    (4, 10, 4),
    (6, 14, 8),
    (8, 18, 16),
    (10, 24, 32),
    (12, 30, 64),
    (16, 36, 128),
)

_SQRT_PI = math.sqrt(math.pi)


@lru_cache(maxsize=64)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_nodes(edges, order):
    """Composite Gauss-Legendre nodes/weights on consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    lo = edges[:-1]
    hi = edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def geometric_edges(lo, hi, ratio):
    """Edges lo, lo*ratio, ... capped at hi (always ends exactly at hi)."""
    if not (hi > lo > 0.0):
        raise ValueError("need hi > lo > 0")
    edges = [lo]
    v = lo
    while v * ratio < hi * (1.0 - 1e-12):
        v *= ratio
        edges.append(v)
    edges.append(hi)
    return np.asarray(edges)


def memory_rule(t, a, b, beta, level):
    """Nodes y_j and weights w_j so that the memory integral of a kernel
    profile g(y) is  sum_j w_j * g(y_j)  with w_j absorbing rho(y_j; t).

    Head region [0, t/2]: y = q^2 with graded panels; tail region [t/2, t]:
    y = t - s^2 with uniform panels.
    """
    order, n_head, n_tail = MEMORY_LEVELS[level]
    qhi = math.sqrt(0.5 * t)
    head_edges = np.concatenate(([0.0], qhi * 2.0 ** np.arange(-n_head, 1.0)))
    q, wq = panel_nodes(head_edges, order)
    y_head = q * q
    w_head = wq * 2.0 * q

    s_edges = np.linspace(0.0, qhi, n_tail + 1)
    s, ws = panel_nodes(s_edges, order)
    y_tail = t - s * s
    w_tail = ws * 2.0 * s

    y = np.concatenate([y_head, y_tail])
    w = np.concatenate([w_head, w_tail])
    rho = y * np.exp(-a * y - beta * (t - y)) * j1_over_half_z(b * y * (t - y))
    return y, w * rho


def gauss_image_sum(args, kappas, offsets, deriv=False):
    """sum over image offsets of the heat Gaussian (or its x-derivative).

    Parameters
    ----------
    args : (n_args,) evaluation abscissae x.
    kappas : (n_k,) thermal times (eps * y), strictly positive.
    offsets : (n_off,) image shifts (2*n*L, or just [0] for free space).
    deriv : evaluate d/dx instead of the value.

    Returns
    -------
    (n_args, n_k) matrix of  sum_off  gauss(x + off, kappa).
    """
    args = np.asarray(args, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    inv4k = 0.25 / kappas
    pref = 1.0 / (2.0 * np.sqrt(np.pi * kappas))
    out = np.zeros((args.size, kappas.size))
    with np.errstate(under="ignore"):
        for off in offsets:
            u = args + off
            e = np.exp(-(u * u)[:, None] * inv4k[None, :]) * pref[None, :]
            if deriv:
                e *= -u[:, None] * (2.0 * inv4k)[None, :]
            out += e
    return out


def offsets_for(kappa_max, max_abs_arg, length, n_cap):
    """Image offsets 2*n*L actually needed at thermal time kappa_max.

    Images whose Gaussian factor is below ~1e-18 for every argument are
    dropped; n_cap bounds the range regardless.
    """
    if length is None:
        return np.array([0.0])
    reach = max_abs_arg + math.sqrt(4.0 * kappa_max * 42.0)
    n_need = min(n_cap, int(math.ceil(reach / (2.0 * length))) + 1)
    n = np.arange(-n_need, n_need + 1)
    return 2.0 * length * n


def _envelope(t, a, b, omega):
    """Scalar amplitude A(t) with |K(u,t)| <= 0.35 * A(t) / u * exp(-u^2/(8 eps t))."""
    return math.exp(-a * t) + 0.5 * b * t * t * math.exp(-omega * t)


def image_tail_bound(max_abs_arg, t, eps, a, b, omega, length, n_images, deriv=False):
    """Upper bound on the dropped part of the image series beyond |n| = n_images.

    Requires |arg| <= 2*length (the Green-function argument range); uses the
    Gaussian envelope of every kernel term with all decay factors kept.
    """
    if length is None:
        return 0.0
    if max_abs_arg > 2.0 * length * (1.0 + 1e-9):
        raise ValueError("image tail bound assumes |arg| <= 2 L")
    A = _envelope(t, a, b, omega)
    j = np.arange(n_images, n_images + 400, dtype=float)
    u = 2.0 * j * length  # lower bound for |arg + 2 n L|, |n| > n_images
    u = np.maximum(u, 1e-300)
    expo = np.exp(-(u * u) / (8.0 * eps * t))
    if deriv:
        terms = 2.0 * 1.309 * math.sqrt(eps) * A / (u * u) * expo
    else:
        terms = 2.0 * 0.343 * A / u * expo
    return float(np.sum(terms))


def adaptive(value_at_level, tol, start=0, levels=len(MEMORY_LEVELS)):
    """Increase the refinement level until two evaluations agree within tol/2.

    ``value_at_level`` maps a level index to a float (or ndarray).  Returns
    the finest evaluation.  Raises ``NumericalFailureError`` on exhaustion.
    """
    from .errors import NumericalFailureError

    prev = value_at_level(start)
    for lev in range(start + 1, levels):
        cur = value_at_level(lev)
        err = np.max(np.abs(cur - prev))
        if err <= 0.5 * tol:
            return cur
        prev = cur
    raise NumericalFailureError(
        f"quadrature failed to reach tolerance {tol:g} "
        f"(last inter-level change {err:g})"
    )
