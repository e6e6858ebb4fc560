"""Image-series theta function, the Dirichlet Green function of the strip,
an independent eigenfunction oracle, and the long-time convolution limits.

The theta function is the symmetric image series

    theta(x, t) = sum over n in Z of K(x + 2 n L, t),

even in x; its term-wise x-derivative theta_x is odd (the odd extension is
what makes the right-boundary convolution reproduce the boundary datum
exactly, as the Laplace-domain two-point solution confirms).  The strip
Green function is G(x, xi, t) = theta(|x - xi|, t) - theta(x + xi, t),
which vanishes at x = 0 and x = L.

Truncation at |n| <= n_images is guarded by an a-posteriori Gaussian tail
bound; when the bound exceeds the requested tolerance the evaluation
refuses (TruncationError) so callers can raise n_images instead of
silently accepting a short sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _quadcore as qc
from .errors import (
    DomainError,
    EvaluationWindowError,
    InsufficientModesError,
    NonConvergenceError,
    TruncationError,
)
from .kernel import OperatorParams, SeriesControl

__all__ = [
    "StripDomain",
    "LimitFunction",
    "theta",
    "theta_x",
    "green",
    "eigen_green",
    "steady_boundary_kernel",
    "steady_profile",
    "convolution_limit",
]

_N_IMAGE_CAP = 256


@dataclass(frozen=True)
class StripDomain:
    """The spatial strip 0 <= x <= length."""

    length: float

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0.0):
            raise DomainError(f"domain length must be finite and > 0, got {self.length!r}")


def _tail_bound(max_abs_arg, t, p, d, n_images, deriv):
    return qc.image_tail_bound(
        max_abs_arg, t, p.eps, p.a, p.b, p.omega, d.length, n_images, deriv=deriv
    )


def _require_images(max_abs_arg, t, p, d, c, deriv):
    """Smallest image count (>= c.n_images) whose tail bound meets quad_tol."""
    n = c.n_images
    while n <= _N_IMAGE_CAP:
        if _tail_bound(max_abs_arg, t, p, d, n, deriv) <= c.quad_tol:
            return n
        n *= 2
    raise TruncationError(
        f"image tail bound stays above quad_tol={c.quad_tol:g} even at "
        f"{_N_IMAGE_CAP} images (t={t:g})"
    )


def theta_rows(args, t, p, d, c, deriv=False, level=2, n_images=None):
    """theta (or theta_x) on an array of arguments at one time, one level.

    Vectorized workhorse for the solvers: the memory quadrature weights and
    the Bessel evaluations are shared across the whole argument batch.
    """
    args = np.atleast_1d(np.asarray(args, dtype=float))
    maxabs = float(np.max(np.abs(args))) if args.size else 0.0
    if maxabs > 2.0 * d.length * (1.0 + 1e-9):
        raise DomainError("theta arguments must satisfy |x| <= 2 L")
    n_img = c.n_images if n_images is None else n_images
    offsets = qc.offsets_for(p.eps * t, maxabs, d.length, n_img)
    y, w = qc.memory_rule(t, p.a, p.b, p.beta, level)
    keep = w != 0.0
    y, w = y[keep], w[keep]
    head = qc.gauss_image_sum(args, np.array([p.eps * t]), offsets, deriv=deriv)[:, 0]
    mem = qc.gauss_image_sum(args, p.eps * y, offsets, deriv=deriv) @ w
    return math.exp(-p.a * t) * head - p.b * mem


def _theta_scalar(x, t, p, d, c, deriv):
    if not (np.isfinite(x) and np.isfinite(t)):
        raise DomainError(f"non-finite evaluation point ({x!r}, {t!r})")
    if t < c.t_floor:
        raise EvaluationWindowError(
            f"theta evaluation needs t >= t_floor ({c.t_floor:g}), got t={t:g}"
        )
    if _tail_bound(abs(x), t, p, d, c.n_images, deriv) > c.quad_tol:
        raise TruncationError(
            f"n_images={c.n_images} leaves an image tail above quad_tol at t={t:g}; "
            "raise SeriesControl.n_images"
        )
    return float(
        qc.adaptive(lambda lev: theta_rows([x], t, p, d, c, deriv=deriv, level=lev)[0], c.quad_tol)
    )


def theta(x, t, p: OperatorParams, d: StripDomain, c: SeriesControl) -> float:
    """Image series sum_n K(x + 2nL, t); even in x, |x| <= 2L."""
    return _theta_scalar(x, t, p, d, c, deriv=False)


def theta_x(x, t, p: OperatorParams, d: StripDomain, c: SeriesControl) -> float:
    """Term-wise x-derivative of the image series; odd in x by construction."""
    return _theta_scalar(x, t, p, d, c, deriv=True)


def green(x, xi, t, p: OperatorParams, d: StripDomain, c: SeriesControl) -> float:
    """Dirichlet Green function theta(|x - xi|, t) - theta(x + xi, t)."""
    if not (0.0 <= x <= d.length and 0.0 <= xi <= d.length):
        raise DomainError("green needs x, xi inside [0, L]")
    if t < c.t_floor:
        raise EvaluationWindowError(
            f"green evaluation needs t >= t_floor ({c.t_floor:g}), got t={t:g}"
        )
    if _tail_bound(x + xi, t, p, d, c.n_images, False) > c.quad_tol:
        raise TruncationError("n_images too small for requested quad_tol")
    vals = qc.adaptive(
        lambda lev: theta_rows([abs(x - xi), x + xi], t, p, d, c, level=lev), c.quad_tol
    )
    return float(vals[0] - vals[1])


def green_matrix(x_nodes, xi_nodes, t, p, d, c, level=2, n_images=None):
    """G(x_i, xi_j, t) as an (n_x, n_xi) matrix via one batched theta pass."""
    x_nodes = np.asarray(x_nodes, dtype=float)
    xi_nodes = np.asarray(xi_nodes, dtype=float)
    n_img = n_images if n_images is not None else _require_images(
        float(np.max(x_nodes) + np.max(xi_nodes)), t, p, d, c, False
    )
    diff = np.abs(x_nodes[:, None] - xi_nodes[None, :]).ravel()
    summ = (x_nodes[:, None] + xi_nodes[None, :]).ravel()
    rows = theta_rows(np.concatenate([diff, summ]), t, p, d, c, level=level, n_images=n_img)
    m = diff.size
    return (rows[:m] - rows[m:]).reshape(x_nodes.size, xi_nodes.size)


def _mode_decay(mu, t, p):
    """k(t) for the scalar memory mode
        k' = -(eps*mu + a) k - b w,   w' = -beta w + k,   k(0)=1, w(0)=0,
    via the exact 2x2 matrix exponential written in scalar form.  Stable for
    arbitrarily stiff modes (all exponents kept non-positive)."""
    mu = np.asarray(mu, dtype=float)
    A = p.eps * mu + p.a
    half_tr = 0.5 * (A + p.beta)
    cdiff = 0.5 * (p.beta - A)
    disc = cdiff * cdiff - p.b  # ((A-beta)/2)^2 - b
    out = np.empty_like(A)

    real = disc > 1e-24
    if np.any(real):
        delta = np.sqrt(disc[real])
        splus = -half_tr[real] + delta
        sminus = -half_tr[real] - delta
        cratio = cdiff[real] / delta
        out[real] = 0.5 * ((1.0 + cratio) * np.exp(splus * t) + (1.0 - cratio) * np.exp(sminus * t))
    osc = disc < -1e-24
    if np.any(osc):
        delta = np.sqrt(-disc[osc])
        damp = np.exp(-half_tr[osc] * t)
        out[osc] = damp * (np.cos(delta * t) + cdiff[osc] * np.sin(delta * t) / delta)
    crit = ~(real | osc)
    if np.any(crit):
        out[crit] = np.exp(-half_tr[crit] * t) * (1.0 + cdiff[crit] * t)
    return out


def eigen_green(x, xi, t, p: OperatorParams, d: StripDomain, modes: int, tol: float = 1e-8):
    """Independent Green-function oracle by sine-mode expansion.

    G(x, xi, t) = (2/L) * sum_{n=1}^{modes} sin(n pi x / L) sin(n pi xi / L) k_n(t)

    with k_n the exactly-integrated scalar memory mode.  Raises
    InsufficientModesError when the estimated dropped tail exceeds ``tol``.
    Accepts scalars or arrays for x and xi (broadcast together).
    """
    if modes < 1:
        raise DomainError("modes must be >= 1")
    if t <= 0.0:
        raise DomainError("eigen_green needs t > 0")
    L = d.length
    n = np.arange(1, modes + 1, dtype=float)
    mu = (n * math.pi / L) ** 2

    # dropped tail: slow component amplitude ~ b/(A_n - beta)^2 decaying at
    # exp(-beta t), plus the fast component exp(-A_n t) itself
    A_next = p.eps * (modes + 1) ** 2 * math.pi ** 2 / L ** 2 + p.a
    slow = (2.0 / L) * p.b * math.exp(-p.beta * t) * (L / math.pi) ** 4 / (
        3.0 * p.eps ** 2 * modes ** 3
    )
    fast = (2.0 / L) * math.exp(-A_next * t) * (1.0 + 1.0 / max(A_next * t, 1e-3))
    if slow + fast > tol:
        raise InsufficientModesError(
            f"{modes} modes leave an estimated tail {slow + fast:.2e} > tol {tol:g} at t={t:g}"
        )

    k = _mode_decay(mu, t, p)
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    sx = np.sin(np.multiply.outer(x, n * math.pi / L))
    sxi = np.sin(np.multiply.outer(xi, n * math.pi / L))
    out = (2.0 / L) * np.einsum("...n,n,...n->...", sx, k, sxi)
    return float(out) if out.ndim == 0 else out


def steady_boundary_kernel(x, p: OperatorParams, d: StripDomain):
    """Long-time limit of the accumulated boundary influence kernel:

        lim_{t->inf} integral_0^t theta_x(x, tau) dtau
            = sinh(sigma0 (x - L)) / (2 eps sinh(sigma0 L)).
    """
    s0 = p.sigma0
    x = np.asarray(x, dtype=float)
    out = np.sinh(s0 * (x - d.length)) / (2.0 * p.eps * math.sinh(s0 * d.length))
    return float(out) if out.ndim == 0 else out


def steady_profile(x, g1_inf, g2_inf, p: OperatorParams, d: StripDomain):
    """Unique solution of -eps u'' + (a + b/beta) u = 0 with u(0)=g1_inf,
    u(L)=g2_inf; the long-time profile driven by boundary data with limits."""
    s0 = p.sigma0
    L = d.length
    x = np.asarray(x, dtype=float)
    out = (
        g1_inf * np.sinh(s0 * (L - x)) + g2_inf * np.sinh(s0 * x)
    ) / math.sinh(s0 * L)
    return float(out) if out.ndim == 0 else out


@dataclass
class LimitFunction:
    """A time function together with its limit metadata.

    fn : callable t -> value (vectorized over numpy arrays).
    limit : value of fn at t -> infinity.
    derivative : optional callable for d fn / dt (required for the h slot
        of convolution_limit).
    """

    fn: Callable
    limit: float
    derivative: Optional[Callable] = None


def convolution_limit(chi: LimitFunction, h: LimitFunction, horizon: float,
                      tol: float = 1e-7, edge: float = 2e-6) -> float:
    """Evaluate integral_0^t chi(t - tau) * h'(tau) dtau at t = horizon.

    Long-horizon oracle for the convolution limit chi(inf)*[h(inf)-h(0)]:
    the caller-supplied limits are checked against the samples at the
    horizon (within 1e-6) before any quadrature runs.  The kernel argument
    is kept >= ``edge`` so kernels with an evaluation floor (theta_x) can
    be passed directly; the sliver below it is bounded by
    |chi| * |h(horizon) - h(horizon - edge)| and is negligible for data
    with integrable derivative.
    """
    if h.derivative is None:
        raise DomainError("convolution_limit needs h.derivative")
    if abs(float(chi.fn(horizon)) - chi.limit) > 1e-6:
        raise NonConvergenceError(
            f"chi is {abs(float(chi.fn(horizon)) - chi.limit):.2e} away from its "
            f"declared limit at the horizon"
        )
    if abs(float(h.fn(horizon)) - h.limit) > 1e-6:
        raise NonConvergenceError(
            f"h is {abs(float(h.fn(horizon)) - h.limit):.2e} away from its "
            f"declared limit at the horizon"
        )

    # integrate in s = horizon - tau with geometric grading toward s = 0,
    # where kernels like theta_x carry their boundary layer
    edges = np.concatenate([[edge], qc.geometric_edges(2.0 * edge, horizon, 1.5)])

    def at_order(order):
        s, w = qc.panel_nodes(edges, order)
        return float(np.sum(w * np.asarray(chi.fn(s)) * np.asarray(h.derivative(horizon - s))))

    prev = at_order(4)
    for order in (8, 12, 20):
        cur = at_order(order)
        if abs(cur - prev) <= 0.5 * tol:
            return cur
        prev = cur
    from .errors import NumericalFailureError

    raise NumericalFailureError("convolution_limit quadrature stalled")
