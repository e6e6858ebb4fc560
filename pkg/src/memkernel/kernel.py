"""Fundamental solution of the memory operator and its scalar estimate helpers.

The operator acts as

    u_t - eps*u_xx + a*u + b * integral_0^t exp(-beta*(t-tau)) u(x,tau) dtau,

with eps, a, b, beta all positive.  Its free-space fundamental solution is

    K(x,t) = exp(-a t) * G(x, eps t)
             - sqrt(b) * (2 sqrt(pi eps))^-1 * integral_0^t
               exp(-x^2/(4 eps y) - a y - beta (t-y))
               * J1(2 sqrt(b y (t-y))) / sqrt(t-y) dy,

equivalently  exp(-a t) G(x, eps t) - b * integral G(x, eps y) rho(y;t) dy
with G the heat Gaussian and rho the smooth memory profile documented in
``_quadcore``.  The sqrt(b) coefficient is the one consistent with the
Laplace closed form exp(-r sigma)/(2 sqrt(eps) sigma) and with the
first-order-in-b perturbation scaling; ``laplace_check`` verifies the pair
numerically.  This module evaluates K, its x-derivative, the exponential
time-convolution K1, the Laplace-domain closed form, and the scalar decay
envelope E(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quadcore as qc
from .errors import (
    ConvergenceDomainError,
    DomainError,
    EvaluationWindowError,
)

__all__ = [
    "OperatorParams",
    "SeriesControl",
    "eval_k",
    "eval_k1",
    "eval_kx",
    "laplace_check",
    "e_of_t",
]


@dataclass(frozen=True)
class OperatorParams:
    """Constants of the operator: diffusion eps, zeroth-order a, memory
    strength b and memory decay rate beta.  All strictly positive."""

    eps: float
    a: float
    b: float
    beta: float

    def __post_init__(self):
        for name in ("eps", "a", "b", "beta"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0.0):
                raise DomainError(f"OperatorParams.{name} must be finite and > 0, got {v!r}")

    @property
    def omega(self) -> float:
        """Decay rate min(a, beta) governing every long-time envelope."""
        return min(self.a, self.beta)

    @property
    def sigma0(self) -> float:
        """Steady spatial decay rate sqrt((a + b/beta)/eps)."""
        return math.sqrt((self.a + self.b / self.beta) / self.eps)

    @property
    def beta1(self) -> float:
        """Time-integrated memory envelope 1/(a*beta)."""
        return 1.0 / (self.a * self.beta)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation and tolerance knobs shared by every series/integral.

    quad_tol : target absolute error of the time quadratures.
    n_images : image-series truncation (|n| <= n_images).
    t_floor  : smallest t at which a pointwise kernel value is attempted;
               integrated quantities handle the window below it analytically.
    """

    quad_tol: float = 1e-8
    n_images: int = 16
    t_floor: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.quad_tol < 1.0):
            raise DomainError(f"quad_tol must be in (0,1), got {self.quad_tol!r}")
        if not (isinstance(self.n_images, (int, np.integer)) and self.n_images >= 1):
            raise DomainError(f"n_images must be an integer >= 1, got {self.n_images!r}")
        if not (self.t_floor > 0.0 and math.isfinite(self.t_floor)):
            raise DomainError(f"t_floor must be finite and > 0, got {self.t_floor!r}")


def _check_point(x, t, c):
    if not (np.isfinite(x) and np.isfinite(t)):
        raise DomainError(f"non-finite evaluation point ({x!r}, {t!r})")
    if t < c.t_floor:
        raise EvaluationWindowError(
            f"pointwise kernel evaluation needs t >= t_floor ({c.t_floor:g}), got t={t:g}"
        )


def kernel_values(args, t, p, level, deriv=False):
    """K (or dK/dx) at the abscissae ``args`` for one time, one level.

    Free-space building block shared with the image series: the caller
    passes image-shifted arguments when a strip is involved.
    """
    args = np.atleast_1d(np.asarray(args, dtype=float))
    y, w = qc.memory_rule(t, p.a, p.b, p.beta, level)
    keep = w != 0.0
    y, w = y[keep], w[keep]
    head = qc.gauss_image_sum(args, np.array([p.eps * t]), [0.0], deriv=deriv)[:, 0]
    mem = qc.gauss_image_sum(args, p.eps * y, [0.0], deriv=deriv) @ w
    return math.exp(-p.a * t) * head - p.b * mem


def eval_k(x, t, p: OperatorParams, c: SeriesControl) -> float:
    """Fundamental solution K at (x, t); even in x, abs error <= c.quad_tol."""
    _check_point(x, t, c)
    val = qc.adaptive(lambda lev: kernel_values([x], t, p, lev)[0], c.quad_tol)
    return float(val)


def eval_kx(x, t, p: OperatorParams, c: SeriesControl) -> float:
    """dK/dx at (x, t), by differentiation under the integral sign.

    Every Gaussian term simply picks up the factor -x/(2*eps*y); the graded
    head of the quadrature resolves the resulting boundary layer at
    y ~ x^2/(4 eps) for small |x|.
    """
    _check_point(x, t, c)
    val = qc.adaptive(lambda lev: kernel_values([x], t, p, lev, deriv=True)[0], c.quad_tol)
    return float(val)


def eval_k1(x, t, p: OperatorParams, c: SeriesControl) -> float:
    """K1(x,t) = integral_0^t exp(-beta*(t-tau)) K(x,tau) dtau.

    The substitution tau = q^2 removes the 1/sqrt(tau) behaviour of K at
    x = 0; the inner kernel values reuse eval_k's machinery at a tolerance
    budgeted so the composite result stays within c.quad_tol.
    """
    _check_point(x, t, c)
    inner_tol = c.quad_tol * min(0.25, 0.25 * p.beta)

    def outer(n_panels):
        edges = np.sqrt(t) * np.linspace(0.0, 1.0, n_panels + 1)
        q, wq = qc.panel_nodes(edges, 8)
        tau = q * q
        damp = np.exp(-p.beta * (t - tau)) * 2.0 * q * wq
        vals = np.array(
            [qc.adaptive(lambda lev: kernel_values([x], tv, p, lev)[0], inner_tol) for tv in tau]
        )
        return float(damp @ vals)

    prev = outer(4)
    for n_panels in (8, 16, 32, 64):
        cur = outer(n_panels)
        if abs(cur - prev) <= 0.5 * c.quad_tol:
            return cur
        prev = cur
    from .errors import NumericalFailureError

    raise NumericalFailureError(f"eval_k1 outer quadrature stalled at x={x:g}, t={t:g}")


def laplace_sigma(s, p: OperatorParams) -> float:
    """Positive root sigma with sigma^2 = s + a + b/(s + beta)."""
    if s <= max(-p.a, -p.beta):
        raise ConvergenceDomainError(
            f"Laplace abscissa s={s:g} outside the convergence half-plane "
            f"s > max(-a, -beta) = {max(-p.a, -p.beta):g}"
        )
    return math.sqrt(s + p.a + p.b / (s + p.beta))


def laplace_check(r, s, p: OperatorParams, c: SeriesControl):
    """Transform identity check at (r, s) with r = |x|/sqrt(eps).

    Returns ``(numeric, closed_form)`` where numeric is the truncated
    quadrature of integral_0^inf exp(-s t) K(r, t) dt and closed_form is
    exp(-r*sigma) / (2 sqrt(eps) sigma).  The truncation point comes from
    the exp(-omega t) kernel envelope.
    """
    if not (np.isfinite(r) and np.isfinite(s)) or r < 0.0:
        raise DomainError(f"laplace_check needs finite s and r >= 0, got ({r!r}, {s!r})")
    sigma = laplace_sigma(s, p)
    closed = math.exp(-r * sigma) / (2.0 * math.sqrt(p.eps) * sigma)

    x = r * math.sqrt(p.eps)
    rate = s + p.omega
    t_max = 42.0 / rate
    inner_tol = c.quad_tol * min(0.25, 0.25 * s)

    def kval(t):
        return qc.adaptive(lambda lev: kernel_values([x], t, p, lev)[0], inner_tol)

    def numeric_at(order):
        # head [0, t_head]: t = q^2 handles the 1/sqrt(t) start at r = 0
        t_head = min(1.0, t_max)
        q, wq = qc.panel_nodes(np.sqrt(t_head) * np.linspace(0.0, 1.0, 9), order)
        t_h = q * q
        w_h = 2.0 * q * wq
        total = sum(
            w * math.exp(-s * tv) * kval(tv) for tv, w in zip(t_h, w_h) if tv > 0
        )
        if t_max > t_head:
            edges = qc.geometric_edges(t_head, t_max, 1.8)
            t_b, w_b = qc.panel_nodes(edges, order)
            total += sum(w * math.exp(-s * tv) * kval(tv) for tv, w in zip(t_b, w_b))
        return total

    prev = numeric_at(6)
    for order in (10, 16, 24):
        cur = numeric_at(order)
        if abs(cur - prev) <= 0.5 * c.quad_tol:
            return float(cur), float(closed)
        prev = cur
    from .errors import NumericalFailureError

    raise NumericalFailureError(f"laplace_check quadrature stalled at r={r:g}, s={s:g}")


def e_of_t(t, p: OperatorParams):
    """Decay envelope E(t) = (exp(-beta t) - exp(-a t)) / (a - beta).

    Positive for t > 0, integrates to 1/(a*beta) over (0, inf).  Within
    |a - beta| < 1e-12 the analytic limit t*exp(-a t) is used; the general
    branch goes through expm1 so the near-degenerate regime stays accurate.
    """
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)) or np.any(t_arr < 0.0):
        raise DomainError("e_of_t needs finite t >= 0")
    if abs(p.a - p.beta) < 1e-12:
        out = t_arr * np.exp(-p.a * t_arr)
    else:
        w = (p.a - p.beta) * t_arr
        direct = (np.exp(-p.beta * t_arr) - np.exp(-p.a * t_arr)) / (p.a - p.beta)
        nearly = t_arr * np.exp(-p.beta * t_arr) * (1.0 - 0.5 * w)
        out = np.where(np.abs(w) < 1e-8, nearly, direct)
    return float(out) if np.ndim(t) == 0 else out
