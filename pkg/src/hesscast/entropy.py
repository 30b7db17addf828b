"""Structural quantities of the layered loss surface.

``lambda_from_arch`` reduces an architecture to the effective weight count
Lambda = (n0 * P)^(1/L), with P the number of input-to-output paths.  The
expected-entropy formula combines two closed-form terms with a semicircle
log-potential integral that has an integrable logarithmic singularity when
the rescaled loss level falls inside [-sqrt(2), sqrt(2)]; the integral is
evaluated by adaptive Gauss-Legendre quadrature split at the singular
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EntropyParams",
    "EntropyTerms",
    "expected_entropy",
    "expected_entropy_terms",
    "lambda_from_arch",
]

SQRT2 = math.sqrt(2.0)
QUAD_TOL = 1e-8
INTERVAL_FLOOR = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def lambda_from_arch(architecture) -> float:
    """L-th root of n0 * P, with P the product of all non-input widths."""
    widths = architecture.layer_widths
    n0 = widths[0]
    n_paths = 1
    for w in widths[1:]:
        n_paths *= w
    n_layers = len(widths) - 1
    return float((n0 * n_paths) ** (1.0 / n_layers))


@dataclass(frozen=True)
class EntropyParams:
    """Inputs to the expected-entropy formula.

    ``lam`` must exceed 1 (the formula divides by lam - 1) and ``layers``
    must be at least 2 (it contains L(L-1)).  ``sigma`` defaults to 1, the
    unit-input-variance convention.
    """

    lam: float
    layers: int
    rho: float
    sigma: float = 1.0
    loss_level: float = 0.0

    def __post_init__(self):
        if not self.lam > 1.0:
            raise ValueError(f"lambda must be > 1, got {self.lam}")
        if self.layers < 2:
            raise ValueError(f"layer count must be >= 2, got {self.layers}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not math.isfinite(self.loss_level):
            raise ValueError("loss level must be finite")


@dataclass(frozen=True)
class EntropyTerms:
    """Per-term breakdown of the expected entropy."""

    path_term: float  # -(lam-1) log(rho)
    volume_term: float  # (lam-1)/2 log(lam / (2 (lam-1) L (L-1)))
    integral_term: float  # -(lam-1)/pi * semicircle log-potential integral
    total: float
    integral_error: float = 0.0  # accumulated quadrature error estimate


def _gauss_panel(f, a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(_GL_WEIGHTS * f(mid + half * _GL_NODES)))


def _adaptive_gauss(f, a, b, tol, whole=None):
    """Adaptive panel-splitting Gauss quadrature to absolute tolerance.

    Returns (value, error estimate).  Interior nodes only, so integrable
    endpoint singularities need no special casing beyond the 1e-12 interval
    floor.
    """
    if whole is None:
        whole = _gauss_panel(f, a, b)
    mid = 0.5 * (a + b)
    left = _gauss_panel(f, a, mid)
    right = _gauss_panel(f, mid, b)
    err = abs(left + right - whole)
    if err <= tol or (b - a) <= INTERVAL_FLOOR:
        return left + right, err
    lv, le = _adaptive_gauss(f, a, mid, tol / 2.0, left)
    rv, re = _adaptive_gauss(f, mid, b, tol / 2.0, right)
    return lv + rv, le + re


def _log_potential_integral(t_star: float, tol: float = QUAD_TOL):
    """integral_{-sqrt2}^{sqrt2} log|t_star - t| sqrt(2 - t^2) dt.

    Returns (value, error estimate).
    """

    def integrand(t):
        t = np.asarray(t)
        away = np.abs(t_star - t)
        # The floor only guards exact node collisions; nodes are interior so
        # it is never reached in practice.
        return np.log(np.maximum(away, 1e-300)) * np.sqrt(np.maximum(2.0 - t * t, 0.0))

    if abs(t_star) < SQRT2:
        # Split at the singular point so each panel sees a monotone tail.
        lv, le = _adaptive_gauss(integrand, -SQRT2, t_star, tol / 2.0)
        rv, re = _adaptive_gauss(integrand, t_star, SQRT2, tol / 2.0)
        return lv + rv, le + re
    return _adaptive_gauss(integrand, -SQRT2, SQRT2, tol)


def expected_entropy_terms(params: EntropyParams, tol: float = QUAD_TOL) -> EntropyTerms:
    """Evaluate the three summands of the expected-entropy formula."""
    lam, L = params.lam, params.layers
    path_term = -(lam - 1.0) * math.log(params.rho)
    volume_term = 0.5 * (lam - 1.0) * math.log(lam / (2.0 * (lam - 1.0) * L * (L - 1)))
    t_star = params.sigma * math.sqrt(lam / (lam - 1.0)) * params.loss_level / params.rho
    integral, err = _log_potential_integral(t_star, tol)
    scale = (lam - 1.0) / math.pi
    return EntropyTerms(
        path_term=path_term,
        volume_term=volume_term,
        integral_term=-scale * integral,
        total=path_term + volume_term - scale * integral,
        integral_error=scale * err,
    )


def expected_entropy(params: EntropyParams, tol: float = QUAD_TOL) -> float:
    """Expected entropy of the Hessian at the given rescaled loss level."""
    return expected_entropy_terms(params, tol).total
