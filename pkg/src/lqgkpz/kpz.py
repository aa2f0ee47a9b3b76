"""Closed-form dimension relations between Euclidean and quantum dimension.

Every function takes plain floats plus an :class:`LqgParams` and returns
floats.  Domains are checked, never clamped; the only clamping is the
``max(., 0)`` that belongs to the thick-point formulas themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OutOfRangeAlpha, OutOfRangeDim, OutOfRangeZeta
from .params import LqgParams

# Slack for domain endpoints and branch thresholds.
_TOL = 1e-12


@dataclass(frozen=True)
class DimPair:
    euclidean_dim: float
    quantum_dim: float


def _check_euclidean(dim: float) -> float:
    if not (-_TOL <= dim <= 2.0 + _TOL) or math.isnan(dim):
        raise OutOfRangeDim(f"Euclidean dimension must lie in [0, 2], got {dim}")
    return min(max(dim, 0.0), 2.0)


def _check_quantum(dim: float, p: LqgParams) -> float:
    if not (-_TOL <= dim <= p.d_gamma * (1.0 + _TOL)) or math.isnan(dim):
        raise OutOfRangeDim(
            f"quantum dimension must lie in [0, {p.d_gamma}], got {dim}"
        )
    return min(max(dim, 0.0), p.d_gamma)


def _check_alpha(alpha: float) -> float:
    if not -2.0 <= alpha <= 2.0:
        raise OutOfRangeAlpha(f"alpha must lie in [-2, 2], got {alpha}")
    return alpha


def _small_root(q: float, d0: float) -> float:
    # q - sqrt(q^2 - 2 d0), written without the cancellation at large q
    return 2.0 * d0 / (q + math.sqrt(q * q - 2.0 * d0))


def euclidean_from_quantum(quantum_dim: float, p: LqgParams) -> float:
    """KPZ relation: Euclidean dimension of a field-independent set."""
    s = _check_quantum(quantum_dim, p)
    return p.xi * p.q * s - 0.5 * p.xi**2 * s**2


def quantum_from_euclidean(euclidean_dim: float, p: LqgParams) -> float:
    """Inverse of :func:`euclidean_from_quantum` on [0, 2]."""
    d0 = _check_euclidean(euclidean_dim)
    return _small_root(p.q, d0) / p.xi


def thick_point_euclidean_dim(euclidean_dim: float, alpha: float) -> float:
    d0 = _check_euclidean(euclidean_dim)
    _check_alpha(alpha)
    return max(d0 - alpha**2 / 2.0, 0.0)


def thick_point_quantum_dim(euclidean_dim: float, alpha: float, p: LqgParams) -> float:
    """Quantum dimension of the alpha-thick points of a field-independent set."""
    base = thick_point_euclidean_dim(euclidean_dim, alpha)
    return base / (p.xi * (p.q - alpha))


def optimal_alpha(euclidean_dim: float, p: LqgParams) -> float:
    """Thickness carrying the full quantum dimension of the set."""
    d0 = _check_euclidean(euclidean_dim)
    return _small_root(p.q, d0)


def worstcase_quantum_upper(euclidean_dim: float, p: LqgParams) -> float:
    """Upper bound on the quantum dimension valid for every Borel set."""
    d0 = _check_euclidean(euclidean_dim)
    threshold = 2.0 - p.gamma**2 / 2.0
    if d0 >= threshold - _TOL:
        return p.d_gamma
    return d0 / (p.xi * (p.q - math.sqrt(4.0 - 2.0 * d0)))


def worstcase_euclidean_upper(quantum_dim: float, p: LqgParams) -> float:
    """Upper bound on the Euclidean dimension valid for every Borel set."""
    s = _check_quantum(quantum_dim, p)
    threshold = 2.0 / (p.xi * p.q)
    if s >= threshold - _TOL:
        return 2.0
    xs = p.xi * s
    radicand = 4.0 - 2.0 * p.q * xs + xs**2
    return xs * (p.q - xs + math.sqrt(max(radicand, 0.0)))


def geodesic_dim_bound(p: LqgParams) -> float:
    """Bound on the Euclidean dimension of a geodesic (quantum dimension 1)."""
    x = p.xi
    return x * (p.q - x + math.sqrt(x**2 - 2.0 * p.q * x + 4.0))


def ball_boundary_dim_bound(p: LqgParams, boundary_quantum_dim: float = 2.0) -> float:
    """Bound on the Euclidean dimension of a metric-ball boundary component.

    The default quantum dimension 2 of such a boundary is established only
    for gamma = sqrt(8/3); other values must be supplied by the caller.
    """
    return worstcase_euclidean_upper(boundary_quantum_dim, p)


def holder_bounds(euclidean_dim: float, p: LqgParams) -> tuple[float, float]:
    """Quantum-dimension interval implied by bi-Hoelder continuity alone."""
    d0 = _check_euclidean(euclidean_dim)
    return d0 / (p.xi * (p.q + 2.0)), d0 / (p.xi * (p.q - 2.0))


def thickness_bounds(alpha: float, zeta: float) -> tuple[float, float]:
    """Return ``(m, M)``, the widened thickness window for circle averages."""
    if not 0.0 <= zeta < 1.0:
        raise OutOfRangeZeta(f"zeta must lie in [0, 1), got {zeta}")
    spread = 3.0 * math.sqrt(10.0) * zeta
    shrink = 1.0 - zeta**2
    return shrink * (alpha - zeta) - spread, shrink * (alpha + zeta) + spread


def square_count_exponent(s: float, zeta: float, p: LqgParams) -> float:
    """Exponent ``e`` in the bound ``#{S in D_n: diam > 2^-sn} <= 2^(e n)``."""
    return 2.0 - (p.xi * p.q - s) ** 2 / (2.0 * p.xi**2) + zeta


def tiling_count_exponent(t: float, zeta: float, p: LqgParams) -> float:
    """Exponent ``e`` in the bound ``#{S in R_m: |S| > 2^-tm} <= 2^(e m)``."""
    return 2.0 * t - (1.0 - t * p.xi * p.q) ** 2 / (2.0 * p.xi**2 * t) + zeta
