"""Characteristic exponent of the Mathieu equation u'' + (a - 2q cos 2xi) u = 0.

The stable solutions are u(xi) = exp(i beta xi) * P(xi) with P pi-periodic;
beta in [0, 1] marks the lowest stability region.  beta is found from the
standard continued-fraction characteristic equation

    beta^2 = a - q * (G1+(beta) + G1-(beta)),
    Gn(+-) = q / (a - (beta +- 2n)^2 - q * G(n+1)(+-)),

truncated at finite depth and solved by fixed-point iteration seeded with
the adiabatic estimate beta0 = sqrt(a + q^2/2).  Near the region boundary
the fixed point can cycle; a bracketed root solve is used as fallback
before a point is declared unstable.
"""

import math

from scipy.optimize import brentq


class UnstablePointError(ValueError):
    """(a, q) lies outside the lowest stability region."""


def _tail(beta: float, a: float, q: float, sign: int, depth: int) -> float:
    """q * G1 for the upward (sign=+1) or downward (sign=-1) ladder."""
    g = 0.0
    for n in range(depth, 0, -1):
        g = q / (a - (beta + 2.0 * n * sign) ** 2 - q * g)
    return q * g


def _beta_sq(beta: float, a: float, q: float, depth: int) -> float:
    return a - _tail(beta, a, q, +1, depth) - _tail(beta, a, q, -1, depth)


def beta_from_aq(a: float, q: float, *, tol: float = 1e-10, max_iter: int = 200,
                 depth: int = 20) -> float:
    """Characteristic exponent beta(a, q) in [0, 1].

    Raises UnstablePointError if (a, q) is outside the lowest stability
    region or the characteristic equation cannot be solved there.
    """
    q = abs(q)  # beta(a, q) = beta(a, -q): q -> -q is a quarter-period shift
    if q == 0.0:
        if a < 0.0 or a > 1.0:
            raise UnstablePointError(f"unstable point: a={a}, q=0")
        return math.sqrt(a)

    beta = math.sqrt(max(a + 0.5 * q * q, 1e-12))
    beta = min(beta, 1.0)
    for _ in range(max_iter):
        b2 = _beta_sq(beta, a, q, depth)
        if b2 < 0.0:
            raise UnstablePointError(f"unstable point: a={a}, q={q} (beta^2 < 0)")
        new = math.sqrt(b2)
        if abs(new - beta) < tol:
            if 0.0 <= new <= 1.0:
                return new
            raise UnstablePointError(f"unstable point: a={a}, q={q} (beta={new:.4f})")
        beta = new

    return _beta_bracketed(a, q, tol, depth)


def _beta_bracketed(a: float, q: float, tol: float, depth: int) -> float:
    """Root of beta^2 - beta_sq(beta) on (0, 1); fallback near the boundary."""
    def f(b):
        return b * b - _beta_sq(b, a, q, depth)

    grid = [1e-9] + [i / 64 for i in range(1, 65)]
    vals = []
    for b in grid:
        try:
            vals.append(f(b))
        except ZeroDivisionError:
            vals.append(math.nan)
    for lo, hi, flo, fhi in zip(grid, grid[1:], vals, vals[1:]):
        if math.isnan(flo) or math.isnan(fhi) or flo * fhi > 0.0:
            continue
        beta = brentq(f, lo, hi, xtol=tol)
        if 0.0 <= beta <= 1.0:
            return beta
    raise UnstablePointError(f"unstable point: a={a}, q={q} (no converged beta)")


def is_stable(a: float, q: float, **kwargs) -> bool:
    """True if (a, q) lies in the lowest stability region for both signs.

    Stability of the transverse motion requires 0 <= beta <= 1 on both
    axes, i.e. for (a, q) and (-a, -q).
    """
    try:
        beta_from_aq(a, q, **kwargs)
        beta_from_aq(-a, -q, **kwargs)
    except UnstablePointError:
        return False
    return True
