"""Closed forms for uncorrelated antennas (R = I), no fixed points needed.

Two Stieltjes-transform conventions coexist for the iid channel and they
differ by more than a constant, so both are implemented explicitly:

* companion_stieltjes m_co(rho): Stieltjes transform (evaluated at -rho) of
  the limiting spectral law of the M x M Gram matrix (1/M) H H^H, which
  carries a 1-c point mass at zero.  This is the textbook closed form

      m_co(rho) = -2 / (1 - c - rho - sqrt((1 - c + rho)^2 + 4 c rho)).

* gram_stieltjes m(rho): Stieltjes transform of the limiting law of the
  invertible K x K matrix (1/K) H^H H.  This is the quantity the precoder
  actually concentrates on: (1/K) u^H ((1/K) H^H H + rho I)^{-1} u -> m(rho).
  The two are linked exactly by a mass split plus an argument rescale,

      m(rho) = m_co(c * rho) - (1 - c) / (c * rho),

  which is verified against a Monte Carlo resolvent oracle in the tests.

All downstream quantities (power density factor, SINR, optima) use the gram
convention so they agree with the general-correlation machinery at R = I to
floating-point accuracy.  The derivative is hard-coded analytically because
the optimum is a stationary point and needs it to high accuracy.
"""

from __future__ import annotations

import math


def _check(rho, c):
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if not 0.0 < c < 1.0:
        raise ValueError("load ratio c must be in (0, 1)")


def companion_stieltjes(rho, c):
    """m_co(rho): transform of the (1/M) H H^H law, including its zero mass."""
    _check(rho, c)
    s = (1.0 - c + rho) ** 2 + 4.0 * c * rho
    return -2.0 / (1.0 - c - rho - math.sqrt(s))


def companion_stieltjes_prime(rho, c):
    """d/drho of companion_stieltjes (analytic)."""
    _check(rho, c)
    s = (1.0 - c + rho) ** 2 + 4.0 * c * rho
    root = math.sqrt(s)
    d = 1.0 - c - rho - root
    dprime = -1.0 - (1.0 + c + rho) / root
    return 2.0 * dprime / (d * d)


def gram_stieltjes(rho, c):
    """m(rho): transform of the (1/K) H^H H law; matches the resolvent oracle."""
    _check(rho, c)
    return companion_stieltjes(c * rho, c) - (1.0 - c) / (c * rho)


def gram_stieltjes_prime(rho, c):
    """d/drho of gram_stieltjes (analytic)."""
    _check(rho, c)
    return c * companion_stieltjes_prime(c * rho, c) + (1.0 - c) / (c * rho * rho)


def power_density_factor(rho, c):
    """f(rho) = m(rho) + rho m'(rho); deterministic power is gamma * f(rho).

    Equals (1/rho^2) beta(1/rho) of the general machinery at R = I.
    """
    return gram_stieltjes(rho, c) + rho * gram_stieltjes_prime(rho, c)


def det_sinr_iid(rho, pa, sigma2, c):
    """Deterministic SINR at matched shrinkage rho for the iid channel."""
    den = -rho * rho * gram_stieltjes_prime(rho, c) + (sigma2 / pa) * power_density_factor(rho, c)
    return 1.0 / den


def optimal_iid(pa, sigma2, c):
    """(rho_star, gamma_star): SINR-optimal operating point, closed form."""
    if pa <= 0.0 or sigma2 <= 0.0:
        raise ValueError("pa and sigma2 must be positive")
    rho_star = sigma2 / pa
    return rho_star, pa / power_density_factor(rho_star, c)


def sinr_shape(rho, pa, sigma2, c):
    """The SINR denominator g(rho); minimized at rho = sigma2/pa.

    g has a unique interior minimum and tends to 1 as rho -> infinity, so it
    is convex only in a window around the minimum (see docs/math_notes.md).
    """
    return -rho * rho * gram_stieltjes_prime(rho, c) + (sigma2 / pa) * power_density_factor(rho, c)
