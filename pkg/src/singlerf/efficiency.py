"""Average power efficiency of the clipped precoder.

The radiated power of one realization is min(b^H b, Pa) where
b^H b = gamma * Z and Z = u^H (H^H H)^{-1} u, so

    eta_t = eta_a * ( P(gamma Z > Pa) + (gamma/Pa) E[Z ; gamma Z <= Pa] )
          = eta_a * E[min(gamma Z, Pa)] / Pa.

Z factorizes as X / Y with independent X = (1/K) u^H u (mean-1 Gamma of
shape K, exact) and Y = (1/K) / [(H^H H)^{-1}]_{11}.  For uncorrelated
antennas Y is a mean-(M-K+1)/K Gamma and Z is exactly beta-prime
(equivalently a scaled F); for correlated antennas the density of Y is
built from a saddle-point approximation driven by the eigenvalues R_i of
the correlation matrix:

    t(s):  1 = (1/K) sum_i R_i / (t (1 + R_i s) + R_i)        (t > 0)
    s0(y): 1 = (1/K) sum_i R_i / (y (1 + R_i s0) + R_i)
    I(s)  = sum_i log(1 + R_i (s + 1/t(s))) + K (log t(s) - 1)

    log fY(y) ~ K s0 y - I(s0) + I(0) + (v1 + v2) / 2

with curvature corrections v1, v2 built from the dimensionless trace
products (see docs/math_notes.md for the exact terms and why the saddle
must be allowed to go negative past the mode).  fY is renormalized to unit
mass on its grid; the raw mass is kept as a diagnostic.  fZ then follows by
quadrature of the ratio-density formula fZ(z) = int y fX(z y) fY(y) dy.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import stats

from . import channel as chan
from .errors import NoRoot, OutOfSupport
from .roots import bisect_decreasing, expand_up

TAIL_CUT = 1e-12
EQUATION_TOL = 1e-12


def symbol_power_density(x, k):
    """Density of X = (1/K) u^H u: mean-1 Gamma with shape K (K X ~ Gamma(K, 1))."""
    return stats.gamma.pdf(x, a=k, scale=1.0 / k)


def iid_power_coef_density(z, k, m):
    """Exact density of Z for uncorrelated antennas: beta-prime(K, M-K+1).

    Z = X'/Y' with independent X' ~ Gamma(K, 1) and Y' ~ Gamma(M-K+1, 1),
    i.e. a scaled F with (2K, 2(M-K+1)) degrees of freedom.
    """
    return stats.betaprime.pdf(z, k, m - k + 1)


class EfficiencyModel:
    """Densities of Y and Z plus the efficiency integral, for one spectrum.

    Building the model computes the y-grid density once (the expensive
    part); the efficiency is then cheap for any design gain because only
    the clipping threshold Pa/gamma moves.
    """

    def __init__(self, corr, n_users, *, grid_size=2048, tail_cut=TAIL_CUT):
        if isinstance(corr, chan.CorrelationSpec):
            corr = chan.build_correlation(corr)
        corr = np.asarray(corr)
        eigs = np.linalg.eigvalsh(corr) if corr.ndim == 2 else np.asarray(corr, dtype=float)
        eigs = np.clip(eigs, 0.0, None)
        self.eigs = eigs[eigs > 0.0]
        if self.eigs.size == 0:
            raise NoRoot("correlation spectrum is identically zero")
        self.k = int(n_users)
        self.m = eigs.size
        if self.eigs.size <= self.k:
            raise NoRoot("fewer positive correlation eigenvalues than users")
        self.grid_size = int(grid_size)
        self.tail_cut = float(tail_cut)

        self.t0 = self.solve_t(0.0)
        self.i_erg0 = self.i_erg(0.0)
        self._m2 = float(np.sum(self.eigs**2 / (self.t0 + self.eigs) ** 2)) / self.k
        self.y_grid, self.fy, self.y_mass_raw = self._build_fy()
        self.z_grid, self._fz_raw, self.z_mass_raw = self._build_fz()
        self.fz = self._fz_raw / self.z_mass_raw

    # -- scalar equations ---------------------------------------------------

    def solve_t(self, s):
        """Unique positive t with (1/K) sum R_i/(t(1+R_i s)+R_i) = 1."""
        eigs, k = self.eigs, self.k

        def resid(t):
            return float(np.sum(eigs / (t * (1.0 + eigs * s) + eigs))) / k - 1.0

        hi = expand_up(resid, 1.0)
        return bisect_decreasing(resid, 0.0, hi, f_tol=EQUATION_TOL)

    def saddle_floor(self, y):
        """Pole of the saddle equation; roots live strictly above it."""
        return -(1.0 / y + 1.0 / float(self.eigs.max()))

    def solve_s0(self, y):
        """Root s0 of 1 = (1/K) sum R_i/(y(1+R_i s)+R_i).

        The root is positive left of the mode and negative right of it; it
        always exists on (pole, inf) for y > 0, so negative values are
        admitted (restricting to s0 > 0 would discard half the mass).
        """
        if y <= 0.0:
            raise OutOfSupport("y must be positive")
        eigs, k = self.eigs, self.k

        def resid(s):
            return float(np.sum(eigs / (y * (1.0 + eigs * s) + eigs))) / k - 1.0

        floor = self.saddle_floor(y)
        lo = floor + 1e-12 * max(1.0, abs(floor))
        if resid(lo) < 0.0:
            raise OutOfSupport(f"no admissible saddle at y={y:g}")
        hi = expand_up(resid, max(1.0, abs(floor)))
        return bisect_decreasing(resid, lo, hi, f_tol=EQUATION_TOL)

    def i_erg(self, s):
        """sum_i log(1 + R_i (s + 1/t(s))) + K (log t(s) - 1)."""
        t = self.solve_t(s)
        return float(np.sum(np.log1p(self.eigs * (s + 1.0 / t)))) + self.k * (math.log(t) - 1.0)

    # -- density of Y ---------------------------------------------------------

    def log_density_y(self, y):
        """Unnormalized log fY(y) from the saddle-point expansion.

        At the saddle t(s0) = y, so I(s0) needs no extra solve.  v1 keeps
        the three dimensionless trace products; v2 uses the same product
        m1 (not the bare trace) so the expansion is exact for R = I.
        """
        s0 = self.solve_s0(y)
        eigs, k = self.eigs, self.k
        d1 = y * (1.0 + eigs * s0) + eigs
        i_s0 = float(np.sum(np.log1p(eigs * (s0 + 1.0 / y)))) + k * (math.log(y) - 1.0)
        m1 = float(np.sum(eigs**2 / d1**2)) / k
        m3 = float(np.sum(eigs**2 / ((self.t0 + eigs) * d1))) / k
        v1 = (
            -math.log(abs(1.0 - m1))
            - math.log(abs(1.0 - self._m2))
            + 2.0
            - math.log(abs(1.0 - m3))
        )
        v2 = -math.log(abs(m1 / (1.0 - m1)))
        return k * s0 * y - i_s0 + self.i_erg0 + 0.5 * (v1 + v2)

    def critical_y(self):
        """y where the saddle crosses zero: (1/K) sum R_i/(y + R_i) = 1 (the mode region)."""
        eigs, k = self.eigs, self.k

        def resid(y):
            return float(np.sum(eigs / (y + eigs))) / k - 1.0

        hi = expand_up(resid, float(eigs.max()))
        return bisect_decreasing(resid, 0.0, hi, f_tol=EQUATION_TOL)

    def _build_fy(self):
        yc = self.critical_y()
        probe = np.geomspace(yc * 1e-3, yc * 1e3, 512)
        logf = np.array([self._log_density_or_ninf(y) for y in probe])
        top = logf.max()
        keep = np.flatnonzero(logf >= top + math.log(self.tail_cut))
        lo = probe[max(keep[0] - 1, 0)]
        hi = probe[min(keep[-1] + 1, probe.size - 1)]
        grid = np.geomspace(lo, hi, self.grid_size)
        logf = np.array([self._log_density_or_ninf(y) for y in grid])
        density = math.sqrt(self.k / (2.0 * math.pi)) * np.exp(logf)
        mass = float(np.trapezoid(density, grid))
        return grid, density / mass, mass

    def _log_density_or_ninf(self, y):
        try:
            return self.log_density_y(y)
        except OutOfSupport:
            return -math.inf

    def density_y(self, y):
        """Normalized fY, interpolated on the cached grid (0 outside)."""
        return np.interp(y, self.y_grid, self.fy, left=0.0, right=0.0)

    # -- density of Z ---------------------------------------------------------

    def density_z_at(self, z):
        """fZ(z) = int y fX(z y) fY(y) dy by trapezoid on the y grid."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z <= 0.0):
            raise OutOfSupport("z must be positive")
        y = self.y_grid
        vals = np.trapezoid(y * symbol_power_density(np.outer(z, y), self.k) * self.fy, y, axis=1)
        return vals if vals.size > 1 else float(vals[0])

    def _build_fz(self):
        x_lo, x_hi = stats.gamma.ppf([1e-10, 1.0 - 1e-12], a=self.k, scale=1.0 / self.k)
        z_lo = max(x_lo / self.y_grid[-1], 1e-12)
        z_hi = x_hi / self.y_grid[0]
        grid = np.geomspace(z_lo, z_hi, self.grid_size)
        density = self.density_z_at(grid)
        mass = float(np.trapezoid(density, grid))
        return grid, density, mass

    def density_z(self, z):
        """Normalized fZ on the cached grid (0 outside)."""
        return np.interp(z, self.z_grid, self.fz, left=0.0, right=0.0)

    # -- efficiency -------------------------------------------------------------

    def power_efficiency(self, gamma, pa, eta_a):
        """eta_t = eta_a ( int_{Pa/gamma} fZ + (gamma/Pa) int^{Pa/gamma} z fZ )."""
        if gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if pa <= 0.0:
            raise ValueError("pa must be positive")
        cut = pa / gamma
        z, fz = self.z_grid, self.fz
        if cut <= z[0]:
            return eta_a * float(np.trapezoid(fz, z))
        if cut >= z[-1]:
            below = float(np.trapezoid(z * fz, z))
            return eta_a * (gamma / pa) * below
        idx = int(np.searchsorted(z, cut))
        f_cut = float(np.interp(cut, z, fz))
        z_below = np.concatenate([z[:idx], [cut]])
        f_below = np.concatenate([fz[:idx], [f_cut]])
        z_above = np.concatenate([[cut], z[idx:]])
        f_above = np.concatenate([[f_cut], fz[idx:]])
        mass_above = float(np.trapezoid(f_above, z_above))
        weighted_below = float(np.trapezoid(z_below * f_below, z_below))
        return eta_a * (mass_above + (gamma / pa) * weighted_below)


@lru_cache(maxsize=8)
def _cached_model(key, n_users, grid_size):
    kind, m, a, matrix_bytes = key
    if kind == chan.EXPLICIT:
        matrix = np.frombuffer(matrix_bytes, dtype=complex).reshape(m, m)
        spec = chan.CorrelationSpec.explicit(matrix)
    else:
        spec = chan.CorrelationSpec(kind, m, a=a)
    return EfficiencyModel(spec, n_users, grid_size=grid_size)


def model_for(spec: chan.CorrelationSpec, n_users, grid_size=2048) -> EfficiencyModel:
    """Memoized EfficiencyModel lookup (sweeps reuse the same spectrum)."""
    matrix_bytes = spec.matrix.tobytes() if spec.kind == chan.EXPLICIT else b""
    return _cached_model((spec.kind, spec.m, spec.a, matrix_bytes), n_users, grid_size)


def power_efficiency_iid_exact(gamma, pa, eta_a, k, m):
    """Efficiency through the exact beta-prime law of Z (uncorrelated check path)."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    cut = pa / gamma
    dist = stats.betaprime(k, m - k + 1)
    mass_above = 1.0 - dist.cdf(cut)
    # E[Z; Z <= cut] via the beta-prime mean recurrence:
    # z * f_{a,b}(z) = (a/(b-1)) * f_{a+1,b-1}(z)
    mean_below = k / (m - k) * stats.betaprime(k + 1, m - k).cdf(cut)
    return eta_a * (mass_above + (gamma / pa) * mean_below)


def direct_mc_efficiency(spec, k, gamma, pa, eta_a, draws, seed):
    """Monte Carlo oracle eta_a E[min(gamma Z, Pa)]/Pa with Z simulated exactly."""
    sqrt_r = chan.matrix_sqrt(chan.build_correlation(spec))
    rng = chan.rng_from_tag((seed,))
    total = 0.0
    batch = 512
    done = 0
    while done < draws:
        n = min(batch, draws - done)
        z = chan.complex_normal(rng, (n, spec.m, k))
        h = sqrt_r @ z
        gram = h.conj().transpose(0, 2, 1) @ h
        u = chan.complex_normal(rng, (n, k))
        sol = np.linalg.solve(gram, u[..., None])[..., 0]
        zval = np.einsum("bk,bk->b", u.conj(), sol).real
        total += float(np.sum(np.minimum(gamma * zval, pa)))
        done += n
    return eta_a * total / (draws * pa)
