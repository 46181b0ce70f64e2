"""Large-system deterministic equivalents for the constrained precoder.

Everything here is a function of the spectrum of the correlation matrix R
and the load K, evaluated in the regime M, K -> infinity at fixed ratio
c = K/M.  The central objects, all computed from the eigenvalues of R:

  alpha(t)   self-consistent normalized trace solving
             alpha = (1/K) tr( R (I + t R / (1 + t alpha))^{-1} )
  T(t)       the resolvent surrogate (I + t R / (1 + t alpha(t)))^{-1}
  beta(t)    trace ratio (1/K)tr(R T^2) / ((1+t alpha)^2 - (t^2/K)tr(RTRT));
             also equals -d/dt (1/K)tr T(t)
  P(rho)     deterministic transmit power (gamma/rho^2) beta(1/rho) of the
             shrunk zero-forcing solution at shrinkage level rho
  SINR(rho)  deterministic SINR when the shrinkage level is matched so that
             the transmit power equals the cap

The matched shrinkage level rho_bar solves P(rho) = Pa (P is strictly
decreasing), and the SINR-optimal design gain is
gamma_star = sigma^4 / (Pa * beta(Pa / sigma^2)), attained at
rho_bar = sigma^2 / Pa.

An Ensemble instance caches the eigendecomposition once so that sweeps over
t or rho cost O(M) per evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import channel as chan
from .errors import DegenerateDenominator, NoClipping, NoConvergence, NotPSD
from .roots import bisect_decreasing_log, expand_up

RHO_TINY = 1e-9  # proxy for rho -> 0+ when probing the unclipped regime


@dataclass(frozen=True)
class FixedPointSettings:
    """Solver knobs for the alpha(t) fixed point."""

    tol: float = 1e-12
    max_iter: int = 10_000
    damping: float = 1.0

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")


DEFAULT_SETTINGS = FixedPointSettings()


class FixedPoint(NamedTuple):
    value: float
    iterations: int
    residual: float


class ResolventTraces(NamedTuple):
    trace_t: float       # (1/K) tr T(t)
    trace_rt2: float     # (1/K) tr(R T(t)^2)
    trace_rtrt: float    # (1/K) tr(R T(t) R T(t))


@dataclass(frozen=True)
class DeterministicEquivalents:
    """Deterministic scenario summary at a given design gain gamma.

    When `clipping` is False the power cap is asymptotically inactive:
    rho_bar is 0, p_bar is the limiting (unconstrained) zero-forcing power
    and sinr_bar is the zero-forcing limit gamma/sigma2; alpha, beta and
    trace_t are NaN because the matched resolvent point does not exist.
    """

    gamma: float
    gamma_star: float
    rho_bar: float
    alpha: float
    beta: float
    trace_t: float
    p_bar: float
    sinr_bar: float
    clipping: bool

    @property
    def sinr_bar_db(self):
        return 10.0 * math.log10(self.sinr_bar)


class Ensemble:
    """Spectral cache of a correlation matrix plus the load K.

    Accepts a CorrelationSpec, a full matrix, or a 1-D vector of
    eigenvalues.  All methods are pure; the eigenvalue array is read-only.
    """

    def __init__(self, corr, n_users, settings: FixedPointSettings = DEFAULT_SETTINGS):
        if isinstance(corr, chan.CorrelationSpec):
            corr = chan.build_correlation(corr)
        corr = np.asarray(corr)
        if corr.ndim == 2:
            eigs = np.linalg.eigvalsh(corr)
        else:
            eigs = np.asarray(corr, dtype=float).copy()
        if eigs.min() < -chan.PSD_TOL:
            raise NotPSD(f"correlation spectrum has eigenvalue {eigs.min():g}")
        self.eigs = np.clip(eigs, 0.0, None)
        self.eigs.flags.writeable = False
        self.k = int(n_users)
        self.m = self.eigs.size
        self.settings = settings
        self._alpha_cache: dict[float, float] = {}

    @property
    def trace_r_over_k(self):
        return float(self.eigs.sum()) / self.k

    # -- fixed point ------------------------------------------------------

    def fixed_point(self, t, settings=None) -> FixedPoint:
        """Solve the alpha(t) equation by damped Picard iteration.

        Starts from (1/K) tr R, which upper-bounds the solution, so the
        iterates decrease monotonically; damping is halved whenever the
        update direction flips sign.
        """
        st = settings or self.settings
        eigs, k = self.eigs, self.k
        t = float(t)
        if t <= 0.0:
            raise ValueError("t must be positive")

        def step(a):
            return float(np.sum(eigs / (1.0 + t * eigs / (1.0 + t * a))) / k)

        alpha = self.trace_r_over_k
        damping = st.damping
        prev_delta = 0.0
        for it in range(1, st.max_iter + 1):
            target = step(alpha)
            delta = target - alpha
            if delta * prev_delta < 0.0:
                damping = max(0.5 * damping, 1e-3)
            alpha_next = alpha + damping * delta
            converged = abs(alpha_next - alpha) <= st.tol * max(abs(alpha_next), 1e-300)
            alpha = alpha_next
            prev_delta = delta
            if converged:
                residual = abs(alpha - step(alpha)) / max(abs(alpha), 1e-300)
                if residual <= st.tol:
                    return FixedPoint(alpha, it, residual)
        residual = abs(alpha - step(alpha)) / max(abs(alpha), 1e-300)
        raise NoConvergence(
            f"alpha fixed point not converged at t={t:g}", residual=residual, iterations=st.max_iter
        )

    def alpha(self, t) -> float:
        t = float(t)
        got = self._alpha_cache.get(t)
        if got is None:
            got = self.fixed_point(t).value
            self._alpha_cache[t] = got
        return got

    # -- resolvent traces --------------------------------------------------

    def traces(self, t, alpha=None) -> ResolventTraces:
        """Normalized traces of T, R T^2 and R T R T at the fixed point."""
        t = float(t)
        a = self.alpha(t) if alpha is None else float(alpha)
        g = 1.0 + t * a
        tdiag = g / (g + t * self.eigs)   # eigenvalues of T(t); R and T commute
        return ResolventTraces(
            trace_t=float(np.sum(tdiag)) / self.k,
            trace_rt2=float(np.sum(self.eigs * tdiag * tdiag)) / self.k,
            trace_rtrt=float(np.sum(self.eigs**2 * tdiag * tdiag)) / self.k,
        )

    def beta(self, t) -> float:
        """Trace ratio beta(t); equals -d/dt of (1/K) tr T(t)."""
        t = float(t)
        a = self.alpha(t)
        tr = self.traces(t, a)
        g = 1.0 + t * a
        den = g * g - t * t * tr.trace_rtrt
        if den <= 0.0:
            raise DegenerateDenominator(f"beta denominator {den:g} at t={t:g}")
        return tr.trace_rt2 / den

    # -- power and SINR ----------------------------------------------------

    def det_power(self, rho, gamma) -> float:
        """Deterministic transmit power (gamma/rho^2) beta(1/rho)."""
        if rho <= 0.0:
            raise ValueError("rho must be positive")
        if gamma == 0.0:
            return 0.0
        return gamma / (rho * rho) * self.beta(1.0 / rho)

    def matched_rho(self, gamma, pa, *, rel_tol=1e-10) -> float:
        """Shrinkage level rho_bar with det_power(rho_bar) = pa.

        det_power is strictly decreasing in rho.  Raises NoClipping when
        even rho -> 0+ cannot reach the cap (the constraint is
        asymptotically inactive and plain zero forcing applies).
        """
        if self.det_power(RHO_TINY, gamma) <= pa:
            raise NoClipping(
                f"asymptotic zero-forcing power {self.det_power(RHO_TINY, gamma):g} <= cap {pa:g}"
            )
        hi = expand_up(lambda r: self.det_power(r, gamma) - pa, 1.0)
        return bisect_decreasing_log(
            lambda r: self.det_power(r, gamma) / pa - 1.0, RHO_TINY, hi, f_tol=rel_tol
        )

    def det_sinr(self, rho, pa, sigma2) -> float:
        """Deterministic SINR at shrinkage level rho, power matched to pa."""
        if rho <= 0.0:
            raise ValueError("rho must be positive")
        t = 1.0 / rho
        b = self.beta(t)
        tr = self.traces(t)
        den = (sigma2 / (pa * rho * rho)) * b + (
            tr.trace_t - (self.m - self.k) / self.k - b / rho
        )
        if den <= 0.0:
            raise DegenerateDenominator(f"SINR denominator {den:g} at rho={rho:g}")
        return 1.0 / den

    def optimal_gamma(self, pa, sigma2) -> float:
        """Design gain maximizing the deterministic SINR; matched rho is sigma2/pa."""
        if pa <= 0.0 or sigma2 <= 0.0:
            raise ValueError("pa and sigma2 must be positive")
        return sigma2 * sigma2 / (pa * self.beta(pa / sigma2))

    def zf_limit_power(self, gamma) -> float:
        """Limiting unconstrained zero-forcing power (rho -> 0+)."""
        return self.det_power(RHO_TINY, gamma)

    def equivalents(self, pa, sigma2, gamma=None) -> DeterministicEquivalents:
        """Full deterministic summary; gamma=None means use optimal_gamma."""
        gstar = self.optimal_gamma(pa, sigma2)
        g = gstar if gamma is None else float(gamma)
        try:
            rho_bar = self.matched_rho(g, pa)
        except NoClipping:
            return DeterministicEquivalents(
                gamma=g, gamma_star=gstar, rho_bar=0.0,
                alpha=math.nan, beta=math.nan, trace_t=math.nan,
                p_bar=self.zf_limit_power(g), sinr_bar=g / sigma2, clipping=False,
            )
        t = 1.0 / rho_bar
        return DeterministicEquivalents(
            gamma=g,
            gamma_star=gstar,
            rho_bar=rho_bar,
            alpha=self.alpha(t),
            beta=self.beta(t),
            trace_t=self.traces(t).trace_t,
            p_bar=self.det_power(rho_bar, g),
            sinr_bar=self.det_sinr(rho_bar, pa, sigma2),
            clipping=True,
        )
