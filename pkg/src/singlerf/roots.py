"""Scalar root finding for strictly decreasing functions.

All the scalar equations in this package (Lagrange multiplier power match,
matched shrinkage level, saddle equations of the efficiency densities) are
strictly monotone, so plain bracketing + bisection is both simple and
guaranteed.  Tolerances are on the *function value* because every contract
in the package is stated as a residual bound.
"""

from __future__ import annotations

import math

from .errors import NoConvergence, RootNotBracketed

_MAX_EXPAND = 200


def expand_up(f, hi, *, factor=2.0):
    """Grow `hi` geometrically until f(hi) < 0; returns the new hi.

    `f` must be decreasing with a negative limit (or -inf) at +infinity.
    """
    for _ in range(_MAX_EXPAND):
        if f(hi) < 0.0:
            return hi
        hi *= factor
    raise RootNotBracketed(f"no sign change up to {hi:g}")


def bisect_decreasing(f, lo, hi, *, f_tol, x_rtol=1e-15, max_iter=300):
    """Root of a strictly decreasing f with f(lo) >= 0 >= f(hi).

    Stops when |f(mid)| <= f_tol or the bracket collapses to relative width
    x_rtol; the returned point always satisfies the f_tol bound or is the
    best float representable in the bracket.
    """
    flo, fhi = f(lo), f(hi)
    if flo < 0.0 or fhi > 0.0:
        raise RootNotBracketed(f"f({lo:g})={flo:g}, f({hi:g})={fhi:g} do not bracket a root")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if not math.isfinite(fm):
            raise NoConvergence("non-finite evaluation inside bracket", residual=fm)
        if abs(fm) <= f_tol:
            return mid
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= x_rtol * max(abs(lo), abs(hi), 1e-300):
            return mid
    raise NoConvergence("bisection exhausted its iteration budget", residual=f(mid))


def bisect_decreasing_log(f, lo, hi, *, f_tol, max_iter=300):
    """Same as bisect_decreasing but bisects on a log-spaced axis (lo, hi > 0)."""
    return math.exp(
        bisect_decreasing(
            lambda x: f(math.exp(x)), math.log(lo), math.log(hi), f_tol=f_tol, max_iter=max_iter
        )
    )
