import math

import numpy as np
import pytest

from conftest import batched_gram_quadratic
from singlerf import iid
from singlerf.rmt import Ensemble


def test_companion_closed_form_value():
    # c = 1/2, rho = 1: -2 / (-1/2 - sqrt(17/4))
    want = -2.0 / (0.5 - 1.0 - math.sqrt((1.5) ** 2 + 2.0))
    assert want == pytest.approx(0.780776, abs=5e-7)
    assert iid.companion_stieltjes(1.0, 0.5) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("fn", [iid.companion_stieltjes, iid.gram_stieltjes])
def test_resolvent_tail(fn):
    assert 1e8 * fn(1e8, 0.5) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("c", [0.25, 0.5, 0.75])
def test_analytic_derivatives_match_finite_differences(c):
    h = 1e-6
    for rho in (0.2, 1.0, 3.7):
        fd_c = (iid.companion_stieltjes(rho + h, c) - iid.companion_stieltjes(rho - h, c)) / (2 * h)
        assert abs(fd_c - iid.companion_stieltjes_prime(rho, c)) <= 1e-7
        fd_g = (iid.gram_stieltjes(rho + h, c) - iid.gram_stieltjes(rho - h, c)) / (2 * h)
        assert abs(fd_g - iid.gram_stieltjes_prime(rho, c)) <= 1e-7


def test_gram_transform_positive_decreasing():
    grid = np.geomspace(0.01, 100, 80)
    for c in (0.25, 0.5, 0.75):
        vals = [iid.gram_stieltjes(r, c) for r in grid]
        assert all(v > 0 for v in vals)
        assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("rho", [0.1, 1.0, 10.0])
def test_gram_transform_matches_general_machinery(rho):
    m, k = 128, 64
    ens = Ensemble(np.ones(m), k)
    t = 1.0 / rho
    general = (ens.traces(t).trace_t - (m - k) / k) / rho
    assert abs(iid.gram_stieltjes(rho, 0.5) - general) / general <= 1e-8
    general_f = ens.beta(t) / rho**2
    assert abs(iid.power_density_factor(rho, 0.5) - general_f) / general_f <= 1e-8


def test_gram_transform_monte_carlo_oracle():
    # (1/K) u^H ((1/K) H^H H + rho I)^{-1} u at K = 256, c = 1/2, rho = 1
    from conftest import gram_resolvent_mc

    mc = gram_resolvent_mc(512, 256, 1.0, draws=400, seed=271828)
    assert mc == pytest.approx(iid.gram_stieltjes(1.0, 0.5), rel=0.01)


def test_optimal_point_closed_form():
    rho_star, gamma_star = iid.optimal_iid(1.0, 1.0, 0.5)
    assert rho_star == 1.0
    assert gamma_star == pytest.approx(1.0 / iid.power_density_factor(1.0, 0.5), rel=1e-14)
    ens = Ensemble(np.ones(64), 32)
    assert gamma_star == pytest.approx(ens.optimal_gamma(1.0, 1.0), rel=1e-9)


@pytest.mark.parametrize("rho", [0.1, 1.0, 10.0])
def test_det_sinr_agreement_with_general_path(rho):
    ens = Ensemble(np.ones(128), 64)
    pa, sigma2 = 1.0, 0.5
    a = iid.det_sinr_iid(rho, pa, sigma2, 0.5)
    b = ens.det_sinr(rho, pa, sigma2)
    assert abs(a - b) / b <= 1e-8


@pytest.mark.parametrize("c", [0.25, 0.5, 0.75])
def test_sinr_shape_stationary_at_optimum(c):
    pa, sigma2 = 1.0, 1.0
    h = 1e-5
    slope = (iid.sinr_shape(1.0 + h, pa, sigma2, c) - iid.sinr_shape(1.0 - h, pa, sigma2, c)) / (2 * h)
    assert abs(slope) <= 1e-5


@pytest.mark.parametrize("c", [0.25, 0.5, 0.75])
def test_sinr_shape_locally_convex_near_optimum(c):
    # second differences are positive in a window around the minimum;
    # far above it the shape saturates toward 1 and convexity genuinely ends
    pa, sigma2 = 1.0, 1.0
    for rho in np.geomspace(0.1, 2.0, 40):
        h = 1e-3 * rho
        d2 = (
            iid.sinr_shape(rho + h, pa, sigma2, c)
            - 2 * iid.sinr_shape(rho, pa, sigma2, c)
            + iid.sinr_shape(rho - h, pa, sigma2, c)
        ) / h**2
        assert d2 > 0.0


def test_gram_transform_against_monte_carlo_mean_of_z():
    # E Z -> gram limit at rho -> 0+: E u^H (H^H H)^{-1} u = K/(M-K) exactly
    m, k = 40, 20
    zs = batched_gram_quadratic(None, m, k, 20_000, seed=11)
    assert np.mean(zs) == pytest.approx(k / (m - k), rel=0.02)
