import numpy as np
import pytest

from singlerf.channel import complex_normal, rng_from_tag


@pytest.fixture
def rng():
    return rng_from_tag((2024, 7))


def draw_h(rng, m, k, sqrt_r=None):
    z = complex_normal(rng, (m, k))
    return z if sqrt_r is None else sqrt_r @ z


def draw_u(rng, k):
    return complex_normal(rng, k)


def batched_gram_quadratic(sqrt_r, m, k, draws, seed, batch=500):
    """Samples of Z = u^H (H^H H)^{-1} u, vectorized over realizations."""
    gen = rng_from_tag((seed,))
    out = np.empty(draws)
    done = 0
    while done < draws:
        n = min(batch, draws - done)
        z = complex_normal(gen, (n, m, k))
        h = z if sqrt_r is None else sqrt_r @ z
        gram = h.conj().transpose(0, 2, 1) @ h
        u = complex_normal(gen, (n, k))
        sol = np.linalg.solve(gram, u[..., None])[..., 0]
        out[done:done + n] = np.einsum("bk,bk->b", u.conj(), sol).real
        done += n
    return out


def gram_resolvent_mc(m, k, rho, draws, seed, batch=64):
    """Mean of (1/K) u^H ((1/K) H^H H + rho I)^{-1} u over `draws` realizations."""
    gen = rng_from_tag((seed,))
    eye = rho * np.eye(k)
    total = 0.0
    done = 0
    while done < draws:
        n = min(batch, draws - done)
        h = complex_normal(gen, (n, m, k))
        gram = (h.conj().transpose(0, 2, 1) @ h) / k
        u = complex_normal(gen, (n, k))
        sol = np.linalg.solve(gram + eye, u[..., None])[..., 0]
        total += float(np.einsum("bk,bk->", u.conj(), sol).real) / k
        done += n
    return total / draws


def batched_schur_y(sqrt_r, m, k, draws, seed, batch=500):
    """Samples of Y = (1/K) / [(H^H H)^{-1}]_{11}."""
    gen = rng_from_tag((seed,))
    out = np.empty(draws)
    e1 = np.zeros(k, dtype=complex)
    e1[0] = 1.0
    done = 0
    while done < draws:
        n = min(batch, draws - done)
        z = complex_normal(gen, (n, m, k))
        h = z if sqrt_r is None else sqrt_r @ z
        gram = h.conj().transpose(0, 2, 1) @ h
        col = np.linalg.solve(gram, np.broadcast_to(e1, (n, k))[..., None])[..., 0]
        out[done:done + n] = 1.0 / (k * col[:, 0].real)
        done += n
    return out
