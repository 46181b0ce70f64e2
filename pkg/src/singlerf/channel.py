"""Correlation models and correlated Rayleigh channel sampling.

A downlink channel matrix H is M x K with columns h_k = S z_k, where
S S^H = R is the antenna correlation matrix and z_k is standard complex
Gaussian.  CN(0,1) here means independent real/imaginary parts of variance
1/2 each, so E|z|^2 = 1 and E h_k h_k^H = R.

Sampling is reproducible: every draw is tied to a seed tag (an integer
tuple), and the generator is counter-based (Philox), so trials can run on
any number of workers in any order with identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import BadCoefficient, BadDimensions, NonHermitian, NotPSD

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10

IDENTITY = "identity"
EXPONENTIAL = "exponential"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class CorrelationSpec:
    """Declarative description of an M x M antenna correlation matrix.

    kind is one of "identity", "exponential" (geometric off-diagonal decay
    with complex coefficient a, |a| < 1, unit diagonal) or "explicit" (a
    user-supplied Hermitian PSD matrix).
    """

    kind: str
    m: int
    a: complex = 0.0
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise BadDimensions(f"antenna count must be positive, got {self.m}")
        if self.kind == EXPONENTIAL and abs(self.a) >= 1.0:
            raise BadCoefficient(f"exponential coefficient needs |a| < 1, got |a|={abs(self.a):g}")
        if self.kind == EXPLICIT:
            if self.matrix is None or self.matrix.shape != (self.m, self.m):
                raise BadDimensions("explicit correlation needs an M x M matrix")
        elif self.kind not in (IDENTITY, EXPONENTIAL):
            raise ValueError(f"unknown correlation kind {self.kind!r}")

    @classmethod
    def identity(cls, m):
        return cls(IDENTITY, m)

    @classmethod
    def exponential(cls, a, m):
        return cls(EXPONENTIAL, m, a=complex(a))

    @classmethod
    def explicit(cls, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        return cls(EXPLICIT, matrix.shape[0], matrix=matrix)

    def with_size(self, m):
        """Same model at a different antenna count (explicit matrices cannot resize)."""
        if self.kind == EXPLICIT and m != self.m:
            raise BadDimensions("explicit correlation matrix cannot be resized")
        return CorrelationSpec(self.kind, m, a=self.a, matrix=self.matrix)

    def label(self):
        if self.kind == IDENTITY:
            return "identity"
        if self.kind == EXPONENTIAL:
            a = self.a
            return f"exp:{a.real:g},{a.imag:g}" if a.imag else f"exp:{a.real:g}"
        return "explicit"


def build_correlation(spec: CorrelationSpec) -> np.ndarray:
    """Realize the correlation matrix R described by `spec`.

    The result is Hermitian PSD; explicit inputs are validated against the
    same tolerances (Hermitian to 1e-10, smallest eigenvalue >= -1e-10).
    """
    if spec.kind == IDENTITY:
        return np.eye(spec.m, dtype=complex)
    if spec.kind == EXPONENTIAL:
        powers = np.complex128(spec.a) ** np.arange(spec.m)
        r = toeplitz(np.conj(powers), powers)
        return np.asarray(r, dtype=complex)
    r = np.asarray(spec.matrix, dtype=complex)
    herm_err = np.max(np.abs(r - r.conj().T))
    if herm_err > HERMITIAN_TOL:
        raise NonHermitian(f"max |R - R^H| = {herm_err:g} exceeds {HERMITIAN_TOL:g}")
    r = 0.5 * (r + r.conj().T)
    w = np.linalg.eigvalsh(r)
    if w[0] < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {w[0]:g} below -{PSD_TOL:g}")
    return r


def matrix_sqrt(r: np.ndarray) -> np.ndarray:
    """A factor S with S S^H = R.

    Uses the Cholesky lower factor when R is positive definite and falls
    back to the Hermitian eigendecomposition square root when R is singular
    (the sampled channel distribution is invariant to the factor choice).
    """
    r = np.asarray(r, dtype=complex)
    herm_err = np.max(np.abs(r - r.conj().T))
    if herm_err > HERMITIAN_TOL:
        raise NonHermitian(f"max |R - R^H| = {herm_err:g} exceeds {HERMITIAN_TOL:g}")
    try:
        return np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(r)
        if w[0] < -PSD_TOL:
            raise NotPSD(f"smallest eigenvalue {w[0]:g} below -{PSD_TOL:g}") from None
        return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


@dataclass(frozen=True)
class ChannelRealization:
    """One sampled channel matrix H (M x K) and data vector u (length K)."""

    h: np.ndarray
    u: np.ndarray
    seed_tag: tuple[int, ...]

    @property
    def m(self):
        return self.h.shape[0]

    @property
    def k(self):
        return self.h.shape[1]

    @property
    def c(self):
        """Load ratio K/M."""
        return self.k / self.m


def rng_from_tag(seed_tag) -> np.random.Generator:
    """Counter-based generator keyed by an integer tuple.

    Philox substreams keyed through SeedSequence are independent of thread
    or worker scheduling, which is what makes the Monte Carlo harness
    reproducible under any --workers setting.
    """
    entropy = [int(x) & 0xFFFFFFFFFFFFFFFF for x in seed_tag]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def complex_normal(rng, shape):
    """CN(0,1) array: real and imaginary parts independent N(0, 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_realization(r_sqrt: np.ndarray, k: int, seed_tag) -> ChannelRealization:
    """Draw H = S Z (columns h_j = S z_j) and u ~ CN(0, I_K), deterministically.

    `r_sqrt` is any factor S with S S^H = R.  Identical seed tags give
    bit-identical output.
    """
    m = r_sqrt.shape[0]
    if k >= m:
        raise BadDimensions(f"need K < M, got K={k}, M={m}")
    rng = rng_from_tag(seed_tag)
    z = complex_normal(rng, (m, k))
    u = complex_normal(rng, k)
    return ChannelRealization(h=r_sqrt @ z, u=u, seed_tag=tuple(int(x) for x in seed_tag))


def parse_corr(text: str, m: int) -> CorrelationSpec:
    """Parse a CLI correlation string: identity | exp:<re>[,<im>] | file:<path>."""
    text = text.strip()
    if text == "identity":
        return CorrelationSpec.identity(m)
    if text.startswith("exp:"):
        parts = text[4:].split(",")
        try:
            re_part = float(parts[0])
            im_part = float(parts[1]) if len(parts) > 1 else 0.0
        except (ValueError, IndexError):
            raise ValueError(f"bad exponential correlation spec {text!r}") from None
        return CorrelationSpec.exponential(complex(re_part, im_part), m)
    if text.startswith("file:"):
        matrix = read_correlation_file(text[5:])
        if matrix.shape[0] != m:
            raise BadDimensions(
                f"correlation file is {matrix.shape[0]}x{matrix.shape[0]}, config says M={m}"
            )
        return CorrelationSpec.explicit(matrix)
    raise ValueError(f"unknown correlation spec {text!r}")


def read_correlation_file(path) -> np.ndarray:
    """Plain-text matrix format: first line M, then M rows of M `re im` pairs."""
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens:
        raise ValueError(f"empty correlation file {path}")
    m = int(tokens[0])
    values = np.array([float(t) for t in tokens[1:]])
    if values.size != 2 * m * m:
        raise ValueError(f"correlation file {path}: expected {2 * m * m} numbers, got {values.size}")
    pairs = values.reshape(m, m, 2)
    return pairs[..., 0] + 1j * pairs[..., 1]


def write_correlation_file(path, matrix):
    matrix = np.asarray(matrix, dtype=complex)
    m = matrix.shape[0]
    with open(path, "w") as fh:
        fh.write(f"{m}\n")
        for row in matrix:
            fh.write(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row) + "\n")
