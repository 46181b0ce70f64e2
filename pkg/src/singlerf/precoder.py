"""Per-realization precoding: power-clipped zero forcing and the MMSE baseline.

The transmit vector solves

    minimize  || H^H x - sqrt(gamma) u ||^2   subject to  x^H x <= Pa.

Writing b = sqrt(gamma) H (H^H H)^{-1} u (the zero-forcing point) and
A = H H^H, the solution is b itself when b^H b <= Pa and otherwise the
shrunk point x = (A + delta I)^{-1} A b with the multiplier delta > 0
chosen so the power lands exactly on the cap.  Using the push-through
identity, x(delta) = sqrt(gamma) H (H^H H + delta I)^{-1} u, so with the
eigendecomposition H^H H = V diag(lam) V^H and w = V^H u the power is the
strictly decreasing scalar function

    P(delta) = gamma * sum_k lam_k |w_k|^2 / (lam_k + delta)^2,

which bisection drives onto the cap to relative accuracy 1e-12.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import CorrelationSpec
from .errors import BadDimensions, EmptyInput, SingularChannel
from .roots import bisect_decreasing, expand_up

COND_LIMIT = 1e12
POWER_MATCH_RTOL = 1e-12


@dataclass(frozen=True)
class SystemConfig:
    """Scenario scalars: array size, load, power cap, noise, design gain.

    gamma=None means "use the SINR-optimal gain for this scenario"; the
    Monte Carlo layer resolves it through the deterministic equivalents.
    eta_a is the amplifier efficiency ceiling used by the efficiency module.
    """

    m: int
    k: int
    pa: float = 1.0
    sigma2: float = 1.0
    gamma: float | None = None
    eta_a: float = 1.0
    corr: CorrelationSpec = field(default=None)

    def __post_init__(self):
        if self.k >= self.m:
            raise BadDimensions(f"need K < M, got K={self.k}, M={self.m}")
        if self.m < 1 or self.k < 1:
            raise BadDimensions("M and K must be positive")
        if self.pa <= 0.0:
            raise ValueError("pa must be positive")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")
        if self.gamma is not None and self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if not 0.0 < self.eta_a <= 1.0:
            raise ValueError("eta_a must be in (0, 1]")
        if self.corr is None:
            object.__setattr__(self, "corr", CorrelationSpec.identity(self.m))
        elif self.corr.m != self.m:
            raise BadDimensions(f"correlation is {self.corr.m}x{self.corr.m}, config says M={self.m}")

    @property
    def c(self):
        return self.k / self.m


class PrecodeCase(enum.Enum):
    ZF = "zf"
    CLIPPED = "clipped"


@dataclass(frozen=True)
class PrecodeResult:
    x: np.ndarray
    delta: float
    case: PrecodeCase
    power: float


class _GramEig:
    """Eigendecomposition of H^H H with the conditioning guard applied."""

    def __init__(self, h):
        gram = h.conj().T @ h
        lam, v = np.linalg.eigh(gram)
        if lam[0] <= 0.0 or lam[-1] / lam[0] > COND_LIMIT:
            cond = math.inf if lam[0] <= 0.0 else lam[-1] / lam[0]
            raise SingularChannel(f"cond(H^H H) = {cond:g} exceeds {COND_LIMIT:g}")
        self.lam = lam
        self.v = v

    def weights(self, u):
        w = self.v.conj().T @ u
        return w, np.abs(w) ** 2


def zf_precode(h, u, gamma):
    """Zero-forcing point b = sqrt(gamma) H (H^H H)^{-1} u."""
    if gamma == 0.0:
        return np.zeros(h.shape[0], dtype=complex)
    eig = _GramEig(h)
    w, _ = eig.weights(u)
    return math.sqrt(gamma) * (h @ (eig.v @ (w / eig.lam)))


def constrained_precode(h, u, cfg: SystemConfig, gamma=None) -> PrecodeResult:
    """Solve the power-capped distortion problem for one realization.

    Returns the zero-forcing point when it fits inside the cap, otherwise
    the shrunk point on the power sphere together with the multiplier.
    """
    g = cfg.gamma if gamma is None else gamma
    if g is None:
        raise ValueError("gamma unresolved; pass a value or set cfg.gamma")
    pa = cfg.pa
    if g == 0.0:
        return PrecodeResult(np.zeros(h.shape[0], dtype=complex), 0.0, PrecodeCase.ZF, 0.0)
    eig = _GramEig(h)
    lam = eig.lam
    w, aw2 = eig.weights(u)
    b_power = g * float(np.sum(aw2 / lam))
    if b_power <= pa:
        x = math.sqrt(g) * (h @ (eig.v @ (w / lam)))
        return PrecodeResult(x, 0.0, PrecodeCase.ZF, b_power)

    def power(delta):
        return g * float(np.sum(lam * aw2 / (lam + delta) ** 2))

    hi = expand_up(lambda d: power(d) / pa - 1.0, float(np.sum(lam)) / cfg.k)
    delta = bisect_decreasing(
        lambda d: power(d) / pa - 1.0, 0.0, hi, f_tol=POWER_MATCH_RTOL
    )
    x = math.sqrt(g) * (h @ (eig.v @ (w / (lam + delta))))
    return PrecodeResult(x, delta, PrecodeCase.CLIPPED, power(delta))


def mmse_precode(h, u, cfg: SystemConfig):
    """Average-power baseline x = xi * H (H^H H + (K sigma2 / Pa) I)^{-1} u.

    xi normalizes the realized vector to the cap exactly: x^H x = Pa.
    """
    k = h.shape[1]
    reg = k * cfg.sigma2 / cfg.pa
    gram = h.conj().T @ h
    try:
        x = h @ np.linalg.solve(gram + reg * np.eye(k), u)
    except np.linalg.LinAlgError as exc:
        raise SingularChannel(f"regularized solve failed: {exc}") from None
    norm2 = float(np.vdot(x, x).real)
    if norm2 <= 0.0:
        raise SingularChannel("regularized solve produced a zero vector")
    return x * math.sqrt(cfg.pa / norm2)


def sinr_components(h, x, u, gamma, sigma2):
    """(numerator, denominator) of the aggregate SINR for one realization.

    numerator = gamma u^H u, denominator = ||H^H x - sqrt(gamma) u||^2 + K sigma2.
    Kept separate so the experiment layer can pool trials before dividing.
    """
    k = h.shape[1]
    dist = h.conj().T @ x - math.sqrt(gamma) * u
    num = gamma * float(np.vdot(u, u).real)
    den = float(np.vdot(dist, dist).real) + k * sigma2
    return num, den


def empirical_sinr(h, x, u, gamma, sigma2):
    """Aggregate SINR gamma u^H u / (||H^H x - sqrt(gamma) u||^2 + K sigma2)."""
    num, den = sinr_components(h, x, u, gamma, sigma2)
    return num / den


def mmse_user_sinrs(h, u, cfg: SystemConfig):
    """Per-user SINRs of the MMSE baseline for one realization.

    The precoding matrix column for user j is xi * [H (H^H H + reg I)^{-1}]_j
    with xi fixed by the realized transmit power x^H x = Pa (the same
    normalization the transmitted vector uses).  User k sees signal power
    |G_kk|^2 and interference sum_{j != k} |G_kj|^2 with G = H^H P.
    """
    k = h.shape[1]
    reg = k * cfg.sigma2 / cfg.pa
    gram = h.conj().T @ h
    try:
        p = h @ np.linalg.solve(gram + reg * np.eye(k), np.eye(k, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularChannel(f"regularized solve failed: {exc}") from None
    x = p @ u
    norm2 = float(np.vdot(x, x).real)
    if norm2 <= 0.0:
        raise SingularChannel("regularized solve produced a zero vector")
    xi2 = cfg.pa / norm2
    gain = h.conj().T @ p
    sig = xi2 * np.abs(np.diag(gain)) ** 2
    interference = xi2 * (np.sum(np.abs(gain) ** 2, axis=1) - np.abs(np.diag(gain)) ** 2)
    return sig / (interference + cfg.sigma2)


def papr_estimate(powers, pa):
    """Peak-to-average power ratio 10 log10(Pa / mean(powers)) in dB.

    With a single amplifier the instantaneous peak is the cap Pa, so the
    PAPR is the cap over the ensemble-average radiated power.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.size == 0:
        raise EmptyInput("papr_estimate needs at least one power sample")
    if powers.min() < 0.0 or powers.max() > pa * (1.0 + 1e-9):
        raise ValueError("power samples must lie in [0, Pa]")
    # clipped-case powers sit within solver tolerance of the cap, so the
    # mean can exceed Pa by ~1e-12; clamp the resulting -4e-13 dB to zero
    return max(0.0, 10.0 * math.log10(pa / powers.mean()))
