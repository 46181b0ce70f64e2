"""Seeded, parallel experiment runner for scenario sweeps.

Each sweep point runs `trials` independent channel realizations through
sample -> precode -> per-realization metrics, then reduces them in trial
order.  Every trial owns a counter-based substream keyed by
(master_seed, sweep_index, trial_index, attempt), so results are
bit-identical for any worker count and adding sweep points never perturbs
existing trials.

SINR aggregation pools trials before dividing: the reported figure is
sum_t gamma u_t^H u_t / sum_t (||H_t^H x_t - sqrt(gamma) u_t||^2 + K sigma2),
i.e. total signal energy over total distortion-plus-noise energy across the
ensemble, converted to dB.  The 95% confidence halfwidth comes from the
delta method on that ratio and is reported in dB by transforming the
interval endpoints.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import precoder as pc
from .channel import (
    CorrelationSpec,
    EXPONENTIAL,
    IDENTITY,
    build_correlation,
    matrix_sqrt,
    sample_realization,
)
from .errors import EmptyInput, SingularChannel, TooManyRejections
from .rmt import DeterministicEquivalents, Ensemble

SWEEPABLE = ("m", "gamma", "a", "sigma2")
_MAX_ATTEMPTS = 64

CONSTRAINED = "constrained"
MMSE = "mmse"


@dataclass(frozen=True)
class ExperimentPlan:
    """A scenario sweep: base config, one swept parameter, trial budget."""

    base: pc.SystemConfig
    sweep_name: str
    sweep_values: tuple
    trials: int = 1000
    master_seed: int = 0
    emit_de: bool = True
    scheme: str = CONSTRAINED

    def __post_init__(self):
        if self.sweep_name not in SWEEPABLE:
            raise ValueError(f"sweep parameter must be one of {SWEEPABLE}, got {self.sweep_name!r}")
        if len(self.sweep_values) == 0:
            raise EmptyInput("empty sweep")
        keys = [abs(complex(v)) if self.sweep_name == "a" else float(v) for v in self.sweep_values]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.scheme not in (CONSTRAINED, MMSE):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        for value in self.sweep_values:
            self.config_for(value)  # raises if any swept config is invalid

    def config_for(self, value) -> pc.SystemConfig:
        base = self.base
        if self.sweep_name == "m":
            m = int(value)
            return replace(base, m=m, corr=base.corr.with_size(m))
        if self.sweep_name == "gamma":
            return replace(base, gamma=float(value))
        if self.sweep_name == "sigma2":
            return replace(base, sigma2=float(value))
        if base.corr.kind not in (EXPONENTIAL, IDENTITY):
            raise ValueError("sweeping the correlation coefficient needs an exponential model")
        return replace(base, corr=CorrelationSpec.exponential(complex(value), base.m))


@dataclass(frozen=True)
class ExperimentRecord:
    """Aggregated Monte Carlo output for one sweep point."""

    swept_value: float
    gamma: float
    mean_sinr: float
    mean_sinr_db: float
    sinr_ci_halfwidth_db: float
    mean_power: float
    papr_db: float
    clip_fraction: float
    de: DeterministicEquivalents | None
    trials_used: int
    rejected_trials: int


def trial_tag(master_seed, sweep_index, trial_index, attempt=0):
    return (int(master_seed), int(sweep_index), int(trial_index), int(attempt))


def _run_trial(sqrt_r, cfg, gamma, tag_base, scheme):
    """One realization with ill-conditioning resampling; deterministic."""
    rejected = 0
    for attempt in range(_MAX_ATTEMPTS):
        real = sample_realization(sqrt_r, cfg.k, tag_base + (attempt,))
        try:
            if scheme == CONSTRAINED:
                res = pc.constrained_precode(real.h, real.u, cfg, gamma)
                num, den = pc.sinr_components(real.h, res.x, real.u, gamma, cfg.sigma2)
                return num, den, res.power, res.case is pc.PrecodeCase.CLIPPED, rejected
            sinrs = pc.mmse_user_sinrs(real.h, real.u, cfg)
            return float(np.mean(sinrs)), 1.0, cfg.pa, False, rejected
        except SingularChannel:
            rejected += 1
    raise TooManyRejections(f"trial {tag_base} rejected {_MAX_ATTEMPTS} times in a row")


def _run_chunk(args):
    sqrt_r, cfg, gamma, master_seed, sweep_index, lo, hi, scheme = args
    n = hi - lo
    nums = np.empty(n)
    dens = np.empty(n)
    powers = np.empty(n)
    clipped = np.zeros(n, dtype=bool)
    rejected = 0
    for i, trial in enumerate(range(lo, hi)):
        num, den, power, clip, rej = _run_trial(
            sqrt_r, cfg, gamma, trial_tag(master_seed, sweep_index, trial), scheme
        )
        nums[i] = num
        dens[i] = den
        powers[i] = power
        clipped[i] = clip
        rejected += rej
    return lo, nums, dens, powers, clipped, rejected


def _ratio_ci_halfwidth_db(nums, dens):
    """95% halfwidth of 10 log10(sum nums / sum dens), delta method."""
    n = nums.size
    ratio = float(nums.sum() / dens.sum())
    if n < 2:
        return 0.0
    dbar = float(dens.mean())
    cov = np.cov(np.vstack([nums, dens]), ddof=1)
    var = (cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio * ratio * cov[1, 1]) / (n * dbar * dbar)
    hw = 1.96 * math.sqrt(max(var, 0.0))
    lo, hi = ratio - hw, ratio + hw
    if lo <= 0.0:
        return math.inf
    return 5.0 * math.log10(hi / lo)


def _run_point(pool, workers, cfg, trials, master_seed, sweep_index, scheme, emit_de, swept_value):
    """Run all trials of one sweep point and aggregate them in trial order."""
    ensemble = Ensemble(cfg.corr, cfg.k)
    gamma = cfg.gamma if cfg.gamma is not None else ensemble.optimal_gamma(cfg.pa, cfg.sigma2)
    sqrt_r = matrix_sqrt(build_correlation(cfg.corr))

    chunk = max(1, -(-trials // (4 * workers))) if workers > 1 else trials
    bounds = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]
    args = [(sqrt_r, cfg, gamma, master_seed, sweep_index, lo, hi, scheme) for lo, hi in bounds]
    results = pool.map(_run_chunk, args) if pool else map(_run_chunk, args)

    nums = np.empty(trials)
    dens = np.empty(trials)
    powers = np.empty(trials)
    clipped = np.zeros(trials, dtype=bool)
    rejected = 0
    for lo, cn, cd, cp, cc, rej in results:
        hi = lo + cn.size
        nums[lo:hi] = cn
        dens[lo:hi] = cd
        powers[lo:hi] = cp
        clipped[lo:hi] = cc
        rejected += rej
    if rejected > 0.01 * trials:
        raise TooManyRejections(f"{rejected} rejections in {trials} trials")

    mean_sinr = float(nums.sum() / dens.sum())
    de = None
    if emit_de and scheme == CONSTRAINED:
        de = ensemble.equivalents(cfg.pa, cfg.sigma2, cfg.gamma)
    return ExperimentRecord(
        swept_value=swept_value,
        gamma=gamma,
        mean_sinr=mean_sinr,
        mean_sinr_db=10.0 * math.log10(mean_sinr),
        sinr_ci_halfwidth_db=_ratio_ci_halfwidth_db(nums, dens),
        mean_power=float(powers.mean()),
        papr_db=pc.papr_estimate(powers, cfg.pa),
        clip_fraction=float(clipped.mean()),
        de=de,
        trials_used=trials,
        rejected_trials=rejected,
    )


def run_plan(plan: ExperimentPlan, workers=1) -> list[ExperimentRecord]:
    """Execute the sweep; one record per swept value, in sweep order."""
    records = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for sweep_index, value in enumerate(plan.sweep_values):
            cfg = plan.config_for(value)
            records.append(
                _run_point(
                    pool,
                    workers,
                    cfg,
                    plan.trials,
                    plan.master_seed,
                    sweep_index,
                    plan.scheme,
                    plan.emit_de,
                    swept_value=float(abs(value)) if plan.sweep_name == "a" else float(value),
                )
            )
    finally:
        if pool:
            pool.shutdown()
    return records


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    k: int
    mean_sinr_db: float
    sinr_de_db: float
    sinr_gap_db: float
    sinr_ci_halfwidth_db: float
    mean_power: float
    p_bar: float
    power_gap_rel: float


def validate_de(base: pc.SystemConfig, m_list, trials=500, master_seed=0, workers=1, half_load=True):
    """Empirical-vs-deterministic convergence table over antenna counts.

    half_load=True resizes the load with the array (K = M/2); otherwise K is
    taken from `base` for every M.  Returns (rows, monotone) where monotone
    flags whether both gap columns are non-increasing in M.
    """
    m_list = [int(m) for m in m_list]
    if not m_list:
        raise EmptyInput("empty sweep")
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be strictly increasing")
    rows = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for index, m in enumerate(m_list):
            k = m // 2 if half_load else base.k
            cfg = replace(base, m=m, k=k, corr=base.corr.with_size(m))
            record = _run_point(
                pool, workers, cfg, trials, master_seed, index, CONSTRAINED, True, float(m)
            )
            de = record.de
            rows.append(
                ConvergenceRow(
                    m=m,
                    k=k,
                    mean_sinr_db=record.mean_sinr_db,
                    sinr_de_db=de.sinr_bar_db,
                    sinr_gap_db=abs(record.mean_sinr_db - de.sinr_bar_db),
                    sinr_ci_halfwidth_db=record.sinr_ci_halfwidth_db,
                    mean_power=record.mean_power,
                    p_bar=de.p_bar,
                    power_gap_rel=abs(record.mean_power - de.p_bar) / base.pa,
                )
            )
    finally:
        if pool:
            pool.shutdown()
    sinr_gaps = [r.sinr_gap_db for r in rows]
    power_gaps = [r.power_gap_rel for r in rows]
    tol = 1e-12
    monotone = all(b <= a + tol for a, b in zip(sinr_gaps, sinr_gaps[1:])) and all(
        b <= a + tol for a, b in zip(power_gaps, power_gaps[1:])
    )
    return rows, monotone
