"""Command-line front end: figure-style experiment presets, CSV output.

Commands
--------
gamma-sweep   SINR (empirical + deterministic), power efficiency and clip
              fraction versus the design gain, swept on the normalized axis
              (1/c - 1)/gamma; the optimal-gain row is flagged.
sinr-vs-m     SINR versus antenna count for several gain policies.
papr-compare  Proposed scheme versus the MMSE baseline, with PAPR.
efficiency    Power efficiency versus the design gain (no Monte Carlo).
validate-de   Empirical-vs-deterministic convergence table (K = M/2).
de-point      Single-row dump of the deterministic equivalents.

Configuration comes from per-command defaults, overridden by a flat
key=value config file (--config), overridden by CLI flags.  Every command
echoes its fully resolved configuration as '#'-prefixed comment lines at
the top of the CSV, so a CSV is reproducible from its own header.  The
worker count changes scheduling only, never results, and is therefore not
part of the echoed configuration.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (the
failing operation is named on stderr).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import efficiency as eff
from . import montecarlo as mc
from .channel import parse_corr
from .errors import EmptyInput, SinglerfError
from .precoder import SystemConfig
from .rmt import Ensemble

PROG = "singlerf"


class ConfigError(Exception):
    pass


# -- config plumbing ---------------------------------------------------------


def _parse_int_list(text):
    """Comma list ("64,128,256") or range syntax ("80:120:5", inclusive)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad range {text!r}, expected lo:hi[:step]")
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        return list(range(lo, hi + 1, step))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_gamma_list(text):
    """Comma list of gains; the token 'star' selects the optimal gain."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(None if tok == "star" else float(tok))
    return out


def _parse_gamma(text):
    text = text.strip()
    return None if text == "star" else float(text)


_PARSERS = {
    "m": int,
    "k": int,
    "pa": float,
    "sigma2": float,
    "gamma": _parse_gamma,
    "corr": str,
    "trials": int,
    "seed": int,
    "eta_a": float,
    "points": int,
    "norm_lo": float,
    "norm_hi": float,
    "m_list": _parse_int_list,
    "gammas": _parse_gamma_list,
}

_DEFAULTS = {
    "gamma-sweep": {
        "m": 80, "k": 40, "pa": 1.0, "sigma2": 10.0 ** -1.2, "corr": "identity",
        "eta_a": 1.0, "trials": 1000, "seed": 12345,
        "points": 25, "norm_lo": 0.05, "norm_hi": 5.0,
    },
    "sinr-vs-m": {
        "k": 40, "pa": 1.0, "sigma2": 10.0 ** -1.2, "corr": "identity",
        "trials": 1000, "seed": 12345, "m_list": list(range(80, 121, 5)),
        "gammas": [None, 2.0, 1.5],
    },
    "papr-compare": {
        "k": 10, "pa": 1.0, "sigma2": 1.0, "corr": "exp:0.1",
        "trials": 1000, "seed": 12345, "m_list": list(range(60, 121, 10)),
        "gamma": None,
    },
    "efficiency": {
        "m": 80, "k": 40, "pa": 1.0, "sigma2": 10.0 ** -1.2, "corr": "identity",
        "eta_a": 1.0, "points": 25, "norm_lo": 0.05, "norm_hi": 5.0, "seed": 12345,
    },
    "validate-de": {
        "pa": 1.0, "sigma2": 10.0 ** -0.5, "corr": "identity", "gamma": None,
        "trials": 500, "seed": 12345, "m_list": [64, 128, 256],
    },
    "de-point": {
        "m": 80, "k": 40, "pa": 1.0, "sigma2": 1.0, "corr": "identity",
        "gamma": None, "seed": 12345,
    },
}


def _read_config_file(path):
    entries = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = line.split("=", 1)
                entries[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return entries


def resolve_config(command, args):
    """defaults < config file < CLI flags; unknown keys are errors."""
    cfg = dict(_DEFAULTS[command])
    if args.config:
        for key, raw in _read_config_file(args.config).items():
            if key not in cfg:
                raise ConfigError(f"unknown config key {key!r} for command {command}")
            try:
                cfg[key] = _PARSERS[key](raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = _PARSERS[key](flag) if isinstance(flag, str) else flag
    return cfg


def _fmt(value):
    if value is None:
        return "star"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.9g}"
    if isinstance(value, list):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def write_csv(stream, command, cfg, header, rows):
    stream.write(f"# command={command}\n")
    for key in sorted(cfg):
        stream.write(f"# {key}={_fmt(cfg[key])}\n")
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(v) for v in row) + "\n")


# -- commands -----------------------------------------------------------------


def _sweep_gammas(cfg):
    """Gain grid from the normalized axis, plus the optimal gain, ascending."""
    if cfg["points"] < 1:
        raise ConfigError("empty sweep")
    c = cfg["k"] / cfg["m"]
    axis = np.geomspace(cfg["norm_lo"], cfg["norm_hi"], cfg["points"])
    gammas = sorted(float(g) for g in (1.0 / c - 1.0) / axis)
    corr = parse_corr(cfg["corr"], cfg["m"])
    gamma_star = Ensemble(corr, cfg["k"]).optimal_gamma(cfg["pa"], cfg["sigma2"])
    merged = sorted(set(gammas) | {gamma_star})
    return merged, gamma_star, corr


def cmd_gamma_sweep(cfg, workers):
    gammas, gamma_star, corr = _sweep_gammas(cfg)
    base = SystemConfig(m=cfg["m"], k=cfg["k"], pa=cfg["pa"], sigma2=cfg["sigma2"],
                        eta_a=cfg["eta_a"], corr=corr)
    plan = mc.ExperimentPlan(base=base, sweep_name="gamma", sweep_values=tuple(gammas),
                             trials=cfg["trials"], master_seed=cfg["seed"])
    records = mc.run_plan(plan, workers=workers)
    model = eff.model_for(corr, cfg["k"])
    c = cfg["k"] / cfg["m"]
    rows = []
    for rec in records:
        rows.append((
            rec.gamma,
            (1.0 / c - 1.0) / rec.gamma,
            rec.mean_sinr_db,
            rec.de.sinr_bar_db,
            model.power_efficiency(rec.gamma, cfg["pa"], cfg["eta_a"]),
            rec.clip_fraction,
            rec.gamma == gamma_star,
        ))
    header = ["gamma", "norm_axis", "mean_sinr_db", "sinr_de_db", "eta_t",
              "clip_fraction", "is_gamma_star"]
    return header, rows


def cmd_sinr_vs_m(cfg, workers):
    if not cfg["m_list"]:
        raise ConfigError("empty sweep")
    corr0 = parse_corr(cfg["corr"], min(cfg["m_list"]))
    base = SystemConfig(m=min(cfg["m_list"]), k=cfg["k"], pa=cfg["pa"],
                        sigma2=cfg["sigma2"], corr=corr0)
    rows = []
    for gamma in cfg["gammas"]:
        series = "gamma_star" if gamma is None else f"gamma={_fmt(gamma)}"
        plan = mc.ExperimentPlan(
            base=replace(base, gamma=gamma),
            sweep_name="m", sweep_values=tuple(cfg["m_list"]),
            trials=cfg["trials"], master_seed=cfg["seed"])
        for rec in mc.run_plan(plan, workers=workers):
            rows.append((
                int(rec.swept_value), series, rec.gamma, rec.mean_sinr_db,
                rec.sinr_ci_halfwidth_db, rec.de.sinr_bar_db, rec.mean_power,
                rec.papr_db, rec.clip_fraction,
            ))
    header = ["m", "series", "gamma", "mean_sinr_db", "sinr_ci_halfwidth_db",
              "sinr_de_db", "mean_power", "papr_db", "clip_fraction"]
    return header, rows


def cmd_papr_compare(cfg, workers):
    if not cfg["m_list"]:
        raise ConfigError("empty sweep")
    corr0 = parse_corr(cfg["corr"], min(cfg["m_list"]))
    base = SystemConfig(m=min(cfg["m_list"]), k=cfg["k"], pa=cfg["pa"],
                        sigma2=cfg["sigma2"], gamma=cfg["gamma"], corr=corr0)
    common = dict(sweep_name="m", sweep_values=tuple(cfg["m_list"]),
                  trials=cfg["trials"], master_seed=cfg["seed"])
    proposed = mc.run_plan(mc.ExperimentPlan(base=base, **common), workers=workers)
    baseline = mc.run_plan(
        mc.ExperimentPlan(base=base, scheme=mc.MMSE, emit_de=False, **common), workers=workers)
    rows = []
    for prop, mmse in zip(proposed, baseline):
        rows.append((
            int(prop.swept_value), prop.gamma, prop.mean_sinr_db,
            prop.sinr_ci_halfwidth_db, mmse.mean_sinr_db, mmse.sinr_ci_halfwidth_db,
            prop.papr_db, prop.clip_fraction,
        ))
    header = ["m", "gamma", "sinr_proposed_db", "sinr_proposed_ci_db",
              "sinr_mmse_db", "sinr_mmse_ci_db", "papr_db", "clip_fraction"]
    return header, rows


def cmd_efficiency(cfg, workers):
    del workers  # quadrature only
    gammas, gamma_star, corr = _sweep_gammas(cfg)
    model = eff.model_for(corr, cfg["k"])
    c = cfg["k"] / cfg["m"]
    identity = corr.kind == "identity"
    rows = []
    for gamma in gammas:
        eta = model.power_efficiency(gamma, cfg["pa"], cfg["eta_a"])
        eta_exact = (
            eff.power_efficiency_iid_exact(gamma, cfg["pa"], cfg["eta_a"], cfg["k"], cfg["m"])
            if identity else math.nan
        )
        rows.append((gamma, (1.0 / c - 1.0) / gamma, eta, eta_exact, gamma == gamma_star))
    header = ["gamma", "norm_axis", "eta_t", "eta_t_exact_iid", "is_gamma_star"]
    return header, rows


def cmd_validate_de(cfg, workers):
    if not cfg["m_list"]:
        raise ConfigError("empty sweep")
    m0 = min(cfg["m_list"])
    corr0 = parse_corr(cfg["corr"], m0)
    base = SystemConfig(m=m0, k=m0 // 2, pa=cfg["pa"], sigma2=cfg["sigma2"],
                        gamma=cfg["gamma"], corr=corr0)
    rows_out, monotone = mc.validate_de(
        base, cfg["m_list"], trials=cfg["trials"], master_seed=cfg["seed"], workers=workers)
    rows = [
        (r.m, r.k, r.mean_sinr_db, r.sinr_de_db, r.sinr_gap_db, r.mean_power,
         r.p_bar, r.power_gap_rel, monotone)
        for r in rows_out
    ]
    header = ["m", "k", "mean_sinr_db", "sinr_de_db", "sinr_gap_db", "mean_power",
              "p_bar", "power_gap_rel", "gaps_monotone"]
    return header, rows


def cmd_de_point(cfg, workers):
    del workers
    corr = parse_corr(cfg["corr"], cfg["m"])
    de = Ensemble(corr, cfg["k"]).equivalents(cfg["pa"], cfg["sigma2"], cfg["gamma"])
    rows = [(
        cfg["m"], cfg["k"], de.gamma, de.gamma_star, de.rho_bar, de.alpha, de.beta,
        de.trace_t, de.p_bar, de.sinr_bar, de.sinr_bar_db, de.clipping,
    )]
    header = ["m", "k", "gamma", "gamma_star", "rho_bar", "alpha", "beta",
              "trace_t", "p_bar", "sinr_bar", "sinr_bar_db", "clipping"]
    return header, rows


COMMANDS = {
    "gamma-sweep": cmd_gamma_sweep,
    "sinr-vs-m": cmd_sinr_vs_m,
    "papr-compare": cmd_papr_compare,
    "efficiency": cmd_efficiency,
    "validate-de": cmd_validate_de,
    "de-point": cmd_de_point,
}

_FLAG_HELP = {
    "m": "antenna count M",
    "k": "user count K",
    "pa": "instantaneous power cap (linear)",
    "sigma2": "noise variance (linear)",
    "gamma": "design gain, a number or 'star' for the optimal one",
    "corr": "correlation: identity | exp:<re>[,<im>] | file:<path>",
    "trials": "Monte Carlo trials per sweep point",
    "seed": "master seed",
    "eta_a": "amplifier efficiency ceiling in (0,1]",
    "points": "number of sweep points on the normalized axis",
    "norm_lo": "lower end of the normalized (1/c-1)/gamma axis",
    "norm_hi": "upper end of the normalized (1/c-1)/gamma axis",
    "m_list": "antenna counts: comma list or lo:hi[:step]",
    "gammas": "comma list of gains; 'star' for the optimal one",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG, description="Single-RF constrained precoding experiments (CSV output)")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, defaults in _DEFAULTS.items():
        p = sub.add_parser(command, help=f"{command} preset")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel trial workers (does not affect results)")
        p.add_argument("--print-config", action="store_true",
                       help="print the resolved configuration and exit")
        for key in defaults:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, help=_FLAG_HELP[key], metavar="V")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        cfg = resolve_config(command, args)
    except (ConfigError, ValueError) as exc:
        print(f"{PROG} {command}: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        for key in sorted(cfg):
            print(f"{key}={_fmt(cfg[key])}")
        return 0
    try:
        header, rows = COMMANDS[command](cfg, max(1, args.workers))
    except (ConfigError, EmptyInput) as exc:
        print(f"{PROG} {command}: {exc}", file=sys.stderr)
        return 2
    except SinglerfError as exc:
        print(f"{PROG} {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(fh, command, cfg, header, rows)
    else:
        write_csv(sys.stdout, command, cfg, header, rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
