"""Experiment driver: subcommands, reproducible seeding, CSV/JSON emission.

Every run writes a JSON summary embedding the fully resolved configuration,
the package version, wall time, and per-estimate standard errors; tabular
results go to CSV with fixed per-subcommand column sets.  Reruns with equal
configuration produce byte-identical CSV files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import tomli

from . import __version__
from .acceptance import run_all
from .disorder import (
    SpreadProductDist,
    TiltedWeightDist,
    convex_order_check,
    coupling_constants,
    parse_law,
    sample_environment,
)
from .errors import ConfigError, NumericsError
from .lattice import beta2_bound
from .moments import free_energy_estimate, mc_moment
from .pinning import (
    KernelTable,
    chaos_moment_bound_check,
    dyadic_slope,
    kernel_table_exact,
    kernel_table_mc,
    renewal_series,
    tilt_exponent,
)
from .polymer import path_overlap
from .seeding import hash_chain

SCHEMA_VERSION = 1

SIMULATE_COLUMNS = ["d", "beta", "n", "p", "R", "seed", "estimate", "stderr",
                    "functional"]
LOCALIZE_COLUMNS = ["d", "beta", "n", "seed", "replica", "ep", "ov"]


@dataclass
class ExperimentConfig:
    """Fully resolved run configuration (echoed into every JSON summary)."""

    subcommand: str
    options: dict = field(default_factory=dict)


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in str(text).split(",") if tok != ""]


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in str(text).split(",") if tok != ""]


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return str(obj)


def _sanitize(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def write_summary(path, config: ExperimentConfig, results: dict,
                  wall_time_s: float, extra: dict | None = None) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "subcommand": config.subcommand,
        "config": _sanitize(config.options),
        "wall_time_s": wall_time_s,
        "results": _sanitize(results),
    }
    if extra:
        payload.update(_sanitize(extra))
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(row)


def _fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _resolve_beta_grid(opts) -> tuple[list[float], dict | None]:
    """Beta grid from explicit values or as multiples of the L2 threshold."""
    anchor = None
    if opts.get("anchor_beta2") is not None:
        law = parse_law(opts["law"])
        res = beta2_bound(law, opts["d"])
        mults = _parse_floats(opts["anchor_beta2"])
        betas = [m * res.beta2 for m in mults]
        anchor = {
            "kind": "beta2",
            "beta2": res.beta2,
            "multipliers": mults,
            "note": "anchored at the computable L2 threshold, which is a "
                    "lower bound for the true critical tilt",
        }
        return betas, anchor
    if opts.get("beta") is None:
        raise ConfigError("missing field: beta (or anchor-beta2)")
    return _parse_floats(opts["beta"]), anchor


def cmd_simulate(opts) -> tuple:
    law = parse_law(opts["law"])
    betas, anchor = _resolve_beta_grid(opts)
    n_list = _parse_ints(opts["n_list"])
    d, r_count, seed = opts["d"], opts["r"], opts["seed"]
    functional = opts["functional"]
    rows, results = [], {"free_energy": [], "moments": []}
    for bi, beta in enumerate(betas):
        sub_seed = int(hash_chain(np.uint64(seed), np.int64(bi)))
        if functional in ("free-energy", "both"):
            fit = free_energy_estimate(law, beta, d, n_list, r_count, sub_seed)
            for n, val, se in fit.points:
                rows.append([d, _fmt(beta), n, "", r_count, sub_seed,
                             _fmt(val), _fmt(se), "log_mean"])
            results["free_energy"].append({
                "beta": beta, "slope": fit.slope, "slope_se": fit.slope_se,
                "residual": fit.residual, "window": list(fit.window),
                "seed": sub_seed,
            })
        if functional in ("moments", "both"):
            for p in _parse_floats(opts["p"]):
                for ni, n in enumerate(n_list):
                    est_seed = int(hash_chain(np.uint64(sub_seed),
                                              np.int64(1000 + ni)))
                    est = mc_moment(law, beta, d, n, p, r_count, est_seed)
                    rows.append([d, _fmt(beta), n, _fmt(p), r_count, est_seed,
                                 _fmt(est.estimate), _fmt(est.stderr),
                                 "pth_moment"])
                    results["moments"].append({
                        "beta": beta, "n": n, "p": p,
                        "estimate": est.estimate, "stderr": est.stderr,
                        "seed": est_seed,
                    })
    prefix = opts["out_prefix"]
    _write_csv(prefix + ".csv", SIMULATE_COLUMNS, rows)
    return 0, results, anchor, prefix


def cmd_l2(opts) -> tuple:
    law = parse_law(opts["law"])
    res = beta2_bound(law, opts["d"], tol=opts["tol"], n_max=opts["n_max"])
    results = {
        "s_infty": res.collision.s_lower,
        "s_tail_bound": res.collision.tail_bound,
        "s_infty_upper": res.collision.s_upper,
        "beta2": res.beta2,
        "beta2_optimistic": res.beta2_optimistic,
        "diverged": res.diverged,
        "n_max": res.collision.n_max,
    }
    return 0, results, None, opts["out_prefix"]


def cmd_localize(opts) -> tuple:
    law = parse_law(opts["law"])
    d, beta, n, r_count, seed = (opts["d"], opts["beta"], opts["n"],
                                 opts["r"], opts["seed"])
    rows, eps, ovs = [], [], []
    for i in range(r_count):
        env_seed = int(hash_chain(np.uint64(seed), np.int64(i)))
        env = sample_environment(law, d, n, seed=env_seed)
        rep = path_overlap(env, law, beta, n)
        rows.append([d, _fmt(beta), n, env_seed, i, _fmt(rep.ep), _fmt(rep.ov)])
        eps.append(rep.ep)
        ovs.append(rep.ov)
    eps, ovs = np.array(eps), np.array(ovs)
    results = {
        "ep_mean": eps.mean(),
        "ep_se": eps.std(ddof=1) / math.sqrt(r_count) if r_count > 1 else 0.0,
        "ov_mean": ovs.mean(),
        "ov_se": ovs.std(ddof=1) / math.sqrt(r_count) if r_count > 1 else 0.0,
        "replicas": r_count,
    }
    prefix = opts["out_prefix"]
    _write_csv(prefix + ".csv", LOCALIZE_COLUMNS, rows)
    return 0, results, None, prefix


def cmd_kernels(opts) -> tuple:
    law = parse_law(opts["law"])
    beta, d, p, n_max = opts["beta"], opts["d"], opts["p"], opts["n_max"]
    if beta == 0.0:
        table = kernel_table_exact(d, p, n_max)
        source = "exact"
    else:
        table = kernel_table_mc(law, beta, d, p, n_max, opts["r"], opts["seed"])
        source = "mc"
    prefix = opts["out_prefix"]
    table.to_csv(prefix + ".csv")
    coeff, a = table.tail_fit()
    results = {
        "source": source,
        "n_max": n_max,
        "partial_sum": float(table.partial_sums()[-1]),
        "dyadic_slope": dyadic_slope(table) if n_max >= 8 else None,
        "tail_fit_coeff": coeff,
        "tail_fit_exponent": a,
    }
    return 0, results, None, prefix


def cmd_phi(opts) -> tuple:
    table = KernelTable.from_csv(opts["table"])
    per_v = []
    for v in _parse_floats(opts["v"]):
        res = tilt_exponent(table, v, tail=opts["tail"])
        entry = {
            "v": v, "phi": res.phi, "residual": res.residual,
            "tail_mode": res.tail_mode, "tail_at_root": res.tail_at_root,
        }
        if opts.get("renewal_n"):
            rep = renewal_series(table, v, opts["renewal_n"], phi=res.phi)
            entry["renewal_bound_ok"] = rep.bound_ok
            entry["renewal_max_ratio"] = rep.max_ratio
        per_v.append(entry)
    results = {
        "table": opts["table"],
        "kernel_p": table.p,
        "kernel_beta": table.beta,
        "kernel_d": table.d,
        "per_v": per_v,
    }
    return 0, results, None, opts["out_prefix"]


def cmd_chaos_check(opts) -> tuple:
    law = parse_law(opts["law"])
    table = KernelTable.from_csv(opts["table"]) if opts.get("table") else None
    rep = chaos_moment_bound_check(
        law, opts["beta_base"], opts["u"], opts["p"], opts["d"], opts["n"],
        opts["r"], opts["seed"], kernel_table=table)
    results = asdict(rep)
    anchor = None
    if opts["beta_base"] != 0.0:
        anchor = {"kind": "nonzero_base",
                  "note": "bound verified at the given base tilt, not at the "
                          "unknown critical tilt"}
    return 0, results, anchor, opts["out_prefix"]


def cmd_couple_check(opts) -> tuple:
    law = parse_law(opts["law"])
    beta = opts["beta"]
    cc = coupling_constants(law, beta)
    a_grid = np.concatenate([[0.0], np.geomspace(1e-3, 50.0, opts["a_points"])])
    if opts.get("u_grid"):
        us = _parse_floats(opts["u_grid"])
    else:
        us = list(np.linspace(cc.u_max / 4.0, 4.0 * cc.u_max, 8))
    certified_u, per_u = 0.0, []
    for u in us:
        v = cc.C * u
        if v > 1.0 / 3.0:
            per_u.append({"u": u, "status": "out_of_range",
                          "v": v})
            continue
        rep = convex_order_check(
            TiltedWeightDist(law, beta + u),
            SpreadProductDist(TiltedWeightDist(law, beta), v),
            a_grid, tolerance=opts["tol"])
        per_u.append({"u": u, "v": v, "passed": rep.passed,
                      "max_violation": rep.max_violation,
                      "worst_a": rep.worst_a})
        if rep.passed:
            certified_u = max(certified_u, u)
    results = {
        "beta": beta,
        "coupling_constant": cc.C,
        "amplitude": cc.amplitude,
        "ratio_sup": cc.ratio_sup,
        "ratio_certified": cc.ratio_report.certified,
        "ratio_notes": cc.ratio_report.notes,
        "u_max_guaranteed": cc.u_max,
        "u_certified_empirically": certified_u,
        "per_u": per_u,
    }
    return 0, results, None, opts["out_prefix"]


def cmd_accept(opts) -> tuple:
    results = run_all(include_illustration=not opts["skip_illustration"],
                      echo=True)
    failures = [r for r in results if not r.passed and not r.report_only]
    payload = {
        "criteria": [asdict(r) for r in results],
        "failures": len(failures),
    }
    code = 4 if failures else 0
    return code, payload, None, opts["out_prefix"]


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _add_common(sp, *names):
    if "law" in names:
        sp.add_argument("--law", default=None, help='gaussian | rademacher | '
                        '{support = [...], probs = [...]}')
    if "d" in names:
        sp.add_argument("--d", type=int, default=None)
    if "r" in names:
        sp.add_argument("--r", type=int, default=None, help="replica count")
    if "seed" in names:
        sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out-prefix", dest="out_prefix", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dpre",
        description="Directed polymer weak/strong-disorder studies at desk "
                    "scale: simulation, thresholds, kernels, and checks.")
    ap.add_argument("--config", default=None,
                    help="TOML file with per-subcommand option tables; "
                         "explicit flags override it")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("simulate", help="moment / free-energy sweeps")
    _add_common(sp, "law", "d", "r", "seed")
    sp.add_argument("--beta", default=None, help="comma list of tilts")
    sp.add_argument("--anchor-beta2", dest="anchor_beta2", default=None,
                    help="comma list of multipliers of the L2 threshold")
    sp.add_argument("--n-list", dest="n_list", default=None)
    sp.add_argument("--p", default=None, help="comma list of moment orders")
    sp.add_argument("--functional", default=None,
                    choices=["moments", "free-energy", "both"])

    sp = sub.add_parser("l2", help="collision sums and the L2 threshold")
    _add_common(sp, "law", "d")
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("localize", help="endpoint / overlap observables")
    _add_common(sp, "law", "d", "r", "seed")
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--n", type=int, default=None)

    sp = sub.add_parser("kernels", help="pinning kernel tables")
    _add_common(sp, "law", "d", "r", "seed")
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)

    sp = sub.add_parser("phi", help="tilt exponents and renewal bounds")
    _add_common(sp)
    sp.add_argument("--table", default=None, help="kernel CSV path")
    sp.add_argument("--v", default=None, help="comma list of v values")
    sp.add_argument("--tail", default=None, choices=["fit", "none"])
    sp.add_argument("--renewal-n", dest="renewal_n", type=int, default=None)

    sp = sub.add_parser("chaos-check", help="chaos/pinning moment bound")
    _add_common(sp, "law", "d", "r", "seed")
    sp.add_argument("--beta-base", dest="beta_base", type=float, default=None)
    sp.add_argument("--u", type=float, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--table", default=None, help="optional kernel CSV")

    sp = sub.add_parser("couple-check",
                        help="convex-order coupling constants and range")
    _add_common(sp, "law")
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--u-grid", dest="u_grid", default=None)
    sp.add_argument("--a-points", dest="a_points", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("accept", help="run the full acceptance suite")
    _add_common(sp)
    sp.add_argument("--skip-illustration", dest="skip_illustration",
                    action="store_true", default=None)
    return ap


DEFAULTS = {
    "simulate": {"law": "gaussian", "d": 1, "r": 1000, "seed": 20260808,
                 "beta": None, "anchor_beta2": None, "n_list": "8,16,32",
                 "p": "1.5", "functional": "both", "out_prefix": "simulate"},
    "l2": {"law": "gaussian", "d": 3, "n_max": 10_000, "tol": 1e-10,
           "out_prefix": "l2"},
    "localize": {"law": "gaussian", "d": 1, "beta": 1.0, "n": 32, "r": 20,
                 "seed": 20260808, "out_prefix": "localize"},
    "kernels": {"law": "gaussian", "beta": 0.0, "d": 1, "p": 1.5,
                "n_max": 256, "r": 2000, "seed": 20260808,
                "out_prefix": "kernels"},
    "phi": {"table": None, "v": "0.1", "tail": "fit", "renewal_n": None,
            "out_prefix": "phi"},
    "chaos-check": {"law": "gaussian", "beta_base": 0.0, "u": 0.1, "p": 1.5,
                    "d": 1, "n": 32, "r": 20_000, "seed": 20260808,
                    "table": None, "out_prefix": "chaos"},
    "couple-check": {"law": "gaussian", "beta": 1.0, "u_grid": None,
                     "a_points": 80, "tol": 1e-9, "out_prefix": "couple"},
    "accept": {"skip_illustration": False, "out_prefix": "accept"},
}

COMMANDS = {
    "simulate": cmd_simulate,
    "l2": cmd_l2,
    "localize": cmd_localize,
    "kernels": cmd_kernels,
    "phi": cmd_phi,
    "chaos-check": cmd_chaos_check,
    "couple-check": cmd_couple_check,
    "accept": cmd_accept,
}

REQUIRED = {
    "phi": ["table"],
}


def resolve_options(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, config-file tables, and explicit flags (flags win)."""
    sub = args.subcommand
    opts = dict(DEFAULTS[sub])
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomli.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML in {args.config}: {exc}") from exc
        section = data.get(sub, {})
        for key, val in section.items():
            norm = key.replace("-", "_")
            if norm not in opts:
                raise ConfigError(f"unknown config field [{sub}] {key}")
            opts[norm] = val
    for key, val in vars(args).items():
        if key in ("config", "subcommand") or val is None:
            continue
        opts[key] = val
    for key in REQUIRED.get(sub, []):
        if opts.get(key) is None:
            raise ConfigError(f"missing field: {key}")
    return ExperimentConfig(subcommand=sub, options=opts)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_options(args)
        t0 = time.perf_counter()
        code, results, anchor, prefix = COMMANDS[config.subcommand](config.options)
        wall = time.perf_counter() - t0
        extra = {"beta_anchor": anchor} if anchor else None
        write_summary(prefix + ".json", config, results, wall, extra)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
