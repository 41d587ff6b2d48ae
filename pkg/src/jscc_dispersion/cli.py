"""Command-line entry point: ``jscc-dispersion <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Errors
are reported on stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import dmc_analysis as dmc
from . import figures
from . import finite_blocklength_lab as lab
from . import io
from . import markov_info as mi
from . import plotting
from . import rate_calculator as rc
from . import special_dists as sd
from .errors import ConfigError, ToolkitError
from .sampling import normal_ks_distance

LN2 = math.log(2)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit(obj, out: str | None) -> None:
    if out:
        io.write_json(out, obj)
    print(io.dump_json(obj))


def _positive(name: str, value: int) -> int:
    if value < 1:
        raise ConfigError(f"--{name} must be at least 1, got {value}")
    return value


# --- info / capacity ---------------------------------------------------------
def cmd_info(args) -> int:
    chain = io.parse_chain(io.load_json(args.chain))
    nh = mi.as_non_hidden(chain)
    rates = mi.info_rates(nh)
    scale = 1 / LN2 if args.bits else 1.0
    out = {
        "alphabet_x": chain.states_x,
        "alphabet_z": chain.states_z,
        "unit": "bits" if args.bits else "nats",
        "entropy_rate": rates.entropy * scale,
        "varentropy_rate": rates.varentropy * scale**2,
        "stationary": mi.stationary_distribution(chain),
        "theta_samples": [{"theta": t, "lambda": lam, "renyi": h * scale} for t, lam, h in rates.theta_samples],
    }
    _emit(out, args.out)
    return 0


def cmd_capacity(args) -> int:
    ch = io.parse_channel(io.load_json(args.channel))
    cap = dmc.capacity(ch)
    ext = dmc.dispersion_extremes(ch, cap)
    out = {
        "capacity_nats": cap.capacity,
        "capacity_bits": cap.capacity / LN2,
        "saddle_output": cap.saddle_output,
        "support": list(cap.support),
        "slack": cap.slack,
        "v_plus": ext.v_plus,
        "v_minus": ext.v_minus,
        "p_plus": ext.p_plus,
        "p_minus": ext.p_minus,
    }
    if args.bits:
        out["v_plus_bits2"] = ext.v_plus / LN2**2
        out["v_minus_bits2"] = ext.v_minus / LN2**2
    _emit(out, args.out)
    return 0


# --- dist --------------------------------------------------------------------
def _family(name: str, params: list[float]):
    if name == "psi":
        if len(params) != 3:
            raise ConfigError("psi needs three variances v1,v2,v3")
        return sd.SwitchedConvSpec(*params)
    if name == "star":
        if len(params) != 2:
            raise ConfigError("star needs two variances v1,v2")
        a, b = params
        return sd.StarProductSpec(max(a, b), min(a, b))
    if name == "gauss":
        if len(params) != 1:
            raise ConfigError("gauss needs one variance")
        return sd.GaussianSpec(params[0])
    raise ConfigError(f"unknown family {name!r}")


def cmd_dist(args) -> int:
    params = _floats(args.params)
    spec = _family(args.family, params)
    grid = io.parse_grid(args.grid)
    config = {"command": f"dist {args.mode}", "family": args.family, "params": params, "grid": args.grid}
    if args.mode == "eval":
        rows = [(r, spec.cdf(float(r))) for r in grid]
        cols = ("R", "cdf")
    else:
        if grid[0] <= 0 or grid[-1] >= 1:
            raise ConfigError("quantile grid must lie inside (0, 1)")
        rows = [(e, spec.quantile(float(e))) for e in grid]
        cols = ("eps", "quantile")
    out = args.out or f"dist_{args.family}_{args.mode}.csv"
    io.write_csv(out, cols, rows, config)
    print(out)
    return 0


# --- rates -------------------------------------------------------------------
def cmd_rates(args) -> int:
    problem = io.parse_problem(io.load_json(args.problem))
    if args.mode == "k":
        k = rc.k_expansion(problem, args.n, args.eps, args.scheme)
        _emit({"k": k, "n": args.n, "eps": args.eps, "scheme": args.scheme, "source_term": problem.source_term}, args.out)
        return 0
    grid = io.parse_grid(args.grid)
    table = rc.curve_table(problem, grid)
    config = {
        "command": "rates curve",
        "problem": str(args.problem),
        "grid": args.grid,
        "source_term": problem.source_term,
        "C": problem.channel.C,
        "H": problem.source.H,
    }
    io.write_csv(args.out, rc.CURVE_COLUMNS, table, config)
    if args.plot:
        series = [
            ("eps_joint", table[:, 1], {"color": "black"}),
            ("eps_kv", table[:, 2], {"color": "red", "linestyle": "--"}),
            ("eps_sep", table[:, 3], {"color": "blue", "linestyle": ":"}),
        ]
        plotting.line_plot(args.plot, table[:, 0], series, ylabel="error probability", title="rates curve")
    print(args.out)
    return 0


# --- figures -----------------------------------------------------------------
def cmd_figures(args) -> int:
    csv_path, png_path = figures.render(args.preset, args.outdir, args.grid)
    print(csv_path)
    print(png_path)
    return 0


# --- sim ---------------------------------------------------------------------
def _chain_or_default(path: str | None, default: mi.TransitionMatrix) -> mi.TransitionMatrix:
    return io.parse_chain(io.load_json(path)) if path else default


def _sim_clt(args) -> dict:
    chain = _chain_or_default(args.chain, mi.iid_chain([0.89, 0.11]))
    nh = mi.as_non_hidden(chain)
    rates = mi.info_rates(nh)
    vals = lab.sample_info_density(nh, args.n, args.samples, args.seed, args.workers)
    ks = normal_ks_distance(vals, rates.varentropy)
    if args.csv:
        m = vals.size
        step = max(1, m // 2000)
        idx = np.arange(step - 1, m, step)
        io.write_csv(
            args.csv,
            ("x", "empirical_cdf", "gaussian_cdf"),
            [(vals[i], (i + 1) / m, sd.gaussian_cdf(rates.varentropy, vals[i]) if rates.varentropy > 0 else float(vals[i] >= 0)) for i in idx],
            {"command": "sim clt", "n": args.n, "samples": args.samples, "chain": args.chain},
            args.seed,
        )
    return {
        "estimate": ks,
        "half_width": 1.358 / math.sqrt(args.samples),
        "statistic": "ks_distance",
        "entropy_rate": rates.entropy,
        "varentropy_rate": rates.varentropy,
        "sample_mean": float(vals.mean()),
        "sample_variance": float(vals.var()),
    }


def _sim_bounds(args) -> dict:
    src = _chain_or_default(args.source, mi.iid_chain([0.89, 0.11]))
    noise = _chain_or_default(args.noise, mi.iid_chain([0.89, 0.11]))
    s = rc.SourceSummary.from_chain(src)
    c = rc.ChannelSummary.from_conditional_additive(noise)
    k = lab.message_length(s.H, c.C, args.n, args.R)
    b = lab.ca_bound_pair(src, noise, k, args.n, args.samples, args.seed, args.workers)
    limit = rc.joint_ca_error(rc.RateProblem(s, c), args.R)
    return {
        "estimate": b.central,
        "half_width": b.half_width,
        "achievability_rhs": b.achievability_rhs,
        "converse_rhs": b.converse_rhs,
        "gaussian_limit": limit,
        "k": b.k,
        "c": b.c,
    }


def _default_channel() -> dmc.DmcChannel:
    return dmc.bsc(0.11)


def _sim_two_regime(args) -> dict:
    src = _chain_or_default(args.source, mi.iid_chain([0.89, 0.11]))
    ch = io.parse_channel(io.load_json(args.channel)) if args.channel else _default_channel()
    grid = io.parse_grid(args.grid) if args.grid else np.array([args.R])
    res = lab.two_regime_curve(src, ch, grid, args.n, args.samples, args.seed, args.workers)
    problem = rc.RateProblem(rc.SourceSummary.from_chain(src), rc.ChannelSummary.from_dmc(ch))
    target = np.array([rc.joint_dmc_error(problem, float(r)) for r in grid])
    if args.csv:
        io.write_csv(
            args.csv,
            ("R", "estimate", "half_width", "psi", "k", "plus_fraction"),
            zip(res.R, res.estimate, res.half_width, target, res.k, res.plus_fraction),
            {"command": "sim two-regime", "n": args.n, "samples": args.samples, "grid": args.grid, "R": args.R},
            args.seed,
        )
    return {
        "estimate": res.estimate if grid.size > 1 else float(res.estimate[0]),
        "half_width": res.half_width if grid.size > 1 else float(res.half_width[0]),
        "psi": target if grid.size > 1 else float(target[0]),
        "R": res.R,
        "k": res.k,
    }


def _sim_singleshot(args) -> dict:
    if args.instance:
        doc = io.load_json(args.instance)
        inst = lab.SingleShotInstance(doc.get("p_m"), doc.get("matrix"))
    else:
        inst = lab.SingleShotInstance([0.9, 0.1], dmc.bsc(0.25).probs)
    exact, enc = lab.exact_single_shot_detail(inst)
    nx, ny = inst.w.shape
    p_x = np.full(nx, 1.0 / nx)
    cs_ach = [2.0**j for j in range(0, 9)]
    ach = min(lab.achievability_rhs(inst, p_x, c) for c in cs_ach)
    q_uniform = np.full(ny, 1.0 / ny)
    cs_conv = [2.0**-j for j in range(1, 9)]
    conv = max(lab.converse_rhs(inst, enc, q_uniform, c) for c in cs_conv)
    return {
        "estimate": exact,
        "half_width": 0.0,
        "optimal_encoder": list(enc),
        "achievability_rhs": ach,
        "converse_rhs": conv,
        "sandwich_holds": bool(conv <= exact <= ach),
    }


def _sim_sep_identity(args) -> dict:
    if args.instance:
        d = io.load_json(args.instance)
        keys = ("p_m", "e_s", "d_s", "matrix", "e_c", "d_c")
        missing = [k for k in keys if k not in d]
        if missing:
            raise ConfigError(f"separation instance lacks {missing}")
        chk = lab.separation_product_check(d["p_m"], d["e_s"], d["d_s"], d["matrix"], d["e_c"], d["d_c"])
    else:
        w2 = lab.product_channel(dmc.bsc(0.2), 2)
        # 3 messages, identity source code, codewords 00, 01, 11 with nearest-codeword decoding
        d_c = [0, 1, 1, 2]
        chk = lab.separation_product_check([0.5, 0.3, 0.2], [0, 1, 2], [0, 1, 2], w2, [0, 1, 3], d_c)
    return {
        "estimate": chk.averaged,
        "half_width": 0.0,
        "predicted": chk.predicted,
        "source_error": chk.source_error,
        "channel_error": chk.channel_error,
        "difference": abs(chk.averaged - chk.predicted),
    }


SIMS = {
    "clt": _sim_clt,
    "bounds": _sim_bounds,
    "two-regime": _sim_two_regime,
    "singleshot": _sim_singleshot,
    "sep-identity": _sim_sep_identity,
}


def cmd_sim(args) -> int:
    _positive("samples", args.samples)
    _positive("n", args.n)
    _positive("workers", args.workers)
    summary = SIMS[args.kind](args)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "csv")}
    summary["params"] = params
    summary["version"] = __version__
    _emit(summary, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="jscc-dispersion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("info", help="entropy and varentropy rate of a chain")
    s.add_argument("--chain", required=True)
    s.add_argument("--bits", action="store_true", help="report in bits instead of nats")
    s.add_argument("--out")
    s.set_defaults(func=cmd_info)

    s = sub.add_parser("capacity", help="capacity, saddle output and dispersion extremes of a DMC")
    s.add_argument("--channel", required=True)
    s.add_argument("--bits", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("dist", help="evaluate or invert a distribution family")
    s.add_argument("mode", choices=("eval", "quantile"))
    s.add_argument("--family", required=True, choices=("psi", "star", "gauss"))
    s.add_argument("--params", required=True, help="comma-separated variances")
    s.add_argument("--grid", required=True, help="start:stop:step of R (eval) or eps (quantile)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("rates", help="second-order error curves and message lengths")
    s.add_argument("mode", choices=("curve", "k"))
    s.add_argument("--problem", required=True)
    s.add_argument("--grid", default="-6:6:0.05")
    s.add_argument("--out", default="curves.csv")
    s.add_argument("--plot", help="also render the three curves to this PNG")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--scheme", choices=rc.SCHEMES, default="joint_dmc")
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("figures", help="regenerate a figure preset as CSV and PNG")
    s.add_argument("preset", choices=tuple(figures.PRESETS))
    s.add_argument("--outdir", default="figures")
    s.add_argument("--grid")
    s.set_defaults(func=cmd_figures)

    s = sub.add_parser("sim", help="Monte Carlo and exhaustive checks")
    s.add_argument("kind", choices=tuple(SIMS))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--n", type=int, default=4096)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--chain", help="chain JSON for clt")
    s.add_argument("--source", help="source chain JSON for bounds / two-regime")
    s.add_argument("--noise", help="noise chain JSON for bounds")
    s.add_argument("--channel", help="channel JSON for two-regime")
    s.add_argument("--instance", help="instance JSON for singleshot / sep-identity")
    s.add_argument("--R", type=float, default=0.0)
    s.add_argument("--grid", help="R grid for two-regime")
    s.add_argument("--out", help="write the JSON summary here as well")
    s.add_argument("--csv", help="optional CSV output")
    s.set_defaults(func=cmd_sim)
    return p


_VALUE_FLAGS = ("--grid", "--params", "--R", "--eps")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--grid -6:6:0.05`` into ``--grid=-6:6:0.05`` so argparse does not read a flag."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok in _VALUE_FLAGS and nxt.startswith("-") and (nxt[1:2].isdigit() or nxt[1:2] == "."):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_glue_negative_values(argv))
        return args.func(args)
    except ToolkitError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}), file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 2}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
