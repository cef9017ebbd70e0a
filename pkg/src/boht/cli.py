"""Command-line front end: ``boht <command> [options]``.

Options may also come from a JSON file given with ``--config``; flags given
on the command line win over file values, and unknown keys are rejected.
Exit status is 0 on success, 2 on a configuration or domain error and 3 when
a computation would exceed its resource budget.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import contraction, density_evolution as de, gaussian, hsbm
from .errors import ConvergenceError, DomainError, ResourceError
from .kernels import b_r_lambda, load_kernel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

REQUIRED = object()


class ConfigError(Exception):
    pass


def _opt(name, type_, default=REQUIRED, help_="", choices=None):
    return (name, type_, default, help_, choices)


_DE_OPTS = [
    _opt("r", int, help_="hyperedge size"),
    _opt("lambda", float, None, "strength of B_{r,lambda}"),
    _opt("kernel", str, None, "JSON kernel file (instead of --lambda)"),
    _opt("d", float, help_="mean number of downward hyperedges"),
    _opt("offspring", str, "poisson", "offspring law", ["fixed", "poisson"]),
    _opt("n", int, 100_000, "population size"),
    _opt("iters", int, 50, "number of BP iterations"),
    _opt("seed", int, 0, "random seed"),
    _opt("floor_coeff", float, 5.0, "noise-floor coefficient c"),
    _opt("threads", int, None, "worker threads (falls back to HT_THREADS)"),
    _opt("out", str, None, "trajectory CSV path (a JSON sidecar is written next to it)"),
]

COMMANDS = {
    "de": ("Monte Carlo density evolution (population dynamics)", _DE_OPTS),
    "exact-de": (
        "density evolution on quantized BSC mixtures",
        [o for o in _DE_OPTS if o[0] not in ("n", "floor_coeff", "threads")]
        + [_opt("bins", int, 256, "theta grid cells")],
    ),
    "tree-mc": (
        "estimate C_chi2(M_k) by sampling labeled hypertrees",
        [
            _opt("r", int, help_="hyperedge size"),
            _opt("lambda", float, None, "strength of B_{r,lambda}"),
            _opt("kernel", str, None, "JSON kernel file (instead of --lambda)"),
            _opt("d", float, help_="mean number of downward hyperedges"),
            _opt("offspring", str, "poisson", "offspring law", ["fixed", "poisson"]),
            _opt("depth", int, help_="tree depth k"),
            _opt("trees", int, 100_000, "number of sampled trees"),
            _opt("seed", int, 0, "random seed"),
        ],
    ),
    "contraction": (
        "chi^2 multi-terminal contraction coefficient",
        [
            _opt("r", int, None, "hyperedge size (with --lambda)"),
            _opt("lambda", float, None, "strength of B_{r,lambda}"),
            _opt("kernel", str, None, "JSON kernel file (instead of --r/--lambda)"),
            _opt("out", str, None, "JSON report path"),
        ],
    ),
    "skl-verify": (
        "grid check of the SKL contraction inequality for r = 3, 4",
        [
            _opt("r", int, help_="hyperedge size (3 or 4)"),
            _opt("lambda", float, help_="strength of B_{r,lambda}"),
            _opt("grid_step", float, 0.02, "theta grid step"),
            _opt("out", str, None, "JSON report path"),
        ],
    ),
    "gaussian": (
        "evaluate the large-degree Gaussian map g_{r,d,lambda}",
        [
            _opt("r", int, help_="hyperedge size"),
            _opt("x", float, None, "chi^2 capacity argument (omit to only compute the fixed point)"),
            _opt("d", float, 1.0, "mean degree"),
            _opt("lambda", float, None, "strength (alternatively give --ks-ratio)"),
            _opt("ks_ratio", float, None, "(r-1) d lambda^2; sets lambda from d"),
            _opt("order", int, gaussian.DEFAULT_ORDER, "Gauss-Hermite order"),
        ],
    ),
    "below-ks": (
        "scan ks_ratio in [0.90, 1.00) for a nonzero Gaussian fixed point",
        [
            _opt("r", int, help_="hyperedge size"),
            _opt("d", float, help_="mean degree"),
            _opt("out", str, None, "scan CSV path"),
        ],
    ),
    "hsbm-sample": (
        "sample a two-community HSBM",
        [
            _opt("n", int, help_="number of vertices"),
            _opt("r", int, help_="hyperedge size"),
            _opt("a", float, help_="monochromatic rate"),
            _opt("b", float, help_="mixed rate"),
            _opt("seed", int, 0, "random seed"),
            _opt("out", str, help_="graph file path"),
        ],
    ),
    "hsbm-coupling": (
        "compare HSBM neighborhoods with BOHT trees",
        [
            _opt("n", int, help_="number of vertices"),
            _opt("r", int, help_="hyperedge size"),
            _opt("a", float, help_="monochromatic rate"),
            _opt("b", float, help_="mixed rate"),
            _opt("k", int, 1, "neighborhood depth"),
            _opt("samples", int, 1000, "number of roots"),
            _opt("seed", int, 0, "random seed"),
        ],
    ),
    "threshold": (
        "bisect on lambda for the reconstruction threshold of B_{r,lambda}",
        [
            _opt("r", int, help_="hyperedge size"),
            _opt("d", float, help_="mean degree"),
            _opt("offspring", str, "poisson", "offspring law", ["fixed", "poisson"]),
            _opt("tol", float, 2e-3, "bisection width"),
            _opt("n", int, 200_000, "population size"),
            _opt("iters", int, 100, "BP iterations per run"),
            _opt("seed", int, 0, "random seed"),
            _opt("floor_coeff", float, 5.0, "noise-floor coefficient c"),
            _opt("threads", int, None, "worker threads (falls back to HT_THREADS)"),
        ],
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boht", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (desc, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=desc, description=desc)
        p.add_argument("--config", help="JSON file with option values")
        for key, type_, default, help_, choices in opts:
            shown = "required" if default is REQUIRED else f"default: {default}"
            p.add_argument(
                "--" + key.replace("_", "-"),
                dest=key,
                type=type_,
                choices=choices,
                default=argparse.SUPPRESS,
                help=f"{help_} ({shown})",
            )
    return parser


def resolve(command: str, given: dict) -> dict:
    """Merge defaults, ``--config`` file values and explicit flags (in that order)."""
    opts = COMMANDS[command][1]
    values = {k: d for k, _, d, _, _ in opts}
    types = {k: t for k, t, _, _, _ in opts}
    cfg_path = given.pop("config", None)
    if cfg_path:
        try:
            doc = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        doc = {k.replace("-", "_"): v for k, v in doc.items()}
        doc.pop("command", None)
        unknown = sorted(set(doc) - set(values))
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
        for k, v in doc.items():
            try:
                values[k] = None if v is None else types[k](v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k}: {v!r}") from exc
    values.update(given)
    missing = [k for k, v in values.items() if v is REQUIRED]
    if missing:
        raise ConfigError(f"missing required options: {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return values


def _emit(doc) -> None:
    print(json.dumps(doc, separators=(",", ":")))


def _kernel_or_lambda(p):
    if (p["lambda"] is None) == (p["kernel"] is None):
        raise ConfigError("give exactly one of --lambda or --kernel")
    if p["kernel"] is not None:
        kernel = load_kernel(p["kernel"])
        if p.get("r") is not None and kernel.r != p["r"]:
            raise ConfigError("--r does not match the kernel file")
        return None, kernel
    return p["lambda"], None


def _de_config(p, mode):
    lam, kernel = _kernel_or_lambda(p)
    extra = {"bins": p["bins"]} if mode == "exact_quantized" else {
        "pop_size": p["n"], "floor_coeff": p["floor_coeff"], "threads": p["threads"],
    }
    return de.DeConfig(
        r=p["r"], offspring=de.OffspringSpec(p["offspring"], p["d"]), lam=lam, kernel=kernel,
        max_iters=p["iters"], seed=p["seed"], mode=mode, **extra,
    )


def _run_de(p, mode):
    cfg = _de_config(p, mode)
    traj = de.run_de(cfg)
    if p["out"]:
        traj.write(p["out"])
    _emit({
        "verdict": traj.verdict.value,
        "final_chi2": traj.chi2[-1],
        "iters": traj.iters[-1],
        "ks_ratio": cfg.ks_ratio,
        "wall_time_s": traj.wall_time_s,
    })


def cmd_de(p):
    _run_de(p, "monte_carlo")


def cmd_exact_de(p):
    _run_de(p, "exact_quantized")


def cmd_tree_mc(p):
    lam, kernel = _kernel_or_lambda(p)
    est, se = de.tree_mc_estimate(
        p["r"], lam, de.OffspringSpec(p["offspring"], p["d"]), p["depth"], p["trees"],
        seed=p["seed"], kernel=kernel,
    )
    _emit({"estimate": est, "stderr": se, "depth": p["depth"], "trees": p["trees"]})


def cmd_contraction(p):
    if p["kernel"] is not None:
        if p["lambda"] is not None:
            raise ConfigError("give either --kernel or --r/--lambda")
        kernel = load_kernel(p["kernel"])
    else:
        if p["r"] is None or p["lambda"] is None:
            raise ConfigError("need --r and --lambda, or --kernel")
        kernel = b_r_lambda(p["r"], p["lambda"])
    text = contraction.eta_chi2_sym(kernel).to_json()
    if p["out"]:
        Path(p["out"]).write_text(text + "\n")
    print(text)


def cmd_skl_verify(p):
    text = contraction.verify_skl_contraction(p["r"], p["lambda"], p["grid_step"]).to_json()
    if p["out"]:
        Path(p["out"]).write_text(text + "\n")
    print(text)


def cmd_gaussian(p):
    r, d = p["r"], p["d"]
    if (p["lambda"] is None) == (p["ks_ratio"] is None):
        raise ConfigError("give exactly one of --lambda or --ks-ratio")
    if p["lambda"] is not None:
        lam = p["lambda"]
    else:
        if d <= 0:
            raise ConfigError("--ks-ratio needs --d > 0")
        lam = math.sqrt(p["ks_ratio"] / ((r - 1) * d))
    gmap = gaussian.GaussMap(r, d, lam, p["order"])
    doc = {"r": r, "d": d, "lambda": lam, "ks_ratio": gmap.ks_ratio}
    if p["x"] is not None:
        doc["x"] = p["x"]
        doc["g"] = float(gmap(p["x"]))
    doc["fixed_point"] = gaussian.fixed_point(r, d, lam, n_q=p["order"])
    _emit(doc)


def cmd_below_ks(p):
    res, rows = gaussian.below_ks_search(p["r"], p["d"])
    if p["out"]:
        gaussian.write_scan_csv(rows, p["out"])
    if res is None:
        _emit({"found": False})
    else:
        _emit({"found": True, "lambda": res.lam, "fixed_point": res.fixed_point, "ks_ratio": res.ks_ratio})


def cmd_hsbm_sample(p):
    G = hsbm.sample_hsbm(hsbm.two_community(p["n"], p["r"], p["a"], p["b"]), p["seed"])
    hsbm.write_graph(G, p["out"])
    _emit({"n": G.n, "r": G.r, "edges": G.n_edges, "out": p["out"]})


def cmd_hsbm_coupling(p):
    rep = hsbm.coupling_stats(p["n"], p["r"], p["a"], p["b"], p["k"], p["samples"], p["seed"])
    _emit(rep.to_dict())


def cmd_threshold(p):
    res = de.find_threshold(
        p["r"], p["d"], p["offspring"], tol=p["tol"], pop_size=p["n"], max_iters=p["iters"],
        seed=p["seed"], floor_coeff=p["floor_coeff"], threads=p["threads"],
    )
    _emit({"lambda_star": res["lambda_star"], "lambda_ks": res["lambda_ks"], "runs": len(res["runs"])})


HANDLERS = {
    "de": cmd_de,
    "exact-de": cmd_exact_de,
    "tree-mc": cmd_tree_mc,
    "contraction": cmd_contraction,
    "skl-verify": cmd_skl_verify,
    "gaussian": cmd_gaussian,
    "below-ks": cmd_below_ks,
    "hsbm-sample": cmd_hsbm_sample,
    "hsbm-coupling": cmd_hsbm_coupling,
    "threshold": cmd_threshold,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        params = resolve(command, args)
        if params.get("threads") is None and "threads" in params and os.environ.get("HT_THREADS"):
            params["threads"] = int(os.environ["HT_THREADS"])
        HANDLERS[command](params)
    except ResourceError as exc:
        print(f"boht {command}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, DomainError, ConvergenceError, ValueError, OSError) as exc:
        print(f"boht {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
