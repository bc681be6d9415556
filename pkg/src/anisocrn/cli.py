"""Command-line front end.

Every subcommand takes a network JSON document, writes its artifacts into
``--out`` and prints a one-line JSON summary. Exit codes: 0 success, 1 usage
error, 2 validation/hypothesis failure (including a failed check),
3 numerical non-convergence. Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import AnisoError, ConvergenceError, HypothesisError, InconclusiveError, TopologyError
from .network import Network, State, load_network, total_energy

DEFAULT_SEED = 20240917
DEFAULT_OUT = "out"
DEFAULT_TOLS = {
    "hjb": 1e-10,
    "om": 1e-8,
    "time_reversal": 1e-10,
    "orthogonality": 1e-10,
    "lambda": 1e-10,
    "mft": 1e-4,
    "balance": 1e-9,
}


class UsageError(Exception):
    pass


class CheckFailed(AnisoError):
    """An identity check ran but did not meet its tolerance."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- formatting ---------------------------------------------------------------

def fmt_float(x: float):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float("%.12g" % x)


def jsonable(obj):
    """Recursively convert to JSON-ready values with ``%.12g`` floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    return obj


def dumps(obj, indent=None) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=indent)


# -- run configuration ----------------------------------------------------------

@dataclass
class RunConfig:
    network_path: str
    command: str
    seed: int = DEFAULT_SEED
    output_dir: str = DEFAULT_OUT
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    threads: int | None = None

    def write(self, name: str, text: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return path


def _parse_tols(items) -> dict:
    tols = dict(DEFAULT_TOLS)
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep or name not in DEFAULT_TOLS:
            raise UsageError(f"--tol expects NAME=VALUE with NAME in {sorted(DEFAULT_TOLS)}")
        try:
            tols[name] = float(val)
        except ValueError:
            raise UsageError(f"--tol {name}: not a number: {val!r}") from None
    return tols


def _parse_vector(net: Network, text: str) -> np.ndarray:
    """``A=0.5,B=0.5`` or ``0.5,0.5``."""
    parts = [p for p in text.split(",") if p]
    if all("=" in p for p in parts):
        out = np.zeros(net.n_species)
        for p in parts:
            k, v = p.split("=", 1)
            out[net.index(k.strip())] = float(v)
        return out
    vals = np.array([float(p) for p in parts])
    if vals.size != net.n_species:
        raise UsageError(f"expected {net.n_species} values, got {vals.size}")
    return vals


def _initial(net: Network, args) -> tuple[np.ndarray, float]:
    if net.initial_state is not None:
        rho0, theta0 = np.array(net.initial_state.rho), net.initial_state.theta
    else:
        rho0, theta0 = None, None
    if getattr(args, "rho0", None):
        rho0 = _parse_vector(net, args.rho0)
    if getattr(args, "theta0", None) is not None:
        theta0 = args.theta0
    if rho0 is None or theta0 is None:
        raise UsageError("no initial state: add `initial_state` to the network or pass --rho0/--theta0")
    return rho0, float(theta0)


def _counts(rho0: np.ndarray, V: int) -> np.ndarray:
    return np.rint(np.asarray(rho0) * V).astype(np.int64)


# -- subcommands ----------------------------------------------------------------

def cmd_validate(net, cfg, args):
    from .network import is_bounded, temperature_bounds

    summary = {"species": net.n_species, "reactions": net.n_pairs, "reversible": net.is_reversible,
               "constant_transition_energy": net.has_constant_transition_energy}
    if net.initial_state is not None:
        rho0, theta0 = _initial(net, args)
        summary["bounded"] = is_bounded(net, rho0, theta0)
        if summary["bounded"]:
            summary["theta_minus"], summary["theta_plus"] = temperature_bounds(net, rho0, theta0)
    return summary


def cmd_rates(net, cfg, args):
    from .kinetics import arrhenius_all, mass_action_all, rates

    rho0, theta0 = _initial(net, args)
    k = rates(net, State(rho0, theta0))
    B = mass_action_all(net, rho0)
    A = arrhenius_all(net, theta0)
    R = net.n_pairs
    lines = ["reaction_index,direction,rate,mass_action,arrhenius"]
    for d in range(2 * R):
        lines.append("%d,%s,%.12g,%.12g,%.12g" % (d % R, "fw" if d < R else "bw", k[d], B[d], A[d]))
    cfg.write("rates.csv", "\n".join(lines) + "\n")
    return {"rates": list(k)}


def cmd_ode(net, cfg, args):
    from .macro import energy_drift, integrate, trajectory_to_csv

    rho0, theta0 = _initial(net, args)
    traj = integrate(net, State(rho0, theta0), args.T, h=args.T / args.steps, method=args.method,
                     n_out=args.n_out)
    cfg.write("trajectory.csv", trajectory_to_csv(net, traj))
    s = {"T": args.T, "final_rho": traj.rho[-1], "final_theta": traj.theta[-1],
         "energy_drift": energy_drift(net, traj)}
    cfg.write("ode_summary.json", dumps(s, indent=2) + "\n")
    return s


def cmd_ssa(net, cfg, args):
    from .micro import ensemble

    rho0, theta0 = _initial(net, args)
    counts0 = _counts(rho0, args.V)
    summary, events = ensemble(net, counts0, theta0, args.V, args.T, args.N, cfg.seed,
                               n_grid=args.grid, threads=cfg.threads, return_events=True)
    for i, ev in enumerate(events):
        cfg.write(f"events_{i:04d}.csv", ev.to_csv(net.n_pairs))
    names = net.species_names
    cols = ["t", *(f"mean_{n}" for n in names), "mean_theta", *(f"var_{n}" for n in names), "var_theta"]
    lines = [",".join(cols)]
    for j, t in enumerate(summary.times):
        row = [t, *summary.mean_rho[j], summary.mean_theta[j], *summary.var_rho[j], summary.var_theta[j]]
        lines.append(",".join("%.12g" % v for v in row))
    cfg.write("ensemble.csv", "\n".join(lines) + "\n")
    s = {"V": args.V, "T": args.T, "N": args.N, "seed": cfg.seed,
         "absorbed": int(summary.absorbed.sum()), "events": [len(e) for e in events],
         "mean_terminal_flux": summary.terminal_flux.mean(axis=0)}
    cfg.write("ssa_summary.json", dumps(s, indent=2) + "\n")
    return s


def cmd_invariant(net, cfg, args):
    from . import unimolecular as uni
    from .micro import empirical_invariant

    rho0, theta0 = _initial(net, args)
    E0 = total_energy(net, State(rho0, theta0))
    s = {"V": args.V}
    exact = None
    try:
        exact = uni.exact_invariant(net, args.V, E0)
    except TopologyError:
        if not args.samples:
            raise
    if exact is not None:
        lines = ["i," + ",".join(net.species_names) + ",probability"]
        for i, p in zip(exact.states, exact.probabilities):
            c = uni._counts(net, args.V, int(i))
            lines.append("%d,%d,%d,%.12g" % (i, c[0], c[1], p))
        cfg.write("invariant.csv", "\n".join(lines) + "\n")
        s["stationarity_residual"] = uni.stationarity_residual(net, exact)
        if args.rate_table:
            target = _parse_vector(net, args.target)
            Vs = [int(v) for v in args.rate_table.split(",")]
            rows = uni.ldp_rate_convergence(net, Vs, target, rho0, theta0)
            cfg.write("ldp_convergence.csv", uni.table_to_csv(rows))
            s["rate_deviation"] = [r.deviation for r in rows]
    if args.samples:
        h = empirical_invariant(net, _counts(rho0, args.V), theta0, args.V, args.burn_in, args.samples,
                                seed=cfg.seed)
        cfg.write("histogram.csv", h.to_csv(net.species_names))
        s["jumps"] = h.n_jumps
        if exact is not None:
            iA = int(np.argmax(net.alpha_fw[0]))
            emp = {int(st[iA]): p for st, p in zip(h.states, h.probabilities)}
            s["total_variation"] = 0.5 * sum(abs(emp.get(int(i), 0.0) - p)
                                             for i, p in zip(exact.states, exact.probabilities))
    return s


def _qp(net, args):
    from .quasipotential import build_quasipotential

    rho0, theta0 = _initial(net, args)
    return rho0, theta0, build_quasipotential(net, rho0, theta0)


def cmd_quasipotential(net, cfg, args):
    from .network import interior_grid
    from .quasipotential import gradient, hjb_residual, value

    rho0, theta0, qp = _qp(net, args)
    grid = interior_grid(net, rho0, theta0, n=args.grid)
    lines = [",".join([*net.species_names, "theta", "value", "grad_norm", "hjb_residual"])]
    worst = 0.0
    for r in grid:
        res = hjb_residual(qp, r)
        worst = max(worst, res)
        row = [*r, qp.theta(r), value(qp, r), np.linalg.norm(gradient(qp, r)), res]
        lines.append(",".join("%.12g" % v for v in row))
    cfg.write("quasipotential.csv", "\n".join(lines) + "\n")
    return {"points": len(grid), "max_hjb_residual": worst, "pi": qp.pi, "rho_inf": qp.rho_inf,
            "theta_inf": qp.theta_inf}


def cmd_ldp(net, cfg, args):
    from .ldp import path_rate_flux, path_rate_state
    from .macro import trajectory_from_csv

    with open(args.trajectory, encoding="utf-8") as fh:
        traj = trajectory_from_csv(net, fh.read())
    if args.flux:
        if traj.fluxes is None:
            raise UsageError("--flux needs w_* columns in the trajectory")
        cost = path_rate_flux(net, traj.times, traj.fluxes, traj.rho[0], float(traj.theta[0]))
    else:
        cost = path_rate_state(net, traj)
    cfg.write("path_cost.json", cost.to_json() + "\n")
    cfg.write("path_cost_intervals.csv", cost.intervals_csv())
    return {"total": cost.total, "intervals": int(cost.per_interval.size), "kind": "flux" if args.flux else "state"}


# -- checks -----------------------------------------------------------------------

def _verdict(name: str, value: float, tol: float, s: dict) -> dict:
    s = dict(s, max_residual=value, tolerance=tol, passed=bool(value <= tol))
    s["check"] = name
    return s


def check_balance(net, cfg, args):
    from .balance import balance_report

    rho0, _ = _initial(net, args)
    rep = balance_report(net, rho0, cfg.tolerances["balance"])
    cfg.write("balance.json", rep.to_json() + "\n")
    return json.loads(rep.to_json())


def check_hjb(net, cfg, args):
    from .network import interior_grid
    from .quasipotential import hjb_residual

    rho0, theta0, qp = _qp(net, args)
    grid = interior_grid(net, rho0, theta0, n=args.grid)
    worst = max(hjb_residual(qp, r) for r in grid)
    return _verdict("hjb", worst, cfg.tolerances["hjb"], {"points": len(grid)})


def _random_points(net, rho0, theta0, n, rng):
    from .network import random_interior

    return random_interior(net, rho0, theta0, n, rng, margin=0.05)


def check_om(net, cfg, args):
    from .micro import make_rng
    from .ommft import om_decomposition_residual, time_reversal_residual

    rho0, theta0, qp = _qp(net, args)
    rng = make_rng(cfg.seed)
    pts = _random_points(net, rho0, theta0, args.samples, rng)
    Q = np.asarray(net.gamma, dtype=float)
    worst = 0.0
    worst_tr = 0.0
    for r in pts:
        u = Q @ rng.standard_normal(net.n_pairs)
        worst = max(worst, om_decomposition_residual(net, qp, r, u))
        worst_tr = max(worst_tr, time_reversal_residual(net, qp, r, rng.standard_normal(net.n_species)))
    s = _verdict("om", worst, cfg.tolerances["om"], {"samples": len(pts)})
    s["time_reversal_residual"] = worst_tr
    s["time_reversal_symmetric"] = bool(worst_tr <= cfg.tolerances["time_reversal"])
    return s


def check_orthogonality(net, cfg, args):
    from .network import interior_grid
    from .ommft import lambda_adjoint, lambda_terms, orthogonality_residual

    rho0, theta0, qp = _qp(net, args)
    grid = interior_grid(net, rho0, theta0, n=args.grid)
    r1 = r2 = cross = 0.0
    lam_min = math.inf
    for r in grid:
        a, b = orthogonality_residual(net, qp, r)
        le = lambda_terms(net, qp, r)
        la = lambda_adjoint(net, qp, r)
        r1, r2 = max(r1, a), max(r2, b)
        cross = max(cross, abs(le[0] - la[0]), abs(le[1] - la[1]))
        lam_min = min(lam_min, *le)
    s = _verdict("orthogonality", max(r1, r2), cfg.tolerances["orthogonality"],
                 {"points": len(grid), "sym_residual": r1, "asym_residual": r2,
                  "lambda_cross_residual": cross, "lambda_min": lam_min})
    s["passed"] = bool(s["passed"] and cross <= cfg.tolerances["lambda"] and lam_min >= 0)
    return s


def check_mft(net, cfg, args):
    from .micro import make_rng
    from .ommft import mft_path_report, perturbed_flux_path

    rho0, theta0, qp = _qp(net, args)
    rng = make_rng(cfg.seed)
    worst = 0.0
    slack_min = math.inf
    reports = []
    for _ in range(args.paths):
        t, w = perturbed_flux_path(net, rho0, theta0, args.T, args.intervals, rng, amplitude=args.amplitude)
        rep = mft_path_report(net, qp, t, w, rho0)
        reports.append(json.loads(rep.to_json()))
        worst = max(worst, rep.residuals["sym_split"], rep.residuals["asym_split"])
        slack_min = min(slack_min, rep.terms["estimate_sym_slack"], rep.terms["estimate_asym_slack"])
    cfg.write("mft_paths.json", dumps(reports, indent=2) + "\n")
    s = _verdict("mft", worst, cfg.tolerances["mft"], {"paths": args.paths, "min_estimate_slack": slack_min})
    s["passed"] = bool(s["passed"] and slack_min >= 0)
    return s


def check_boundary(net, cfg, args):
    from .boundary import classify_boundary, hypothesis_check, query_from_dict

    with open(args.query, encoding="utf-8") as fh:
        q, E0 = query_from_dict(net, json.load(fh))
    if E0 is None:
        rho0, theta0 = _initial(net, args)
        E0 = total_energy(net, State(rho0, theta0))
    v = classify_boundary(net, E0, q)
    cfg.write("boundary_table.csv", v.table_csv())
    s = {"verdict": v.verdict, "r2": v.r2, "E0": E0}
    if net.initial_state is not None or args.rho0:
        rho0, theta0 = _initial(net, args)
        s["hypotheses"] = hypothesis_check(net, rho0, theta0).as_dict()
    cfg.write("boundary.json", dumps(s, indent=2) + "\n")
    return s


CHECKS = {
    "balance": check_balance,
    "hjb": check_hjb,
    "om": check_om,
    "mft": check_mft,
    "orthogonality": check_orthogonality,
    "boundary": check_boundary,
}


def cmd_check(net, cfg, args):
    s = CHECKS[args.check](net, cfg, args)
    if args.check not in ("balance", "boundary"):
        cfg.write(f"check_{args.check}.json", dumps(s, indent=2) + "\n")
        if not s["passed"]:
            raise CheckFailed(f"{args.check} residual {s['max_residual']:.3g} exceeds tolerance "
                              f"{s['tolerance']:.3g}")
    return s


def _section(fn):
    try:
        return fn()
    except (AnisoError, ValueError) as exc:
        return {"error": type(exc).__name__, "message": str(exc)}


def cmd_report(net, cfg, args):
    from .balance import balance_report
    from .boundary import hypothesis_check

    rho0, theta0 = _initial(net, args)
    rep: dict = {"network": {"species": net.n_species, "reactions": net.n_pairs}}
    hyp = hypothesis_check(net, rho0, theta0)
    rep["hypotheses"] = hyp.as_dict()
    bal = _section(lambda: json.loads(balance_report(net, rho0, cfg.tolerances["balance"]).to_json()))
    rep["balance"] = bal
    skip = None
    if not hyp.satisfied:
        skip = "large-deviation hypotheses fail (unbounded set or zero minimal temperature)"
    elif "error" in bal or not bal["icb"]:
        skip = "isothermal complex balance fails"
    sub = argparse.Namespace(**vars(args))
    if skip:
        for k in ("hjb", "om", "orthogonality", "mft"):
            rep[k] = {"skipped": skip}
    else:
        sub.grid, sub.samples, sub.paths, sub.T, sub.intervals, sub.amplitude = args.grid, 50, 2, 2.0, 200, 0.05
        rep["hjb"] = _section(lambda: check_hjb(net, cfg, sub))
        if bal["idb"]:
            rep["om"] = _section(lambda: check_om(net, cfg, sub))
        else:
            rep["om"] = {"skipped": "isothermal detailed balance fails"}
        if net.has_constant_transition_energy:
            sub.grid = min(args.grid, 10)
            rep["orthogonality"] = _section(lambda: check_orthogonality(net, cfg, sub))
            rep["mft"] = _section(lambda: check_mft(net, cfg, sub))
        else:
            for k in ("orthogonality", "mft"):
                rep[k] = {"skipped": "transition energy is not constant"}
    cfg.write("report.json", dumps(rep, indent=2) + "\n")
    def status(v):
        if "passed" in v:
            return "pass" if v["passed"] else "fail"
        return "skipped" if "skipped" in v else "error"

    return {k: status(rep[k]) for k in ("hjb", "om", "orthogonality", "mft")}


COMMANDS = {
    "validate": cmd_validate,
    "rates": cmd_rates,
    "ode": cmd_ode,
    "ssa": cmd_ssa,
    "invariant": cmd_invariant,
    "quasipotential": cmd_quasipotential,
    "ldp": cmd_ldp,
    "check": cmd_check,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--tol", action="append", default=argparse.SUPPRESS, metavar="NAME=VALUE")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--rho0", default=argparse.SUPPRESS, help="initial concentrations, e.g. A=0.5,B=0.5")
    common.add_argument("--theta0", type=float, default=argparse.SUPPRESS)

    p = _Parser(prog="anisocrn", description="Anisothermal reaction networks", parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.add_argument("network", help="network JSON document")
        return sp

    add("validate", "parse and validate a network")
    add("rates", "rates at the initial state")
    sp = add("ode", "integrate the macroscopic equation")
    sp.add_argument("--T", type=float, default=10.0)
    sp.add_argument("--steps", type=int, default=10_000)
    sp.add_argument("--n-out", type=int, default=1000)
    sp.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
    sp = add("ssa", "stochastic simulation ensemble")
    sp.add_argument("--V", type=int, required=True)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--N", type=int, default=1)
    sp.add_argument("--grid", type=int, default=101, help="output time points")
    sp = add("invariant", "exact and/or empirical invariant measure")
    sp.add_argument("--V", type=int, required=True)
    sp.add_argument("--samples", type=int, default=0, help="jumps for the empirical histogram")
    sp.add_argument("--burn-in", type=float, default=10.0)
    sp.add_argument("--rate-table", default="", help="comma-separated V list for the LDP rate table")
    sp.add_argument("--target", default="", help="target concentrations for --rate-table")
    sp = add("quasipotential", "quasipotential and HJB residual on an interior grid")
    sp.add_argument("--grid", type=int, default=50)
    sp = add("ldp", "large-deviation cost of a trajectory CSV")
    sp.add_argument("trajectory")
    sp.add_argument("--flux", action="store_true", help="use the flux cost with the w_* columns")

    sp = sub.add_parser("check", help="verify an identity", parents=[common])
    csub = sp.add_subparsers(dest="check", required=True, parser_class=_Parser)
    for name in CHECKS:
        c = csub.add_parser(name, parents=[common])
        c.add_argument("network")
        if name in ("hjb", "orthogonality"):
            c.add_argument("--grid", type=int, default=50)
        if name == "om":
            c.add_argument("--samples", type=int, default=1000)
        if name == "mft":
            c.add_argument("--paths", type=int, default=20)
            c.add_argument("--T", type=float, default=2.0)
            c.add_argument("--intervals", type=int, default=400)
            c.add_argument("--amplitude", type=float, default=0.05)
        if name == "boundary":
            c.add_argument("query", help="boundary query JSON")
    sp = add("report", "consolidated identity report")
    sp.add_argument("--grid", type=int, default=20)
    return p


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")


def run(argv=None) -> int:
    """Run the CLI and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = RunConfig(network_path=args.network, command=args.command,
                        seed=getattr(args, "seed", DEFAULT_SEED),
                        output_dir=getattr(args, "out", DEFAULT_OUT),
                        tolerances=_parse_tols(getattr(args, "tol", None)),
                        threads=getattr(args, "threads", None))
        if cfg.seed < 0 or cfg.seed >= 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if not os.path.isfile(cfg.network_path):
            raise FileNotFoundError(f"no such network file: {cfg.network_path}")
        net = load_network(cfg.network_path)
        summary = COMMANDS[args.command](net, cfg, args)
    except UsageError as exc:
        _error("UsageError", str(exc))
        return 1
    except (ConvergenceError, InconclusiveError) as exc:
        _error(type(exc).__name__, str(exc))
        return 3
    except (AnisoError, HypothesisError, ValueError, FileNotFoundError) as exc:
        _error(type(exc).__name__, str(exc))
        return 2
    print(f"{args.command}: {dumps(summary)}")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
