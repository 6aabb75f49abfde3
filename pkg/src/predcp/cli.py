"""Command-line front end.

Every computation is a subcommand that writes CSV/JSON artifacts plus a
manifest.json echoing the resolved configuration; a run is reproducible
from its manifest alone.  Floats are emitted with 17 significant digits so
CSV round trips are lossless.

Exit codes: 0 success, 2 domain error, 3 numerical-verification failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import kld_priors, linear, mcprior, network, sampler
from .errors import (DegenerateMapError, DomainError, StructuralError,
                     UnboundedMapError)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

_PI_KL_DEFAULTS = {
    "exponential": {"scale": 0.5},
    "gamma": {"shape": 0.2, "scale": 2.0},
    "log_cauchy": {"scale": 1.0},
    "half_cauchy": {"scale": 1.0},
    "gamma_exp_mixture": {"weight": 0.5, "gamma_shape": 0.2,
                          "gamma_scale": 2.0, "exp_scale": 0.5},
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def fmt(x) -> str:
    return f"{float(x):.17g}"


def parse_pi_kl(text) -> kld_priors.KldPriorSpec:
    """Either a bare family name (default parameters) or a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        obj = json.loads(text)
        return kld_priors.KldPriorSpec.from_json_dict(obj)
    name = text.replace("-", "_")
    if name not in _PI_KL_DEFAULTS:
        raise DomainError(f"unknown pi_KL family {text!r}")
    return kld_priors.KldPriorSpec(name, _PI_KL_DEFAULTS[name])


def load_model(arg, sigma_y=None):
    """Model JSON from an inline string or a file path."""
    text = arg.strip()
    if not text.startswith("{"):
        text = Path(arg).read_text()
    obj = json.loads(text)
    kind = obj.get("kind", "linear")
    if kind == "linear":
        spec = linear.LinearModelSpec(
            x=obj.get("x"),
            design=np.asarray(obj["design"], dtype=float) if "design" in obj else None,
            sigma_y=sigma_y if sigma_y is not None else obj.get("sigma_y", 1.0),
            intercept_sd=obj.get("intercept_sd", 0.0))
        return "linear", spec, obj
    if kind == "network":
        spec = network.NetworkSpec.from_json_dict(obj)
        obs_obj = obj.get("obs", {"kind": "gaussian", "sigma_y": 1.0})
        if obs_obj["kind"] == "gaussian":
            sy = sigma_y if sigma_y is not None else obs_obj.get("sigma_y", 1.0)
            obs = network.ObservationModel.gaussian(sy)
        else:
            obs = network.ObservationModel.categorical(obs_obj.get("classes",
                                                                   spec.output_dim))
        return "network", (spec, obs, obj.get("seed", 0)), obj
    raise DomainError(f"unknown model kind {kind!r}")


def tau_grid_from_args(args):
    if getattr(args, "tau", None) is not None:
        return np.asarray([float(v) for v in str(args.tau).split(",")])
    if args.log_scale:
        if args.min <= 0:
            raise DomainError("log-scale grids need --min > 0")
        return np.geomspace(args.min, args.max, args.points)
    return np.linspace(args.min, args.max, args.points)


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (int, float, np.floating))
                              and not isinstance(v, bool) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, args, argv, outputs):
    resolved = {k: v for k, v in vars(args).items()
                if k not in ("func",) and v is not None}
    resolved["out"] = str(out)
    manifest = {"subcommand": argv[0], "argv": list(argv),
                "resolved": resolved, "outputs": outputs,
                "threads": _workers()}
    write_json(out / "manifest.json", manifest)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PREDCP_THREADS", "1")))
    except ValueError:
        return 1


def _linear_map(model_spec, which):
    if which == "predcp":
        return linear.predcp_map(model_spec)
    return linear.ecp_map(model_spec)


# --------------------------------------------------------------------------
# subcommand implementations
# --------------------------------------------------------------------------

def cmd_density(args, argv, which):
    pi = parse_pi_kl(args.pi_kl)
    _, spec, _ = load_model(args.model, args.sigma_y)
    dmap = _linear_map(spec, which)
    grid = tau_grid_from_args(args)
    dens = [float(linear.cov_density(pi, dmap, t)) for t in grid]
    out = _out_dir(args)
    write_csv(out / "density.csv", ["tau", "density"], zip(grid, dens))
    _write_manifest(out, args, argv, ["density.csv"])
    return EXIT_OK


def cmd_marginal(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    _, spec, _ = load_model(args.model, args.sigma_y)
    dmap = _linear_map(spec, args.map)
    grid = tau_grid_from_args(args)
    rows = []
    for b in grid:
        d, _ = linear.marginal_beta_density(pi, spec, b, dmap)
        rows.append((b, d))
    out = _out_dir(args)
    write_csv(out / "marginal.csv", ["beta", "density"], rows)
    _write_manifest(out, args, argv, ["marginal.csv"])
    return EXIT_OK


def cmd_shrinkage(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    _, spec, _ = load_model(args.model, args.sigma_y)
    dmap = _linear_map(spec, args.map)
    grid = tau_grid_from_args(args)
    if np.any((grid <= 0) | (grid >= 1)):
        raise DomainError("shrinkage grid must lie inside (0, 1)")
    rows = [(k, float(linear.shrinkage_profile(pi, dmap, k))) for k in grid]
    out = _out_dir(args)
    write_csv(out / "shrinkage.csv", ["kappa", "density"], rows)
    _write_manifest(out, args, argv, ["shrinkage.csv"])
    return EXIT_OK


def _unit_norm_rank_design(n, d, rank):
    x = np.zeros((n, d))
    for i in range(n):
        x[i, i % rank] = 1.0
    return x


def cmd_tail_prob(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    out = _out_dir(args)
    if args.sweep == "none":
        _, spec, _ = load_model(args.model, args.sigma_y)
        dmap = _linear_map(spec, args.map)
        p, res = linear.tail_probability(pi, dmap, args.threshold)
        write_json(out / "tail_prob.json", {
            "threshold": args.threshold, "tail_prob": p,
            "error_estimate": res.error, "converged": res.converged})
        _write_manifest(out, args, argv, ["tail_prob.json"])
        return EXIT_OK if res.converged or res.error < 1e-3 else EXIT_NUMERICAL
    rows = []
    if args.sweep == "rank":
        n = args.max_rank
        for r in range(1, args.max_rank + 1):
            spec = linear.LinearModelSpec(design=_unit_norm_rank_design(n, n, r),
                                          sigma_y=args.sigma_y or 1.0)
            p, _ = linear.tail_probability(pi, linear.ecp_map(spec), args.threshold)
            rows.append((r, p))
        write_csv(out / "tail_prob.csv", ["rank", "tail_prob"], rows)
    else:
        base = np.eye(args.dim)
        for a in np.geomspace(args.min, args.max, args.points):
            spec = linear.LinearModelSpec(design=a * base,
                                          sigma_y=args.sigma_y or 1.0)
            p, _ = linear.tail_probability(pi, linear.ecp_map(spec), args.threshold)
            rows.append((a, p))
        write_csv(out / "tail_prob.csv", ["scale", "tail_prob"], rows)
    _write_manifest(out, args, argv, ["tail_prob.csv"])
    return EXIT_OK


def cmd_beta1(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    _, spec, _ = load_model(args.model, args.sigma_y)
    grid = tau_grid_from_args(args)
    rows = [(b, float(linear.ecp_beta1_density(pi, spec, b))) for b in grid]
    out = _out_dir(args)
    write_csv(out / "beta1.csv", ["beta", "density"], rows)
    _write_manifest(out, args, argv, ["beta1.csv"])
    return EXIT_OK


def cmd_nonlocal(args, argv):
    grid = tau_grid_from_args(args)
    rows = [(b, float(linear.nonlocal_pdf(args.sigma, b))) for b in grid]
    out = _out_dir(args)
    write_csv(out / "nonlocal.csv", ["beta", "density"], rows)
    _write_manifest(out, args, argv, ["nonlocal.csv"])
    return EXIT_OK


def _network_setup(args):
    kind, payload, _ = load_model(args.model, args.sigma_y)
    if kind != "network":
        raise DomainError("this subcommand needs a network model")
    spec, obs, wseed = payload
    weights = network.weight_state(spec, wseed)
    mc = mcprior.McConfig(samples=args.mc_samples, master_seed=args.seed)
    return spec, obs, weights, mc


def _network_inputs(spec, args):
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(5,)))
    return rng.standard_normal((args.n_inputs, spec.input_dim))


def cmd_depthwise(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    spec, obs, weights, mc = _network_setup(args)
    taus = [float(v) for v in args.tau.split(",")]
    X = _network_inputs(spec, args)
    res = mcprior.depthwise_log_predcp(pi, spec, weights, X, obs, taus, mc)
    out = _out_dir(args)
    write_json(out / "depthwise.json", {
        "layers": [t.to_json_dict() for t in res.layers],
        "total": res.total})
    _write_manifest(out, args, argv, ["depthwise.json"])
    return EXIT_OK


def cmd_joint_grid(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    spec, obs, weights, mc = _network_setup(args)
    X = _network_inputs(spec, args)
    grid = tau_grid_from_args(args)
    res = mcprior.joint_density_grid(pi, spec, weights, X, obs, grid, grid, mc,
                                     workers=_workers())
    rows = []
    for i, t1 in enumerate(res.tau1):
        for j, t2 in enumerate(res.tau2):
            rows.append((t1, t2, res.density[i, j], int(res.degenerate[i, j])))
    out = _out_dir(args)
    write_csv(out / "joint_grid.csv", ["tau1", "tau2", "density", "degenerate"], rows)
    _write_manifest(out, args, argv, ["joint_grid.csv"])
    return EXIT_OK


def cmd_meta_prior(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    spec, obs, weights, mc = _network_setup(args)
    taus = [float(v) for v in args.tau.split(",")]
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(6,)))
    tasks = rng.standard_normal((args.tasks, args.task_size, spec.input_dim))
    res = mcprior.meta_modular_log_prior(pi, spec, weights, tasks, taus, mc, obs)
    out = _out_dir(args)
    write_json(out / "meta_prior.json", {
        "modules": [t.to_json_dict() for t in res.layers],
        "total": res.total})
    _write_manifest(out, args, argv, ["meta_prior.json"])
    return EXIT_OK


def _map_for_check(args):
    kind, payload, _ = load_model(args.model, args.sigma_y)
    if kind == "linear":
        return _linear_map(payload, args.map)
    spec, obs, wseed = payload
    weights = network.weight_state(spec, wseed)
    mc = mcprior.McConfig(samples=args.mc_samples, master_seed=args.seed)
    taus = ([float(v) for v in args.tau.split(",")] if args.tau
            else [1.0] * spec.depth)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(5,)))
    X = rng.standard_normal((args.n_inputs, spec.input_dim))
    return mcprior.network_divergence_map(spec, weights, X, obs, taus,
                                          args.layer, mc)


def cmd_sample_tau(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    dmap = _map_for_check(args)
    cfg = sampler.SamplerConfig(mode=args.mode)
    rows = []
    for i in range(args.draws):
        draw = sampler.sample_tau(pi, dmap, cfg,
                                  np.random.SeedSequence(args.seed, spawn_key=(7, i)))
        rows.append((i, draw.tau, draw.residual, draw.mode))
    out = _out_dir(args)
    write_csv(out / "tau_draws.csv", ["draw_id", "tau", "residual", "mode"], rows)
    _write_manifest(out, args, argv, ["tau_draws.csv"])
    return EXIT_OK


def cmd_sample_functions(args, argv):
    kind, payload, _ = load_model(args.model, args.sigma_y)
    if kind != "network":
        raise DomainError("sample-functions needs a network model")
    spec, obs, _ = payload
    pi = parse_pi_kl(args.pi_kl)
    grid = np.linspace(args.min, args.max, args.points)
    curves = sampler.sample_function_draws(args.prior, spec, grid, args.draws,
                                           args.seed, pi_kl=pi,
                                           mc_samples=args.mc_samples)
    rows = []
    for d in range(curves.shape[0]):
        for x, y in zip(grid, curves[d]):
            rows.append((d, x, y))
    out = _out_dir(args)
    write_csv(out / "functions.csv", ["draw_id", "x", "y"], rows)
    _write_manifest(out, args, argv, ["functions.csv"])
    return EXIT_OK


def cmd_check_propriety(args, argv):
    pi = parse_pi_kl(args.pi_kl)
    dmap = _map_for_check(args)
    report = mcprior.check_propriety(pi, dmap)
    out = _out_dir(args)
    passed = abs(report.integral - 1.0) <= args.tol
    write_json(out / "propriety.json", {
        "integral": report.integral, "error_estimate": report.error_estimate,
        "converged": report.converged, "panels": report.panels,
        "tolerance": args.tol, "passed": passed})
    _write_manifest(out, args, argv, ["propriety.json"])
    return EXIT_OK if passed else EXIT_NUMERICAL


def cmd_check_monotone(args, argv):
    dmap = _map_for_check(args)
    # --tau holds the network's fixed per-layer scales here; the probe grid
    # always comes from --min/--max/--points
    if args.log_scale:
        if args.min <= 0:
            raise DomainError("log-scale grids need --min > 0")
        grid = np.geomspace(args.min, args.max, args.points)
    else:
        grid = np.linspace(args.min, args.max, args.points)
    report = mcprior.check_monotone(dmap, grid)
    out = _out_dir(args)
    payload = {"passed": report.passed, "n_points": report.n_points}
    if report.first_violation:
        idx, tau, reason = report.first_violation
        payload["first_violation"] = {"index": idx, "tau": tau, "reason": reason}
    write_json(out / "monotone.json", payload)
    _write_manifest(out, args, argv, ["monotone.json"])
    return EXIT_OK if report.passed else EXIT_NUMERICAL


# --------------------------------------------------------------------------
# argument wiring
# --------------------------------------------------------------------------

_DEFAULT_LINEAR = '{"kind": "linear", "x": 1.0}'


def _add_common(p, model_default=_DEFAULT_LINEAR):
    p.add_argument("--pi-kl", default="exponential",
                   help="family name or JSON {family, params}")
    p.add_argument("--model", default=model_default,
                   help="model JSON (inline or file path)")
    p.add_argument("--sigma-y", type=float, default=None,
                   help="override the model's response noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")


def _add_grid(p, lo=1e-3, hi=10.0, points=200):
    p.add_argument("--tau", default=None,
                   help="explicit comma-separated grid (overrides min/max)")
    p.add_argument("--min", type=float, default=lo)
    p.add_argument("--max", type=float, default=hi)
    p.add_argument("--points", type=int, default=points)
    p.add_argument("--log-scale", action="store_true")


def _add_network(p):
    p.add_argument("--mc-samples", type=int, default=64)
    p.add_argument("--n-inputs", type=int, default=16,
                   help="rows of the seed-derived input batch")
    p.add_argument("--layer", type=int, default=1)


def build_parser() -> _Parser:
    ap = _Parser(prog="predcp", description=__doc__,
                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ecp-density", help="linear evidence-prior density on tau")
    _add_common(p); _add_grid(p)
    p.set_defaults(func=lambda a, v: cmd_density(a, v, "ecp"))

    p = sub.add_parser("predcp-density", help="linear predictive-prior density on tau")
    _add_common(p); _add_grid(p)
    p.set_defaults(func=lambda a, v: cmd_density(a, v, "predcp"))

    p = sub.add_parser("marginal", help="marginal prior density on the coefficient")
    _add_common(p); _add_grid(p, lo=-4.0, hi=4.0, points=81)
    p.add_argument("--map", choices=("ecp", "predcp"), default="ecp")
    p.set_defaults(func=cmd_marginal)

    p = sub.add_parser("shrinkage", help="density of kappa = 1/(1+tau)")
    _add_common(p); _add_grid(p, lo=0.005, hi=0.995, points=199)
    p.add_argument("--map", choices=("ecp", "predcp"), default="ecp")
    p.set_defaults(func=cmd_shrinkage)

    p = sub.add_parser("tail-prob", help="P(tau > threshold), optionally swept")
    _add_common(p)
    p.add_argument("--map", choices=("ecp", "predcp"), default="ecp")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--sweep", choices=("none", "rank", "scale"), default="none")
    p.add_argument("--max-rank", type=int, default=20)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--min", type=float, default=0.25)
    p.add_argument("--max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=9)
    p.set_defaults(func=cmd_tail_prob)

    p = sub.add_parser("beta1-density", help="prior placed directly on the slope")
    _add_common(p); _add_grid(p, lo=-4.0, hi=4.0, points=161)
    p.set_defaults(func=cmd_beta1)

    p = sub.add_parser("nonlocal", help="product second-moment density")
    _add_common(p); _add_grid(p, lo=-4.0, hi=4.0, points=161)
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(func=cmd_nonlocal)

    net_model = ('{"kind": "network", "input_dim": 1, "hidden_dim": 8, '
                 '"output_dim": 1, "depth": 2, "residual": true}')

    p = sub.add_parser("depthwise", help="depth-wise log prior of a network")
    _add_common(p, model_default=net_model); _add_network(p)
    p.add_argument("--tau", required=True, help="comma-separated per-layer scales")
    p.set_defaults(func=cmd_depthwise)

    p = sub.add_parser("joint-grid", help="joint density over (tau1, tau2)")
    _add_common(p, model_default=net_model); _add_network(p)
    _add_grid(p, lo=0.0, hi=3.0, points=40)
    p.set_defaults(func=cmd_joint_grid)

    p = sub.add_parser("meta-prior", help="modular adaptation prior over tasks")
    _add_common(p, model_default=net_model); _add_network(p)
    p.add_argument("--tau", required=True)
    p.add_argument("--tasks", type=int, default=4)
    p.add_argument("--task-size", type=int, default=8)
    p.set_defaults(func=cmd_meta_prior)

    p = sub.add_parser("sample-tau", help="prior draws of tau by inversion")
    _add_common(p); _add_network(p)
    p.add_argument("--map", choices=("ecp", "predcp"), default="ecp")
    p.add_argument("--tau", default=None, help="network: fixed per-layer scales")
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--mode", choices=("newton_paper", "bisection_robust"),
                   default="bisection_robust")
    p.set_defaults(func=cmd_sample_tau)

    p = sub.add_parser("sample-functions", help="ancestral function draws")
    _add_common(p, model_default=('{"kind": "network", "input_dim": 1, '
                                  '"hidden_dim": 16, "output_dim": 1, '
                                  '"depth": 5, "residual": true}'))
    p.add_argument("--prior", choices=sampler.PRIOR_KINDS, default="predcp")
    p.add_argument("--draws", type=int, default=5)
    p.add_argument("--min", type=float, default=-3.0)
    p.add_argument("--max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--mc-samples", type=int, default=5)
    p.set_defaults(func=cmd_sample_functions)

    p = sub.add_parser("check-propriety", help="verify the prior integrates to one")
    _add_common(p); _add_network(p)
    p.add_argument("--map", choices=("ecp", "predcp"), default="ecp")
    p.add_argument("--tau", default=None)
    p.add_argument("--tol", type=float, default=0.02)
    p.set_defaults(func=cmd_check_propriety)

    p = sub.add_parser("check-monotone", help="verify strict monotonicity")
    _add_common(p); _add_network(p)
    p.add_argument("--map", choices=("ecp", "predcp"), default="ecp")
    _add_grid(p, lo=1e-4, hi=1e2, points=25)
    p.set_defaults(func=cmd_check_monotone)
    return ap


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, list(argv))
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateMapError, UnboundedMapError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}),
              file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, StructuralError, json.JSONDecodeError,
            FileNotFoundError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}),
              file=sys.stderr)
        return EXIT_DOMAIN


def replay(manifest_path, out) -> int:
    """Re-run a recorded configuration into a fresh output directory."""
    manifest = json.loads(Path(manifest_path).read_text())
    argv = list(manifest["argv"])
    if "--out" in argv:
        i = argv.index("--out")
        argv[i + 1] = str(out)
    else:
        argv += ["--out", str(out)]
    return run(argv)


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
