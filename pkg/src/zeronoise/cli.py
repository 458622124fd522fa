"""Command-line entry point: solve / converge / simulate / gradflow / torus.

A run is described by a JSON config (strictly validated: unknown keys are
rejected at every level so typos cannot silently fall back to defaults),
optionally overridden by flags. Everything is computed before anything is
written; artifacts (CSV tables, JSON summaries, PNG figures) land in the
output directory in one pass with the manifest last. The exit status is 0
exactly when every asserted invariant and certificate of the run passed.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plots
from .circle import (
    residual,
    solve_stationary_fd,
    solve_stationary_quadrature,
    unperturbed_density,
    convergence_study,
)
from .errors import ValidationError, ZeroNoiseError
from .families import make_rule, make_rule_2d
from .fields import DiffusionCoeff1D, FlowField1D, Grid1D, evaluate_trig, field_from_rule
from .fields2d import Grid2D, field_from_rule_2d
from .gradient import PotentialField, concentration_study, gibbs_density
from .orderfit import OrderFit, fit_order  # noqa: F401  (shared fitting, re-exported)
from .report import Artifact, StageTimer, csv_bytes, json_bytes, write_run
from .sde import (
    SdeConfig,
    default_test_functions,
    l1_distance,
    occupation_measure,
    scheme_reference_density,
    weak_gaps,
)
from .torus import (
    StreamFunction2D,
    constant_field,
    field_from_stream,
    rigidity_check,
    solve_stationary_fd_2d,
)

_RULE = {"name": "", "params": {}}

DEFAULTS: dict[str, dict] = {
    "solve": {
        "out_dir": "runs/solve",
        "n": 512,
        "eps": 0.1,
        "solver": "quadrature",
        "drift": {"name": "offset_sin", "params": {"offset": 2.0, "amplitude": 1.0, "harmonic": 1}},
        "gamma": {"name": "constant", "params": {"value": 1.0}},
        "plots": True,
    },
    "converge": {
        "out_dir": "runs/converge",
        "n": 512,
        "eps_values": [0.2, 0.1, 0.05, 0.02, 0.01],
        "drift": {"name": "offset_sin", "params": {"offset": 2.0, "amplitude": 1.0, "harmonic": 1}},
        "gamma": {"name": "constant", "params": {"value": 1.0}},
        "plots": True,
    },
    "simulate": {
        "out_dir": "runs/simulate",
        "n": 512,
        "eps": 0.1,
        "scheme": "heun",
        "drift": {"name": "offset_sin", "params": {"offset": 2.0, "amplitude": 1.0, "harmonic": 1}},
        "gamma": {"name": "constant", "params": {"value": 1.0}},
        "sde": {
            "dt": 0.001,
            "n_steps": 1000000,
            "burn_in": 100000,
            "n_trajectories": 16,
            "seed": 20260814,
            "bins": 64,
        },
        "plots": True,
    },
    "gradflow": {
        "out_dir": "runs/gradflow",
        "n": 512,
        "eps_values": [0.4, 0.2, 0.1, 0.05],
        "delta": 0.25,
        "potential": {"name": "one_minus_cos", "params": {"harmonic": 1}},
        "plots": True,
    },
    "torus": {
        "out_dir": "runs/torus",
        "n": 64,
        "eps_values": [0.2, 0.1, 0.05],
        "stream": {"name": "product_sine", "params": {"amplitude": 1.0, "kx": 1, "ky": 1}},
        "constant": None,
        "gamma_matrix": [[1.0, 0.0], [0.0, 1.0]],
        "plots": True,
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved, validated experiment description."""

    subcommand: str
    values: dict


def _merge_strict(defaults: dict, override: dict, path: str = "") -> dict:
    """Overlay ``override`` on ``defaults``, rejecting unknown keys.

    ``params`` dicts are opaque (their keys are validated by the rule
    factories); everything else must name a key the defaults know.
    """
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in defaults:
            known = ", ".join(sorted(defaults))
            raise ValidationError(f"unknown config key {where!r}; known keys: {known}")
        base = defaults[key]
        if isinstance(base, dict) and key != "params":
            if not isinstance(value, dict):
                raise ValidationError(f"config key {where!r} must be a table")
            merged[key] = _merge_strict(base, value, path=f"{where}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _check_number(cfg: dict, key: str, kind=float, positive=True):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"config key {key!r} must be a number, got {v!r}")
    if kind is int and not float(v).is_integer():
        raise ValidationError(f"config key {key!r} must be an integer, got {v!r}")
    if positive and v <= 0:
        raise ValidationError(f"config key {key!r} must be positive, got {v!r}")
    cfg[key] = kind(v)


def _check_eps_list(cfg: dict):
    vals = cfg["eps_values"]
    if not isinstance(vals, (list, tuple)) or not vals:
        raise ValidationError("eps_values must be a nonempty list")
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            raise ValidationError(f"eps_values entries must be positive numbers, got {v!r}")
        out.append(float(v))
    cfg["eps_values"] = out


def _check_rule(cfg: dict, key: str):
    spec = cfg[key]
    if spec is None:
        return
    if not isinstance(spec, dict) or set(spec) - {"name", "params"} or "name" not in spec:
        raise ValidationError(
            f"config key {key!r} must be a table with 'name' and optional 'params'"
        )
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError(f"config key {key}.params must be a table")
    cfg[key] = {"name": spec["name"], "params": params}


def validate_config(subcommand: str, raw: dict) -> ExperimentConfig:
    if subcommand not in DEFAULTS:
        raise ValidationError(
            f"unknown subcommand {subcommand!r}; expected one of {sorted(DEFAULTS)}"
        )
    cfg = _merge_strict(DEFAULTS[subcommand], raw)
    if not isinstance(cfg["out_dir"], str) or not cfg["out_dir"]:
        raise ValidationError("out_dir must be a nonempty string")
    if not isinstance(cfg["plots"], bool):
        raise ValidationError("plots must be true or false")
    _check_number(cfg, "n", kind=int)

    if subcommand in ("solve", "simulate"):
        _check_number(cfg, "eps")
        _check_rule(cfg, "drift")
        _check_rule(cfg, "gamma")
    if subcommand == "solve":
        if cfg["solver"] not in ("quadrature", "finite_difference"):
            raise ValidationError(
                f"solver must be 'quadrature' or 'finite_difference', got {cfg['solver']!r}"
            )
    if subcommand == "converge":
        _check_eps_list(cfg)
        _check_rule(cfg, "drift")
        _check_rule(cfg, "gamma")
    if subcommand == "simulate":
        sde_cfg = cfg["sde"]
        _check_number(sde_cfg, "dt")
        for key in ("n_steps", "n_trajectories", "bins"):
            _check_number(sde_cfg, key, kind=int)
        _check_number(sde_cfg, "seed", kind=int, positive=False)
        _check_number(sde_cfg, "burn_in", kind=int, positive=False)
    if subcommand == "gradflow":
        _check_eps_list(cfg)
        _check_number(cfg, "delta")
        _check_rule(cfg, "potential")
    if subcommand == "torus":
        _check_eps_list(cfg)
        _check_rule(cfg, "stream")
        if cfg["constant"] is not None:
            c = cfg["constant"]
            if (
                not isinstance(c, (list, tuple))
                or len(c) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in c)
            ):
                raise ValidationError("constant must be a pair of numbers [vx, vy]")
            cfg["constant"] = [float(c[0]), float(c[1])]
            if "stream" in raw and raw["stream"] is not None:
                raise ValidationError("give either a stream function or a constant field, not both")
            cfg["stream"] = None
        g = np.asarray(cfg["gamma_matrix"], dtype=float)
        if g.shape != (2, 2):
            raise ValidationError("gamma_matrix must be a 2x2 table of numbers")
        cfg["gamma_matrix"] = g.tolist()
    return ExperimentConfig(subcommand=subcommand, values=cfg)


# ---------------------------------------------------------------------------
# problem construction helpers


def _build_rule_field(spec: dict, grid: Grid1D):
    return field_from_rule(make_rule(spec["name"], **spec["params"]), grid)


def _build_drift(cfg: dict, grid: Grid1D) -> FlowField1D:
    return FlowField1D(_build_rule_field(cfg["drift"], grid))


def _build_gamma(cfg: dict, grid: Grid1D) -> DiffusionCoeff1D:
    return DiffusionCoeff1D(_build_rule_field(cfg["gamma"], grid))


# ---------------------------------------------------------------------------
# subcommand executors: pure compute, return (artifacts, checks, summary)


def _run_solve(cfg: dict):
    grid = Grid1D(cfg["n"])
    h = _build_drift(cfg, grid)
    gamma = _build_gamma(cfg, grid)
    solver = solve_stationary_quadrature if cfg["solver"] == "quadrature" else solve_stationary_fd
    sol = solver(h, gamma, cfg["eps"])
    rho0 = unperturbed_density(h)
    rep = residual(sol, rho0)

    x = grid.points
    table = csv_bytes(
        ["x", "rho0", "rho_eps", "r_eps"],
        [x, rho0.samples, sol.density.samples, rep.residual.samples],
    )
    summary = {
        "epsilon": sol.epsilon,
        "solver": sol.solver_tag,
        "flux_constant": sol.flux_constant,
        "flux_rel_std": sol.flux_rel_std,
        "residual_l2": rep.l2,
        "residual_deriv_l2": rep.deriv_l2,
        "residual_sup": rep.sup,
        "zero_mean_defect": rep.zero_mean_defect,
        "clamped": sol.clamped,
    }
    artifacts = [
        Artifact("solve.csv", table),
        Artifact("solve_summary.json", json_bytes(summary)),
    ]
    if cfg["plots"]:
        artifacts.append(
            Artifact(
                "density.png",
                plots.density_plot(x, {"rho0": rho0.samples, "rho_eps": sol.density.samples}),
            )
        )
        artifacts.append(
            Artifact("residual.png", plots.density_plot(x, {"r_eps": rep.residual.samples}, ylabel="residual"))
        )
    # the solution and residual types validate flux constancy, positivity
    # and the zero-mean defect on construction; reaching here means they held
    checks = {
        "flux_constancy": True,
        "density_positive": True,
        "residual_zero_mean": True,
    }
    return artifacts, checks, summary


def _run_converge(cfg: dict):
    grid = Grid1D(cfg["n"])
    h = _build_drift(cfg, grid)
    gamma = _build_gamma(cfg, grid)
    study = convergence_study(h, gamma, cfg["eps_values"])

    eps = study.eps_values
    table = csv_bytes(
        ["eps", "l2", "deriv_l2", "sup", "l2_bound", "h1_bound"],
        [
            eps,
            study.metric("l2"),
            study.metric("deriv_l2"),
            study.metric("sup"),
            np.array([c.l2_bound for c in study.certificates]),
            np.array([c.h1_bound for c in study.certificates]),
        ],
    )
    fits = {
        name: None
        if fit is None
        else {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "interval_slopes": list(fit.interval_slopes),
        }
        for name, fit in study.fits.items()
    }
    certs = [
        {
            "epsilon": c.epsilon,
            "l2_bound": c.l2_bound,
            "h1_bound": c.h1_bound,
            "l2_ok": c.l2_ok,
            "h1_ok": c.h1_ok,
            "eps_threshold_l2": c.eps_threshold_l2 if np.isfinite(c.eps_threshold_l2) else None,
            "eps_threshold_h1": c.eps_threshold_h1 if np.isfinite(c.eps_threshold_h1) else None,
        }
        for c in study.certificates
    ]
    summary = {
        "fits": fits,
        "certificates": certs,
        "poincare_ok": study.poincare_ok,
        "exact": study.exact,
        "alpha": study.certificates[0].alpha,
        "beta": study.certificates[0].beta,
    }
    artifacts = [
        Artifact("converge.csv", table),
        Artifact("converge_summary.json", json_bytes(summary)),
    ]
    if cfg["plots"]:
        artifacts.append(
            Artifact(
                "convergence.png",
                plots.convergence_plot(
                    eps,
                    {m: study.metric(m) for m in ("l2", "deriv_l2", "sup")},
                    {
                        "l2_bound": np.array([c.l2_bound for c in study.certificates]),
                        "h1_bound": np.array([c.h1_bound for c in study.certificates]),
                    },
                ),
            )
        )
    checks = {
        "l2_bounds": all(c.l2_ok for c in study.certificates if c.l2_ok is not None),
        "h1_bounds": all(c.h1_ok for c in study.certificates if c.h1_ok is not None),
        "poincare_domination": all(study.poincare_ok),
    }
    return artifacts, checks, summary


def _run_simulate(cfg: dict):
    grid = Grid1D(cfg["n"])
    h = _build_drift(cfg, grid)
    gamma = _build_gamma(cfg, grid)
    sde_config = SdeConfig(**cfg["sde"])
    eps = cfg["eps"]
    scheme = cfg["scheme"]

    ref = scheme_reference_density(h, gamma, eps, scheme=scheme).density
    measure = occupation_measure(h, gamma, eps, sde_config, scheme=scheme)
    l1 = l1_distance(measure, ref)
    test_functions = default_test_functions(grid.n)
    gaps = weak_gaps(measure, ref, test_functions)
    gap_labels = [
        f"{phi.generator_rule.name}_k{phi.generator_rule.params['harmonic']}"
        if phi.generator_rule is not None
        else f"phi_{i}"
        for i, phi in enumerate(test_functions)
    ]

    centers = measure.bin_centers
    ref_at_centers = evaluate_trig(ref.field, centers)
    table = csv_bytes(
        ["bin_center", "mass", "reference_density"],
        [centers, measure.masses, ref_at_centers],
    )
    summary = {
        "epsilon": eps,
        "scheme": scheme,
        "l1_distance": l1,
        "weak_gaps": dict(zip(gap_labels, gaps)),
        "max_weak_gap": max(gaps),
        "total_time": measure.total_time,
        "samples": int(measure.counts.sum()),
    }
    artifacts = [
        Artifact("simulate.csv", table),
        Artifact("simulate_summary.json", json_bytes(summary)),
    ]
    if cfg["plots"]:
        artifacts.append(
            Artifact(
                "histogram.png",
                plots.histogram_plot(centers, measure.masses, grid.points, ref.samples),
            )
        )
    checks = {"mass_conservation": True}  # validated on construction
    return artifacts, checks, summary


def _run_gradflow(cfg: dict):
    grid = Grid1D(cfg["n"])
    potential = PotentialField(_build_rule_field(cfg["potential"], grid))
    eps_values = cfg["eps_values"]
    table = concentration_study(potential, eps_values, cfg["delta"], strict=False)

    artifacts = []
    density_files = {}
    all_curves = {}
    for i, eps in enumerate(eps_values):
        gd = gibbs_density(potential, eps)
        name = f"gradflow_density_{i:02d}.csv"
        density_files[f"{eps:.17g}"] = name
        artifacts.append(
            Artifact(
                name,
                csv_bytes(["x", "density"], [grid.points, gd.density.samples]),
            )
        )
        all_curves[f"eps={eps:g}"] = gd.density.samples
    conc = csv_bytes(
        ["eps", "outside_mass", "eps_times_log_mass"],
        [
            np.array([r.epsilon for r in table.rows]),
            np.array([r.outside_mass for r in table.rows]),
            np.array([r.eps_times_log_mass for r in table.rows]),
        ],
    )
    artifacts.append(Artifact("concentration.csv", conc))
    summary = {
        "delta": table.delta,
        "center": table.center,
        "barrier": table.barrier,
        "monotone": table.monotone,
        "rate_ok": table.rate_ok,
        "density_files": density_files,
        "rows": [
            {
                "eps": r.epsilon,
                "outside_mass": r.outside_mass,
                "eps_times_log_mass": r.eps_times_log_mass,
            }
            for r in table.rows
        ],
    }
    artifacts.append(Artifact("gradflow_summary.json", json_bytes(summary)))
    if cfg["plots"]:
        artifacts.append(
            Artifact(
                "concentration.png",
                plots.concentration_plot(
                    np.array([r.epsilon for r in table.rows]),
                    np.array([r.outside_mass for r in table.rows]),
                ),
            )
        )
        artifacts.append(Artifact("densities.png", plots.density_plot(grid.points, all_curves)))
    checks = {}
    if table.rate_ok is None:
        # flat barrier: uniform measure, nothing to concentrate
        checks["flat_barrier_noop"] = True
    else:
        checks["outside_mass_monotone"] = bool(table.monotone)
        checks["rate_within_20pct"] = bool(table.rate_ok)
    return artifacts, checks, summary


def _run_torus(cfg: dict):
    grid = Grid2D(cfg["n"])
    if cfg["constant"] is not None:
        vx, vy = cfg["constant"]
        field = constant_field(grid, vx, vy)
        field_desc = {"constant": [vx, vy]}
    else:
        rule = make_rule_2d(cfg["stream"]["name"], **cfg["stream"]["params"])
        field = field_from_stream(StreamFunction2D(field_from_rule_2d(rule, grid)))
        field_desc = {"stream": cfg["stream"]}
    gamma = np.asarray(cfg["gamma_matrix"], dtype=float)

    artifacts = []
    checks = {}
    per_eps = []
    X, Y = grid.meshes()
    for i, eps in enumerate(cfg["eps_values"]):
        rho = solve_stationary_fd_2d(field, gamma, eps)
        uniform_sup = float(np.max(np.abs(rho.samples - 1.0)))
        verdict = rigidity_check(field, eps)
        per_eps.append(
            {
                "eps": eps,
                "uniform_sup_deviation": uniform_sup,
                "rigidity": {
                    "solution_sup": verdict.solution_sup,
                    "advective_energy": verdict.advective_energy,
                    "dirichlet_energy": verdict.dirichlet_energy,
                    "passed": verdict.passed,
                    "condition_estimate": verdict.condition_estimate,
                },
            }
        )
        checks[f"uniform_eps_{i}"] = uniform_sup <= 1e-8
        checks[f"rigidity_eps_{i}"] = verdict.passed
        artifacts.append(
            Artifact(
                f"torus_density_{i:02d}.csv",
                csv_bytes(
                    ["x", "y", "value"],
                    [X.ravel(), Y.ravel(), rho.samples.ravel()],
                ),
            )
        )
        if cfg["plots"]:
            artifacts.append(
                Artifact(
                    f"torus_density_{i:02d}.png",
                    plots.heatmap_plot(rho.samples, title=f"eps={eps:g}"),
                )
            )
    summary = {
        "field": field_desc,
        "divergence_sup": field.divergence_sup,
        "gamma_matrix": gamma.tolist(),
        "per_eps": per_eps,
    }
    artifacts.append(Artifact("torus_summary.json", json_bytes(summary)))
    return artifacts, checks, summary


_EXECUTORS = {
    "solve": _run_solve,
    "converge": _run_converge,
    "simulate": _run_simulate,
    "gradflow": _run_gradflow,
    "torus": _run_torus,
}


def run(config: ExperimentConfig):
    """Execute one experiment; artifacts land only after compute succeeds."""
    timer = StageTimer()
    cfg = config.values
    with timer.time("compute"):
        artifacts, checks, _summary = _EXECUTORS[config.subcommand](cfg)
    with timer.time("write"):
        manifest = write_run(
            cfg["out_dir"],
            config.subcommand,
            cfg,
            artifacts,
            timer.timings,
            checks,
        )
    return manifest


# ---------------------------------------------------------------------------
# argument parsing


def _parse_rule_flag(text: str) -> dict:
    """NAME[:key=value,...] -> {"name": ..., "params": {...}}."""
    name, _, rest = text.partition(":")
    if not name:
        raise ValidationError(f"empty rule name in {text!r}")
    params = {}
    if rest:
        for piece in rest.split(","):
            key, sep, value = piece.partition("=")
            if not sep or not key:
                raise ValidationError(f"malformed rule parameter {piece!r} in {text!r}")
            params[key] = _parse_number(value)
    return {"name": name, "params": params}


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError as exc:
        raise ValidationError(f"expected a number, got {text!r}") from exc


def _parse_eps_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeronoise",
        description="Stationary densities of noisy flows on the circle and torus: "
        "PDE solvers, explicit bounds, Monte Carlo cross-checks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="JSON config file")
        p.add_argument("--out-dir", dest="out_dir", default=None)
        p.add_argument("--n", type=int, default=None, help="grid points per axis")
        p.add_argument(
            "--no-plots", dest="plots", action="store_const", const=False, default=None
        )

    p = sub.add_parser("solve", help="one stationary solve plus residual vs the zero-noise density")
    common(p)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--solver", choices=["quadrature", "finite_difference"], default=None)
    p.add_argument("--drift", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")
    p.add_argument("--gamma", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")

    p = sub.add_parser("converge", help="eps sweep with bound certificates and fitted orders")
    common(p)
    p.add_argument("--eps", dest="eps_values", type=_parse_eps_list, default=None, metavar="E1,E2,...")
    p.add_argument("--drift", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")
    p.add_argument("--gamma", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")

    p = sub.add_parser("simulate", help="SDE ensemble occupation vs the PDE density")
    common(p)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--scheme", choices=["heun", "euler_ito", "euler_strat"], default=None)
    p.add_argument("--drift", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")
    p.add_argument("--gamma", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--steps", dest="n_steps", type=int, default=None)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p.add_argument("--trajectories", dest="n_trajectories", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bins", type=int, default=None)

    p = sub.add_parser("gradflow", help="Gibbs densities and concentration for a potential")
    common(p)
    p.add_argument("--eps", dest="eps_values", type=_parse_eps_list, default=None, metavar="E1,E2,...")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--potential", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")

    p = sub.add_parser("torus", help="volume-preserving flows: uniform density and rigidity")
    common(p)
    p.add_argument("--eps", dest="eps_values", type=_parse_eps_list, default=None, metavar="E1,E2,...")
    p.add_argument("--stream", type=_parse_rule_flag, default=None, metavar="NAME[:k=v,...]")
    p.add_argument(
        "--constant",
        type=lambda s: [float(v) for v in s.split(",")],
        default=None,
        metavar="VX,VY",
    )
    p.add_argument(
        "--gamma-matrix",
        dest="gamma_matrix",
        type=lambda s: np.asarray([float(v) for v in s.split(",")], dtype=float)
        .reshape(2, 2)
        .tolist(),
        default=None,
        metavar="G11,G12,G21,G22",
    )
    return parser


_FLAG_KEYS = {
    "solve": {"out_dir", "n", "plots", "eps", "solver", "drift", "gamma"},
    "converge": {"out_dir", "n", "plots", "eps_values", "drift", "gamma"},
    "simulate": {"out_dir", "n", "plots", "eps", "scheme", "drift", "gamma"},
    "gradflow": {"out_dir", "n", "plots", "eps_values", "delta", "potential"},
    "torus": {"out_dir", "n", "plots", "eps_values", "stream", "constant", "gamma_matrix"},
}
_SDE_FLAG_KEYS = {"dt", "n_steps", "burn_in", "n_trajectories", "seed", "bins"}


def _assemble_raw_config(args: argparse.Namespace) -> dict:
    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError("config file must hold a JSON object")
        declared = raw.pop("subcommand", None)
        if declared is not None and declared != args.subcommand:
            raise ValidationError(
                f"config file is for subcommand {declared!r}, not {args.subcommand!r}"
            )
    for key in _FLAG_KEYS[args.subcommand]:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if args.subcommand == "simulate":
        overrides = {
            key: getattr(args, key)
            for key in _SDE_FLAG_KEYS
            if getattr(args, key, None) is not None
        }
        if overrides:
            raw.setdefault("sde", {}).update(overrides)
    return raw


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = validate_config(args.subcommand, _assemble_raw_config(args))
        manifest = run(config)
    except ZeroNoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, ok in manifest.checks.items():
        print(f"[{'ok' if ok else 'FAIL'}] {name}")
    out = Path(config.values["out_dir"])
    print(f"artifacts: {out / 'manifest.json'}")
    return 0 if manifest.passed else 1


if __name__ == "__main__":
    sys.exit(main())
