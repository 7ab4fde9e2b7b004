"""Command-line interface for the prevalence-estimation pipeline.

Subcommands mirror the library one-to-one — ``fit`` (normalize and fit
models from CSVs), ``bathtub`` (level-set domain construction),
``optimize`` (variance-minimizing target measure), ``estimate``
(prevalence from a test batch), ``simulate`` (Monte Carlo validation),
and ``figures`` (plot-ready CSV grids).  Structured results are JSON
(sorted keys), grids and samples are CSV with a header row.

Exit codes: 0 on success, 1 on a usage error (bad flags or flag values),
2 on a computation error.  A ``fit`` whose optimizer did not converge
still writes its outputs but exits 2 so scripts notice.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bathtub import DEFAULT_MEASURE_TOL, DEFAULT_NODES, bathtub_ratio, solve_delta, super_level_set
from .dist import (
    DomainSet,
    MixturePopulation,
    measure,
    model_from_spec,
    pdf,
)
from .errors import PrevoptError, UnattainableTargetError
from .estimate import DEFAULT_MAX_ITER, DEFAULT_REFINE_TOL, estimate_batch, refine
from .mle import (
    DEFAULT_EPSILON,
    DEFAULT_STARTS,
    Normalization,
    apply_normalization,
    fit,
    fit_result_to_spec,
    normalize,
    read_csv_batch,
)
from .objective import DEFAULT_GRID_SIZE, DEFAULT_TOL, minimize
from .sim import DOMAIN_POLICIES, run_trials

__all__ = ["dispatch", "main"]

_FIT_FAMILIES = (
    "burr-truncated",
    "beta",
    "uniform",
    "triangular-up",
    "triangular-down",
    "histogram",
)

#: Arbitrary default starting guess for automatic refinement: with no
#: prior information the midpoint of the admissible prevalence range is
#: as good as any other start.
DEFAULT_Q0 = 0.5


class _UsageError(Exception):
    """Raised for bad flags or flag values; mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}error: {message}")


# ---------------------------------------------------------------------------
# small IO helpers
# ---------------------------------------------------------------------------


def _write_json(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(cell) for cell in row))
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _csv_cell(cell):
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_model(path):
    spec = _load_json(path)
    return model_from_spec(spec), spec


def _domain_to_obj(domain, **extra):
    obj = {
        "intervals": [[float(a), float(b)] for a, b in domain.intervals],
        "support": [float(domain.support[0]), float(domain.support[1])],
    }
    obj.update(extra)
    return obj


_DOMAIN_META_KEYS = {
    "branch",
    "delta",
    "p_measure",
    "n_measure",
    "q_measure",
    "q_hat_target",
    "plateau_adjusted",
}


def _domain_from_obj(obj):
    if not isinstance(obj, dict):
        raise ValueError("domain spec must be a JSON object")
    keys = set(obj)
    missing = {"intervals", "support"} - keys
    unknown = keys - {"intervals", "support"} - _DOMAIN_META_KEYS
    if missing:
        raise ValueError(f"domain spec missing fields {sorted(missing)}")
    if unknown:
        raise ValueError(f"domain spec has unknown fields {sorted(unknown)}")
    support = obj["support"]
    intervals = [(a, b) for a, b in obj["intervals"]]
    return DomainSet(intervals, (support[0], support[1]))


def _estimate_to_obj(report):
    return {
        "q_tilde_raw": report.q_tilde_raw,
        "q_tilde_clamped": report.q_tilde_clamped,
        "q_empirical_measure": report.q_empirical_measure,
        "p_measure": report.p_measure,
        "n_measure": report.n_measure,
        "sample_count": report.sample_count,
        "predicted_std_error": report.predicted_std_error,
    }


# ---------------------------------------------------------------------------
# flag-value validation (before any computation starts)
# ---------------------------------------------------------------------------


def _check_open_unit(name, value):
    if not 0.0 < value < 1.0:
        raise _UsageError(f"error: {name} must lie strictly inside (0, 1)")
    return value


def _check_positive(name, value):
    if not value > 0.0:
        raise _UsageError(f"error: {name} must be positive")
    return value


def _check_at_least(name, value, floor):
    if value < floor:
        raise _UsageError(f"error: {name} must be at least {floor}")
    return value


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_fit(args):
    _check_at_least("--epsilon", args.epsilon, 0.0)
    _check_at_least("--starts", args.starts, 1)
    if (
        "histogram" in (args.pos_family, args.neg_family)
        and args.bins is None
    ):
        raise _UsageError("error: --bins is required for the histogram family")
    raw_pos = read_csv_batch(args.pos_data, "positive-training")
    raw_neg = read_csv_batch(args.neg_data, "negative-training")
    batches, record = normalize([raw_pos, raw_neg], epsilon=args.epsilon)
    pos_batch, neg_batch = batches
    results = {}
    for family, batch, out in (
        (args.pos_family, pos_batch, args.out_pos),
        (args.neg_family, neg_batch, args.out_neg),
    ):
        result = fit(family, batch, starts=args.starts, bins=args.bins)
        spec = fit_result_to_spec(result)
        spec["normalization"] = {"epsilon": record.epsilon, "scale": record.scale}
        _write_json(spec, out)
        results[out] = result
        print(
            f"wrote {out}: family={family} nll={result.negative_log_likelihood:.6g} "
            f"converged={result.converged}"
        )
    if not all(r.converged for r in results.values()):
        bad = [out for out, r in results.items() if not r.converged]
        print(
            f"warning: fit did not converge for {', '.join(bad)}",
            file=sys.stderr,
        )
        return 2
    return 0


def _load_pair(args):
    positive, _ = _load_model(args.pos_model)
    negative, _ = _load_model(args.neg_model)
    return positive, negative


def _cmd_bathtub(args):
    _check_open_unit("--q", args.q)
    _check_at_least("--nodes", args.nodes, 64)
    if (args.target is None) == (args.delta is None):
        raise _UsageError("error: exactly one of --target or --delta is required")
    positive, negative = _load_pair(args)
    pop = MixturePopulation(args.q, positive, negative)
    if args.target is not None:
        _check_open_unit("--target", args.target)
        sol = solve_delta(
            pop, args.target, args.branch, nodes=args.nodes, tol=args.measure_tol
        )
        obj = _domain_to_obj(
            sol.set,
            branch=sol.branch,
            delta=sol.delta,
            q_hat_target=args.target,
            p_measure=sol.p_measure,
            n_measure=sol.n_measure,
            q_measure=sol.q_measure,
            plateau_adjusted=sol.plateau_adjusted,
        )
    else:
        domain = super_level_set(pop, args.delta, args.branch, nodes=args.nodes)
        p_d = measure(positive, domain)
        n_d = measure(negative, domain)
        obj = _domain_to_obj(
            domain,
            branch=args.branch,
            delta=args.delta,
            p_measure=p_d,
            n_measure=n_d,
            q_measure=args.q * p_d + (1.0 - args.q) * n_d,
        )
    _write_json(obj, args.out)
    return 0


def _cmd_optimize(args):
    _check_open_unit("--q", args.q)
    _check_at_least("--grid", args.grid, 21)
    _check_positive("--tol", args.tol)
    _check_at_least("--nodes", args.nodes, 64)
    positive, negative = _load_pair(args)
    pop = MixturePopulation(args.q, positive, negative)
    result = minimize(pop, grid_size=args.grid, tol=args.tol, nodes=args.nodes)
    sol = result.solution
    obj = {
        "q_hat_star": result.q_hat_star,
        "branch": result.branch,
        "sigma2_star": result.sigma2_star,
        "reflected_sigma2": result.reflected_sigma2,
        "domain": _domain_to_obj(
            sol.set,
            branch=sol.branch,
            delta=sol.delta,
            p_measure=sol.p_measure,
            n_measure=sol.n_measure,
            q_measure=sol.q_measure,
        ),
        "grid_size": args.grid,
        "tol": args.tol,
    }
    _write_json(obj, args.out)
    if args.trace_csv is not None:
        _write_csv(
            args.trace_csv,
            ["q_hat", "sigma2_plus", "sigma2_minus", "diff_plus", "diff_minus"],
            [
                (p.q_hat, p.sigma2_plus, p.sigma2_minus, p.diff_plus, p.diff_minus)
                for p in result.trace
            ],
        )
    return 0


def _cmd_estimate(args):
    if (args.domain is None) == (not args.auto):
        raise _UsageError("error: exactly one of --domain or --auto is required")
    _check_open_unit("--q0", args.q0)
    _check_at_least("--grid", args.grid, 21)
    _check_positive("--tol", args.tol)
    _check_positive("--refine-tol", args.refine_tol)
    _check_at_least("--max-iter", args.max_iter, 1)
    positive, pos_spec = _load_model(args.pos_model)
    negative, _ = _load_model(args.neg_model)
    raw = read_csv_batch(args.data, "test")
    if args.normalize:
        record = pos_spec.get("normalization")
        if record is None:
            raise ValueError(
                f"--normalize requires a normalization record in {args.pos_model}"
            )
        rec = Normalization(epsilon=record["epsilon"], scale=record["scale"])
        batch = apply_normalization(raw.values, rec)
        shifted = (raw.values + rec.epsilon) / rec.scale
        clamped = int(np.sum((shifted < 0.0) | (shifted > 1.0)))
        if clamped:
            print(
                f"note: clamped {clamped} of {shifted.size} test values "
                "to the support edge",
                file=sys.stderr,
            )
    else:
        batch = raw
    if args.domain is not None:
        domain = _domain_from_obj(_load_json(args.domain))
        report = estimate_batch(batch, positive, negative, domain)
        obj = {
            "estimate": _estimate_to_obj(report),
            "domain": _domain_to_obj(domain),
        }
    else:
        trace, report = refine(
            batch,
            positive,
            negative,
            q0=args.q0,
            tol=args.refine_tol,
            max_iter=args.max_iter,
            grid_size=args.grid,
            optimizer_tol=args.tol,
        )
        obj = {
            "estimate": _estimate_to_obj(report),
            "refinement": {
                "converged": trace.converged,
                "stop_reason": trace.stop_reason,
                "iterations": [
                    {
                        "q_k": s.q_k,
                        "q_hat_star": s.q_hat_star,
                        "delta": s.delta,
                        "q_tilde_next": s.q_tilde_next,
                    }
                    for s in trace.iterations
                ],
            },
        }
    _write_json(obj, args.out)
    return 0


_SCENARIO_REQUIRED = {
    "positive",
    "negative",
    "q_true",
    "samples_per_trial",
    "trials",
    "seed",
    "policy",
}
_SCENARIO_OPTIONAL = {"guess", "domain", "grid_size", "tol", "nodes"}


def _cmd_simulate(args):
    scenario = _load_json(args.scenario)
    if not isinstance(scenario, dict):
        raise ValueError("scenario must be a JSON object")
    keys = set(scenario)
    missing = _SCENARIO_REQUIRED - keys
    unknown = keys - _SCENARIO_REQUIRED - _SCENARIO_OPTIONAL
    if missing:
        raise ValueError(f"scenario missing fields {sorted(missing)}")
    if unknown:
        raise ValueError(f"scenario has unknown fields {sorted(unknown)}")
    pop = MixturePopulation(
        scenario["q_true"],
        model_from_spec(scenario["positive"]),
        model_from_spec(scenario["negative"]),
    )
    seed = args.seed if args.seed is not None else scenario["seed"]
    domain = None
    if "domain" in scenario:
        domain = _domain_from_obj(scenario["domain"])
    report, estimates = run_trials(
        pop,
        scenario["samples_per_trial"],
        scenario["trials"],
        seed=seed,
        policy=scenario["policy"],
        guess=scenario.get("guess"),
        domain=domain,
        grid_size=scenario.get("grid_size", DEFAULT_GRID_SIZE),
        tol=scenario.get("tol", DEFAULT_TOL),
        nodes=scenario.get("nodes", DEFAULT_NODES),
        return_estimates=True,
    )
    obj = {
        "q_true": report.q_true,
        "samples_per_trial": report.samples_per_trial,
        "trials": report.trials,
        "seed": seed,
        "domain_policy": report.domain_policy,
        "domain_intervals": [[a, b] for a, b in report.domain_intervals],
        "p_measure": report.p_measure,
        "n_measure": report.n_measure,
        "q_measure": report.q_measure,
        "mean_estimate": report.mean_estimate,
        "empirical_variance": report.empirical_variance,
        "predicted_variance": report.predicted_variance,
        "bias_z_score": report.bias_z_score,
    }
    _write_json(obj, args.out)
    if args.trials_csv is not None:
        _write_csv(
            args.trials_csv,
            ["trial", "estimate"],
            [(t, float(est)) for t, est in enumerate(estimates)],
        )
    return 0


def _cmd_figures(args):
    _check_open_unit("--q", args.q)
    _check_at_least("--points", args.points, 16)
    _check_at_least("--grid", args.grid, 5)
    _check_at_least("--nodes", args.nodes, 64)
    positive, negative = _load_pair(args)
    pop = MixturePopulation(args.q, positive, negative)
    os.makedirs(args.out_dir, exist_ok=True)

    lo, hi = pop.support
    # cell midpoints: densities can diverge at the support endpoints
    r = lo + (np.arange(args.points) + 0.5) * (hi - lo) / args.points
    n_pdf = pdf(negative, r)
    p_pdf = pdf(positive, r)
    _write_csv(
        os.path.join(args.out_dir, "densities.csv"),
        ["r", "N_pdf", "P_pdf"],
        zip(r.tolist(), n_pdf.tolist(), p_pdf.tolist()),
    )
    ratio = np.asarray(bathtub_ratio(pop, r), dtype=float)
    q_pdf = pop.mixture_pdf(r)
    _write_csv(
        os.path.join(args.out_dir, "mixture.csv"),
        ["r", "ratio", "Q_pdf"],
        zip(r.tolist(), ratio.tolist(), q_pdf.tolist()),
    )

    q_hats = np.linspace(0.01, 0.99, args.grid)
    diff_rows = []
    var_rows = []
    for q_hat in q_hats:
        cols = {}
        for branch in ("plus", "minus"):
            try:
                sol = solve_delta(pop, float(q_hat), branch, nodes=args.nodes)
            except UnattainableTargetError:
                cols[branch] = (float("nan"), float("nan"))
                continue
            gap = sol.p_measure - sol.n_measure
            if branch == "minus":
                gap = -gap
            if gap * gap > 0.0:
                sigma2 = float(q_hat) * (1.0 - float(q_hat)) / (gap * gap)
            else:
                sigma2 = float("nan")
            cols[branch] = (gap, sigma2)
        diff_rows.append((float(q_hat), cols["plus"][0], cols["minus"][0]))
        var_rows.append((float(q_hat), cols["plus"][1], cols["minus"][1]))
    if not any(
        np.isfinite(sp) or np.isfinite(sm) for _, sp, sm in var_rows
    ):
        raise PrevoptError(
            "model pair is degenerate: the two densities separate at no "
            "target measure, so the variance panels would be empty"
        )
    _write_csv(
        os.path.join(args.out_dir, "diff_curve.csv"),
        ["q_hat", "diff_plus", "diff_minus"],
        diff_rows,
    )
    _write_csv(
        os.path.join(args.out_dir, "variance_curve.csv"),
        ["q_hat", "sigma2_plus", "sigma2_minus"],
        var_rows,
    )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_model_pair(sub):
    sub.add_argument("--pos-model", required=True, help="positive model JSON path")
    sub.add_argument("--neg-model", required=True, help="negative model JSON path")


def build_parser():
    parser = _Parser(
        prog="prevopt",
        description="Minimum-variance prevalence estimation from diagnostic data.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_fit = sub.add_parser("fit", help="normalize training CSVs and fit models")
    p_fit.add_argument("--pos-data", required=True, help="positive-training CSV path")
    p_fit.add_argument("--neg-data", required=True, help="negative-training CSV path")
    p_fit.add_argument(
        "--pos-family", required=True, choices=_FIT_FAMILIES,
        help="family for the positive model",
    )
    p_fit.add_argument(
        "--neg-family", required=True, choices=_FIT_FAMILIES,
        help="family for the negative model",
    )
    p_fit.add_argument(
        "--epsilon", type=float, default=DEFAULT_EPSILON,
        help="normalization shift (default %(default)s)",
    )
    p_fit.add_argument(
        "--starts", type=int, default=DEFAULT_STARTS,
        help="multi-start count for the likelihood search",
    )
    p_fit.add_argument("--bins", type=int, help="bin count for the histogram family")
    p_fit.add_argument("--out-pos", required=True, help="output path, positive model JSON")
    p_fit.add_argument("--out-neg", required=True, help="output path, negative model JSON")
    p_fit.set_defaults(func=_cmd_fit)

    p_bath = sub.add_parser(
        "bathtub", help="build a level-set domain at a level or target measure"
    )
    _add_model_pair(p_bath)
    p_bath.add_argument("--q", type=float, required=True, help="mixture prevalence")
    p_bath.add_argument(
        "--branch", choices=("plus", "minus"), default="plus",
        help="which strict inequality defines the set",
    )
    p_bath.add_argument("--target", type=float, help="mixture measure to hit")
    p_bath.add_argument("--delta", type=float, help="explicit level instead of a target")
    p_bath.add_argument(
        "--measure-tol", type=float, default=DEFAULT_MEASURE_TOL,
        help="measure tolerance for --target",
    )
    p_bath.add_argument("--nodes", type=int, default=DEFAULT_NODES, help="scan resolution")
    p_bath.add_argument("--out", help="output JSON path (default stdout)")
    p_bath.set_defaults(func=_cmd_bathtub)

    p_opt = sub.add_parser("optimize", help="minimize the estimator variance factor")
    _add_model_pair(p_opt)
    p_opt.add_argument("--q", type=float, required=True, help="mixture prevalence")
    p_opt.add_argument(
        "--grid", type=int, default=DEFAULT_GRID_SIZE,
        help="target-measure grid size (default %(default)s)",
    )
    p_opt.add_argument(
        "--tol", type=float, default=DEFAULT_TOL,
        help="refinement tolerance on the target measure",
    )
    p_opt.add_argument("--nodes", type=int, default=DEFAULT_NODES, help="scan resolution")
    p_opt.add_argument("--trace-csv", help="also write the evaluation trace as CSV")
    p_opt.add_argument("--out", help="output JSON path (default stdout)")
    p_opt.set_defaults(func=_cmd_optimize)

    p_est = sub.add_parser("estimate", help="estimate prevalence from a test CSV")
    _add_model_pair(p_est)
    p_est.add_argument("--data", required=True, help="test batch CSV path")
    p_est.add_argument("--domain", help="accepted-domain JSON path")
    p_est.add_argument(
        "--auto", action="store_true",
        help="refine the domain iteratively instead of fixing it",
    )
    p_est.add_argument(
        "--q0", type=float, default=DEFAULT_Q0,
        help="starting prevalence guess for --auto (default %(default)s, arbitrary)",
    )
    p_est.add_argument(
        "--normalize", action="store_true",
        help="apply the normalization stored in the positive model JSON",
    )
    p_est.add_argument(
        "--grid", type=int, default=DEFAULT_GRID_SIZE,
        help="optimizer grid size for --auto",
    )
    p_est.add_argument(
        "--tol", type=float, default=DEFAULT_TOL,
        help="optimizer tolerance for --auto",
    )
    p_est.add_argument(
        "--refine-tol", type=float, default=DEFAULT_REFINE_TOL,
        help="stopping tolerance on successive prevalence iterates",
    )
    p_est.add_argument(
        "--max-iter", type=int, default=DEFAULT_MAX_ITER,
        help="maximum refinement iterations",
    )
    p_est.add_argument("--out", help="output JSON path (default stdout)")
    p_est.set_defaults(func=_cmd_estimate)

    p_sim = sub.add_parser("simulate", help="Monte Carlo validation of the estimator")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON path")
    p_sim.add_argument(
        "--seed", type=int, help="override the scenario's base seed"
    )
    p_sim.add_argument("--trials-csv", help="also write per-trial estimates as CSV")
    p_sim.add_argument("--out", help="output JSON path (default stdout)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_fig = sub.add_parser("figures", help="emit plot-ready CSV grids")
    _add_model_pair(p_fig)
    p_fig.add_argument("--q", type=float, required=True, help="mixture prevalence")
    p_fig.add_argument(
        "--points", type=int, default=512,
        help="density grid resolution (default %(default)s)",
    )
    p_fig.add_argument(
        "--grid", type=int, default=DEFAULT_GRID_SIZE,
        help="target-measure curve resolution",
    )
    p_fig.add_argument("--nodes", type=int, default=DEFAULT_NODES, help="scan resolution")
    p_fig.add_argument("--out-dir", required=True, help="directory for the CSV bundle")
    p_fig.set_defaults(func=_cmd_figures)

    return parser


def dispatch(argv):
    """Parse ``argv`` and run the selected subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(str(err), file=sys.stderr)
        return 1
    except SystemExit as err:  # argparse --help / --version paths
        code = err.code
        return 0 if code in (0, None) else 1
    try:
        return args.func(args)
    except _UsageError as err:
        print(str(err), file=sys.stderr)
        return 1
    except (
        PrevoptError,
        ValueError,
        TypeError,
        KeyError,
        OSError,
        json.JSONDecodeError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main(argv=None):
    """Console entry point."""
    if argv is None:
        argv = sys.argv[1:]
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
