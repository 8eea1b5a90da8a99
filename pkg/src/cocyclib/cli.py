"""Configuration-driven experiment runner with reproducible reports.

One experiment per invocation; a config is a single JSON document with the
top-level keys system, cocycle, measure, descriptor, experiment.  Reports
are deterministic for a fixed seed and serialize to canonical JSON (or CSV
for tabular sections).  Exit status is 0 iff every asserted check passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .cocycle import (
    LocallyConstantCocycle,
    coboundary_conjugate,
    evaluate,
    iterate,
)
from .fixtures import unipotent_example
from .holonomy import stable_holonomy, unstable_holonomy
from .linalg import ConeParams, Flag, Subspace
from .measure import MarkovMeasure, sample_point, sample_stable_partner, \
    sample_unstable_partner
from .regularity import (
    BlockParams,
    block_membership_finite,
    block_membership_periodic,
    finite_scale_exponent,
    monte_carlo_exponent,
    periodic_exponents,
    smallest_passing_params,
)
from .sft import (
    BudgetExceededError,
    MetricParams,
    TransitionMatrix,
    as_word,
    distance,
    enumerate_periodic,
    periodic_point,
)
from .shadow import ShadowSpec, angle_experiment, growth_measure
from .transfer import (
    conjugacy_residual,
    default_basepoints,
    superdiagonal_peel,
    verify_conjugacy,
)
from .zimmer import ZimmerDescriptor, membership, random_element

EXPERIMENT_KINDS = ("exponents", "holonomy", "blocks", "shadow", "reconstruct",
                    "verify-zimmer", "example-unipotent")

DEFAULT_WORD_BUDGET = 2_000_000
DEFAULT_SAMPLE_BUDGET = 10_000


class ConfigError(ValueError):
    """Invalid experiment configuration, tagged with the failing key path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path}: {message}")
        self.path = path


def _require(cfg: dict, path: str, key: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}", "missing required key")
    return cfg[key]


def _parse_word_key(key: str) -> tuple[int, ...]:
    if " " in key:
        return tuple(int(s) for s in key.split())
    return as_word(key)


def build_system(cfg: dict) -> tuple[TransitionMatrix, MetricParams]:
    sys_cfg = _require(cfg, "$", "system")
    rows = _require(sys_cfg, "$.system", "transition_matrix")
    try:
        q = TransitionMatrix.from_rows(rows)
    except ValueError as exc:
        raise ConfigError("$.system.transition_matrix", str(exc)) from exc
    tau = float(sys_cfg.get("tau", 1.0))
    try:
        metric = MetricParams(tau)
    except ValueError as exc:
        raise ConfigError("$.system.tau", str(exc)) from exc
    return q, metric


def build_measure(cfg: dict, q: TransitionMatrix) -> MarkovMeasure:
    m_cfg = _require(cfg, "$", "measure")
    p = _require(m_cfg, "$.measure", "transition_probabilities")
    try:
        mu = MarkovMeasure.from_matrix(np.array(p, dtype=float),
                                       m_cfg.get("stationary"))
    except ValueError as exc:
        raise ConfigError("$.measure", str(exc)) from exc
    if mu.support.entries != q.entries:
        raise ConfigError("$.measure.transition_probabilities",
                          "support does not match the transition matrix")
    return mu


def build_cocycle(cfg: dict, q: TransitionMatrix, key: str = "cocycle",
                  source: dict | None = None) -> LocallyConstantCocycle:
    c_cfg = source if source is not None else _require(cfg, "$", key)
    radius = int(_require(c_cfg, f"$.{key}", "window_radius"))
    table_cfg = _require(c_cfg, f"$.{key}", "table")
    table = {_parse_word_key(word): np.array(mat, dtype=float)
             for word, mat in table_cfg.items()}
    try:
        return LocallyConstantCocycle.from_table(q, radius, table)
    except ValueError as exc:
        raise ConfigError(f"$.{key}.table", str(exc)) from exc


def build_descriptor(cfg: dict) -> ZimmerDescriptor:
    d_cfg = _require(cfg, "$", "descriptor")
    dims = tuple(int(v) for v in _require(d_cfg, "$.descriptor", "block_dims"))
    return ZimmerDescriptor(dims, float(d_cfg.get("exponent", 0.0)))


def experiment_params(cfg: dict) -> dict:
    exp = _require(cfg, "$", "experiment")
    if "seed" not in exp:
        raise ConfigError("$.experiment.seed",
                          "seeds are mandatory; no ambient entropy is used")
    kind = _require(exp, "$.experiment", "kind")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError("$.experiment.kind",
                          f"unknown kind {kind!r}; expected one of {EXPERIMENT_KINDS}")
    return exp


def _check(name: str, value: float, tolerance: float, instantiates: str,
           passed: bool | None = None) -> dict:
    if passed is None:
        passed = bool(value <= tolerance)
    return {"name": name, "value": value, "tolerance": tolerance,
            "instantiates": instantiates, "passed": bool(passed)}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return str(obj)


# ---------------------------------------------------------------------------
# experiment handlers


def _run_exponents(cfg, q, metric, exp, rng, budgets):
    mu = build_measure(cfg, q)
    a = build_cocycle(cfg, q)
    n = int(exp.get("n", 2))
    trials = min(int(exp.get("trials", 2000)), budgets["samples"])
    max_period = int(exp.get("max_period", 4))
    results: dict[str, Any] = {}
    rows = []
    for period in range(1, max_period + 1):
        for p in enumerate_periodic(q, period):
            rep = periodic_exponents(a, p)
            rows.append({"word": " ".join(map(str, p.cyclic_word)),
                         "period": period,
                         "lambda_plus": rep.lambda_plus,
                         "lambda_minus": rep.lambda_minus})
    try:
        results["finite_scale_a_n"] = finite_scale_exponent(
            a, mu, n, budget=budgets["words"])
        results["finite_scale_n"] = n
    except BudgetExceededError as exc:
        results["finite_scale_a_n"] = None
        results["finite_scale_note"] = str(exc)
    mc = monte_carlo_exponent(a, mu, n, trials, rng)
    results["monte_carlo"] = {
        "lambda_plus": mc.lambda_plus, "lambda_minus": mc.lambda_minus,
        "n": mc.n_used, "standard_error": mc.error_estimate,
        "trials": trials,
    }
    checks = []
    if results.get("finite_scale_a_n") is not None:
        gap = abs(results["finite_scale_a_n"] - mc.lambda_plus)
        tol = 3.0 * mc.error_estimate + 1e-12
        checks.append(_check("monte-carlo-matches-exact-sum", gap, tol,
                             "regularity: exact cylinder sum vs sampling"))
    ordered = all(r["lambda_plus"] >= r["lambda_minus"] - 1e-12 for r in rows)
    checks.append(_check("extremal-order", 0.0, 0.0,
                         "exponent order lambda_plus >= lambda_minus",
                         passed=ordered))
    return results, {"periodic_exponents": rows}, checks


def _run_holonomy(cfg, q, metric, exp, rng, budgets):
    mu = build_measure(cfg, q)
    a = build_cocycle(cfg, q)
    n_pairs = min(int(exp.get("pairs", 400)), budgets["samples"])
    inter_n = int(exp.get("intertwine_n", 10))
    tol = float(exp.get("tolerance", 1e-12))
    chain_worst = 0.0
    inter_worst = 0.0
    lip_max = 0.0
    for _ in range(n_pairs):
        x = sample_point(mu, rng, 12)
        y = sample_stable_partner(mu, x, rng)
        z = sample_stable_partner(mu, x, rng)
        h_xy = stable_holonomy(a, x, y)
        h_xz = stable_holonomy(a, x, z)
        h_yz = stable_holonomy(a, y, z)
        chain_worst = max(chain_worst, float(np.max(np.abs(
            h_yz.matrix @ h_xy.matrix - h_xz.matrix))))
        lhs = iterate(a, y.shifted(inter_n), -inter_n) @ stable_holonomy(
            a, x.shifted(inter_n), y.shifted(inter_n)).matrix @ iterate(a, x, inter_n)
        inter_worst = max(inter_worst, float(np.max(np.abs(h_xy.matrix - lhs))))
        d = distance(x, y, metric)
        if d > 0:
            lip_max = max(lip_max, float(np.linalg.norm(
                h_xy.matrix - np.eye(a.dimension), 2)) / d)
        u = sample_unstable_partner(mu, x, rng)
        h_u = unstable_holonomy(a, x, u)
        chain_worst = max(chain_worst, float(np.max(np.abs(
            unstable_holonomy(a, u, x).matrix @ h_u.matrix - np.eye(a.dimension)))))
    results = {"pairs": n_pairs, "lipschitz_ratio_max": lip_max,
               "intertwine_n": inter_n}
    checks = [
        _check("chain-rule", chain_worst, tol,
               "holonomy: transport composes along stable triples"),
        _check("intertwining", inter_worst, tol,
               "holonomy: conjugation by orbit products"),
        _check("lipschitz-finite", lip_max, float(exp.get("lipschitz_bound", 1e6)),
               "holonomy: ||H - Id|| <= L rho"),
    ]
    return results, {}, checks


def _run_blocks(cfg, q, metric, exp, rng, budgets):
    mu = build_measure(cfg, q)
    a = build_cocycle(cfg, q)
    params = BlockParams(int(exp.get("N", 1)), float(_require(exp, "$.experiment", "theta")))
    max_period = int(exp.get("max_period", 4))
    s_max = int(exp.get("s_max", 8))
    rows = []
    consistent = True
    for period in range(1, max_period + 1):
        for p in enumerate_periodic(q, period):
            exact = block_membership_periodic(a, p, params)
            q_prime = math.lcm(period, params.n_steps) // params.n_steps
            finite = block_membership_finite(a, p.as_point(), params,
                                             2 * q_prime * params.n_steps)
            consistent = consistent and (exact == finite)
            rows.append({"word": " ".join(map(str, p.cyclic_word)),
                         "period": period, "member": bool(exact)})
    probe_rows = []
    n_probe = min(int(exp.get("probe_points", 5)), budgets["samples"])
    grid_n = exp.get("probe_n_grid", [1, 2, 4])
    grid_theta = exp.get("probe_theta_grid", [0.25, 0.5, 1.0, 2.0, 4.0])
    for idx in range(n_probe):
        x = sample_point(mu, rng, 16)
        found = smallest_passing_params(a, x, grid_n, grid_theta, s_max)
        probe_rows.append({"point": idx,
                           "n_star": None if found is None else found[0],
                           "theta_star": None if found is None else found[1]})
    results = {"N": params.n_steps, "theta": params.theta,
               "convention": "backward products start at j = 0",
               "member_count": sum(r["member"] for r in rows)}
    checks = [_check("periodic-vs-exhaustive", 0.0, 0.0,
                     "regularity: prefix-average decision equals exhaustive scan",
                     passed=consistent)]
    return results, {"membership": rows, "probe": probe_rows}, checks


def _run_shadow(cfg, q, metric, exp, rng, budgets):
    a = build_cocycle(cfg, q)
    x = periodic_point(q, _parse_word_key(str(_require(exp, "$.experiment", "x_word"))))
    y = periodic_point(q, _parse_word_key(str(_require(exp, "$.experiment", "y_word"))))
    b = int(exp.get("b", 2))
    c = int(exp.get("c", 2))
    alpha = float(exp.get("alpha", 0.1))
    ms = [int(m) for m in exp.get("ms", [4, 8, 12, 16])]
    params = BlockParams(int(exp.get("N", 4)), float(exp.get("theta", 3.0)))
    specs = [ShadowSpec(q, x, y, m, b, c, alpha) for m in ms]
    table = growth_measure(a, specs, params)
    results = {"chi_hat": table["chi_hat"], "b": b, "c": c, "alpha": alpha}
    tables = {"growth": table["rows"]}
    checks = []
    if "flag_dims" in exp:
        dims = [int(v) for v in exp["flag_dims"]]
        flag = Flag(tuple(Subspace.standard(a.dimension, range(k)) for k in dims))
        cone = ConeParams(tuple(exp.get("cone_split", (1, a.dimension - 1))),
                          float(exp.get("cone_mu", 2.0)),
                          float(exp.get("cone_lambda", 0.999)),
                          float(exp.get("cone_epsilon", 0.05)),
                          float(exp.get("cone_delta", 0.3)))
        rep = angle_experiment(a, flag, specs[-1], cone, params=params, rng=rng)
        tables["angles"] = rep.angle_rows
        tables["projection_growth"] = rep.projection_rows
        results["u_m"] = rep.u_m
        results["j0"] = rep.j0
        results["j1"] = rep.j1
        bound_ok = all(r["meets_bound"] for r in rep.projection_rows)
        checks.append(_check("projection-growth-bound", 0.0, 0.0,
                             "shadow: transverse projection above closed-form bound",
                             passed=bound_ok))
    return results, tables, checks


def _run_reconstruct(cfg, q, metric, exp, rng, budgets):
    mu = build_measure(cfg, q)
    a = build_cocycle(cfg, q)
    desc = build_descriptor(cfg)
    tol = float(exp.get("tolerance", 1e-8))
    if "conjugator" in exp:
        u = build_cocycle(cfg, q, key="experiment.conjugator",
                          source=exp["conjugator"])
        b = coboundary_conjugate(a, u)
        basepoints = default_basepoints(q)
        base_values = [np.linalg.inv(evaluate(u, w)) for w in basepoints]
    else:
        b = build_cocycle(cfg, q, key="experiment.cocycle_b",
                          source=_require(exp, "$.experiment", "cocycle_b"))
        base_values = [np.array(v, dtype=float)
                       for v in _require(exp, "$.experiment", "base_values")]
    evaluator = superdiagonal_peel(a, b, desc, base_values, tol=tol)
    n_samples = min(int(exp.get("samples", 500)), budgets["samples"])
    samples = [sample_point(mu, rng, 14) for _ in range(n_samples)]
    report = verify_conjugacy(a, b, evaluator, samples, tol=tol, metric=metric)
    path_gap = max(float(np.max(np.abs(
        evaluator.evaluate(s, "us") - evaluator.evaluate(s, "su"))))
        for s in samples[: min(100, n_samples)])
    results = {
        "stage_residuals": list(evaluator.stage_residuals),
        "final_table_residual": evaluator.final_residual,
        "conjugacy": report.to_jsonable(),
        "evaluator": evaluator.to_jsonable(),
    }
    checks = [
        _check("conjugacy-residual", report.max_residual, tol,
               "transfer: A(x) = C(shift x) B(x) C(x)^{-1} on samples"),
        _check("path-independence", path_gap, float(exp.get("path_tolerance", 1e-9)),
               "transfer: su and us transport agree"),
    ]
    return results, {}, checks


def _run_verify_zimmer(cfg, q, metric, exp, rng, budgets):
    a = build_cocycle(cfg, q)
    desc = build_descriptor(cfg)
    tol = float(exp.get("tolerance", 1e-8))
    worst_lower = 0.0
    worst_diag = 0.0
    all_ok = True
    rows = []
    for w, m in sorted(a.table.items()):
        res = membership(m, desc, tol)
        worst_lower = max(worst_lower, res.lower_residual)
        worst_diag = max(worst_diag, max(res.diagonal_residuals))
        all_ok = all_ok and res.ok
        rows.append({"window": " ".join(map(str, w)), "member": bool(res.ok),
                     "lower_residual": res.lower_residual,
                     "diagonal_residual": max(res.diagonal_residuals)})
    n_products = int(exp.get("closure_products", 50))
    closure_ok = True
    for _ in range(n_products):
        m1 = random_element(desc, rng, 1.0)
        m2 = random_element(desc, rng, 1.0)
        scale = max(1.0, float(np.linalg.norm(m1, 2) * np.linalg.norm(m2, 2)))
        closure_ok = closure_ok and membership(m1 @ m2, desc, tol * scale).ok
        inv_scale = max(1.0, float(np.linalg.cond(m1)))
        closure_ok = closure_ok and membership(
            np.linalg.inv(m1), desc, tol * inv_scale ** 2).ok
    results = {"values": len(rows), "worst_lower_residual": worst_lower,
               "worst_diagonal_residual": worst_diag}
    checks = [
        _check("table-membership", max(worst_lower, worst_diag), tol,
               "zimmer: every generator value lies in the block",
               passed=all_ok),
        _check("closure", 0.0, 0.0,
               "zimmer: products and inverses stay in the block",
               passed=closure_ok),
    ]
    return results, {"membership": rows}, checks


def _run_example_unipotent(cfg, q, metric, exp, rng, budgets):
    mu = build_measure(cfg, q)
    ex = unipotent_example(q)
    desc = ZimmerDescriptor((1, 1), 0.0)
    formula_exact = True
    rows = []
    for w, m in sorted(ex.b.table.items()):
        expected = np.array([[1.0, 1.0 - w[2] + w[1]], [0.0, 1.0]])
        formula_exact = formula_exact and bool(np.array_equal(m, expected))
        rows.append({"window": " ".join(map(str, w)),
                     "value": m.tolist(), "expected": expected.tolist()})
    member_ok = all(membership(m, desc).ok for m in ex.b.table.values())
    # a = frame(shift x) b frame(x)^{-1}, so the peel recovers the frame.
    basepoints = default_basepoints(q)
    base_values = [evaluate(ex.frame, w) for w in basepoints]
    evaluator = superdiagonal_peel(ex.a, ex.b, desc, base_values, tol=1e-10)
    samples = [sample_point(mu, rng, 12)
               for _ in range(min(300, budgets["samples"]))]
    worst = max(conjugacy_residual(ex.a, ex.b, evaluator, s) for s in samples)
    results = {"frame_parameter": "phi(x) = x_0",
               "reconstruction_residual": worst}
    checks = [
        _check("frame-change-formula", 0.0, 0.0,
               "cocycle: conjugated table equals [[1, 1 - x_1 + x_0], [0, 1]]",
               passed=formula_exact),
        _check("block-membership", 0.0, 0.0,
               "zimmer: conjugated cocycle stays unipotent",
               passed=member_ok),
        _check("reconstruction-residual", worst, 1e-10,
               "transfer: frame recovered by holonomy propagation"),
    ]
    return results, {"conjugated_table": rows}, checks


_HANDLERS = {
    "exponents": _run_exponents,
    "holonomy": _run_holonomy,
    "blocks": _run_blocks,
    "shadow": _run_shadow,
    "reconstruct": _run_reconstruct,
    "verify-zimmer": _run_verify_zimmer,
    "example-unipotent": _run_example_unipotent,
}


def run(config: dict) -> dict:
    """Validate the config, run its experiment and return the report dict."""
    q, metric = build_system(config)
    exp = experiment_params(config)
    seed = int(exp["seed"])
    rng = np.random.default_rng(seed)
    budget_cfg = exp.get("budgets", {})
    budgets = {"words": int(budget_cfg.get("words", DEFAULT_WORD_BUDGET)),
               "samples": int(budget_cfg.get("samples", DEFAULT_SAMPLE_BUDGET))}
    handler = _HANDLERS[exp["kind"]]
    results, tables, checks = handler(config, q, metric, exp, rng, budgets)
    report = {
        "kind": exp["kind"],
        "library_version": __version__,
        "seed": seed,
        "budgets": budgets,
        "config": config,
        "results": results,
        "tables": tables,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    return _jsonable(report)


def emit(report: dict, fmt: str) -> str:
    """Serialize a report; identical reports give byte-identical output."""
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        out = io.StringIO()
        tables = report.get("tables", {})
        for name in sorted(tables):
            rows = tables[name]
            out.write(f"# table: {name}\n")
            if not rows:
                continue
            writer = csv.DictWriter(out, fieldnames=list(rows[0].keys()),
                                    lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        return out.getvalue()
    raise ValueError(f"unsupported format {fmt!r}")


def _csv_cell(value: Any) -> Any:
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return value


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(path, f"cannot read config: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cocyclib",
        description="experiment runner for cocycle computations over "
                    "subshifts of finite type",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--budget-words", type=int, default=None)
        p.add_argument("--budget-samples", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        exp = config.setdefault("experiment", {})
        if exp.get("kind", args.kind) != args.kind:
            raise ConfigError("$.experiment.kind",
                              f"config kind {exp.get('kind')!r} does not match "
                              f"subcommand {args.kind!r}")
        exp["kind"] = args.kind
        if args.seed is not None:
            exp["seed"] = args.seed
        budgets = exp.setdefault("budgets", {})
        if args.budget_words is not None:
            budgets["words"] = args.budget_words
        if args.budget_samples is not None:
            budgets["samples"] = args.budget_samples
        report = run(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = emit(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
