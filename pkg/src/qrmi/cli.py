"""Command-line front end: compute, exponents, experiment, verify.

Exit codes: 0 ok, 1 validation failure, 2 solver non-convergence,
3 invariant violation.  Identical configurations (including seed) produce
byte-identical output; numbers are printed with 17 significant digits and
sweeps run in deterministic grid order regardless of worker scheduling.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import exponents as expo
from . import hypotest as ht
from . import verify as ver
from .divergences import DivergenceKind, divergence, rel_entropy_and_variance
from .instances import builtin_state, resolve_tau
from .mutual_info import HypothesisInstance, mi_variance, petz_mi, sandwiched_mi
from .operators import (
    BipartiteState,
    DensityMatrix,
    load_operator,
    operator_to_json,
)

LN2 = math.log(2.0)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NON_CONVERGENCE = 2
EXIT_INVARIANT = 3


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    output: str | None = None
    fmt: str = "json"
    units: str = "nats"
    seed: int = 0
    extra: dict = field(default_factory=dict)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return f"{x:.17g}"
    return str(x)


def _parse_grid(text: str) -> list[float]:
    """Parse 'start:stop:step' (inclusive, integer-stepped) or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"grid must be 'value' or 'start:stop:step', got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"grid bounds must be ordered with positive step: {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def _workers() -> int:
    try:
        return max(int(os.environ.get("QRMI_THREADS", "1")), 1)
    except ValueError:
        return 1


def _map_ordered(fn, items):
    workers = _workers()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _load_state(args) -> BipartiteState:
    if args.state is None:
        raise ValueError("an instance is required (--state NAME|FILE)")
    if os.path.exists(args.state):
        if not args.dims:
            raise ValueError("--dims dA dB is required for states loaded from files")
        op = load_operator(args.state)
        return BipartiteState(DensityMatrix(op), args.dims[0], args.dims[1])
    return builtin_state(args.state)


def _load_instance(args) -> HypothesisInstance:
    rho = _load_state(args)
    if args.tau and os.path.exists(args.tau):
        return HypothesisInstance(rho, load_operator(args.tau))
    return HypothesisInstance(rho, resolve_tau(args.tau or "marginal", rho))


def _convert(value: float, units: str, power: int = 1) -> float:
    if units == "bits":
        return value / LN2**power
    return value


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# compute
# ---------------------------------------------------------------------------

def cmd_compute(cfg: RunConfig) -> int:
    args = cfg.args
    report = {"quantity": args.quantity, "units": cfg.units}
    code = EXIT_OK
    if args.quantity == "divergence":
        if not (args.rho and args.sigma):
            raise ValueError("compute divergence needs --rho FILE and --sigma FILE")
        rho = DensityMatrix(load_operator(args.rho))
        sigma = load_operator(args.sigma)
        alpha = math.inf if args.alpha == "inf" else float(args.alpha)
        value = divergence(args.kind, rho, sigma, alpha)
        report.update(alpha=alpha, kind=args.kind, value=_convert(value, cfg.units))
    elif args.quantity == "mi":
        inst = _load_instance(args)
        alpha = math.inf if args.alpha == "inf" else float(args.alpha)
        if args.kind == "petz":
            value = petz_mi(inst, alpha)
            report.update(
                alpha=alpha, kind=args.kind, value=_convert(value, cfg.units),
                method="SibsonClosedForm", converged=True,
            )
        else:
            res = sandwiched_mi(inst, alpha, validate=args.validate, seed=cfg.seed)
            report.update(
                alpha=alpha, kind=args.kind, value=_convert(res.value, cfg.units),
                method=res.method.value, converged=res.converged,
                iterations=res.iterations,
            )
            if res.minimizer is not None:
                report["minimizer"] = json.loads(operator_to_json(res.minimizer))
            if not res.converged:
                code = EXIT_NON_CONVERGENCE
    elif args.quantity == "variance":
        inst = _load_instance(args)
        value = mi_variance(inst)
        report.update(value=_convert(value, cfg.units, power=2))
    else:
        raise ValueError(f"unknown compute quantity {args.quantity!r}")
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", cfg.output)
    return code


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def cmd_exponents(cfg: RunConfig) -> int:
    args = cfg.args
    inst = _load_instance(args)
    rows = []
    code = EXIT_OK
    if args.mode == "second-order":
        if not args.r:
            raise ValueError("second-order mode needs an --r grid")
        grid = _parse_grid(args.r)

        def run(r):
            phi, _ = expo.second_order_prediction(inst, r)
            return f"{_fmt(r)},{_fmt(phi)}"

        rows = ["r,phi"] + _map_ordered(run, grid)
    else:
        if not args.R:
            raise ValueError(f"{args.mode} mode needs an --R grid")
        grid = _parse_grid(args.R)
        solver = (
            expo.hoeffding_exponent if args.mode == "hoeffding" else expo.strong_converse_exponent
        )

        def run(rate):
            try:
                rec = solver(inst, rate)
            except Exception:
                return f"{_fmt(rate)},nan,nan,error"
            s_star = rec.s_star if rec.s_star is not None else math.nan
            return (
                f"{_fmt(rate)},{_fmt(_convert(rec.value, cfg.units))},"
                f"{_fmt(s_star)},{rec.regime.value}"
            )

        rows = ["R,value,s_star,regime"] + _map_ordered(run, grid)
        if any(row.endswith(",error") for row in rows):
            code = EXIT_NON_CONVERGENCE
    _emit("\n".join(rows) + "\n", cfg.output)
    return code


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

def cmd_experiment(cfg: RunConfig) -> int:
    args = cfg.args
    inst = _load_instance(args)
    n_grid = [int(x) for x in _parse_grid(args.n)]
    s = float(args.s)
    rate = float(args.R)
    rows = ["n,R_or_mu,alpha1,beta,bound,satisfied"]
    violated = False
    for n in n_grid:
        if args.mode == "hoeffding":
            test, _lam = ht.hoeffding_test(inst, n, s, rate)
            alpha1 = ht.type1_error(test, inst.rho)
            beta = ht.type2_error_worst(test, inst.tau)
            g = ht.sym_dim(n, max(inst.dimA, inst.dimB))
            bound = math.exp(
                (1.0 - s) / s * (math.log(g) + n * rate - n * petz_mi(inst, s))
            )
            ok = alpha1 <= bound + 1e-9 and beta <= math.exp(-n * rate) + 1e-9
            rows.append(
                f"{n},{_fmt(rate)},{_fmt(alpha1)},{_fmt(beta)},{_fmt(bound)},{_fmt(ok)}"
            )
        elif args.mode == "strong-converse":
            mu_n = ht.strong_converse_mu(inst, n, s, rate)
            test, _pair = ht.pinched_test_and_distributions(inst, n, mu_n)
            alpha1 = ht.type1_error(test, inst.rho)
            beta = ht.type2_error_worst(test, inst.tau)
            bound = math.exp(-n * rate)
            ok = beta <= bound + 1e-9
            rows.append(
                f"{n},{_fmt(mu_n)},{_fmt(alpha1)},{_fmt(beta)},{_fmt(bound)},{_fmt(ok)}"
            )
        else:
            raise ValueError(f"unknown experiment mode {args.mode!r}")
        if not rows[-1].endswith("true"):
            violated = True
    _emit("\n".join(rows) + "\n", cfg.output)
    return EXIT_INVARIANT if violated else EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    args = cfg.args
    results = ver.run_suite(
        args.suite, trials=args.trials, seed=cfg.seed, dims=tuple(args.dims), n=args.n, d=args.d
    )
    report = {
        "seed": cfg.seed,
        "trials": args.trials,
        "suites": [
            {
                "name": r.name,
                "checks": r.checks,
                "failures": r.failures,
                "max_violation": r.max_violation,
                "passed": r.passed,
            }
            for r in results
        ],
    }
    _emit(json.dumps(report, sort_keys=True, indent=2) + "\n", cfg.output)
    failing = [r for r in results if not r.passed]
    if failing:
        path = (cfg.output or "qrmi") + ".counterexample.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"suite": failing[0].name, "counterexample": failing[0].counterexample},
                fh,
                sort_keys=True,
                indent=2,
            )
        sys.stderr.write(f"first counterexample written to {path}\n")
        return EXIT_INVARIANT
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrmi",
        description="Renyi mutual information and composite hypothesis testing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output", help="write the report to this path instead of stdout")
        p.add_argument("--units", choices=["nats", "bits"], default="nats")
        p.add_argument("--seed", type=int, default=0)

    p_compute = sub.add_parser("compute", help="single quantities")
    p_compute.add_argument("quantity", choices=["divergence", "mi", "variance"])
    p_compute.add_argument("--kind", choices=["petz", "sandwiched"], default="sandwiched")
    p_compute.add_argument("--alpha", default="1")
    p_compute.add_argument("--state", help="builtin name (bell, correlated-bits, product, werner:p) or JSON file")
    p_compute.add_argument("--dims", type=int, nargs=2, help="dA dB for file-based states")
    p_compute.add_argument("--tau", default="marginal", help="marginal|uniform|identity|FILE")
    p_compute.add_argument("--rho", help="JSON density matrix (divergence)")
    p_compute.add_argument("--sigma", help="JSON positive operator (divergence)")
    p_compute.add_argument("--validate", action="store_true", help="cross-check with direct minimization")
    common(p_compute)

    p_exp = sub.add_parser("exponents", help="sweep exponent curves")
    p_exp.add_argument("--mode", choices=["hoeffding", "strong-converse", "second-order"], required=True)
    p_exp.add_argument("--state", required=True)
    p_exp.add_argument("--dims", type=int, nargs=2)
    p_exp.add_argument("--tau", default="marginal")
    p_exp.add_argument("--R", help="rate grid start:stop:step or single value (nats)")
    p_exp.add_argument("--r", help="second-order deviation grid")
    common(p_exp)

    p_run = sub.add_parser("experiment", help="finite-n bound experiments")
    p_run.add_argument("--mode", choices=["hoeffding", "strong-converse"], required=True)
    p_run.add_argument("--state", required=True)
    p_run.add_argument("--dims", type=int, nargs=2)
    p_run.add_argument("--tau", default="marginal")
    p_run.add_argument("--n", required=True, help="copy grid start:stop:step or single value")
    p_run.add_argument("--s", required=True, help="Renyi order of the construction")
    p_run.add_argument("--R", required=True, help="type-II rate (nats)")
    common(p_run)

    p_ver = sub.add_parser("verify", help="run invariant suites")
    p_ver.add_argument(
        "--suite",
        choices=sorted(ver.SUITES) + ["all"],
        required=True,
    )
    p_ver.add_argument("--trials", type=int, default=100)
    p_ver.add_argument("--dims", type=int, nargs=2, default=[2, 2])
    p_ver.add_argument("--n", type=int, default=3, help="copies for the universal suite")
    p_ver.add_argument("--d", type=int, default=2, help="local dim for the universal suite")
    common(p_ver)

    return parser


COMMANDS = {
    "compute": cmd_compute,
    "exponents": cmd_exponents,
    "experiment": cmd_experiment,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        args=args,
        output=args.output,
        units=getattr(args, "units", "nats"),
        seed=getattr(args, "seed", 0),
    )
    try:
        return COMMANDS[args.command](cfg)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
