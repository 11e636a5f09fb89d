"""Seeded invariant suites behind ``qrmi verify``.

Each suite runs a number of randomized trials, tracks the worst violation
magnitude, and serializes the first failing counterexample so a red run is
reproducible from the report alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .divergences import divergence, pinch, rel_entropy_and_variance, spectrum_count
from .instances import random_density, random_instance
from .mutual_info import (
    dual_mi,
    mi_variance,
    petz_mi,
    product_instance,
    sandwiched_mi,
)
from .operators import (
    BipartiteState,
    HermitianOperator,
    operator_to_json,
    symmetrize,
    tensor,
    threshold_projector,
)
from .universal import block_count, domination_gap, universal_state

PINCH_ALPHAS = (0.25, 0.5, 0.75, 1.0, 1.3, 2.0, 2.7, 4.0)
DUALITY_ALPHAS = (0.6, 0.8, 1.3, 2.0, 3.0)
ADDITIVITY_ALPHAS = (0.5, 0.9, 1.5, 2.0, 3.0)


@dataclass
class SuiteResult:
    name: str
    trials: int
    checks: int
    failures: int
    max_violation: float
    counterexample: dict | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.failures == 0


class _Recorder:
    def __init__(self, name):
        self.name = name
        self.checks = 0
        self.failures = 0
        self.max_violation = 0.0
        self.counterexample = None

    def check(self, violation: float, tol: float, context: dict):
        self.checks += 1
        self.max_violation = max(self.max_violation, violation)
        if violation > tol:
            self.failures += 1
            if self.counterexample is None:
                self.counterexample = {"violation": violation, "tol": tol, **context}

    def result(self, trials) -> SuiteResult:
        return SuiteResult(
            self.name, trials, self.checks, self.failures, self.max_violation, self.counterexample
        )


def _ctx(seed, trial, **extras):
    out = {"seed": seed, "trial": trial}
    for key, value in extras.items():
        if isinstance(value, (HermitianOperator,)):
            out[key] = json.loads(operator_to_json(value))
        else:
            out[key] = value
    return out


def suite_pinching(trials: int = 100, seed: int = 42, dims: tuple[int, int] = (2, 2)) -> SuiteResult:
    """Pinching sandwich, operator pinching bound, and cluster consistency."""
    rec = _Recorder("pinching")
    rng = np.random.default_rng(seed)
    dim = dims[0] * dims[1]
    for trial in range(trials):
        rho = random_density(rng, dim)
        sigma = random_density(rng, dim)
        pinched = pinch(sigma.op, rho.op)
        count = spectrum_count(sigma.op)
        # Operator bound: |spec(sigma)| * pinch(rho) >= rho.
        gap = (float(count) * pinched - rho.op).min_eig()
        rec.check(-gap, 1e-9, _ctx(seed, trial, quantity="operator-pinching"))
        log_count = math.log(count)
        for a in PINCH_ALPHAS:
            lower = divergence("sandwiched", rho, sigma.op, a)
            mid = divergence("sandwiched", HermitianOperator(pinched.mat), sigma.op, a)
            c = 1.0 if a <= 2.0 else 2.0
            rec.check(mid - lower, 1e-8, _ctx(seed, trial, alpha=a, quantity="pinch-lower"))
            rec.check(
                lower - mid - c * log_count, 1e-8, _ctx(seed, trial, alpha=a, quantity="pinch-upper")
            )
    return rec.result(trials)


def suite_audenaert(trials: int = 100, seed: int = 42, dims: tuple[int, int] = (2, 2)) -> SuiteResult:
    """tr[L^s K^{1-s}] >= tr[K {L>=K}] + tr[L {L<K}] for PSD L, K."""
    from .operators import mat_power

    rec = _Recorder("audenaert")
    rng = np.random.default_rng(seed)
    dim = dims[0] * dims[1]
    for trial in range(trials):
        l_op = random_density(rng, dim).op * float(rng.uniform(0.5, 2.0))
        k_op = random_density(rng, dim).op * float(rng.uniform(0.5, 2.0))
        proj = threshold_projector(l_op, k_op)
        comp = HermitianOperator(np.eye(dim)) - proj
        rhs = float(np.vdot(proj.mat, k_op.mat).real + np.vdot(comp.mat, l_op.mat).real)
        for s in (0.2, 0.5, 0.8):
            lhs = float(np.trace(mat_power(l_op, s).mat @ mat_power(k_op, 1.0 - s).mat).real)
            rec.check(rhs - lhs, 1e-9, _ctx(seed, trial, s=s))
    return rec.result(trials)


def suite_duality(trials: int = 100, seed: int = 42, dims: tuple[int, int] = (2, 2)) -> SuiteResult:
    """sandwiched_mi and dual_mi agree within 1e-7 across alpha."""
    rec = _Recorder("duality")
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        inst = random_instance(rng, dims[0], dims[1], tau="random")
        for a in DUALITY_ALPHAS:
            direct = sandwiched_mi(inst, a).value
            dual = dual_mi(inst, a)
            rec.check(abs(direct - dual), 1e-7, _ctx(seed, trial, alpha=a))
    return rec.result(trials)


def suite_additivity(trials: int = 50, seed: int = 42, dims: tuple[int, int] = (2, 2)) -> SuiteResult:
    """I_alpha and I~_alpha add over tensor-product instances."""
    rec = _Recorder("additivity")
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        first = random_instance(rng, dims[0], dims[1], tau="random")
        second = random_instance(rng, dims[0], dims[1], tau="random")
        joint = product_instance(first, second)
        for a in ADDITIVITY_ALPHAS:
            lhs = petz_mi(joint, a)
            rhs = petz_mi(first, a) + petz_mi(second, a)
            rec.check(abs(lhs - rhs), 1e-8, _ctx(seed, trial, alpha=a, family="petz"))
            lhs = sandwiched_mi(joint, a).value
            rhs = sandwiched_mi(first, a).value + sandwiched_mi(second, a).value
            rec.check(abs(lhs - rhs), 1e-8, _ctx(seed, trial, alpha=a, family="sandwiched"))
    return rec.result(trials)


def suite_universal(trials: int = 100, seed: int = 42, n: int = 3, d: int = 2) -> SuiteResult:
    """Domination, commutation with symmetrized states, and block count."""
    rec = _Recorder("universal")
    rng = np.random.default_rng(seed)
    uni = universal_state(n, d)
    rec.check(
        float(block_count(uni) - (n + 1) ** (d - 1)), 0.0, _ctx(seed, -1, quantity="block-count")
    )
    for trial in range(trials):
        tau = symmetrize(random_density(rng, d**n).op, d)
        rec.check(-domination_gap(tau, uni), 1e-9, _ctx(seed, trial, quantity="domination"))
        comm = uni.omega.mat @ tau.mat - tau.mat @ uni.omega.mat
        rec.check(float(np.linalg.norm(comm)), 1e-9, _ctx(seed, trial, quantity="commutation"))
    return rec.result(trials)


def suite_derivative(trials: int = 50, seed: int = 42, dims: tuple[int, int] = (2, 2)) -> SuiteResult:
    """Central difference of both divergences and of I~ at alpha=1 equals V/2."""
    rec = _Recorder("derivative")
    rng = np.random.default_rng(seed)
    h = 1e-3
    dim = dims[0] * dims[1]
    for trial in range(trials):
        rho = random_density(rng, dim)
        sigma = random_density(rng, dim)
        _, v = rel_entropy_and_variance(rho, sigma.op)
        for kind in ("petz", "sandwiched"):
            slope = (
                divergence(kind, rho, sigma.op, 1.0 + h)
                - divergence(kind, rho, sigma.op, 1.0 - h)
            ) / (2.0 * h)
            rec.check(abs(slope - v / 2.0), 1e-4, _ctx(seed, trial, family=kind))
        inst = random_instance(rng, dims[0], dims[1], tau="random")
        slope = (
            sandwiched_mi(inst, 1.0 + h).value - sandwiched_mi(inst, 1.0 - h).value
        ) / (2.0 * h)
        rec.check(abs(slope - mi_variance(inst) / 2.0), 1e-4, _ctx(seed, trial, family="mi"))
    return rec.result(trials)


SUITES = {
    "pinching": suite_pinching,
    "audenaert": suite_audenaert,
    "duality": suite_duality,
    "additivity": suite_additivity,
    "universal": suite_universal,
    "derivative": suite_derivative,
}


def run_suite(name: str, trials: int, seed: int, dims=(2, 2), n: int = 3, d: int = 2):
    """Run one named suite (or every suite for ``all``)."""
    if name == "all":
        return [run_suite(s, trials, seed, dims, n, d)[0] for s in SUITES]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    if name == "universal":
        return [SUITES[name](trials=trials, seed=seed, n=n, d=d)]
    return [SUITES[name](trials=trials, seed=seed, dims=tuple(dims))]
