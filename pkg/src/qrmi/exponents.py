"""Asymptotic error exponents and the second-order Gaussian limit.

The Hoeffding exponent is sup_{s in (0,1)} ((1-s)/s)(I_s - R) and the
strong-converse exponent is sup_{s > 1} ((s-1)/s)(R - I~_s); both suprema
are taken over open sets and may only be attained in a limit, so the
solvers truncate the s interval and compare against the boundary limits
explicitly.  +inf is a first-class exponent value carrying its own regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mutual_info import (
    HypothesisInstance,
    dual_instance,
    mi_variance,
    petz_mi,
    sandwiched_value,
)
from .operators import HermitianOperator, mat_power, partial_trace, tensor, identity

S_EDGE = 1e-3
S_MAX = 40.0
GOLDEN_TOL = 1e-8
BOUNDARY_MARGIN = 1e-9


class Regime(Enum):
    BELOW_I = "BelowI"
    AT_I = "AtI"
    ABOVE_I = "AboveI"
    BELOW_I0_DIVERGENT = "BelowI0_Divergent"
    ABOVE_I_TILDE_INF = "AboveITildeInf"


@dataclass
class ExponentRecord:
    R: float
    value: float
    s_star: float | None
    regime: Regime


def _golden_section(f, lo, hi, tol=GOLDEN_TOL):
    """Maximize a unimodal-enough objective on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def hoeffding_exponent(inst: HypothesisInstance, R: float) -> ExponentRecord:
    """sup over s in (0,1) of ((1-s)/s)(I_s(inst) - R), with divergence
    detection below I_0 and the zero plateau at and above I."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    i_one = petz_mi(inst, 1.0)
    if R >= i_one - BOUNDARY_MARGIN:
        regime = Regime.AT_I if abs(R - i_one) <= BOUNDARY_MARGIN else Regime.ABOVE_I
        return ExponentRecord(R, 0.0, None, regime)

    cache: dict[float, float] = {}

    def objective(s):
        if s not in cache:
            cache[s] = (1.0 - s) / s * (petz_mi(inst, s) - R)
        return cache[s]

    grid = np.linspace(S_EDGE, 1.0 - S_EDGE, 200)
    vals = [objective(s) for s in grid]
    best = int(np.argmax(vals))
    if best == 0:
        i_small = petz_mi(inst, S_EDGE)
        if R < i_small - BOUNDARY_MARGIN:
            return ExponentRecord(R, math.inf, 0.0, Regime.BELOW_I0_DIVERGENT)
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    s_star, value = _golden_section(objective, lo, hi)
    return ExponentRecord(R, max(value, 0.0), float(s_star), Regime.BELOW_I)


def strong_converse_exponent(inst: HypothesisInstance, R: float) -> ExponentRecord:
    """sup over s > 1 of ((s-1)/s)(R - I~_s(inst)); the s -> inf boundary is
    compared explicitly and flagged when it wins."""
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    i_one = petz_mi(inst, 1.0)
    if R <= i_one + BOUNDARY_MARGIN:
        regime = Regime.AT_I if abs(R - i_one) <= BOUNDARY_MARGIN else Regime.BELOW_I
        return ExponentRecord(R, 0.0, None, regime)

    dual = dual_instance(inst)
    cache: dict[float, float] = {}

    def objective(s):
        if s not in cache:
            cache[s] = (s - 1.0) / s * (R - sandwiched_value(inst, s, dual))
        return cache[s]

    grid = np.linspace(1.0 + S_EDGE, S_MAX, 200)
    vals = [objective(s) for s in grid]
    best = int(np.argmax(vals))
    if best == len(grid) - 1:
        i_inf = sandwiched_value(inst, math.inf, dual)
        limit = R - i_inf
        if R > i_inf + BOUNDARY_MARGIN and limit >= vals[best]:
            return ExponentRecord(R, limit, None, Regime.ABOVE_I_TILDE_INF)
        return ExponentRecord(R, max(vals[best], 0.0), float(grid[best]), Regime.ABOVE_I)
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    s_star, value = _golden_section(objective, lo, hi)
    return ExponentRecord(R, max(value, 0.0), float(s_star), Regime.ABOVE_I)


# ---------------------------------------------------------------------------
# second order
# ---------------------------------------------------------------------------

DEGENERATE_VARIANCE = 1e-14


def gaussian_cdf(x: float) -> float:
    """Standard normal CDF through the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def second_order_prediction(inst: HypothesisInstance, r: float) -> tuple[float, bool]:
    """Phi(r / sqrt(V)) and a flag marking degenerate (zero) variance.

    With V = 0 the prediction degenerates to the step function in r.
    """
    v = mi_variance(inst)
    if v <= DEGENERATE_VARIANCE:
        if r < 0:
            return 0.0, True
        if r == 0:
            return 0.5, True
        return 1.0, True
    return gaussian_cdf(r / math.sqrt(v)), False


# ---------------------------------------------------------------------------
# numerical saddle check for the minimax step
# ---------------------------------------------------------------------------

@dataclass
class SaddleGapResult:
    gap: float
    estimate: float
    inf_sup: float
    sup_inf: float


def saddle_gap(inst: HypothesisInstance, R: float, s_grid, sigma_grid_size: int, seed: int = 0) -> SaddleGapResult:
    """|inf_sigma sup_s - sup_s inf_sigma| of ((1-s)/s)(D_s(rho || tau (x) sigma) - R)
    over discretized grids, with a refinement-based discretization estimate."""
    s_grid = np.asarray(list(s_grid), dtype=float)
    if s_grid.size == 0 or sigma_grid_size < 1:
        raise ValueError("grids must be nonempty")
    sigmas = _sigma_grid(inst.dimB, sigma_grid_size, seed)
    table = _objective_table(inst, R, s_grid, sigmas)

    def gap_of(t):
        inf_sup = float(np.min(np.max(t, axis=0)))
        sup_inf = float(np.max(np.min(t, axis=1)))
        return inf_sup, sup_inf

    inf_sup, sup_inf = gap_of(table)
    gap = abs(inf_sup - sup_inf)
    coarse = table[::2, ::2]
    c_inf_sup, c_sup_inf = gap_of(coarse)
    estimate = (
        4.0 * (abs(inf_sup - c_inf_sup) + abs(sup_inf - c_sup_inf))
        + 4.0 * abs(c_inf_sup - c_sup_inf - (inf_sup - sup_inf))
        + 1e-3
    )
    return SaddleGapResult(gap, estimate, inf_sup, sup_inf)


def _sigma_grid(dim: int, size: int, seed: int) -> list[np.ndarray]:
    if dim == 2:
        from .mutual_info import _bloch_grid, _bloch_matrix

        grid = _bloch_grid(size)
        return [_bloch_matrix(r) for r in grid]
    rng = np.random.default_rng(seed)
    out = [np.eye(dim) / dim]
    while len(out) < size:
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        m = g @ g.conj().T
        out.append(m / np.trace(m).real)
    return out


def _objective_table(inst, R, s_grid, sigmas):
    """F[i, j] = ((1-s_i)/s_i)(D_{s_i}(rho || tau (x) sigma_j) - R)."""
    table = np.empty((s_grid.size, len(sigmas)))
    rho = inst.rho.state.op
    for i, s in enumerate(s_grid):
        ra = mat_power(rho, float(s)).mat
        t_pow = tensor(mat_power(inst.tau, 1.0 - float(s)), identity(inst.dimB))
        m_b = partial_trace(HermitianOperator(t_pow.mat @ ra), [inst.dimA, inst.dimB], {1}).mat
        for j, sigma in enumerate(sigmas):
            w, v = np.linalg.eigh((sigma + sigma.conj().T) / 2.0)
            w = np.maximum(w, 0.0)
            pw = np.where(w > 0, np.power(w, 1.0 - float(s)), 0.0)
            s_pow = (v * pw) @ v.conj().T
            q = float(np.trace(m_b @ s_pow).real)
            if q <= 0:
                table[i, j] = math.inf if s < 1 else -math.inf
            else:
                d = math.log(q) / (float(s) - 1.0)
                table[i, j] = (1.0 - float(s)) / float(s) * (d - R)
    return table
