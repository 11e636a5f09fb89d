"""Generalized Renyi mutual informations I_alpha and their minimizers.

Both families minimize a divergence to ``tau_A (x) sigma_B`` over states
``sigma_B``.  The Petz family has a closed-form minimizer (Sibson's
identity); the sandwiched family is solved by a damped fixed-point
iteration for alpha in (1/2, 1) and through the purification duality

    I~_alpha(rho_AB || tau_A) = -I~_beta(rho_AC || tau_A^{-1}),
    1/alpha + 1/beta = 2,

for alpha > 1.  A brute direct minimization over sigma_B is kept as an
independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.optimize
from scipy.special import logsumexp

from .divergences import (
    DivergenceKind,
    as_alpha,
    divergence,
    rel_entropy_and_variance,
)
from .operators import (
    PSD_TOL,
    SUPPORT_CUTOFF,
    BipartiteState,
    DensityMatrix,
    HermitianOperator,
    as_operator,
    identity,
    mat_power,
    maximally_mixed,
    partial_trace,
    permute_factors,
    purify,
    support_projector,
    tensor,
    trace_distance,
    weight_outside_support,
)

FP_STEP_TOL = 1e-10
FP_CHI_TOL = 1e-12
FP_MAX_ITER = 10_000


class SolveMethod(Enum):
    SIBSON = "SibsonClosedForm"
    FIXED_POINT = "FixedPoint"
    DUALITY_FIXED_POINT = "DualityFixedPoint"
    DIRECT = "DirectMinimization"


class HypothesisInstance:
    """The pair (rho_AB, tau_A) defining the composite testing problem.

    ``tau`` may be any positive operator whose support contains supp(rho_A);
    the duality route relies on non-normalized tau = tau^{-1}.
    """

    __slots__ = ("rho", "tau")

    def __init__(self, rho: BipartiteState, tau):
        tau = as_operator(tau)
        if tau.dim != rho.dimA:
            raise ValueError(f"tau dim {tau.dim} does not match dimA {rho.dimA}")
        if tau.min_eig() < -PSD_TOL * max(1.0, tau.max_eig()):
            raise ValueError("tau must be positive semi-definite")
        if weight_outside_support(rho.marginal_a().op, tau) > 1e-10:
            raise ValueError("support of rho_A must lie inside the support of tau")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "tau", tau)

    def __setattr__(self, name, value):
        raise AttributeError("HypothesisInstance is immutable")

    @property
    def dimA(self) -> int:
        return self.rho.dimA

    @property
    def dimB(self) -> int:
        return self.rho.dimB

    @property
    def dim_total(self) -> int:
        return self.rho.dim

    def __repr__(self):
        return f"HypothesisInstance(dimA={self.dimA}, dimB={self.dimB})"


@dataclass
class MIResult:
    value: float
    minimizer: DensityMatrix | None
    iterations: int
    converged: bool
    method: SolveMethod


def product_instance(first: HypothesisInstance, second: HypothesisInstance) -> HypothesisInstance:
    """Tensor two instances into one with A = A1 A2 and B = B1 B2."""
    joint = np.kron(first.rho.mat, second.rho.mat)
    dims = [first.dimA, first.dimB, second.dimA, second.dimB]
    reordered = permute_factors(joint, dims, [0, 2, 1, 3])
    rho = BipartiteState(
        DensityMatrix(reordered), first.dimA * second.dimA, first.dimB * second.dimB
    )
    return HypothesisInstance(rho, tensor(first.tau, second.tau))


# ---------------------------------------------------------------------------
# Petz family: Sibson closed form
# ---------------------------------------------------------------------------

def sibson_minimizer(inst: HypothesisInstance, alpha) -> MIResult:
    """Closed-form minimizer and value of the Petz mutual information.

    The optimum is the normalized 1/alpha power of
    N = tr_A[tau^{(1-a)/2} rho^a tau^{(1-a)/2}] and the value is
    (a/(a-1)) log tr[N^{1/a}].
    """
    a = as_alpha(alpha).value
    if a <= 0 or a == 1 or math.isinf(a):
        raise ValueError(f"Sibson closed form needs alpha in (0,1) or (1,inf), got {a}")
    n_op = _sibson_operator(inst, a)
    w = n_op.spectrum().eigenvalues
    live = w > SUPPORT_CUTOFF * max(float(w[0]), 0.0)
    if not np.any(live):
        return MIResult(math.inf, None, 0, True, SolveMethod.SIBSON)
    log_tr = float(logsumexp(np.log(w[live]) / a))
    value = a / (a - 1.0) * log_tr
    root = mat_power(n_op, 1.0 / a)
    minimizer = DensityMatrix(root * (1.0 / root.trace()))
    return MIResult(value, minimizer, 0, True, SolveMethod.SIBSON)


def _sibson_operator(inst: HypothesisInstance, a: float) -> HermitianOperator:
    t_half = mat_power(inst.tau, (1.0 - a) / 2.0)
    big = tensor(t_half, identity(inst.dimB))
    ra = mat_power(inst.rho.state.op, a)
    x = HermitianOperator(big.mat @ ra.mat @ big.mat)
    return partial_trace(x, [inst.dimA, inst.dimB], {1})


def petz_mi(inst: HypothesisInstance, alpha) -> float:
    """Petz mutual information I_alpha(rho_AB || tau_A) in nats."""
    alpha = as_alpha(alpha)
    a = alpha.value
    if math.isinf(a):
        raise ValueError("the Petz mutual information is not provided at alpha = infinity")
    if abs(a - 1.0) < alpha.limit_window:
        d, v = _mi_rel_entropy_and_variance(inst)
        return d + (a - 1.0) * v / 2.0
    if a == 0.0:
        sqrt_tau = tensor(mat_power(inst.tau, 0.5), identity(inst.dimB))
        proj = support_projector(inst.rho.state.op)
        x = HermitianOperator(sqrt_tau.mat @ proj.mat @ sqrt_tau.mat)
        top = partial_trace(x, [inst.dimA, inst.dimB], {1}).max_eig()
        return math.inf if top <= 0 else -math.log(top)
    return sibson_minimizer(inst, alpha).value


def _mi_rel_entropy_and_variance(inst: HypothesisInstance) -> tuple[float, float]:
    sigma = tensor(inst.tau, inst.rho.marginal_b().op)
    return rel_entropy_and_variance(inst.rho.state, sigma)


def mi_variance(inst: HypothesisInstance) -> float:
    """Mutual information variance V(rho_AB || tau_A (x) rho_B) in nats^2."""
    return _mi_rel_entropy_and_variance(inst)[1]


# ---------------------------------------------------------------------------
# sandwiched family: fixed point and duality
# ---------------------------------------------------------------------------

def sandwiched_fp_map(inst: HypothesisInstance, alpha, sigma: DensityMatrix):
    """One application of the fixed-point map together with its functional.

    Returns (X_alpha(sigma), chi(sigma)) where
    chi(sigma) = tr[((tau (x) sigma)^{(1-a)/2a} rho (tau (x) sigma)^{(1-a)/2a})^a]
    and X_alpha(sigma) is the normalized B-marginal of the same operator.
    """
    a = as_alpha(alpha).value
    t_half = mat_power(inst.tau, (1.0 - a) / (2.0 * a))
    return _fp_step(inst, a, t_half.mat, sigma)


def _fp_step(inst, a, t_half_mat, sigma):
    if a > 1.0:
        # gamma < 0 inverts sigma, so a kernel inside supp(rho_B) is fatal.
        rho_b = inst.rho.marginal_b()
        if weight_outside_support(rho_b.op, as_operator(sigma)) > 1e-10:
            raise RuntimeError(
                "fixed-point iterate lost rank below the support of rho_B; "
                "reseed from the maximally mixed state"
            )
    s_half = mat_power(as_operator(sigma), (1.0 - a) / (2.0 * a))
    g = np.kron(t_half_mat, s_half.mat)
    m = HermitianOperator(g @ inst.rho.mat @ g)
    ma = mat_power(m, a)
    chi = ma.trace()
    if chi <= 0:
        raise RuntimeError("fixed-point functional vanished; supports are incompatible")
    out = partial_trace(ma, [inst.dimA, inst.dimB], {1}) * (1.0 / chi)
    return DensityMatrix(out), chi


def _project_state(mat: np.ndarray) -> DensityMatrix:
    h = (mat + mat.conj().T) / 2.0
    w, v = np.linalg.eigh(h)
    w = np.maximum(w, 0.0)
    total = float(w.sum())
    if total <= 0:
        raise RuntimeError("projection collapsed to the zero matrix")
    return DensityMatrix(HermitianOperator((v * (w / total)) @ v.conj().T))


def _flatten(mat: np.ndarray) -> np.ndarray:
    return np.concatenate([mat.real.ravel(), mat.imag.ravel()])


def _anderson_candidate(history, shape):
    """Anderson mixing over stored (iterate, map output) pairs, newest last."""
    if len(history) < 2:
        return None
    xs = np.stack([h[0] for h in history])
    gs = np.stack([h[1] for h in history])
    fs = gs - xs
    f_last = fs[-1]
    basis = (fs[:-1] - f_last).T
    coef, *_ = np.linalg.lstsq(basis, -f_last, rcond=1e-12)
    theta = np.empty(len(history))
    theta[:-1] = coef
    theta[-1] = 1.0 - coef.sum()
    mixed = theta @ gs
    half = mixed.size // 2
    return (mixed[:half] + 1j * mixed[half:]).reshape(shape)


def _fp_solve(inst, a, sigma0=None, max_iter=FP_MAX_ITER):
    """Anderson-accelerated damped fixed-point iteration.

    For a < 1 the functional chi is provably concave with the optimum at
    the unique fixed point, so chi is kept monotone nondecreasing: plain
    steps halve the damping eta on violations and accelerated candidates
    are only accepted when they do not decrease chi.  For a > 1 no such
    guarantee exists and convergence is judged by the map residual alone.
    Terminates when the undamped residual drops below 1e-10 and chi has
    stabilized to 1e-12 relative.
    """
    enforce_monotone = a < 1.0
    t_half = mat_power(inst.tau, (1.0 - a) / (2.0 * a)).mat
    rho_b = inst.rho.marginal_b()
    sigma = sigma0 if sigma0 is not None else rho_b
    try:
        x_cur, chi_cur = _fp_step(inst, a, t_half, sigma)
    except RuntimeError:
        sigma = maximally_mixed(inst.dimB)
        x_cur, chi_cur = _fp_step(inst, a, t_half, sigma)
    eta = 1.0
    depth = 6
    history = [(_flatten(sigma.mat), _flatten(x_cur.mat))]
    reseeded = False
    iterations = 0
    converged = False
    stall = 0
    for iterations in range(1, max_iter + 1):
        # Convergence is judged by the undamped fixed-point residual; the
        # damped step alone shrinks with eta and would fire early.
        residual = trace_distance(x_cur, sigma)
        accepted = None
        try:
            mixed = _anderson_candidate(history, sigma.mat.shape)
            if mixed is not None:
                acc = _project_state(mixed)
                x_acc, chi_acc = _fp_step(inst, a, t_half, acc)
                ok = chi_acc >= chi_cur - 1e-14 * abs(chi_cur) if enforce_monotone else True
                if ok and trace_distance(x_acc, acc) <= max(4.0 * residual, FP_STEP_TOL):
                    accepted = (acc, x_acc, chi_acc)
        except (RuntimeError, np.linalg.LinAlgError):
            accepted = None
        if accepted is None:
            candidate = DensityMatrix(
                HermitianOperator((1.0 - eta) * sigma.mat + eta * x_cur.mat)
            )
            try:
                x_next, chi_next = _fp_step(inst, a, t_half, candidate)
            except RuntimeError:
                if reseeded:
                    break
                reseeded = True
                sigma = maximally_mixed(inst.dimB)
                x_cur, chi_cur = _fp_step(inst, a, t_half, sigma)
                history = [(_flatten(sigma.mat), _flatten(x_cur.mat))]
                continue
            violation = chi_next < chi_cur - 1e-14 * abs(chi_cur)
            if enforce_monotone and violation:
                eta /= 2.0
                if eta < 1e-8:
                    # Restart the mixing history instead of aborting; a
                    # persistent stall is caught by the counter below.
                    eta = 1.0
                    history = history[-1:]
                    stall += 1
                    if stall >= 8:
                        break
                continue
            accepted = (candidate, x_next, chi_next)
            eta = min(1.0, eta * 1.3)
        sigma, x_cur, chi_new = accepted
        chi_move = abs(chi_new - chi_cur)
        chi_cur = chi_new
        history.append((_flatten(sigma.mat), _flatten(x_cur.mat)))
        if len(history) > depth:
            history.pop(0)
        if residual < FP_STEP_TOL and chi_move <= FP_CHI_TOL * abs(chi_cur):
            converged = True
            break
    value = math.log(chi_cur) / (a - 1.0)
    return value, sigma, iterations, converged


def dual_instance(inst: HypothesisInstance) -> HypothesisInstance:
    """Purify rho_AB and trade B for the purifying system C, inverting tau."""
    psi = purify(inst.rho.state)
    rank = psi.size // inst.rho.dim
    full = HermitianOperator(np.outer(psi, psi.conj()))
    rho_ac = partial_trace(full, [inst.dimA, inst.dimB, rank], {0, 2})
    tau_inv = mat_power(inst.tau, -1.0)
    return HypothesisInstance(BipartiteState(DensityMatrix(rho_ac), inst.dimA, rank), tau_inv)


def sandwiched_mi(inst: HypothesisInstance, alpha, validate: bool = False, seed: int = 0) -> MIResult:
    """Sandwiched mutual information I~_alpha(rho_AB || tau_A) for alpha >= 1/2.

    alpha in (1/2, 1) iterates the fixed-point map from rho_B; alpha > 1 goes
    through the duality with beta = alpha/(2 alpha - 1) and the same engine;
    the endpoints 1/2 and infinity are limits along a shrinking grid (their
    results carry no minimizer).  With ``validate`` the value is cross-checked
    against the direct minimizer and flagged non-converged on mismatch.
    """
    alpha = as_alpha(alpha)
    a = alpha.value
    if a < 0.5:
        raise ValueError(f"the sandwiched family needs alpha >= 1/2, got {a}")

    if math.isinf(a) or a == 0.5:
        result = _limit_on_grid(inst, a)
    elif abs(a - 1.0) < alpha.limit_window:
        d, v = _mi_rel_entropy_and_variance(inst)
        value = d + (a - 1.0) * v / 2.0
        result = MIResult(value, inst.rho.marginal_b(), 0, True, SolveMethod.FIXED_POINT)
    elif a < 1.0:
        value, sigma, iters, conv = _fp_solve(inst, a)
        result = MIResult(value, sigma, iters, conv, SolveMethod.FIXED_POINT)
    else:
        result = _solve_by_duality(inst, a)

    if validate and math.isfinite(a):
        oracle = direct_minimization(inst, a, DivergenceKind.SANDWICHED, seed=seed)
        if abs(oracle.value - result.value) > 1e-6:
            best = min(result.value, oracle.value)
            result = MIResult(best, result.minimizer, result.iterations, False, result.method)
    return result


def sandwiched_value(inst: HypothesisInstance, alpha, dual: HypothesisInstance | None = None) -> float:
    """Value-only evaluation of I~_alpha, skipping minimizer recovery.

    Passing a precomputed ``dual`` instance avoids re-purifying inside
    exponent sweeps, where this is the inner loop.
    """
    alpha = as_alpha(alpha)
    a = alpha.value
    if a < 0.5:
        raise ValueError(f"the sandwiched family needs alpha >= 1/2, got {a}")
    if math.isinf(a) or a == 0.5:
        return _limit_on_grid(inst, a, dual).value
    if abs(a - 1.0) < alpha.limit_window:
        d, v = _mi_rel_entropy_and_variance(inst)
        return d + (a - 1.0) * v / 2.0
    if a < 1.0:
        return _fp_solve(inst, a)[0]
    if dual is None:
        dual = dual_instance(inst)
    beta = a / (2.0 * a - 1.0)
    return -_fp_solve(dual, beta)[0]


def _solve_by_duality(inst: HypothesisInstance, a: float) -> MIResult:
    beta = a / (2.0 * a - 1.0)
    dual = dual_instance(inst)
    dual_value, _, dual_iters, dual_conv = _fp_solve(dual, beta)
    value = -dual_value
    # The optimum of the primal functional is a fixed point for alpha > 1 as
    # well; polish one from rho_B to expose the minimizer.
    primal_value, sigma, primal_iters, primal_conv = _fp_solve(inst, a)
    agree = abs(primal_value - value) <= 1e-9 * max(1.0, abs(value))
    converged = dual_conv and primal_conv and agree
    return MIResult(value, sigma, dual_iters + primal_iters, converged, SolveMethod.DUALITY_FIXED_POINT)


def _limit_on_grid(inst, endpoint: float, dual: HypothesisInstance | None = None) -> MIResult:
    """Evaluate along a shrinking grid and extrapolate to the endpoint.

    A quadratic fit through the last three points removes the leading two
    orders of the gap; exact for alpha-independent families.
    """
    if math.isinf(endpoint):
        alphas, gap = [16.0, 32.0, 64.0, 128.0], lambda x: 1.0 / x
    else:
        alphas, gap = [0.5 + 0.125 * 4.0**-k for k in range(4)], lambda x: x - 0.5
    values = []
    converged = True
    iters = 0
    for a in alphas:
        if a > 1.0:
            if dual is None:
                dual = dual_instance(inst)
            beta = a / (2.0 * a - 1.0)
            value, _, its, conv = _fp_solve(dual, beta)
            value = -value
        else:
            value, _, its, conv = _fp_solve(inst, a)
        values.append(value)
        converged = converged and conv
        iters += its
    xs = np.array([gap(a) for a in alphas[-3:]])
    vs = np.array(values[-3:])
    value = float(np.polyfit(xs, vs, 2)[-1])
    return MIResult(value, None, iters, converged, SolveMethod.FIXED_POINT)


def dual_mi(inst: HypothesisInstance, alpha) -> float:
    """Evaluate I~_alpha through the purification duality; a mutual oracle
    for :func:`sandwiched_mi` (contract: agreement within 1e-7)."""
    a = as_alpha(alpha).value
    if a < 0.5:
        raise ValueError(f"duality needs alpha >= 1/2, got {a}")
    if a == 1.0:
        dual = dual_instance(inst)
        return -sandwiched_mi(dual, 1.0).value
    beta = a / (2.0 * a - 1.0)
    return -sandwiched_mi(dual_instance(inst), beta).value


# ---------------------------------------------------------------------------
# specializations
# ---------------------------------------------------------------------------

class SpecializeKind(Enum):
    MUTUAL_INFO = "mutual-info"
    CONDITIONAL_UP = "conditional-up"


def specialize(inst_kind, rho: BipartiteState, alpha, kind) -> float:
    """Mutual information (tau = rho_A) or up-arrow conditional entropy (tau = 1_A)."""
    inst_kind = SpecializeKind(inst_kind)
    kind = DivergenceKind(kind)
    if inst_kind is SpecializeKind.MUTUAL_INFO:
        inst = HypothesisInstance(rho, rho.marginal_a().op)
        sign = 1.0
    else:
        inst = HypothesisInstance(rho, identity(rho.dimA))
        sign = -1.0
    if kind is DivergenceKind.PETZ:
        return sign * petz_mi(inst, alpha)
    return sign * sandwiched_mi(inst, alpha).value


# ---------------------------------------------------------------------------
# direct minimization oracle
# ---------------------------------------------------------------------------

def direct_minimization(
    inst: HypothesisInstance,
    alpha,
    kind,
    bloch_points: int = 10_000,
    restarts: int = 20,
    seed: int = 0,
) -> MIResult:
    """Brute minimization of the divergence over sigma_B.

    For a qubit B side this scans a deterministic Bloch-ball grid and
    polishes the best candidates with Nelder-Mead; otherwise it runs a
    projected gradient descent over Cholesky-like factors from ``restarts``
    seeded starting points.
    """
    kind = DivergenceKind(kind)
    a = as_alpha(alpha).value
    if inst.dimB == 2:
        return _direct_bloch(inst, a, kind, bloch_points)
    return _direct_cholesky(inst, a, kind, restarts, seed)


def _bloch_matrix(r) -> np.ndarray:
    rx, ry, rz = r
    return 0.5 * np.array(
        [[1.0 + rz, rx - 1j * ry], [rx + 1j * ry, 1.0 - rz]], dtype=complex
    )


def _bloch_grid(points: int) -> np.ndarray:
    """Deterministic Bloch-ball grid: golden-spiral directions times radial shells."""
    n_dir = max(int(round((points / 8) ** (2.0 / 3.0) * 4)), 16)
    n_rad = max(points // n_dir, 2)
    k = np.arange(n_dir)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    z = 1.0 - 2.0 * (k + 0.5) / n_dir
    s = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    dirs = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    radii = ((np.arange(n_rad) + 0.5) / n_rad) ** (1.0 / 3.0) * (1.0 - 1e-9)
    grid = (dirs[None, :, :] * radii[:, None, None]).reshape(-1, 3)
    return np.vstack([np.zeros((1, 3)), grid])


def _batched_sigma_power(rs: np.ndarray, p: float) -> np.ndarray:
    """(N,2,2) array of sigma(r)^p for Bloch vectors rs, support-safe."""
    norms = np.linalg.norm(rs, axis=1)
    norms = np.minimum(norms, 1.0 - 1e-12)
    safe = np.where(norms > 0, norms, 1.0)
    units = rs / safe[:, None]
    units[norms == 0] = np.array([0.0, 0.0, 1.0])
    lam_p = ((1.0 + norms) / 2.0) ** p
    lam_m = ((1.0 - norms) / 2.0) ** p
    half_sum = (lam_p + lam_m) / 2.0
    half_diff = (lam_p - lam_m) / 2.0
    out = np.zeros((rs.shape[0], 2, 2), dtype=complex)
    out[:, 0, 0] = half_sum + half_diff * units[:, 2]
    out[:, 1, 1] = half_sum - half_diff * units[:, 2]
    out[:, 0, 1] = half_diff * (units[:, 0] - 1j * units[:, 1])
    out[:, 1, 0] = half_diff * (units[:, 0] + 1j * units[:, 1])
    return out


def _direct_bloch(inst, a, kind, points):
    if kind is DivergenceKind.PETZ and 0 < a != 1:
        ra = mat_power(inst.rho.state.op, a)
        t_pow = tensor(mat_power(inst.tau, 1.0 - a), identity(2))
        m_b = partial_trace(HermitianOperator(t_pow.mat @ ra.mat), [inst.dimA, 2], {1}).mat

        def batch(rs):
            s_pow = _batched_sigma_power(rs, 1.0 - a)
            q = np.einsum("ij,nji->n", m_b, s_pow).real
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.log(q) / (a - 1.0)
            vals[~np.isfinite(q) | (q <= 0)] = math.inf
            return vals

    elif kind is DivergenceKind.SANDWICHED and 0 < a != 1:
        g2 = (1.0 - a) / (2.0 * a)
        t_half = mat_power(inst.tau, g2).mat
        rho = inst.rho.mat

        def batch(rs):
            s_half = _batched_sigma_power(rs, g2)
            g = np.einsum("ij,nkl->nikjl", t_half, s_half).reshape(
                rs.shape[0], inst.dim_total, inst.dim_total
            )
            m = g @ rho @ g
            m = (m + np.conj(np.transpose(m, (0, 2, 1)))) / 2.0
            w = np.linalg.eigvalsh(m)
            w = np.maximum(w, 0.0)
            q = np.sum(np.power(w, a), axis=1)
            with np.errstate(divide="ignore"):
                vals = np.log(q) / (a - 1.0)
            vals[~np.isfinite(q) | (q <= 0)] = math.inf
            return vals

    else:

        def batch(rs):
            return np.array([_direct_objective(inst, a, kind, r) for r in rs])

    grid = _bloch_grid(points)
    vals = batch(grid)
    order = np.argsort(vals)
    best_val = math.inf
    best_r = grid[order[0]]
    evals = 0
    for idx in order[:3]:
        res = scipy.optimize.minimize(
            lambda r: _direct_objective(inst, a, kind, r),
            grid[idx],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 600},
        )
        evals += res.nfev
        if res.fun < best_val:
            best_val = float(res.fun)
            best_r = res.x
    sigma = DensityMatrix(_bloch_matrix(_clip_bloch(best_r)))
    return MIResult(best_val, sigma, evals, True, SolveMethod.DIRECT)


def _clip_bloch(r):
    norm = np.linalg.norm(r)
    if norm >= 1.0:
        return r * ((1.0 - 1e-12) / norm)
    return r


def _direct_objective(inst, a, kind, r):
    sigma = HermitianOperator(_bloch_matrix(_clip_bloch(np.asarray(r, dtype=float))))
    return divergence(kind, inst.rho.state, tensor(inst.tau, sigma), a)


def _direct_cholesky(inst, a, kind, restarts, seed):
    rng = np.random.default_rng(seed)
    m = inst.dimB

    def sigma_of(x):
        l = (x[: m * m] + 1j * x[m * m :]).reshape(m, m)
        s = l @ l.conj().T
        tr = np.trace(s).real
        if tr <= 0:
            return None
        return HermitianOperator(s / tr)

    def objective(x):
        sigma = sigma_of(x)
        if sigma is None:
            return math.inf
        return divergence(kind, inst.rho.state, tensor(inst.tau, sigma), a)

    best_val = math.inf
    best_sigma = None
    total_iters = 0
    for rs in range(restarts):
        if rs == 0:
            x = np.concatenate([np.eye(m).ravel(), np.zeros(m * m)])
        else:
            x = rng.standard_normal(2 * m * m)
        val = objective(x)
        step = 0.25
        for _ in range(400):
            total_iters += 1
            grad = _fd_gradient(objective, x, 1e-6)
            gnorm = np.linalg.norm(grad)
            if gnorm < 1e-10:
                break
            moved = False
            while step > 1e-12:
                trial = x - step * grad
                tval = objective(trial)
                if tval < val - 1e-12:
                    x, val, moved = trial, tval, True
                    step *= 1.5
                    break
                step /= 2.0
            if not moved:
                break
        if val < best_val:
            best_val = val
            best_sigma = sigma_of(x)
    minimizer = DensityMatrix(best_sigma) if best_sigma is not None else None
    return MIResult(best_val, minimizer, total_iters, True, SolveMethod.DIRECT)


def _fd_gradient(f, x, h):
    grad = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        grad[i] = (f(xp) - f(xm)) / (2 * h)
    return grad
