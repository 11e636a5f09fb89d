"""Composite hypothesis tests on n copies: error functionals and constructions.

Conventions: n-copy operators live in the blocked ordering A^n (x) B^n
(all A factors first), so the reference operator tau^{(x)n} (x) omega^n is a
plain Kronecker product.  The worst-case type-II error over arbitrary
sigma_{B^n} reduces exactly to the top eigenvalue of the partial trace
M = tr_{A^n}[(tau^{(x)n} (x) 1) Q], since the objective is linear in the
alternate state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import logsumexp

from .divergences import eigenvalue_clusters
from .mutual_info import HypothesisInstance, petz_mi
from .operators import (
    TIE_TOL,
    BipartiteState,
    DensityMatrix,
    HermitianOperator,
    as_operator,
    partial_trace,
    permute_factors,
    tensor,
    threshold_projector,
)
from .universal import sym_dim, universal_state

MAX_TOTAL_DIM = 4096


class BoundKind(Enum):
    EXACT = "Exact"
    LOWER_BOUND = "LowerBound"
    ACHIEVED_BY_TEST = "AchievedByTest"


@dataclass
class TestOperator:
    """Operator 0 <= Q <= 1 on n copies, blocked ordering A^n (x) B^n."""

    q: HermitianOperator
    n: int
    dims: tuple[int, int]

    def __post_init__(self):
        dA, dB = self.dims
        if self.q.dim != (dA * dB) ** self.n:
            raise ValueError(
                f"test dim {self.q.dim} does not match ({dA}*{dB})^{self.n}"
            )
        w = self.q.spectrum().eigenvalues
        if w[-1] < -1e-10 or w[0] > 1.0 + 1e-10:
            raise ValueError("test eigenvalues must lie in [0, 1] within 1e-10")


@dataclass
class PinchedPair:
    """Classical distributions (P_n, Q_n) on a shared eigenbasis index set.

    Labels are (eigenvalue-cluster id of the reference operator, index
    within the cluster); ``n`` is the copy count behind the pair.
    """

    labels: list[tuple[int, int]]
    p: np.ndarray
    q: np.ndarray
    n: int = 1

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if not (len(self.labels) == self.p.size == self.q.size):
            raise ValueError("labels, p, q must share one index set")
        if abs(self.p.sum() - 1.0) > 1e-10:
            raise ValueError(f"p sums to {self.p.sum():.12g}, not 1")


@dataclass
class TradeoffRecord:
    mu: float
    alpha1: float
    test: TestOperator | None
    bound_kind: BoundKind
    beta: float = math.nan


# ---------------------------------------------------------------------------
# n-copy plumbing
# ---------------------------------------------------------------------------

def kron_power(mat: np.ndarray, n: int) -> np.ndarray:
    out = mat
    for _ in range(n - 1):
        out = np.kron(out, mat)
    return out


def n_fold_blocked(op, dimA: int, dimB: int, n: int) -> HermitianOperator:
    """op^{(x)n} rearranged from per-copy interleaving to A^n (x) B^n."""
    mat = as_operator(op).mat
    if (dimA * dimB) ** n > MAX_TOTAL_DIM:
        raise ValueError(f"refusing {n}-copy operator beyond global dimension {MAX_TOTAL_DIM}")
    full = kron_power(mat, n)
    if n == 1:
        return HermitianOperator(full)
    dims = [dimA, dimB] * n
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return permute_factors(full, dims, order)


def _blocked_state(rho: BipartiteState, n: int) -> HermitianOperator:
    return n_fold_blocked(rho.state.op, rho.dimA, rho.dimB, n)


# ---------------------------------------------------------------------------
# error functionals
# ---------------------------------------------------------------------------

def type1_error(t: TestOperator, rho: BipartiteState) -> float:
    """tr[(1 - Q) rho^{(x)n}], clamped into [0, 1]."""
    dA, dB = t.dims
    if (dA, dB) != (rho.dimA, rho.dimB):
        raise ValueError(f"test dims {t.dims} do not match state ({rho.dimA},{rho.dimB})")
    rho_n = _blocked_state(rho, t.n)
    overlap = float(np.vdot(t.q.mat, rho_n.mat).real)
    return min(max(1.0 - overlap, 0.0), 1.0)


def type2_error_worst(t: TestOperator, tau) -> float:
    """Exact worst case over all sigma_{B^n}: top eigenvalue of
    tr_{A^n}[(tau^{(x)n} (x) 1) Q]."""
    tau = as_operator(tau)
    dA, dB = t.dims
    if tau.dim != dA:
        raise ValueError(f"tau dim {tau.dim} does not match dimA {dA}")
    d_an, d_bn = dA**t.n, dB**t.n
    tau_n = kron_power(tau.mat, t.n)
    q4 = t.q.mat.reshape(d_an, d_bn, d_an, d_bn)
    m = np.einsum("ac,cbad->bd", tau_n, q4)
    return HermitianOperator(m).max_eig()


def np_projector_test(l, k, mu: float, n: int = 1, dims=None) -> TestOperator:
    """The projector test {L >= e^mu K}; mu = -inf/+inf degenerate cases included."""
    l = as_operator(l)
    k = as_operator(k)
    if dims is None:
        dims = (1, l.dim)
    if mu == math.inf:
        return TestOperator(HermitianOperator(np.zeros((l.dim, l.dim))), n, tuple(dims))
    scale = 0.0 if mu == -math.inf else math.exp(mu)
    return TestOperator(threshold_projector(l, k * scale), n, tuple(dims))


# ---------------------------------------------------------------------------
# the proofs' test constructions
# ---------------------------------------------------------------------------

def hoeffding_threshold(g: int, n: int, R: float, s: float, i_s: float) -> float:
    """lambda_n = (log g + n (R - (1-s) I_s)) / s."""
    return (math.log(g) + n * (R - (1.0 - s) * i_s)) / s


def hoeffding_test(inst: HypothesisInstance, n: int, s: float, R: float):
    """Projector test {rho^{(x)n} >= e^{lambda_n} tau^{(x)n} (x) omega^n}.

    The returned test is guaranteed (and checked here) to satisfy
    type2_error_worst <= exp(-n R) + 1e-9.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0,1), got {s}")
    dA, dB = inst.dimA, inst.dimB
    g = sym_dim(n, max(dA, dB))
    i_s = petz_mi(inst, s)
    lam = hoeffding_threshold(g, n, R, s, i_s)
    rho_n = _blocked_state(inst.rho, n)
    omega = universal_state(n, dB).omega
    ref = HermitianOperator(np.kron(kron_power(inst.tau.mat, n), omega.mat))
    test = TestOperator(threshold_projector(rho_n, ref * math.exp(lam)), n, (dA, dB))
    beta = type2_error_worst(test, inst.tau)
    if beta > math.exp(-n * R) + 1e-9:
        raise RuntimeError(f"constructed test violates its beta bound: {beta:.3e}")
    return test, lam


def pinched_test_and_distributions(
    inst: HypothesisInstance, n: int, mu_n: float, build_test: bool = True
):
    """Pinched projector test and the classical pair it reduces to.

    The reference K = tau^{(x)n} (x) omega^n factorizes, so its eigenbasis is
    assembled from the tau- and omega-eigenbases and rho^{(x)n} is rotated
    into it; the pinched state is the cluster-wise block diagonal, whose
    per-cluster eigenvalues give P_n while K's cluster values give Q_n.
    """
    dA, dB = inst.dimA, inst.dimB
    d_an, d_bn = dA**n, dB**n
    dim = d_an * d_bn
    if dim > MAX_TOTAL_DIM:
        raise ValueError(f"refusing {n}-copy construction beyond dimension {MAX_TOTAL_DIM}")

    tau_spec = inst.tau.spectrum()
    t_vec = tau_spec.eigenvalues
    t_v = tau_spec.eigenvectors
    t_vec_n = t_vec
    for _ in range(n - 1):
        t_vec_n = np.kron(t_vec_n, t_vec)

    uni = universal_state(n, dB)
    o_spec = uni.omega.spectrum()
    k_vec = np.kron(t_vec_n, o_spec.eigenvalues)

    # Rotate the A factor per copy before taking powers, then the B^n factor.
    rot = np.kron(t_v.conj().T, np.eye(dB)) @ inst.rho.mat @ np.kron(t_v, np.eye(dB))
    rho_n = n_fold_blocked(HermitianOperator(rot), dA, dB, n).mat
    o_v = o_spec.eigenvectors
    x = (rho_n.reshape(dim * d_an, d_bn) @ o_v).reshape(dim, d_an, d_bn)
    rho_p = np.matmul(o_v.conj().T, x.reshape(d_an, d_bn, dim)).reshape(dim, dim)

    labels: list[tuple[int, int]] = []
    p_list: list[np.ndarray] = []
    q_list: list[np.ndarray] = []
    clusters = eigenvalue_clusters(k_vec)
    blocks = []
    for ci, idx in enumerate(clusters):
        block = rho_p[np.ix_(idx, idx)]
        w, vecs = np.linalg.eigh((block + block.conj().T) / 2.0)
        w, vecs = w[::-1], vecs[:, ::-1]
        blocks.append((idx, w, vecs))
        labels.extend((ci, j) for j in range(idx.size))
        p_list.append(np.maximum(w, 0.0))
        q_list.append(np.full(idx.size, float(np.mean(k_vec[idx]))))
    p = np.concatenate(p_list)
    q = np.concatenate(q_list)
    pair = PinchedPair(labels, p, q, n)

    test = None
    if build_test:
        emu = math.exp(mu_n) if mu_n != -math.inf else 0.0
        q_rot = np.zeros((dim, dim), dtype=complex)
        for (idx, w, vecs) in blocks:
            sel = (np.maximum(w, 0.0) - emu * float(np.mean(k_vec[idx]))) >= -TIE_TOL
            if np.any(sel):
                chosen = vecs[:, sel]
                q_rot[np.ix_(idx, idx)] = chosen @ chosen.conj().T
        # Back to the computational basis: undo the B^n then the A rotations.
        y = (q_rot.reshape(dim * d_an, d_bn) @ o_v.conj().T).reshape(dim, d_an, d_bn)
        q_mid = np.matmul(o_v, y.reshape(d_an, d_bn, dim)).reshape(dim, dim)
        t_v_n = kron_power(t_v, n)
        big = np.kron(t_v_n, np.eye(d_bn))
        q_full = big @ q_mid @ big.conj().T
        test = TestOperator(HermitianOperator(q_full), n, (dA, dB))
    return test, pair


def strong_converse_threshold(g: int, n: int, R: float, s: float, d_s: float) -> float:
    """mu_n = (log g + n R + (s-1) D_s(P_n || Q_n)) / s."""
    return (math.log(g) + n * R + (s - 1.0) * d_s) / s


def strong_converse_mu(inst: HypothesisInstance, n: int, s: float, R: float) -> float:
    """Threshold making the pinched test satisfy beta <= exp(-n R)."""
    if s <= 1.0:
        raise ValueError(f"s must exceed 1, got {s}")
    _, pair = pinched_test_and_distributions(inst, n, 0.0, build_test=False)
    d_s = classical_renyi(pair.p, pair.q, s)
    g = sym_dim(n, max(inst.dimA, inst.dimB))
    return strong_converse_threshold(g, n, R, s, d_s)


# ---------------------------------------------------------------------------
# classical machinery
# ---------------------------------------------------------------------------

def classical_renyi(p, q, s: float) -> float:
    """Classical Renyi divergence D_s(P || Q) in nats over a shared index set."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if s == 1.0:
        mask = p > 0
        if np.any(q[mask] <= 0):
            return math.inf
        return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))
    mask = p > 0
    if s > 1.0 and np.any(q[mask] <= 0):
        return math.inf
    both = mask & (q > 0)
    if not np.any(both):
        return math.inf
    terms = s * np.log(p[both]) + (1.0 - s) * np.log(q[both])
    return float(logsumexp(terms)) / (s - 1.0)


def classical_cumulant(pair: PinchedPair, t: float) -> float:
    """(1/n) log E_P[exp(t (log P - log Q))]; equals (t/n) D_{1+t}(P_n || Q_n)."""
    if t < -0.5:
        raise ValueError(f"t must be >= -1/2, got {t}")
    p, q = pair.p, pair.q
    mask = p > 0
    if t > 0 and np.any(q[mask] <= 0):
        return math.inf
    both = mask & (q > 0)
    terms = (1.0 + t) * np.log(p[both]) - t * np.log(q[both])
    return float(logsumexp(terms)) / pair.n


def classical_np_tradeoff(p, q, budget: float):
    """Exact randomized Neyman-Pearson water-filling for classical pairs.

    Outcomes are sorted by likelihood ratio p/q and included greedily; the
    boundary shell of equal ratios is included fractionally so that the
    attained type-II weight equals ``budget`` exactly (when budget is below
    the total q mass).  Returns (alpha1, attained_beta, inclusion) where
    ``inclusion`` is the per-outcome acceptance probability.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    keep = (p > 0) | (q > 0)
    idx = np.flatnonzero(keep)
    with np.errstate(divide="ignore"):
        log_ratio = np.where(
            q[idx] > 0,
            np.log(np.maximum(p[idx], 1e-300)) - np.log(q[idx]),
            math.inf,
        )
        log_ratio[p[idx] <= 0] = -math.inf
    order = idx[np.argsort(-log_ratio, kind="stable")]
    lr_sorted = np.sort(-log_ratio, kind="stable") * -1.0

    inclusion = np.zeros(p.size)
    cum_p = 0.0
    cum_q = 0.0
    i = 0
    m = order.size
    while i < m:
        j = i
        while j + 1 < m and _same_ratio(lr_sorted[j + 1], lr_sorted[i]):
            j += 1
        shell = order[i : j + 1]
        shell_p = float(p[shell].sum())
        shell_q = float(q[shell].sum())
        if cum_q + shell_q <= budget or shell_q <= 0.0:
            inclusion[shell] = 1.0
            cum_p += shell_p
            cum_q += shell_q
            i = j + 1
            continue
        theta = (budget - cum_q) / shell_q
        theta = min(max(theta, 0.0), 1.0)
        inclusion[shell] = theta
        cum_p += theta * shell_p
        cum_q += theta * shell_q
        break
    alpha1 = min(max(1.0 - cum_p, 0.0), 1.0)
    return alpha1, cum_q, inclusion


def _same_ratio(a: float, b: float) -> bool:
    if a == b:
        return True
    if math.isinf(a) or math.isinf(b):
        return False
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def type_class_distribution(base: np.ndarray, n: int) -> np.ndarray:
    """n-fold product of a finite distribution aggregated over type classes.

    Classes are indexed by the multiset of outcome counts, shared across all
    distributions on the same base alphabet (call once per distribution with
    identical alphabet size and n).
    """
    base = np.asarray(base, dtype=float)
    d = base.size
    log_base = np.where(base > 0, np.log(np.maximum(base, 1e-300)), -math.inf)
    out = []
    for combo in combinations_with_replacement(range(d), n):
        counts = np.bincount(combo, minlength=d)
        log_coeff = math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in counts)
        log_term = log_coeff + float(np.sum(np.where(counts > 0, counts * log_base, 0.0)))
        out.append(math.exp(log_term) if log_term > -745 else 0.0)
    return np.array(out)


# ---------------------------------------------------------------------------
# simple-hypothesis tradeoff
# ---------------------------------------------------------------------------

def _joint_eigensystem(rho: DensityMatrix, sigma: DensityMatrix):
    """Simultaneous eigenvalues and eigenvectors for commuting states."""
    spec = rho.spectrum()
    ps, qs, cols = [], [], []
    for idx in eigenvalue_clusters(spec.eigenvalues):
        vecs = spec.eigenvectors[:, idx]
        block = vecs.conj().T @ sigma.mat @ vecs
        w, w_vecs = np.linalg.eigh((block + block.conj().T) / 2.0)
        ps.extend([float(np.mean(spec.eigenvalues[idx]))] * idx.size)
        qs.extend(float(x) for x in w)
        cols.append(vecs @ w_vecs)
    return np.array(ps), np.array(qs), np.hstack(cols)


def _commutes(rho: DensityMatrix, sigma: DensityMatrix) -> bool:
    comm = rho.mat @ sigma.mat - sigma.mat @ rho.mat
    scale = max(np.linalg.norm(rho.mat) * np.linalg.norm(sigma.mat), 1e-300)
    return bool(np.linalg.norm(comm) <= 1e-12 * scale)


def simple_np_tradeoff(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    mu: float,
    n: int = 1,
    as_composite_bound: bool = False,
) -> TradeoffRecord:
    """Exact minimal type-I error of the simple test rho vs sigma at type-II
    budget e^mu, with a randomized boundary so the budget is attained exactly.

    Commuting pairs reduce to classical water-filling (with type-class
    aggregation for n > 1); general pairs are solved by bisection over the
    threshold family {rho - t sigma >= 0} with kernel-shell randomization.
    """
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    sigma = sigma if isinstance(sigma, DensityMatrix) else DensityMatrix(sigma)
    if rho.dim != sigma.dim:
        raise ValueError("states must share a dimension")
    budget = math.exp(mu) if mu != -math.inf else 0.0
    kind = BoundKind.LOWER_BOUND if as_composite_bound else BoundKind.EXACT

    if _commutes(rho, sigma):
        p1, q1, vecs = _joint_eigensystem(rho, sigma)
        if n > 1:
            p = type_class_distribution(p1, n)
            q = type_class_distribution(q1, n)
        else:
            p, q = p1, q1
        alpha1, attained, inclusion = classical_np_tradeoff(p, q, budget)
        test = None
        if n == 1:
            test = TestOperator(
                HermitianOperator((vecs * inclusion) @ vecs.conj().T), 1, (1, rho.dim)
            )
        return TradeoffRecord(mu, alpha1, test, kind, attained)

    if rho.dim**n > MAX_TOTAL_DIM:
        raise ValueError("n-copy dimension exceeds the global cap for dense solving")
    rho_n = HermitianOperator(kron_power(rho.mat, n))
    sigma_n = HermitianOperator(kron_power(sigma.mat, n))
    alpha1, attained, test_op = _np_bisection(rho_n, sigma_n, budget)
    test = TestOperator(test_op, n, (1, rho.dim)) if test_op is not None else None
    return TradeoffRecord(mu, alpha1, test, kind, attained)


def _np_bisection(rho: HermitianOperator, sigma: HermitianOperator, budget: float):
    def beta_of(t):
        proj = threshold_projector(rho, sigma * t)
        return float(np.vdot(proj.mat, sigma.mat).real), proj

    if budget >= 1.0:
        dim = rho.dim
        eye_test = HermitianOperator(np.eye(dim))
        return 0.0, 1.0, eye_test
    lo, hi = 0.0, 1.0
    while beta_of(hi)[0] > budget:
        hi *= 4.0
        if hi > 1e18:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if beta_of(mid)[0] > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    diff = rho - sigma * hi
    spec = diff.spectrum()
    scale = max(abs(spec.eigenvalues[0]), abs(spec.eigenvalues[-1]), 1.0)
    # The shell window must cover the tie-inclusion offset of the threshold
    # projector plus the bisection residual, else the boundary vector is lost.
    shell_tol = 1e-9 * scale
    strict = spec.eigenvalues > shell_tol
    shell = np.abs(spec.eigenvalues) <= shell_tol
    v_strict = spec.eigenvectors[:, strict]
    base_q = float(np.einsum("ij,jk,ki->", v_strict.conj().T, sigma.mat, v_strict).real)
    base_p = float(np.einsum("ij,jk,ki->", v_strict.conj().T, rho.mat, v_strict).real)
    q_weights = np.zeros(0)
    v_shell = spec.eigenvectors[:, shell]
    if v_shell.shape[1]:
        q_weights = np.einsum("ji,jk,ki->i", v_shell.conj(), sigma.mat, v_shell).real
    shell_q = float(q_weights.sum())
    theta = 0.0
    if shell_q > 0:
        theta = min(max((budget - base_q) / shell_q, 0.0), 1.0)
    p_shell = 0.0
    if v_shell.shape[1]:
        p_shell = float(np.einsum("ji,jk,ki->", v_shell.conj(), rho.mat, v_shell).real)
    alpha1 = min(max(1.0 - base_p - theta * p_shell, 0.0), 1.0)
    attained = base_q + theta * shell_q
    test_mat = v_strict @ v_strict.conj().T
    if v_shell.shape[1]:
        test_mat = test_mat + theta * (v_shell @ v_shell.conj().T)
    return alpha1, attained, HermitianOperator(test_mat)
