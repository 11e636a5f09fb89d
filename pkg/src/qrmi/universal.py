"""The universal permutation-invariant state on n copies of a dim-d system.

The state is the normalized A'-marginal of the symmetric-subspace projector
on (A (x) A')^n, which works out to a weighted sum of permutation unitaries:

    omega = (1 / (g n!)) sum_pi d^{#cycles(pi)} U(pi),
    g = binom(n + d^2 - 1, n).

Every permutation-invariant state tau on the same space obeys
tau <= g * omega, which is what the composite tests feed on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .divergences import spectrum_count
from .operators import (
    DensityMatrix,
    HermitianOperator,
    as_operator,
    partial_trace,
    permutation_image,
)

MAX_COPIES = 7
MAX_LOCAL_DIM = 3

PERM_INVARIANCE_TOL = 1e-8


@dataclass(frozen=True)
class UniversalState:
    n: int
    d: int
    omega: DensityMatrix
    g: int


def sym_dim(n: int, d: int) -> int:
    """Dimension g_{n,d} of the symmetric subspace of ((C^d (x) C^d))^n."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return math.comb(n + d * d - 1, n)


def _cycle_count(perm) -> int:
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles


def universal_state(n: int, d: int) -> UniversalState:
    """Construct omega on n copies of a dim-d system (n <= 7, d <= 3)."""
    if n > MAX_COPIES or d > MAX_LOCAL_DIM:
        raise ValueError(f"refusing construction beyond n={MAX_COPIES}, d={MAX_LOCAL_DIM}")
    g = sym_dim(n, d)
    dim = d**n
    acc = np.zeros((dim, dim), dtype=complex)
    rows = np.arange(dim)
    for perm in permutations(range(n)):
        weight = float(d ** _cycle_count(perm))
        img = permutation_image(perm, d)
        acc[img, rows] += weight
    omega = DensityMatrix(HermitianOperator(acc / (g * math.factorial(n))))
    return UniversalState(n, d, omega, g)


def symmetric_projector_marginal(n: int, d: int) -> HermitianOperator:
    """tr_{A'^n}[P_symm] / g from the explicit pair-space projector.

    Independent route to the same state, used to cross-check the
    permutation-sum construction (practical for n <= 3).
    """
    g = sym_dim(n, d)
    dim2 = (d * d) ** n
    proj = np.zeros((dim2, dim2), dtype=complex)
    rows = np.arange(dim2)
    for perm in permutations(range(n)):
        img = permutation_image(perm, d * d)
        proj[img, rows] += 1.0
    proj /= math.factorial(n)
    dims = [d, d] * n
    keep = set(range(0, 2 * n, 2))
    return partial_trace(HermitianOperator(proj), dims, keep) * (1.0 / g)


def is_permutation_invariant(m, d: int, tol: float = PERM_INVARIANCE_TOL) -> bool:
    """Invariance under adjacent transpositions, which generate the full group."""
    m = as_operator(m)
    n = round(math.log(m.dim) / math.log(d))
    if d**n != m.dim:
        raise ValueError(f"dim {m.dim} is not a power of {d}")
    scale = max(m.norm(), 1.0)
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        img = permutation_image(perm, d)
        inv = np.argsort(img)
        if np.max(np.abs(m.mat[np.ix_(inv, inv)] - m.mat)) > tol * scale:
            return False
    return True


def domination_gap(tau, u: UniversalState) -> float:
    """lambda_min(g * omega - tau); nonnegative up to 1e-9 for valid inputs."""
    tau = as_operator(tau)
    if tau.dim != u.omega.dim:
        raise ValueError("tau does not act on n copies of the universal state's system")
    if not is_permutation_invariant(tau, u.d):
        raise ValueError("tau must be permutation invariant within 1e-8")
    gap_op = float(u.g) * u.omega.op - tau
    return gap_op.min_eig()


def block_count(u: UniversalState) -> int:
    """Number of eigenvalue clusters of omega, bounded by (n+1)^(d-1)."""
    return spectrum_count(u.omega.op)
