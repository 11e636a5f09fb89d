"""Renyi divergence families, relative entropy and variance, pinching.

Two quantum Renyi families are implemented on top of the spectral calculus
in :mod:`qrmi.operators`:

* the Petz family, ``(1/(a-1)) log tr[sigma^{(1-a)/2} rho^a sigma^{(1-a)/2}]``
* the sandwiched family,
  ``(1/(a-1)) log tr[(sigma^{(1-a)/2a} rho sigma^{(1-a)/2a})^a]``

All values are returned in nats.  Support violations yield ``+inf`` rather
than an exception, so optimizers can treat them as out-of-domain points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .operators import (
    DensityMatrix,
    HermitianOperator,
    as_operator,
    mat_log,
    mat_power,
    support_projector,
    weight_outside_support,
)

# Eigenvalues closer than this relative tolerance belong to one cluster, for
# both the pinching map and spectrum counting (the two must agree).
CLUSTER_TOL = 1e-9

# Evaluation point standing in for the sandwiched alpha -> 0 limit, which has
# no convenient closed form; all inequality checks are self-consistent at it.
SANDWICHED_ALPHA_FLOOR = 1e-5


class DivergenceKind(Enum):
    PETZ = "petz"
    SANDWICHED = "sandwiched"


@dataclass(frozen=True)
class AlphaParam:
    """Renyi order in [0, inf] with the series-crossover window around 1."""

    value: float
    limit_window: float = 1e-4

    def __post_init__(self):
        if not (self.value >= 0):
            raise ValueError(f"alpha must be >= 0, got {self.value}")


def as_alpha(a) -> AlphaParam:
    return a if isinstance(a, AlphaParam) else AlphaParam(float(a))


def _support_contained(rho, sigma) -> bool:
    return weight_outside_support(rho, sigma) <= 1e-10


def divergence(kind, rho, sigma, alpha) -> float:
    """Renyi divergence of ``rho`` from the positive operator ``sigma`` in nats.

    Near alpha = 1 the value crosses over to the series D + (alpha-1) V / 2,
    since the direct formula is catastrophically cancellative there.
    """
    kind = DivergenceKind(kind)
    alpha = as_alpha(alpha)
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    sigma = as_operator(sigma)
    a = alpha.value

    if math.isinf(a):
        if kind is DivergenceKind.PETZ:
            raise ValueError("the Petz family is not defined at alpha = infinity")
        return _sandwiched_max(rho, sigma)
    if abs(a - 1.0) < alpha.limit_window:
        d, v = rel_entropy_and_variance(rho, sigma)
        if math.isinf(d):
            return math.inf
        return d + (a - 1.0) * v / 2.0
    if a == 0.0:
        if kind is DivergenceKind.PETZ:
            q = float(np.trace(support_projector(rho).mat @ sigma.mat).real)
            return math.inf if q <= 0 else -math.log(q)
        a = SANDWICHED_ALPHA_FLOOR
    if a > 1.0 and not _support_contained(rho, sigma):
        return math.inf

    if kind is DivergenceKind.PETZ:
        ra = mat_power(rho.op, a)
        sb = mat_power(sigma, 1.0 - a)
        q = float(np.trace(ra.mat @ sb.mat).real)
    else:
        g = mat_power(sigma, (1.0 - a) / (2.0 * a))
        m = HermitianOperator(g.mat @ rho.mat @ g.mat)
        w = m.spectrum().eigenvalues
        live = w > 0
        q = float(np.sum(np.power(w[live], a)))
    if q <= 0 or not math.isfinite(q):
        return math.inf
    return math.log(q) / (a - 1.0)


def _sandwiched_max(rho: DensityMatrix, sigma: HermitianOperator) -> float:
    """Max-relative entropy: log lambda_max of sigma^{-1/2} rho sigma^{-1/2}."""
    if not _support_contained(rho, sigma):
        return math.inf
    s = mat_power(sigma, -0.5)
    m = HermitianOperator(s.mat @ rho.mat @ s.mat)
    top = m.max_eig()
    return math.inf if top <= 0 else math.log(top)


def rel_entropy_and_variance(rho, sigma) -> tuple[float, float]:
    """Relative entropy D and information variance V, both on the support.

    D = tr[rho (log rho - log sigma)] and V = tr[rho (log rho - log sigma - D)^2];
    a support violation returns (inf, nan).
    """
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    sigma = as_operator(sigma)
    if not _support_contained(rho, sigma):
        return math.inf, math.nan
    delta = mat_log(rho.op) - mat_log(sigma)
    d = float(np.trace(rho.mat @ delta.mat).real)
    second = float(np.trace(rho.mat @ delta.mat @ delta.mat).real)
    return d, max(second - d * d, 0.0)


# ---------------------------------------------------------------------------
# pinching
# ---------------------------------------------------------------------------

def eigenvalue_clusters(values: np.ndarray, tol: float | None = None) -> list[np.ndarray]:
    """Group indices of ``values`` into clusters separated by more than tol."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    if tol is None:
        tol = CLUSTER_TOL * float(np.max(np.abs(values), initial=0.0))
    order = np.argsort(values)
    clusters = [[order[0]]]
    for idx in order[1:]:
        if values[idx] - values[clusters[-1][-1]] > tol:
            clusters.append([idx])
        else:
            clusters[-1].append(idx)
    return [np.array(c, dtype=int) for c in clusters]


def pinch(sigma, rho) -> HermitianOperator:
    """Project ``rho`` onto the eigenvalue blocks of ``sigma``."""
    sigma = as_operator(sigma)
    rho = as_operator(rho)
    if sigma.dim != rho.dim:
        raise ValueError("operands must share a dimension")
    spec = sigma.spectrum()
    out = np.zeros_like(rho.mat)
    for cluster in eigenvalue_clusters(spec.eigenvalues):
        v = spec.eigenvectors[:, cluster]
        out += v @ (v.conj().T @ rho.mat @ v) @ v.conj().T
    return HermitianOperator(out)


def spectrum_count(sigma) -> int:
    """Number of distinct eigenvalues under the clustering tolerance."""
    sigma = as_operator(sigma)
    return len(eigenvalue_clusters(sigma.spectrum().eigenvalues))
