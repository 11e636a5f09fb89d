"""Builtin test instances and seeded random generators.

Builtins use exact rational entries so golden values never depend on file
round-trips: ``bell``, ``correlated-bits``, ``product``, and ``werner:p``.
"""

from __future__ import annotations

import numpy as np

from .mutual_info import HypothesisInstance
from .operators import BipartiteState, DensityMatrix, HermitianOperator, identity


def bell_state() -> BipartiteState:
    """The maximally entangled two-qubit state (|00> + |11>)/sqrt(2)."""
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
    return BipartiteState(DensityMatrix(np.outer(psi, psi)), 2, 2)


def correlated_bits() -> BipartiteState:
    """Perfectly correlated classical bits: P(00) = P(11) = 1/2."""
    return BipartiteState(DensityMatrix(np.diag([0.5, 0.0, 0.0, 0.5])), 2, 2)


def product_state() -> BipartiteState:
    """A fixed mixed product state diag(3/5, 2/5) (x) diag(7/10, 3/10)."""
    rho = np.kron(np.diag([0.6, 0.4]), np.diag([0.7, 0.3]))
    return BipartiteState(DensityMatrix(rho), 2, 2)


def werner_state(p: float) -> BipartiteState:
    """p |Psi-><Psi-| + (1-p) 1/4 on two qubits."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"werner parameter must lie in [0,1], got {p}")
    psi = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    rho = p * np.outer(psi, psi) + (1.0 - p) * np.eye(4) / 4.0
    return BipartiteState(DensityMatrix(rho), 2, 2)


BUILTIN_STATES = {
    "bell": bell_state,
    "correlated-bits": correlated_bits,
    "product": product_state,
}


def builtin_state(name: str) -> BipartiteState:
    if name in BUILTIN_STATES:
        return BUILTIN_STATES[name]()
    if name.startswith("werner:"):
        return werner_state(float(name.split(":", 1)[1]))
    raise KeyError(f"unknown builtin state {name!r}")


def resolve_tau(spec: str, rho: BipartiteState) -> HermitianOperator:
    """Map a tau selector to an operator on A: marginal, uniform, or identity."""
    if spec == "marginal":
        return rho.marginal_a().op
    if spec == "uniform":
        return identity(rho.dimA) * (1.0 / rho.dimA)
    if spec == "identity":
        return identity(rho.dimA)
    raise KeyError(f"unknown tau selector {spec!r}")


def builtin_instance(name: str, tau: str = "marginal") -> HypothesisInstance:
    rho = builtin_state(name)
    return HypothesisInstance(rho, resolve_tau(tau, rho))


# ---------------------------------------------------------------------------
# seeded randomness
# ---------------------------------------------------------------------------

def random_density(rng, dim: int, rank: int | None = None) -> DensityMatrix:
    """Ginibre-induced random state of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_unitary(rng, dim: int) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_instance(rng, dimA: int = 2, dimB: int = 2, tau: str = "marginal") -> HypothesisInstance:
    rho = BipartiteState(random_density(rng, dimA * dimB), dimA, dimB)
    if tau == "random":
        return HypothesisInstance(rho, random_density(rng, dimA).op)
    return HypothesisInstance(rho, resolve_tau(tau, rho))


def random_classical_instance(rng, dimA: int = 2, dimB: int = 2) -> HypothesisInstance:
    """Diagonal joint distribution with tau the A marginal."""
    p = rng.random(dimA * dimB) + 0.05
    p /= p.sum()
    rho = BipartiteState(DensityMatrix(np.diag(p)), dimA, dimB)
    return HypothesisInstance(rho, rho.marginal_a().op)
