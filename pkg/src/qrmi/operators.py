"""Dense Hermitian operator algebra: construction, spectral calculus, composition.

All values are plain ``numpy`` matrices wrapped in thin validated containers.
Operators are hermitized on ingestion and immutable afterwards, so they are
safe to share between concurrent workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

# Relative eigenvalue threshold that defines kernels everywhere (support
# projections, inverses, logarithms).
SUPPORT_CUTOFF = 1e-12

# Eigenvalues of L - K in [-TIE_TOL, 0) still count as >= 0 in {L >= K}.
TIE_TOL = 1e-12

TRACE_TOL = 1e-10
PSD_TOL = 1e-10

MAX_SYMMETRIZE_COPIES = 8


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class HermitianOperator:
    """A dense complex square matrix, hermitized on construction.

    The input is replaced by (M + M^dag)/2 and the Frobenius norm of the
    discarded anti-Hermitian part is recorded in ``correction`` so that
    round-trip noise can be monitored without failing validation.
    """

    __slots__ = ("mat", "dim", "correction", "_spec")

    def __init__(self, entries):
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        h = (m + m.conj().T) / 2
        h.setflags(write=False)
        object.__setattr__(self, "mat", h)
        object.__setattr__(self, "dim", h.shape[0])
        object.__setattr__(self, "correction", float(np.linalg.norm(m - h)))
        object.__setattr__(self, "_spec", None)

    def __setattr__(self, name, value):
        if name == "_spec" and object.__getattribute__(self, "_spec") is None:
            object.__setattr__(self, name, value)
            return
        raise AttributeError("HermitianOperator is immutable")

    def spectrum(self) -> Spectrum:
        """Eigendecomposition, cached; eigenvalues descending."""
        if self._spec is None:
            w, v = np.linalg.eigh(self.mat)
            self._spec = Spectrum(w[::-1].copy(), v[:, ::-1].copy())
        return self._spec

    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def norm(self) -> float:
        return float(np.linalg.norm(self.mat))

    def min_eig(self) -> float:
        return float(self.spectrum().eigenvalues[-1])

    def max_eig(self) -> float:
        return float(self.spectrum().eigenvalues[0])

    def __add__(self, other):
        return HermitianOperator(self.mat + _as_matrix(other))

    def __sub__(self, other):
        return HermitianOperator(self.mat - _as_matrix(other))

    def __mul__(self, scalar):
        if isinstance(scalar, complex) and scalar.imag != 0:
            raise TypeError("only real scalars preserve Hermiticity")
        return HermitianOperator(self.mat * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, HermitianOperator):
        return x.mat
    if isinstance(x, DensityMatrix):
        return x.mat
    return np.asarray(x, dtype=complex)


def as_operator(x) -> HermitianOperator:
    if isinstance(x, HermitianOperator):
        return x
    if isinstance(x, DensityMatrix):
        return x.op
    return HermitianOperator(x)


class DensityMatrix:
    """A Hermitian operator with unit trace and nonnegative spectrum."""

    __slots__ = ("op",)

    def __init__(self, entries):
        op = as_operator(entries)
        if abs(op.trace() - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {op.trace():.12g} is not 1 within {TRACE_TOL}")
        if op.min_eig() < -PSD_TOL:
            raise ValueError(f"smallest eigenvalue {op.min_eig():.3g} below -{PSD_TOL}")
        object.__setattr__(self, "op", op)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim

    def spectrum(self) -> Spectrum:
        return self.op.spectrum()

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


class BipartiteState:
    """A density matrix on A x B together with the factor dimensions.

    Composite indices are A-major: basis index i = i_A * dimB + i_B.
    """

    __slots__ = ("state", "dimA", "dimB")

    def __init__(self, state, dimA: int, dimB: int):
        if not isinstance(state, DensityMatrix):
            state = DensityMatrix(state)
        if dimA < 1 or dimB < 1 or dimA * dimB != state.dim:
            raise ValueError(f"factor dims ({dimA},{dimB}) do not match dim {state.dim}")
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "dimA", int(dimA))
        object.__setattr__(self, "dimB", int(dimB))

    def __setattr__(self, name, value):
        raise AttributeError("BipartiteState is immutable")

    @property
    def mat(self) -> np.ndarray:
        return self.state.mat

    @property
    def dim(self) -> int:
        return self.state.dim

    def marginal_a(self) -> DensityMatrix:
        return DensityMatrix(partial_trace(self.state.op, [self.dimA, self.dimB], {0}))

    def marginal_b(self) -> DensityMatrix:
        return DensityMatrix(partial_trace(self.state.op, [self.dimA, self.dimB], {1}))

    def __repr__(self):
        return f"BipartiteState(dimA={self.dimA}, dimB={self.dimB})"


# ---------------------------------------------------------------------------
# composition and partial traces
# ---------------------------------------------------------------------------

def tensor(a, b) -> HermitianOperator:
    """Kronecker product with factor A indexed first."""
    return HermitianOperator(np.kron(_as_matrix(a), _as_matrix(b)))


def identity(dim: int) -> HermitianOperator:
    return HermitianOperator(np.eye(dim))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim) / dim)


def partial_trace(m, dims, keep) -> HermitianOperator:
    """Trace out all factors not in ``keep``; result keeps the A-major order."""
    mat = _as_matrix(m)
    dims = [int(d) for d in dims]
    if isinstance(keep, int):
        keep = {keep}
    keep = sorted(set(int(i) for i in keep))
    k = len(dims)
    if int(np.prod(dims)) != mat.shape[0]:
        raise ValueError(f"product of dims {dims} does not match dim {mat.shape[0]}")
    if any(i < 0 or i >= k for i in keep):
        raise ValueError(f"keep indices {keep} out of range for {k} factors")
    t = mat.reshape(dims + dims)
    idx_row = list(range(k))
    idx_col = [k + i if i in keep else i for i in range(k)]
    out = np.einsum(t, idx_row + idx_col)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return HermitianOperator(np.asarray(out).reshape(d_keep, d_keep))


def permute_factors(m, dims, order) -> HermitianOperator:
    """Reorder tensor factors of an operator.

    ``order[k]`` names the old factor that moves to slot k; the result acts on
    the same space with dims ``[dims[i] for i in order]``.
    """
    mat = _as_matrix(m)
    dims = [int(d) for d in dims]
    k = len(dims)
    if sorted(order) != list(range(k)):
        raise ValueError(f"order {order} is not a permutation of {k} factors")
    t = mat.reshape(dims + dims)
    axes = list(order) + [k + i for i in order]
    dim = int(np.prod(dims))
    return HermitianOperator(t.transpose(axes).reshape(dim, dim))


# ---------------------------------------------------------------------------
# spectral calculus
# ---------------------------------------------------------------------------

def mat_func(h, f, support_only: bool = False) -> HermitianOperator:
    """Apply a scalar map to the eigenvalues of ``h``.

    With ``support_only``, eigenvalues at or below the relative support
    cutoff map to zero without invoking ``f``; genuinely negative
    eigenvalues above the cutoff raise, since support-restricted maps
    (log, fractional or negative powers) require positivity.
    """
    h = as_operator(h)
    spec = h.spectrum()
    w = spec.eigenvalues
    out = np.zeros_like(w)
    if support_only:
        scale = max(float(w[0]), 1.0)
        if w[-1] < -PSD_TOL * scale:
            raise ValueError(
                f"negative eigenvalue {w[-1]:.3g} above support cutoff in matrix function"
            )
        cutoff = SUPPORT_CUTOFF * max(float(w[0]), 0.0)
        live = w > cutoff
        if np.any(live):
            out[live] = _apply_scalar_map(f, w[live])
    else:
        out = _apply_scalar_map(f, w)
    v = spec.eigenvectors
    return HermitianOperator((v * out) @ v.conj().T)


def _apply_scalar_map(f, w):
    try:
        vals = np.asarray(f(w), dtype=float)
        if vals.shape == w.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(f(x)) for x in w])


def mat_power(h, p: float, support_only: bool | None = None) -> HermitianOperator:
    """h**p on the eigenbasis.

    Negative powers restrict to the support (kernel maps to zero); positive
    fractional powers only clip negative round-off eigenvalues at zero, so
    tiny genuine eigenvalues pass through faithfully.
    """
    if support_only is None:
        support_only = p < 0
    if support_only:
        return mat_func(h, lambda x: np.power(x, p), support_only=True)
    if p == int(p) and p >= 0:
        return mat_func(h, lambda x: np.power(x, p))
    h = as_operator(h)
    spec = h.spectrum()
    w = spec.eigenvalues
    if w[-1] < -PSD_TOL * max(float(w[0]), 1.0):
        raise ValueError(
            f"negative eigenvalue {w[-1]:.3g} in fractional matrix power"
        )
    out = np.power(np.maximum(w, 0.0), p)
    v = spec.eigenvectors
    return HermitianOperator((v * out) @ v.conj().T)


def mat_log(h) -> HermitianOperator:
    """log(h) on the support of h; kernel eigenvalues map to zero."""
    return mat_func(h, np.log, support_only=True)


def support_projector(h) -> HermitianOperator:
    h = as_operator(h)
    spec = h.spectrum()
    cutoff = SUPPORT_CUTOFF * max(float(spec.eigenvalues[0]), 0.0)
    sel = spec.eigenvalues > cutoff
    v = spec.eigenvectors[:, sel]
    return HermitianOperator(v @ v.conj().T)


def weight_outside_support(rho, sigma) -> float:
    """tr[(1 - Pi_sigma) rho] for rho, sigma >= 0."""
    r = as_operator(rho)
    s = as_operator(sigma)
    spec = s.spectrum()
    cutoff = SUPPORT_CUTOFF * max(float(spec.eigenvalues[0]), 0.0)
    kern = spec.eigenvectors[:, spec.eigenvalues <= cutoff]
    if kern.shape[1] == 0:
        return 0.0
    return float(np.einsum("ij,jk,ki->", kern.conj().T, r.mat, kern).real)


def threshold_projector(l, k) -> HermitianOperator:
    """Projector onto the nonnegative eigenspace of L - K.

    Eigenvalues in [-1e-12, 0) count as nonnegative, matching the non-strict
    comparison {L >= K}.
    """
    l = as_operator(l)
    k = as_operator(k)
    if l.dim != k.dim:
        raise ValueError("operands must share a dimension")
    spec = (l - k).spectrum()
    sel = spec.eigenvalues >= -TIE_TOL
    v = spec.eigenvectors[:, sel]
    return HermitianOperator(v @ v.conj().T)


def trace_distance(a, b) -> float:
    diff = as_operator(a) - as_operator(b)
    return 0.5 * float(np.sum(np.abs(diff.spectrum().eigenvalues)))


# ---------------------------------------------------------------------------
# purification
# ---------------------------------------------------------------------------

def purify(rho) -> np.ndarray:
    """Purifying vector sum_i sqrt(lam_i) |e_i> |i>_C over the support.

    Eigenpairs are taken in descending order, so dim C equals the rank.
    Accepts a DensityMatrix or a BipartiteState (purifies the joint state).
    """
    if isinstance(rho, BipartiteState):
        rho = rho.state
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    spec = rho.spectrum()
    cutoff = SUPPORT_CUTOFF * max(float(spec.eigenvalues[0]), 0.0)
    sel = spec.eigenvalues > cutoff
    lam = spec.eigenvalues[sel]
    vecs = spec.eigenvectors[:, sel]
    rank = int(lam.size)
    psi = np.zeros(rho.dim * rank, dtype=complex)
    for i in range(rank):
        psi += math.sqrt(float(lam[i])) * np.kron(vecs[:, i], _basis_vector(rank, i))
    return psi / np.linalg.norm(psi)


def _basis_vector(dim, i):
    e = np.zeros(dim, dtype=complex)
    e[i] = 1.0
    return e


# ---------------------------------------------------------------------------
# permutation action and symmetrization
# ---------------------------------------------------------------------------

def permutation_image(perm, d: int) -> np.ndarray:
    """Composite-index image of the subsystem permutation ``perm`` on (C^d)^n.

    ``image[c]`` is the basis index of U(pi)|c>, where digit j of the image
    equals digit perm^{-1}(j) of c.
    """
    n = len(perm)
    idx = np.arange(d**n)
    digits = np.stack(np.unravel_index(idx, (d,) * n), axis=1)
    inv = np.argsort(np.asarray(perm))
    return np.ravel_multi_index(tuple(digits[:, inv].T), (d,) * n)


def apply_permutation(m, perm, d: int) -> HermitianOperator:
    """U(pi) M U(pi)^dag via index gathering."""
    mat = _as_matrix(m)
    img = permutation_image(perm, d)
    inv = np.argsort(img)
    return HermitianOperator(mat[np.ix_(inv, inv)])


def symmetrize(m, d: int) -> HermitianOperator:
    """Average over all subsystem permutations of n copies of a dim-d factor."""
    m = as_operator(m)
    n = round(math.log(m.dim) / math.log(d))
    if d**n != m.dim:
        raise ValueError(f"dim {m.dim} is not a power of {d}")
    if n > MAX_SYMMETRIZE_COPIES:
        raise ValueError(f"refusing to enumerate {n}! permutations (n > {MAX_SYMMETRIZE_COPIES})")
    acc = np.zeros_like(m.mat)
    for perm in permutations(range(n)):
        img = permutation_image(perm, d)
        inv = np.argsort(img)
        acc += m.mat[np.ix_(inv, inv)]
    return HermitianOperator(acc / math.factorial(n))


# ---------------------------------------------------------------------------
# JSON matrix format: {"dim": n, "entries": [[[re, im], ...], ...]} row-major
# ---------------------------------------------------------------------------

def operator_to_json(op) -> str:
    mat = _as_matrix(op)
    entries = [[[float(z.real), float(z.imag)] for z in row] for row in mat]
    return json.dumps({"dim": mat.shape[0], "entries": entries})


def operator_from_json(text: str) -> HermitianOperator:
    data = json.loads(text)
    dim = int(data["dim"])
    entries = data["entries"]
    if len(entries) != dim or any(len(row) != dim for row in entries):
        raise ValueError("entries do not form a dim x dim matrix")
    mat = np.array([[complex(re, im) for re, im in row] for row in entries])
    return HermitianOperator(mat)


def load_operator(path) -> HermitianOperator:
    with open(path, "r", encoding="utf-8") as fh:
        return operator_from_json(fh.read())


def save_operator(op, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(operator_to_json(op))
