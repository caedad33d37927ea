"""Dense linear algebra for multipartite finite-dimensional quantum systems.

States, density operators and unitaries are thin immutable wrappers around
complex numpy arrays, each carrying the ordered list of local dimensions of
its tensor factors.  Everything here is a pure function: randomness enters
only through explicit seeds, and all values are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TOL_ALG",
    "CompositeDims",
    "StateVector",
    "DensityOperator",
    "UnitaryOperator",
    "SchmidtDecomposition",
    "tensor_product",
    "partial_trace",
    "hs_inner",
    "schmidt_decompose",
    "purify",
    "random_unitary",
    "random_density",
    "support_overlap",
    "basis_state",
    "pure_density",
    "apply_to_state",
    "apply_to_density",
    "embed_unitary",
    "to_wire",
    "state_from_wire",
    "operator_from_wire",
]

# Absolute tolerance for all algebraic identities (entrywise or scalar).
TOL_ALG = 1e-9


class CompositeDims(tuple):
    """Ordered local dimensions of the tensor factors, left to right."""

    def __new__(cls, dims) -> "CompositeDims":
        entries = tuple(int(d) for d in dims)
        if not entries:
            raise ValueError("need at least one tensor factor")
        if any(d < 1 for d in entries):
            raise ValueError(f"local dimensions must be >= 1, got {entries}")
        return super().__new__(cls, entries)

    @property
    def total(self) -> int:
        return math.prod(self)

    def check_index(self, k: int) -> int:
        if not 0 <= k < len(self):
            raise IndexError(f"subsystem index {k} out of range for {len(self)} factors")
        return k


def _as_dims(dims, size: int) -> CompositeDims:
    d = CompositeDims(dims if dims is not None else (size,))
    if d.total != size:
        raise ValueError(f"dims {tuple(d)} have total {d.total}, expected {size}")
    return d


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state on a composite Hilbert space."""

    amplitudes: np.ndarray
    dims: CompositeDims = None

    def __post_init__(self):
        amps = _freeze(np.asarray(self.amplitudes).reshape(-1))
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", _as_dims(self.dims, amps.size))
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > TOL_ALG:
            raise ValueError(f"state vector norm {norm} is not 1 within {TOL_ALG}")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def with_dims(self, dims) -> "StateVector":
        """Same amplitudes, refactored into a different tensor grouping."""
        return StateVector(self.amplitudes, CompositeDims(dims))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive-semidefinite, unit-trace operator.

    Eigenvalues in (-TOL_ALG, 0) are numerical noise: they are clipped to
    zero and the operator renormalized.  Anything more negative, or a
    non-Hermitian / wrongly normalized matrix, is rejected.
    """

    matrix: np.ndarray
    dims: CompositeDims = None

    def __post_init__(self):
        mat = np.array(np.asarray(self.matrix), dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density operator must be square, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > TOL_ALG:
            raise ValueError("density operator is not Hermitian")
        evals = np.linalg.eigvalsh(mat)
        if evals[0] < -TOL_ALG:
            raise ValueError(f"density operator has negative eigenvalue {evals[0]}")
        if evals[0] < 0.0:
            # Clip roundoff-negative part and renormalize.
            w, v = np.linalg.eigh(mat)
            w = np.clip(w, 0.0, None)
            mat = (v * w) @ v.conj().T
            mat /= np.trace(mat).real
        tr = np.trace(mat)
        if abs(tr - 1.0) > TOL_ALG:
            raise ValueError(f"density operator trace {tr} is not 1 within {TOL_ALG}")
        object.__setattr__(self, "matrix", _freeze(mat))
        object.__setattr__(self, "dims", _as_dims(self.dims, mat.shape[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def with_dims(self, dims) -> "DensityOperator":
        return DensityOperator(self.matrix, CompositeDims(dims))


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    """Square complex matrix with U^dag U = 1."""

    matrix: np.ndarray
    dims: CompositeDims = None

    def __post_init__(self):
        mat = _freeze(np.asarray(self.matrix))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"unitary must be square, got shape {mat.shape}")
        dev = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if dev > TOL_ALG:
            raise ValueError(f"matrix is not unitary (deviation {dev})")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", _as_dims(self.dims, mat.shape[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "UnitaryOperator":
        return UnitaryOperator(self.matrix.conj().T, self.dims)

    def with_dims(self, dims) -> "UnitaryOperator":
        return UnitaryOperator(self.matrix, CompositeDims(dims))


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Schmidt data of a bipartite pure state: psi = sum_k s_k |L_k>|R_k>."""

    coefficients: np.ndarray
    left_basis: tuple
    right_basis: tuple
    left_dims: CompositeDims = field(default=None)
    right_dims: CompositeDims = field(default=None)

    def reconstruct(self) -> StateVector:
        dims = CompositeDims(tuple(self.left_dims) + tuple(self.right_dims))
        amps = np.zeros(dims.total, dtype=complex)
        for s, lv, rv in zip(self.coefficients, self.left_basis, self.right_basis):
            amps += s * np.kron(lv.amplitudes, rv.amplitudes)
        return StateVector(amps, dims)

    def rank(self, tol: float = TOL_ALG) -> int:
        return int(np.sum(np.asarray(self.coefficients) > tol))


# ---------------------------------------------------------------------------
# composition / reduction


def tensor_product(a, b):
    """Kronecker composition of two states or two operators of the same kind.

    The factor list of the result is the concatenation of the operand factor
    lists.
    """
    pair = (type(a), type(b))
    dims = CompositeDims(tuple(a.dims) + tuple(b.dims))
    if pair == (StateVector, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), dims)
    if pair == (DensityOperator, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), dims)
    if pair == (UnitaryOperator, UnitaryOperator):
        return UnitaryOperator(np.kron(a.matrix, b.matrix), dims)
    raise TypeError(f"cannot tensor {pair[0].__name__} with {pair[1].__name__}")


def _ptrace(mat: np.ndarray, dims, keep) -> np.ndarray:
    """Partial trace of a raw matrix, keeping `keep` in original order."""
    dims = tuple(dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    for k in keep:
        if not 0 <= k < n:
            raise IndexError(f"subsystem index {k} out of range for {n} factors")
    tens = mat.reshape(dims + dims)
    cur = list(dims)
    for idx in sorted((i for i in range(n) if i not in keep), reverse=True):
        tens = np.trace(tens, axis1=idx, axis2=idx + len(cur))
        cur.pop(idx)
    d = math.prod(cur)
    return tens.reshape(d, d)


def partial_trace(rho: DensityOperator, keep) -> DensityOperator:
    """Reduce a density operator onto the kept tensor factors.

    Kept factors retain their relative order from the original factor list.
    """
    keep = sorted(set(int(k) for k in keep))
    reduced = _ptrace(rho.matrix, rho.dims, keep)
    return DensityOperator(reduced, CompositeDims(rho.dims[k] for k in keep))


def hs_inner(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Hilbert-Schmidt inner product Tr(rho sigma) of two density operators."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    return float(np.einsum("ij,ji->", rho.matrix, sigma.matrix).real)


def support_overlap(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Tr(rho sigma); zero within tolerance iff the supports are orthogonal."""
    return hs_inner(rho, sigma)


# ---------------------------------------------------------------------------
# decomposition


def _first_nonzero(vec: np.ndarray, tol: float = 1e-12) -> int:
    nz = np.flatnonzero(np.abs(vec) > tol)
    return int(nz[0]) if nz.size else vec.size


def schmidt_decompose(psi: StateVector, cut: int) -> SchmidtDecomposition:
    """Schmidt decomposition across the bipartition after the first `cut` factors.

    Coefficients come out nonnegative and nonincreasing.  Each left vector is
    phase-fixed (first nonzero amplitude real positive) and ties between
    degenerate coefficients are ordered by the position of that amplitude, so
    the output is deterministic.
    """
    if not 1 <= cut < len(psi.dims):
        raise ValueError(f"cut {cut} does not split {len(psi.dims)} factors in two")
    left_dims = CompositeDims(psi.dims[:cut])
    right_dims = CompositeDims(psi.dims[cut:])
    mat = psi.amplitudes.reshape(left_dims.total, right_dims.total)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)

    # Phase convention: rotate each Schmidt pair so the left vector's first
    # nonzero amplitude is real positive.
    for k in range(s.size):
        i = _first_nonzero(u[:, k])
        if i < u.shape[0]:
            phase = u[i, k] / abs(u[i, k])
            u[:, k] = u[:, k] / phase
            vh[k, :] = vh[k, :] * phase

    order = sorted(
        range(s.size),
        key=lambda k: (-round(float(s[k]), 10), _first_nonzero(u[:, k])),
    )
    s = s[order]
    u = u[:, order]
    vh = vh[order, :]

    left = tuple(StateVector(u[:, k], left_dims) for k in range(s.size))
    right = tuple(StateVector(vh[k, :], right_dims) for k in range(s.size))
    return SchmidtDecomposition(_freeze(s).real, left, right, left_dims, right_dims)


def purify(rho: DensityOperator) -> StateVector:
    """Pure state on d x d whose first-factor reduction equals `rho`.

    Canonical form: psi = sum_k sqrt(w_k) |e_k>|e_k> built from the
    eigendecomposition of rho, eigenvalues in nonincreasing order and each
    eigenvector phase-fixed.
    """
    w, v = np.linalg.eigh(rho.matrix)
    w = np.clip(w[::-1], 0.0, None)
    v = v[:, ::-1].copy()
    for k in range(v.shape[1]):
        i = _first_nonzero(v[:, k])
        if i < v.shape[0]:
            v[:, k] /= v[i, k] / abs(v[i, k])
    d = rho.dim
    amps = np.zeros(d * d, dtype=complex)
    for k in range(d):
        if w[k] > 0.0:
            amps += math.sqrt(w[k]) * np.kron(v[:, k], v[:, k])
    amps /= np.linalg.norm(amps)
    return StateVector(amps, CompositeDims((d, d)))


# ---------------------------------------------------------------------------
# sampling


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(dim: int, seed) -> UnitaryOperator:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    standard phase correction from the sign of R's diagonal."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = _rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return UnitaryOperator(q, CompositeDims((dim,)))


def random_density(dim: int, rank: int, seed) -> DensityOperator:
    """Random density operator of exact rank: G G^dag / Tr(G G^dag) for a
    dim x rank complex Ginibre G."""
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    rng = _rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    w = g @ g.conj().T
    return DensityOperator(w / np.trace(w).real, CompositeDims((dim,)))


# ---------------------------------------------------------------------------
# convenience constructors and evolution helpers


def basis_state(dims, index: int) -> StateVector:
    """Computational basis state |index> on the given factor list."""
    dims = CompositeDims(dims)
    amps = np.zeros(dims.total, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, dims)


def pure_density(psi: StateVector) -> DensityOperator:
    return DensityOperator(np.outer(psi.amplitudes, psi.amplitudes.conj()), psi.dims)


def _embed_perm(dims, targets) -> np.ndarray:
    """Basis relabeling indices for moving `targets` to the front."""
    dims = tuple(dims)
    targets = tuple(targets)
    rest = tuple(i for i in range(len(dims)) if i not in targets)
    order = targets + rest
    return np.transpose(np.arange(math.prod(dims)).reshape(dims), order).reshape(-1)


def embed_unitary(u: np.ndarray, dims, targets) -> np.ndarray:
    """Extend a unitary acting on the `targets` factors by identity elsewhere.

    `u` must act on the targets in the order given; the result acts on the
    full space with the original factor ordering.
    """
    dims = tuple(dims)
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate target factors")
    d_t = math.prod(dims[t] for t in targets)
    if u.shape != (d_t, d_t):
        raise ValueError(f"unitary shape {u.shape} does not match targets {targets}")
    d_rest = math.prod(dims) // d_t
    full = np.kron(u, np.eye(d_rest))
    perm = _embed_perm(dims, targets)
    out = np.empty_like(full)
    out[np.ix_(perm, perm)] = full
    return out


def apply_to_state(psi: StateVector, u: UnitaryOperator, targets=None) -> StateVector:
    mat = u.matrix if targets is None else embed_unitary(u.matrix, psi.dims, targets)
    return StateVector(mat @ psi.amplitudes, psi.dims)


def apply_to_density(rho: DensityOperator, u: UnitaryOperator, targets=None) -> DensityOperator:
    mat = u.matrix if targets is None else embed_unitary(u.matrix, rho.dims, targets)
    return DensityOperator(mat @ rho.matrix @ mat.conj().T, rho.dims)


# ---------------------------------------------------------------------------
# wire format: row-major [re, im] pairs plus the factor list


def to_wire(obj) -> dict:
    """JSON-ready form of a state or operator."""
    if isinstance(obj, StateVector):
        data = obj.amplitudes
    elif isinstance(obj, (DensityOperator, UnitaryOperator)):
        data = obj.matrix.reshape(-1)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return {
        "dims": [int(d) for d in obj.dims],
        "data": [[float(z.real), float(z.imag)] for z in data],
    }


def _wire_array(payload: dict) -> tuple[np.ndarray, CompositeDims]:
    dims = CompositeDims(payload["dims"])
    flat = np.array([complex(re, im) for re, im in payload["data"]])
    return flat, dims


def state_from_wire(payload: dict) -> StateVector:
    flat, dims = _wire_array(payload)
    return StateVector(flat, dims)


def operator_from_wire(payload: dict) -> DensityOperator:
    flat, dims = _wire_array(payload)
    d = dims.total
    return DensityOperator(flat.reshape(d, d), dims)
