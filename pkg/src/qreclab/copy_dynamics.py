"""Controlled information-transfer ("tagging") unitaries and copy chains.

A measured system carries a complete set of orthogonal record subspaces
{P_k}.  A copy step couples the system to one apparatus: states confined to
range(P_k) deposit the tag state |A_k> on the apparatus while the system
itself may rotate inside its subspace.  Chains repeat this over several
apparatuses, which is the mechanism behind repeatable records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    TOL_ALG,
    CompositeDims,
    DensityOperator,
    StateVector,
    UnitaryOperator,
    _rng,
    basis_state,
    embed_unitary,
    hs_inner,
    partial_trace,
    random_density,
    random_unitary,
    tensor_product,
)

__all__ = [
    "RecordDecomposition",
    "TagSpec",
    "CopyChain",
    "ChainResult",
    "build_controlled_copy",
    "run_copy_chain",
    "run_mixed_copy",
    "extract_record",
    "record_overlap",
    "controlled_apparatus_unitary",
    "random_decomposition",
    "random_disturbances",
    "random_tag_spec",
    "random_confined_density",
]


@dataclass(frozen=True, eq=False)
class RecordDecomposition:
    """Complete set of orthogonal record subspaces on the system.

    `projectors` are the orthogonal projectors P_k, `labels` the distinct real
    pointer-observable eigenvalues attached to them, and `branch_disturbance`
    optionally rotates each subspace from within (identity outside it).
    Incomplete sets (sum P_k < 1) are rejected: they would leave untagged
    sectors.
    """

    projectors: tuple
    labels: tuple
    branch_disturbance: tuple | None = None

    def __post_init__(self):
        projs = tuple(np.array(p, dtype=complex) for p in self.projectors)
        if not projs:
            raise ValueError("need at least one projector")
        d = projs[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for i, p in enumerate(projs):
            if p.shape != (d, d):
                raise ValueError("projectors must share one square shape")
            if np.max(np.abs(p - p.conj().T)) > TOL_ALG:
                raise ValueError(f"projector {i} is not Hermitian")
            if np.max(np.abs(p @ p - p)) > TOL_ALG:
                raise ValueError(f"projector {i} is not idempotent")
            total += p
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.max(np.abs(projs[i] @ projs[j])) > TOL_ALG:
                    raise ValueError(f"projectors {i} and {j} are not orthogonal")
        if np.max(np.abs(total - np.eye(d))) > TOL_ALG:
            raise ValueError("projectors do not sum to the identity")
        labels = tuple(float(x) for x in self.labels)
        if len(labels) != len(projs):
            raise ValueError("one label per projector required")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be distinct")
        dist = self.branch_disturbance
        if dist is not None:
            dist = tuple(np.array(u, dtype=complex) for u in dist)
            if len(dist) != len(projs):
                raise ValueError("one disturbance per projector required")
            eye = np.eye(d)
            for i, (u, p) in enumerate(zip(dist, projs)):
                if np.max(np.abs(u.conj().T @ u - eye)) > TOL_ALG:
                    raise ValueError(f"disturbance {i} is not unitary")
                if np.max(np.abs(u @ p - p @ u)) > TOL_ALG:
                    raise ValueError(f"disturbance {i} does not commute with its projector")
                if np.max(np.abs(u @ (eye - p) - (eye - p))) > TOL_ALG:
                    raise ValueError(f"disturbance {i} acts outside its subspace")
        for p in projs:
            p.setflags(write=False)
        object.__setattr__(self, "projectors", projs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "branch_disturbance", dist)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def size(self) -> int:
        return len(self.projectors)

    def observable(self) -> np.ndarray:
        """The measured observable sum_k label_k P_k."""
        return sum(o * p for o, p in zip(self.labels, self.projectors))

    def subspace_index(self, rho: np.ndarray, tol: float = TOL_ALG) -> int | None:
        """Index of the single subspace supporting `rho`, or None."""
        for k, p in enumerate(self.projectors):
            if np.trace(p @ rho).real > 1.0 - tol:
                return k
        return None


@dataclass(frozen=True, eq=False)
class TagSpec:
    """Apparatus ready state and the tag states deposited per record subspace.

    Tag states need not be mutually orthogonal; whether they can differ at
    all is exactly what the record-orthogonality checks probe.
    """

    ready_state: StateVector
    tag_states: tuple

    def __post_init__(self):
        tags = tuple(self.tag_states)
        if not tags:
            raise ValueError("need at least one tag state")
        for t in tags:
            if t.dim != self.ready_state.dim:
                raise ValueError("tag states must live on the apparatus space")
        object.__setattr__(self, "tag_states", tags)

    @property
    def dim(self) -> int:
        return self.ready_state.dim


@dataclass(frozen=True, eq=False)
class CopyChain:
    """Layout of a sequence of copy steps over several apparatuses."""

    system_dim: int
    apparatus_dims: tuple
    decomposition: RecordDecomposition
    tags: tuple
    environment_dim: int | None = None

    def __post_init__(self):
        app_dims = tuple(int(d) for d in self.apparatus_dims)
        tags = tuple(self.tags)
        if len(tags) != len(app_dims):
            raise ValueError("one TagSpec per apparatus required")
        if self.decomposition.dim != self.system_dim:
            raise ValueError("decomposition does not match the system dimension")
        for d, t in zip(app_dims, tags):
            if t.dim != d:
                raise ValueError("TagSpec dimension does not match its apparatus")
            if len(t.tag_states) != self.decomposition.size:
                raise ValueError("one tag state per record subspace required")
        object.__setattr__(self, "apparatus_dims", app_dims)
        object.__setattr__(self, "tags", tags)

    @property
    def composite_dims(self) -> CompositeDims:
        dims = (self.system_dim,) + self.apparatus_dims
        if self.environment_dim is not None:
            dims = dims + (self.environment_dim,)
        return CompositeDims(dims)

    @property
    def steps(self) -> int:
        return len(self.apparatus_dims)


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Composite states produced by a chain run, one snapshot per copy step.

    `chain` is None for runs with caller-supplied couplings; the factor
    layout (system first, then one factor per apparatus, environment last)
    holds either way.
    """

    chain: CopyChain | None
    initial: DensityOperator
    snapshots: tuple
    apparatus_count: int

    @property
    def final(self) -> DensityOperator:
        return self.snapshots[-1] if self.snapshots else self.initial

    def _composite(self, step: int) -> DensityOperator:
        return self.initial if step == 0 else self.snapshots[step - 1]

    def system_state(self, step: int) -> DensityOperator:
        """Reduced system state after the given 1-based step (0 = input)."""
        return partial_trace(self._composite(step), (0,))

    def record_state(self, step: int, k: int) -> DensityOperator:
        """Reduced state of apparatus k after the given 1-based step."""
        if not 0 <= k < self.apparatus_count:
            raise IndexError(
                f"apparatus index {k} out of range for {self.apparatus_count} apparatuses")
        return partial_trace(self._composite(step), (k + 1,))


def _ray_reflection(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Canonical unitary sending `src` exactly to `dst`.

    Householder-style: acts as a reflection inside span{src, dst} and as the
    identity on the orthogonal complement, so the completion is reproducible.
    For orthogonal computational-basis states this is the plain bit swap.
    """
    d = src.size
    eye = np.eye(d, dtype=complex)
    c = np.vdot(src, dst)
    residual = dst - c * src
    s = np.linalg.norm(residual)
    if s < 1e-14:
        # Same ray: phase the 1-dimensional span only.
        return eye + (c - 1.0) * np.outer(src, src.conj())
    e1 = src
    e2 = residual / s
    # 2x2 block [[c, s], [s, -conj(c)]] in the {e1, e2} plane (det -1).
    out = eye.copy()
    out -= np.outer(e1, e1.conj()) + np.outer(e2, e2.conj())
    out += np.outer(c * e1 + s * e2, e1.conj())
    out += np.outer(s * e1 - np.conj(c) * e2, e2.conj())
    return out


def build_controlled_copy(decomposition: RecordDecomposition, tags: TagSpec) -> UnitaryOperator:
    """Copy unitary V = sum_k (D_k P_k) (x) W_k on system (x) apparatus.

    W_k rotates the apparatus ready state onto tag state k; applied to
    |u>|ready> with |u> inside range(P_k) it yields (D_k |u>)|A_k> exactly.
    """
    if len(tags.tag_states) != decomposition.size:
        raise ValueError(
            f"{decomposition.size} record subspaces but {len(tags.tag_states)} tag states"
        )
    ds, da = decomposition.dim, tags.dim
    ready = tags.ready_state.amplitudes
    dist = decomposition.branch_disturbance
    v = np.zeros((ds * da, ds * da), dtype=complex)
    for k, proj in enumerate(decomposition.projectors):
        w_k = _ray_reflection(ready, tags.tag_states[k].amplitudes)
        branch = proj if dist is None else dist[k] @ proj
        v += np.kron(branch, w_k)
    return UnitaryOperator(v, CompositeDims((ds, da)))


def controlled_apparatus_unitary(decomposition: RecordDecomposition, apparatus_ops) -> UnitaryOperator:
    """Conditional unitary sum_k P_k (x) V_k for caller-supplied V_k."""
    ops = [np.asarray(u, dtype=complex) for u in apparatus_ops]
    if len(ops) != decomposition.size:
        raise ValueError("one apparatus unitary per record subspace required")
    da = ops[0].shape[0]
    ds = decomposition.dim
    v = np.zeros((ds * da, ds * da), dtype=complex)
    for p, u in zip(decomposition.projectors, ops):
        v += np.kron(p, u)
    return UnitaryOperator(v, CompositeDims((ds, da)))


def _chain_initial(initial: DensityOperator, chain: CopyChain) -> DensityOperator:
    state = initial
    for d, tag in zip(chain.apparatus_dims, chain.tags):
        ready = tag.ready_state
        state = tensor_product(state, DensityOperator(
            np.outer(ready.amplitudes, ready.amplitudes.conj()), CompositeDims((d,))))
    if chain.environment_dim is not None:
        ground = basis_state((chain.environment_dim,), 0)
        state = tensor_product(state, DensityOperator(
            np.outer(ground.amplitudes, ground.amplitudes.conj())))
    return state


def run_copy_chain(initial: DensityOperator, chain: CopyChain) -> ChainResult:
    """Apply one copy step per apparatus in sequence.

    Each step's unitary acts on the system and that apparatus only, extended
    by the identity elsewhere.  Returns the full composite after every step.
    """
    if initial.dim != chain.system_dim:
        raise ValueError("initial state does not match the chain's system dimension")
    dims = chain.composite_dims
    state = _chain_initial(initial, chain)
    snapshots = []
    mat = state.matrix
    for k in range(chain.steps):
        v = build_controlled_copy(chain.decomposition, chain.tags[k])
        full = embed_unitary(v.matrix, dims, (0, k + 1))
        mat = full @ mat @ full.conj().T
        snapshots.append(DensityOperator(mat, dims))
    return ChainResult(chain, state, tuple(snapshots), chain.steps)


def run_mixed_copy(system: DensityOperator, ready_states, couplings,
                   environment: DensityOperator | None = None) -> ChainResult:
    """Copy sequence with mixed apparatus ready states.

    No canonical controlled form exists once the ready state is mixed, so the
    coupling unitaries (one per apparatus, each on system (x) apparatus) are
    supplied by the caller.  The composite starts as the full product state
    system (x) ready_1 (x) ... (x) environment.
    """
    ready_states = tuple(ready_states)
    couplings = tuple(couplings)
    if len(ready_states) != len(couplings):
        raise ValueError("one coupling per apparatus required")
    app_dims = tuple(r.dim for r in ready_states)
    state = system
    for r in ready_states:
        state = tensor_product(state, r)
    if environment is not None:
        state = tensor_product(state, environment)
    dims = state.dims
    # Rebuild the factor list as (system, apparatuses..., environment).
    layout = (system.dim,) + app_dims + ((environment.dim,) if environment is not None else ())
    if math.prod(layout) != dims.total:
        raise ValueError("inconsistent factor layout")
    state = state.with_dims(layout)
    dims = state.dims
    mat = state.matrix
    snapshots = []
    for k, u in enumerate(couplings):
        if u.dim != system.dim * app_dims[k]:
            raise ValueError(f"coupling {k} does not act on system (x) apparatus {k}")
        full = embed_unitary(u.matrix, dims, (0, k + 1))
        mat = full @ mat @ full.conj().T
        snapshots.append(DensityOperator(mat, dims))
    return ChainResult(None, state, tuple(snapshots), len(couplings))


def extract_record(composite: DensityOperator, chain: CopyChain, k: int) -> DensityOperator:
    """Reduced state of apparatus k inside a chain composite."""
    if not 0 <= k < chain.steps:
        raise IndexError(f"apparatus index {k} out of range for {chain.steps} apparatuses")
    return partial_trace(composite, (k + 1,))


def record_overlap(rec_u: DensityOperator, rec_v: DensityOperator) -> float:
    """Hilbert-Schmidt overlap of two records; |<A_u|A_v>|^2 for pure ones."""
    return hs_inner(rec_u, rec_v)


# ---------------------------------------------------------------------------
# random scenario ingredients


def random_decomposition(dim: int, block_sizes, seed) -> RecordDecomposition:
    """Random orthogonal record decomposition with the given subspace sizes."""
    sizes = tuple(int(s) for s in block_sizes)
    if sum(sizes) != dim or any(s < 1 for s in sizes):
        raise ValueError(f"block sizes {sizes} do not partition dimension {dim}")
    basis = random_unitary(dim, seed).matrix
    projs = []
    start = 0
    for s in sizes:
        cols = basis[:, start:start + s]
        projs.append(cols @ cols.conj().T)
        start += s
    return RecordDecomposition(tuple(projs), tuple(range(len(sizes))))


def random_disturbances(decomposition: RecordDecomposition, seed) -> RecordDecomposition:
    """Same decomposition with Haar-random rotations inside each subspace."""
    rng = _rng(seed)
    d = decomposition.dim
    eye = np.eye(d, dtype=complex)
    dist = []
    for p in decomposition.projectors:
        w, vecs = np.linalg.eigh(p)
        cols = vecs[:, w > 0.5]
        r = cols.shape[1]
        u_small = random_unitary(r, rng).matrix
        dist.append(cols @ u_small @ cols.conj().T + (eye - p))
    return RecordDecomposition(decomposition.projectors, decomposition.labels, tuple(dist))


def random_tag_spec(apparatus_dim: int, count: int, seed) -> TagSpec:
    """Random ready state plus `count` random (not necessarily orthogonal) tags."""
    rng = _rng(seed)

    def _random_state():
        v = rng.standard_normal(apparatus_dim) + 1j * rng.standard_normal(apparatus_dim)
        return StateVector(v / np.linalg.norm(v))

    ready = _random_state()
    return TagSpec(ready, tuple(_random_state() for _ in range(count)))


def random_confined_density(decomposition: RecordDecomposition, k: int, rank: int, seed) -> DensityOperator:
    """Random density operator supported inside record subspace k."""
    p = decomposition.projectors[k]
    w, vecs = np.linalg.eigh(p)
    cols = vecs[:, w > 0.5]
    r = cols.shape[1]
    if not 1 <= rank <= r:
        raise ValueError(f"rank must be in [1, {r}] for subspace {k}")
    small = random_density(r, rank, seed)
    return DensityOperator(cols @ small.matrix @ cols.conj().T)
