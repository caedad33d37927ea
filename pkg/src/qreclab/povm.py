"""Sequential two-observable measurements and the POVM they induce.

Measuring one observable, letting the system evolve freely, then measuring a
second observable attaches a pair of outcome labels (k, l) to each run.  The
operator governing the statistics of the pair is generally not a projector,
but the full set resolves the identity: a POVM arising naturally alongside
perfectly repeatable records.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import TOL_ALG, CompositeDims, DensityOperator, StateVector, UnitaryOperator

__all__ = [
    "PovmElement",
    "SequentialMeasurement",
    "build_sequential_povm",
    "check_povm",
    "PovmValidity",
    "outcome_probabilities",
    "observable_from_basis",
    "commutator_norm",
    "monitoring_preset",
]


@dataclass(frozen=True, eq=False)
class PovmElement:
    """Hermitian PSD effect operator for the outcome pair (k, l)."""

    matrix: np.ndarray
    outcome_labels: tuple

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if np.max(np.abs(mat - mat.conj().T)) > TOL_ALG:
            raise ValueError("POVM element is not Hermitian")
        if np.linalg.eigvalsh(mat)[0] < -TOL_ALG:
            raise ValueError("POVM element has a negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "outcome_labels", tuple(self.outcome_labels))


def _check_basis(basis, dim: int, name: str):
    vecs = [np.asarray(b.amplitudes if isinstance(b, StateVector) else b, dtype=complex)
            for b in basis]
    if len(vecs) != dim:
        raise ValueError(f"{name} basis must have {dim} states")
    mat = np.column_stack(vecs)
    if np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) > TOL_ALG:
        raise ValueError(f"{name} basis is not orthonormal and complete")
    return tuple(StateVector(v, CompositeDims((dim,))) for v in vecs)


@dataclass(frozen=True, eq=False)
class SequentialMeasurement:
    """First-observable basis, free evolution, second-observable basis, and
    the effect operators F(k, l) they generate."""

    y_basis: tuple
    z_basis: tuple
    evolution: UnitaryOperator
    elements: tuple

    def element(self, k: int, l: int) -> PovmElement:
        return self.elements[k * len(self.z_basis) + l]

    @property
    def dim(self) -> int:
        return self.evolution.dim


def build_sequential_povm(y_basis, z_basis, u_t: UnitaryOperator) -> SequentialMeasurement:
    """Effects F(k,l) = |y_k><y_k| U^dag |z_l><z_l| U |y_k><y_k|.

    One element per outcome pair: d^2 of them, each Hermitian and PSD, and
    together they resolve the identity.
    """
    d = u_t.dim
    ys = _check_basis(y_basis, d, "first")
    zs = _check_basis(z_basis, d, "second")
    u = u_t.matrix
    elements = []
    for k, yk in enumerate(ys):
        y_vec = yk.amplitudes
        proj_y = np.outer(y_vec, y_vec.conj())
        evolved = u @ y_vec
        for l, zl in enumerate(zs):
            weight = abs(np.vdot(zl.amplitudes, evolved)) ** 2
            elements.append(PovmElement(weight * proj_y, (k, l)))
    total = sum(e.matrix for e in elements)
    if np.max(np.abs(total - np.eye(d))) > TOL_ALG:
        raise ValueError("elements do not resolve the identity")
    return SequentialMeasurement(ys, zs, u_t, tuple(elements))


@dataclass(frozen=True)
class PovmValidity:
    """Per-element and global diagnostics of a sequential measurement.

    Residuals are spectral norms.  projector_residuals measures F^2 - F:
    zero only in the commuting (projective) case.
    """

    hermiticity_residuals: tuple
    min_eigenvalues: tuple
    projector_residuals: tuple
    identity_residual: float

    @property
    def is_povm(self) -> bool:
        return (
            max(self.hermiticity_residuals) < TOL_ALG
            and min(self.min_eigenvalues) > -TOL_ALG
            and self.identity_residual < TOL_ALG
        )

    @property
    def is_projective(self) -> bool:
        return max(self.projector_residuals) < TOL_ALG


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def check_povm(m: SequentialMeasurement) -> PovmValidity:
    herm, mins, projs = [], [], []
    total = np.zeros((m.dim, m.dim), dtype=complex)
    for e in m.elements:
        f = e.matrix
        herm.append(float(np.max(np.abs(f - f.conj().T))))
        mins.append(float(np.linalg.eigvalsh(f)[0]))
        projs.append(_spectral_norm(f @ f - f))
        total += f
    return PovmValidity(
        hermiticity_residuals=tuple(herm),
        min_eigenvalues=tuple(mins),
        projector_residuals=tuple(projs),
        identity_residual=_spectral_norm(total - np.eye(m.dim)),
    )


def outcome_probabilities(m: SequentialMeasurement, rho0: DensityOperator):
    """Probability table p(k, l) = Tr F(k,l) rho0, one row per outcome pair."""
    if rho0.dim != m.dim:
        raise ValueError(f"state dimension {rho0.dim} does not match measurement {m.dim}")
    rows = []
    for e in m.elements:
        p = float(np.einsum("ij,ji->", e.matrix, rho0.matrix).real)
        rows.append((e.outcome_labels[0], e.outcome_labels[1], p))
    return rows


def two_step_probabilities(m: SequentialMeasurement, rho0: DensityOperator):
    """Outcome probabilities from simulating the two projective steps in
    sequence: collapse onto a first-basis state, evolve, then project onto a
    second-basis state."""
    rows = []
    u = m.evolution.matrix
    for k, yk in enumerate(m.y_basis):
        y = yk.amplitudes
        p_first = float(np.vdot(y, rho0.matrix @ y).real)
        evolved = u @ y
        for l, zl in enumerate(m.z_basis):
            p_second = abs(np.vdot(zl.amplitudes, evolved)) ** 2
            rows.append((k, l, p_first * p_second))
    return rows


def observable_from_basis(basis, labels=None) -> np.ndarray:
    """Hermitian observable with the given eigenbasis and distinct labels."""
    vecs = [b.amplitudes for b in basis]
    d = vecs[0].size
    if labels is None:
        labels = range(d)
    obs = np.zeros((d, d), dtype=complex)
    for lab, v in zip(labels, vecs):
        obs += float(lab) * np.outer(v, v.conj())
    return obs


def commutator_norm(m: SequentialMeasurement) -> float:
    """Spectral norm of [Y, U^dag Z U]; zero exactly in the projective case."""
    y_obs = observable_from_basis(m.y_basis)
    z_obs = observable_from_basis(m.z_basis)
    u = m.evolution.matrix
    z_heis = u.conj().T @ z_obs @ u
    return _spectral_norm(y_obs @ z_heis - z_heis @ y_obs)


def monitoring_preset(dim: int = 5, theta: float = np.pi / 5) -> SequentialMeasurement:
    """Monitoring one observable of an evolving system.

    Both measurements use the computational basis; the free evolution is a
    truncated-oscillator rotation, under which the monitored observable
    fails to commute with its own later self.
    """
    lower = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        lower[n - 1, n] = np.sqrt(n)
    quadrature = lower + lower.conj().T
    w, v = np.linalg.eigh(quadrature)
    u_t = UnitaryOperator((v * np.exp(-1j * theta * w)) @ v.conj().T, CompositeDims((dim,)))
    basis = [StateVector(np.eye(dim)[:, k], CompositeDims((dim,))) for k in range(dim)]
    return build_sequential_povm(basis, basis, u_t)
