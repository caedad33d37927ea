"""Numerical verifiers for the record-orthogonality and actionability claims.

Positive statements (exact identities) are checked to algebraic tolerance.
Negative statements ("no unitary can...") are probed by bounded adversarial
search over the unitary group: a search failure is evidence, not proof, so
every verdict carries its trial budget and best score for auditing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .copy_dynamics import ChainResult, RecordDecomposition, record_overlap
from .hilbert import (
    TOL_ALG,
    CompositeDims,
    DensityOperator,
    StateVector,
    UnitaryOperator,
    _ptrace,
    basis_state,
    hs_inner,
    partial_trace,
    pure_density,
)
from .optimizer import (
    Constraint,
    OptimizationConfig,
    SearchProblem,
    exp_unitary,
    maximize_problem,
)

__all__ = [
    "THR_ACTION",
    "TOL_PROD",
    "TOL_OPT",
    "RepeatabilityError",
    "IdentityReport",
    "ScalarProductReport",
    "RecordOrthogonalityReport",
    "ActionabilityVerdict",
    "TagSearchResult",
    "tag_distinguishability_search",
    "PurifiedOverlapReport",
    "BellDemoReport",
    "verify_scalar_product_identity",
    "verify_record_orthogonality",
    "actionability_test",
    "mixtures_dont_mix_check",
    "purified_orthogonality",
    "bell_phase_demo",
]

# Minimum distinguishability score to declare a record actionable.
THR_ACTION = 0.1
# Product-form residual tolerance: Hilbert-Schmidt distance between the
# evolved global state and the tensor product of its marginals.
TOL_PROD = 1e-6
# Score threshold below which an adversarial search counts as a failure to
# distinguish.
TOL_OPT = 1e-6


class RepeatabilityError(ValueError):
    """The coupling disturbs the originals, so the identity does not apply."""


@dataclass(frozen=True)
class IdentityReport:
    """Two sides of an exact identity and their absolute difference."""

    lhs: complex
    rhs: complex
    residual: float
    satisfied: bool


def _identity_report(lhs: complex, rhs: complex, tol: float = TOL_ALG) -> IdentityReport:
    residual = abs(lhs - rhs)
    return IdentityReport(lhs=lhs, rhs=rhs, residual=float(residual), satisfied=bool(residual < tol))


@dataclass(frozen=True)
class ScalarProductReport(IdentityReport):
    """Scalar-product identity <u|v> = <u|v><A_u|A_v> plus its dichotomy.

    The dichotomy: either the originals are orthogonal or the tag overlap has
    unit magnitude; strictly intermediate cases would falsify the claim.
    """

    originals_overlap: complex = 0j
    tag_overlap: complex = 0j
    dichotomy: bool = False


def _product_factors(psi: np.ndarray, d_left: int, d_right: int, tol: float):
    """Split a product state psi = left (x) right; None if entangled."""
    mat = psi.reshape(d_left, d_right)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if s[0] < 1.0 - tol or (s.size > 1 and s[1] > tol):
        return None
    return u[:, 0], vh[0, :]


def verify_scalar_product_identity(
    u: StateVector,
    v: StateVector,
    copy_unitary: UnitaryOperator,
    ready: StateVector,
    decomposition: RecordDecomposition | None = None,
    precond_tol: float = TOL_ALG,
) -> ScalarProductReport:
    """Check that tagging preserves the originals' scalar product.

    The repeatability precondition is verified first: each post-copy state
    must factorize as (system) (x) (tag), and the system factor must coincide
    with the input (or, when a record decomposition is supplied, merely stay
    inside the input's record subspace, which admits within-subspace
    disturbance).  Violations raise RepeatabilityError rather than counting
    as a falsification.
    """
    ds, da = u.dim, ready.dim
    if v.dim != ds or copy_unitary.dim != ds * da:
        raise ValueError("dimension mismatch between originals, apparatus and coupling")

    factors = []
    for state in (u, v):
        post = copy_unitary.matrix @ np.kron(state.amplitudes, ready.amplitudes)
        split = _product_factors(post, ds, da, max(precond_tol, 1e-12))
        if split is None:
            raise RepeatabilityError("copy entangles the original with the apparatus")
        sys_vec, tag_vec = split
        if decomposition is None:
            if abs(abs(np.vdot(state.amplitudes, sys_vec)) - 1.0) > precond_tol:
                raise RepeatabilityError("copy changes the original state")
        else:
            k = decomposition.subspace_index(
                np.outer(state.amplitudes, state.amplitudes.conj()), precond_tol)
            if k is None:
                raise RepeatabilityError("original is not confined to one record subspace")
            proj = decomposition.projectors[k]
            if abs(np.vdot(sys_vec, proj @ sys_vec).real - 1.0) > precond_tol:
                raise RepeatabilityError("copy moves the original out of its record subspace")
        factors.append((sys_vec, tag_vec))

    (su, tu), (sv, tv) = factors
    lhs = complex(np.vdot(u.amplitudes, v.amplitudes))
    tag_overlap = complex(np.vdot(tu, tv))
    # The split of a product state into factors carries a phase convention;
    # the product (system overlap) * (tag overlap) does not.
    rhs = complex(np.vdot(su, sv)) * tag_overlap
    dich = abs(lhs) < TOL_ALG or abs(abs(tag_overlap) - 1.0) < TOL_ALG
    base = _identity_report(lhs, rhs)
    return ScalarProductReport(
        lhs=base.lhs, rhs=base.rhs, residual=base.residual, satisfied=base.satisfied,
        originals_overlap=lhs, tag_overlap=tag_overlap, dichotomy=bool(dich),
    )


@dataclass(frozen=True)
class RecordOrthogonalityReport:
    """Hilbert-Schmidt norm bookkeeping across the steps of a copy chain.

    step_reports[i] compares Tr(rho_u rho_v) of the inputs with the reduced
    system overlap after step i+1 times the product of the record overlaps
    written so far.  The dichotomy field asserts: records differ only if the
    inputs had orthogonal supports.
    """

    step_reports: tuple
    record_overlaps: tuple
    inputs_overlap: float
    dichotomy: bool
    satisfied: bool

    @property
    def eq_first_step(self) -> IdentityReport:
        return self.step_reports[0]

    @property
    def eq_second_step(self) -> IdentityReport:
        return self.step_reports[1]


def _same_chain(ru: ChainResult, rv: ChainResult) -> bool:
    if ru.chain is rv.chain and ru.chain is not None:
        return True
    cu, cv = ru.chain, rv.chain
    if cu is None or cv is None:
        # Caller-supplied couplings: require at least a matching layout.
        return (
            tuple(ru.initial.dims) == tuple(rv.initial.dims)
            and ru.apparatus_count == rv.apparatus_count
        )
    if (cu.system_dim, cu.apparatus_dims, cu.environment_dim) != (
            cv.system_dim, cv.apparatus_dims, cv.environment_dim):
        return False
    du, dv = cu.decomposition, cv.decomposition
    if du.size != dv.size or du.labels != dv.labels:
        return False
    for pu, pv in zip(du.projectors, dv.projectors):
        if np.max(np.abs(pu - pv)) > TOL_ALG:
            return False
    for tu, tv in zip(cu.tags, cv.tags):
        if np.max(np.abs(tu.ready_state.amplitudes - tv.ready_state.amplitudes)) > TOL_ALG:
            return False
        for su, sv in zip(tu.tag_states, tv.tag_states):
            if np.max(np.abs(su.amplitudes - sv.amplitudes)) > TOL_ALG:
                return False
    return True


def verify_record_orthogonality(
    rho_u: DensityOperator,
    rho_v: DensityOperator,
    chain_result_u: ChainResult,
    chain_result_v: ChainResult,
    tol: float = TOL_ALG,
) -> RecordOrthogonalityReport:
    """Check the copy-chain norm bookkeeping for a pair of mixed originals."""
    chain = chain_result_u.chain
    if not _same_chain(chain_result_u, chain_result_v):
        raise ValueError("chain results were not produced under the same chain")
    for rho, result in ((rho_u, chain_result_u), (rho_v, chain_result_v)):
        start = partial_trace(result.initial, (0,))
        if np.max(np.abs(start.matrix - rho.matrix)) > tol:
            raise ValueError("chain result does not start from the given original")

    lhs = hs_inner(rho_u, rho_v)
    reports = []
    overlaps_final = ()
    for step in range(1, chain.steps + 1):
        sys_overlap = hs_inner(
            chain_result_u.system_state(step), chain_result_v.system_state(step))
        overlaps = tuple(
            record_overlap(
                chain_result_u.record_state(step, k), chain_result_v.record_state(step, k))
            for k in range(step)
        )
        rhs = sys_overlap * float(np.prod(overlaps))
        reports.append(_identity_report(lhs, rhs, tol))
        overlaps_final = overlaps

    total = float(np.prod(overlaps_final)) if overlaps_final else 1.0
    dichotomy = total >= 1.0 - tol or lhs < tol
    return RecordOrthogonalityReport(
        step_reports=tuple(reports),
        record_overlaps=overlaps_final,
        inputs_overlap=lhs,
        dichotomy=bool(dichotomy),
        satisfied=bool(all(r.satisfied for r in reports)),
    )


@dataclass(frozen=True, eq=False)
class TagSearchResult:
    """Best repeatable distinguishing coupling an adversarial search found.

    distinguishability is 1 - Tr(rec_u rec_v) at the best feasible coupling;
    feasibility means the reduced system states stay inside the supports of
    their originals (Hilbert-Schmidt leak below tolerance) and both records
    come out pure.
    """

    distinguishability: float
    witness_unitary: UnitaryOperator
    constraint_residuals: dict
    feasible: bool
    trials: int


class _TagProblem(SearchProblem):
    """Maximize record distinguishability over system-apparatus couplings.

    Constraints (smooth forms): the reduced system state on each branch must
    stay inside the support of its original (squared Hilbert-Schmidt leak),
    and both records must be pure.  On the feasible set the objective equals
    1 - |<A_u|A_v>|^2 for the pure tag states A_u, A_v.
    """

    has_adjoints = True

    def __init__(self, rho_u, rho_v, apparatus_dim, ready_mat):
        ds = rho_u.shape[0]
        self.ds = ds
        self.da = apparatus_dim
        self.dims = (ds, apparatus_dim)
        self.sig = (np.kron(rho_u, ready_mat), np.kron(rho_v, ready_mat))
        self.anti = tuple(self._anti_support(r) for r in (rho_u, rho_v))
        self.eye_a = np.eye(apparatus_dim)
        self.constraints = (
            Constraint("support_leak", None, TOL_PROD ** 2),
            Constraint("record_impurity", None, TOL_PROD),
        )

    @staticmethod
    def _anti_support(rho: np.ndarray) -> np.ndarray:
        w, vecs = np.linalg.eigh(rho)
        cols = vecs[:, w > TOL_ALG]
        return np.eye(rho.shape[0]) - cols @ cols.conj().T

    def _branches(self, u: np.ndarray):
        uh = u.conj().T
        ds, da = self.ds, self.da
        data = []
        for sig, anti in zip(self.sig, self.anti):
            sig_uh = sig @ uh
            out4 = (u @ sig_uh).reshape(ds, da, ds, da)
            red = np.einsum("iaja->ij", out4)
            rec = np.einsum("iaib->ab", out4)
            data.append((sig_uh, anti, red, rec))
        return data

    @staticmethod
    def _measures(data) -> tuple:
        (_, a_u, red_u, rec_u), (_, a_v, red_v, rec_v) = data
        disting = 1.0 - float(np.einsum("ij,ji->", rec_u, rec_v).real)
        leak = float(
            np.einsum("ij,jk,ki->", red_u, a_u, red_u).real
            + np.einsum("ij,jk,ki->", red_v, a_v, red_v).real
        )
        impurity = float(
            2.0
            - np.einsum("ij,ji->", rec_u, rec_u).real
            - np.einsum("ij,ji->", rec_v, rec_v).real
        )
        return disting, {"support_leak": leak, "record_impurity": impurity}

    def evaluate(self, u: np.ndarray) -> tuple:
        return self._measures(self._branches(u))

    def loss_with_adjoint(self, u: np.ndarray, w_score: float, lam: float):
        data = self._branches(u)
        disting, residuals = self._measures(data)
        loss = -w_score * disting + lam * sum(residuals.values())

        ds, da = self.ds, self.da
        d_total = ds * da
        adjoint = np.zeros((d_total, d_total), dtype=complex)
        for (sig_uh, anti, red, rec), (_, _, _, rec_other) in zip(data, data[::-1]):
            # Apparatus-side factor of the adjoint: distinguishability pulls
            # in the other record, impurity pulls in this one.
            m_small = w_score * rec_other - 2.0 * lam * rec
            n_small = lam * (anti @ red + red @ anti)
            t = sig_uh.reshape(d_total, ds, da)
            term = np.einsum("xja,ab->xjb", t, m_small)
            term += np.einsum("xib,ij->xjb", t, n_small)
            adjoint += term.reshape(d_total, d_total)
        return loss, residuals, adjoint


def tag_distinguishability_search(
    rho_u: DensityOperator,
    rho_v: DensityOperator,
    apparatus_dim: int,
    config: OptimizationConfig,
    ready: StateVector | None = None,
) -> TagSearchResult:
    """Adversarially search for a repeatable coupling that writes
    distinguishable records of two (possibly mixed) originals.

    Repeatability is enforced as support containment: after the copy, each
    reduced system state must still live inside the support of its original
    (within-support disturbance is allowed).  Records must come out pure, so
    on the feasible set the objective equals 1 - |<A_u|A_v>|^2.  Orthogonal
    supports admit distinguishability 1; overlapping supports should pin it
    to zero, so any feasible positive value at convergence is evidence
    against the orthogonality claim.
    """
    ds = rho_u.dim
    if rho_v.dim != ds:
        raise ValueError("originals must share a dimension")
    if ready is None:
        ready = basis_state((apparatus_dim,), 0)
    if ready.dim != apparatus_dim:
        raise ValueError("ready state does not match the apparatus dimension")

    ready_mat = np.outer(ready.amplitudes, ready.amplitudes.conj())
    problem = _TagProblem(rho_u.matrix, rho_v.matrix, apparatus_dim, ready_mat)
    result = maximize_problem(problem, config, dim=ds * apparatus_dim)
    witness = exp_unitary(result.best_params).with_dims((ds, apparatus_dim))
    disting = result.best_score if result.feasible else 0.0
    return TagSearchResult(
        distinguishability=float(disting),
        witness_unitary=witness,
        constraint_residuals=result.constraint_residuals,
        feasible=result.feasible,
        trials=config.restarts,
    )


@dataclass(frozen=True)
class ActionabilityVerdict:
    """Outcome of the operational test for actionable information.

    actionable requires both a distinguishability score above THR_ACTION and
    a product-form residual below TOL_PROD at the witness, re-evaluated from
    the returned parameters.  inconclusive flags an exhausted search budget:
    no restart produced a point satisfying the product constraint.
    """

    best_score: float
    product_residual: float
    witness_unitary: UnitaryOperator
    actionable: bool
    trials: int
    s_overlap: float | None = None
    inconclusive: bool = False


class _SteeringProblem(SearchProblem):
    """Maximize conditional steering of a fresh test system by one factor.

    The layout is permuted so the coupled record factor comes first, the
    test system second, and everything else is flattened into a single tail
    factor.  Constraints (smooth forms): each evolved branch must be a
    product across the (everything else) x (test system) split (squared
    Hilbert-Schmidt distance to the product of its marginals), and the test
    states must keep the initial spectrum, so that they rotate conditionally
    rather than gain or shed mixedness.  Spectrum preservation is enforced
    through the purity, which characterizes it exactly for a pure initial
    test state.

    `base_pair`, when given, holds the two unmixed record branches; the
    extra constraint then demands that they stay orthogonal through the
    coupling, i.e. remain actionable records in their own right.
    """

    has_adjoints = True

    def __init__(self, sig_u, sig_v, dk, dt, dtail, tau0_purity, base_pair=None):
        self.sig = (sig_u, sig_v)
        self.dk, self.dt, self.dtail = dk, dt, dtail
        self.d_small = dk * dt
        self.q0 = tau0_purity
        self.pure_tau0 = tau0_purity > 1.0 - TOL_ALG
        self.eye_tail = np.eye(dtail)
        self.eye_t = np.eye(dt)
        self.eye_rest4 = np.eye(dk * dtail).reshape(dk, dtail, dk, dtail)
        self.base = base_pair
        constraints = [
            Constraint("product_form_u", None, TOL_PROD ** 2),
            Constraint("product_form_v", None, TOL_PROD ** 2),
            Constraint("test_spectrum", None, 1e-7),
        ]
        if base_pair is not None:
            if dtail != 1:
                raise ValueError("record-orthogonality constraint needs single-factor composites")
            constraints.append(Constraint("records_orthogonal", None, 1e-7))
        self.constraints = tuple(constraints)

    def _prodmap(self, x4: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = self.dk * self.dt * self.dtail
        return np.einsum("icjd,ab->iacjbd", x4, y).reshape(d, d)

    def _branch(self, full: np.ndarray, sig: np.ndarray):
        dk, dt, dtail = self.dk, self.dt, self.dtail
        out = full @ sig @ full.conj().T
        out6 = out.reshape(dk, dt, dtail, dk, dt, dtail)
        tau = np.einsum("iacibc->ab", out6)
        rest4 = np.einsum("iacjad->icjd", out6)
        prod = self._prodmap(rest4, tau)
        delta = out - prod
        r2 = float(np.vdot(delta, delta).real)
        return out, tau, rest4, delta, r2

    def _spectrum_residual(self, tau_u: np.ndarray, tau_v: np.ndarray) -> float:
        gap_u = self.q0 - float(np.einsum("ij,ji->", tau_u, tau_u).real)
        gap_v = self.q0 - float(np.einsum("ij,ji->", tau_v, tau_v).real)
        if self.pure_tau0:
            return gap_u + gap_v
        return gap_u * gap_u + gap_v * gap_v

    def _record_marginals(self, full: np.ndarray):
        recs = []
        for sig in self.base:
            out = full @ sig @ full.conj().T
            out4 = out.reshape(self.dk, self.dt, self.dk, self.dt)
            recs.append(np.einsum("iaja->ij", out4))
        return recs

    def evaluate(self, u: np.ndarray) -> tuple:
        full = np.kron(u, self.eye_tail)
        _, tau_u, _, _, r2u = self._branch(full, self.sig[0])
        _, tau_v, _, _, r2v = self._branch(full, self.sig[1])
        score = self.q0 - float(np.einsum("ij,ji->", tau_u, tau_v).real)
        residuals = {
            "product_form_u": r2u,
            "product_form_v": r2v,
            "test_spectrum": self._spectrum_residual(tau_u, tau_v),
        }
        if self.base is not None:
            rec_u, rec_v = self._record_marginals(full)
            residuals["records_orthogonal"] = float(np.einsum("ij,ji->", rec_u, rec_v).real)
        return score, residuals

    def _block_trace(self, m: np.ndarray) -> np.ndarray:
        m4 = m.reshape(self.d_small, self.dtail, self.d_small, self.dtail)
        return np.einsum("arbr->ab", m4)

    def loss_with_adjoint(self, u: np.ndarray, w_score: float, lam: float):
        dk, dt, dtail = self.dk, self.dt, self.dtail
        full = u if dtail == 1 else np.kron(u, self.eye_tail)
        fh = full.conj().T
        (out_u, tau_u, rest_u, delta_u, r2u) = self._branch(full, self.sig[0])
        (out_v, tau_v, rest_v, delta_v, r2v) = self._branch(full, self.sig[1])
        score = self.q0 - float(np.einsum("ij,ji->", tau_u, tau_v).real)
        gap_u = self.q0 - float(np.einsum("ij,ji->", tau_u, tau_u).real)
        gap_v = self.q0 - float(np.einsum("ij,ji->", tau_v, tau_v).real)
        residuals = {
            "product_form_u": r2u,
            "product_form_v": r2v,
            "test_spectrum": (gap_u + gap_v) if self.pure_tau0
            else (gap_u * gap_u + gap_v * gap_v),
        }

        adjoint = np.zeros((self.d_small, self.d_small), dtype=complex)
        pairs = (
            (self.sig[0], tau_u, rest_u, delta_u, tau_v, gap_u),
            (self.sig[1], tau_v, rest_v, delta_v, tau_u, gap_v),
        )
        for sig, tau, rest4, delta, tau_other, gap in pairs:
            spectrum_scale = 1.0 if self.pure_tau0 else 2.0 * gap
            delta6 = delta.reshape(dk, dt, dtail, dk, dt, dtail)
            g_tau = np.einsum("jbdiac,icjd->ba", delta6, rest4)
            g_rest = np.einsum("jbdiac,ab->jdic", delta6, tau)
            # Test-system-side pieces share one embedding.
            m_t = (
                w_score * tau_other
                - 2.0 * lam * g_tau
                - 2.0 * lam * spectrum_scale * tau
            )
            d_total = (
                self._prodmap(self.eye_rest4, m_t)
                + 2.0 * lam * (delta - self._prodmap(g_rest, self.eye_t))
            )
            adjoint = adjoint + self._block_trace(sig @ fh @ d_total)

        if self.base is not None:
            rec_u, rec_v = self._record_marginals(full)
            residuals["records_orthogonal"] = float(np.einsum("ij,ji->", rec_u, rec_v).real)
            t0 = (self.base[0] @ fh).reshape(self.d_small, dk, dt)
            t1 = (self.base[1] @ fh).reshape(self.d_small, dk, dt)
            extra = np.einsum("xib,ij->xjb", t0, rec_v) + np.einsum("xib,ij->xjb", t1, rec_u)
            adjoint = adjoint + lam * extra.reshape(self.d_small, self.d_small)

        loss = -w_score * score + lam * sum(residuals.values())
        return loss, residuals, adjoint


def _actionability_search(
    composite_u: DensityOperator,
    composite_v: DensityOperator,
    k: int,
    test_dim: int,
    config: OptimizationConfig,
    tau0: DensityOperator | None = None,
    base_pair=None,
) -> tuple:
    dims = tuple(composite_u.dims)
    if tuple(composite_v.dims) != dims:
        raise ValueError("composites must share one factor layout")
    if not 0 <= k < len(dims):
        raise IndexError(f"factor index {k} out of range")
    if tau0 is None:
        ground = basis_state((test_dim,), 0)
        tau0 = pure_density(ground)
    if tau0.dim != test_dim:
        raise ValueError("tau0 does not match test_dim")

    dims_ext = dims + (test_dim,)
    t_idx = len(dims)
    sig_u = np.kron(composite_u.matrix, tau0.matrix)
    sig_v = np.kron(composite_v.matrix, tau0.matrix)
    tau0_purity = float(np.einsum("ij,ji->", tau0.matrix, tau0.matrix).real)
    d_small = dims[k] * test_dim

    # Move the coupled factors up front once; each candidate unitary then
    # embeds by a plain Kronecker product with the identity.
    from .hilbert import _embed_perm

    perm = _embed_perm(dims_ext, (k, t_idx))
    sig_u_p = sig_u[np.ix_(perm, perm)]
    sig_v_p = sig_v[np.ix_(perm, perm)]
    dtail = sig_u.shape[0] // d_small

    if base_pair is not None:
        base_pair = tuple(np.kron(b.matrix, tau0.matrix) for b in base_pair)
    problem = _SteeringProblem(
        sig_u_p, sig_v_p, dims_ext[k], test_dim, dtail, tau0_purity, base_pair)
    result = maximize_problem(problem, config, dim=d_small)
    return result, dims, t_idx


def actionability_test(
    composite_u: DensityOperator,
    composite_v: DensityOperator,
    k: int,
    test_dim: int,
    config: OptimizationConfig,
    tau0: DensityOperator | None = None,
) -> ActionabilityVerdict:
    """Search for a coupling of factor k to a fresh test system that steers
    the test state conditionally on which composite it meets.

    The test system starts in a fixed product state with everything else, so
    any distinguishability it acquires was carried by factor k.  The score is
    Tr(tau_0^2) - Tr(tau_u tau_v); the couplings must leave the test system
    in a product with the rest on both branches.
    """
    result, dims, _ = _actionability_search(composite_u, composite_v, k, test_dim, config, tau0)
    residual = math.sqrt(max(
        result.constraint_residuals["product_form_u"],
        result.constraint_residuals["product_form_v"],
        0.0,
    ))
    actionable = result.feasible and result.best_score > THR_ACTION
    s_overlap = hs_inner(partial_trace(composite_u, (0,)), partial_trace(composite_v, (0,)))
    witness = exp_unitary(result.best_params).with_dims((dims[k], test_dim))
    return ActionabilityVerdict(
        best_score=float(result.best_score),
        product_residual=float(residual),
        witness_unitary=witness,
        actionable=bool(actionable),
        trials=config.restarts,
        s_overlap=float(s_overlap),
        inconclusive=bool(result.budget_exhausted),
    )


def mixtures_dont_mix_check(
    rho_u: DensityOperator,
    rho_v: DensityOperator,
    ab: tuple,
    cd: tuple,
    config: OptimizationConfig,
    test_dim: int = 2,
) -> ActionabilityVerdict:
    """Probe whether classical mixtures of two actionable records are
    themselves actionable.

    The inputs must have orthogonal supports (that is what makes them
    actionable records in the first place).  For nontrivial mixing
    coefficients no steering coupling should exist; the trivial endpoint
    assignments reduce to the original pair and stay actionable.
    """
    if rho_u.dim != rho_v.dim:
        raise ValueError("records must share a dimension")
    if hs_inner(rho_u, rho_v) > TOL_ALG:
        raise ValueError("records must have orthogonal supports")
    a, b = (float(x) for x in ab)
    c, d = (float(x) for x in cd)
    for x in (a, b, c, d):
        if x < -1e-12:
            raise ValueError("mixing coefficients must be nonnegative")
    if abs(a + b - 1.0) > 1e-12 or abs(c + d - 1.0) > 1e-12:
        raise ValueError("mixing coefficients must sum to one pairwise")
    rho_ab = DensityOperator(a * rho_u.matrix + b * rho_v.matrix, (rho_u.dim,))
    rho_cd = DensityOperator(c * rho_u.matrix + d * rho_v.matrix, (rho_u.dim,))
    result, dims, _ = _actionability_search(
        rho_ab, rho_cd, 0, test_dim, config, base_pair=(rho_u, rho_v))
    residual = math.sqrt(max(
        result.constraint_residuals["product_form_u"],
        result.constraint_residuals["product_form_v"],
        0.0,
    ))
    actionable = result.feasible and result.best_score > THR_ACTION
    witness = exp_unitary(result.best_params).with_dims((rho_u.dim, test_dim))
    return ActionabilityVerdict(
        best_score=float(result.best_score),
        product_residual=float(residual),
        witness_unitary=witness,
        actionable=bool(actionable),
        trials=config.restarts,
        s_overlap=float(hs_inner(rho_ab, rho_cd)),
        inconclusive=bool(result.budget_exhausted),
    )


@dataclass(frozen=True)
class PurifiedOverlapReport(IdentityReport):
    """Direct overlap of two purifications against its Schmidt-data form.

    `terms` lists the per-purifier-component contributions; they may cancel,
    which is how globally orthogonal states can hide local identity.
    `orthogonal` states whether the copyability condition (zero overlap)
    holds.
    """

    terms: tuple = ()
    orthogonal: bool = False


def purified_orthogonality(
    gamma_u: StateVector,
    gamma_v: StateVector,
    cut: int = 1,
    tol: float = TOL_ALG,
    purifier_basis=None,
) -> PurifiedOverlapReport:
    """Compare <Gamma_u|Gamma_v> with sum_k s_k^2 <sigma_k_u|sigma_k_v>.

    Both states must be purifications over the same unaffected purifier with
    matching weights, otherwise the weighted-sum expression is undefined and
    a ValueError is raised.  By default the purifier basis is taken from
    gamma_u's Schmidt data; pass `purifier_basis` explicitly when degenerate
    weights make that choice ambiguous.
    """
    if tuple(gamma_u.dims) != tuple(gamma_v.dims):
        raise ValueError("purifications must share one factor layout")
    from .hilbert import schmidt_decompose

    d_left = math.prod(gamma_u.dims[:cut])
    d_right = gamma_u.dims.total // d_left
    mat_u = gamma_u.amplitudes.reshape(d_left, d_right)
    mat_v = gamma_v.amplitudes.reshape(d_left, d_right)

    if purifier_basis is None:
        sd = schmidt_decompose(gamma_u, cut)
        basis = [r.amplitudes for r in sd.right_basis]
    else:
        basis = [b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=complex)
                 for b in purifier_basis]
        gram = np.column_stack(basis)
        if np.max(np.abs(gram.conj().T @ gram - np.eye(len(basis)))) > tol:
            raise ValueError("purifier basis is not orthonormal")

    lhs = complex(np.vdot(gamma_u.amplitudes, gamma_v.amplitudes))
    terms = []
    rhs = 0j
    covered_u = 0.0
    covered_v = 0.0
    for right in basis:
        comp_u = mat_u @ right.conj()
        comp_v = mat_v @ right.conj()
        s = float(np.linalg.norm(comp_u))
        norm_v = float(np.linalg.norm(comp_v))
        covered_u += s ** 2
        covered_v += norm_v ** 2
        if s <= tol and norm_v <= tol:
            continue
        if abs(norm_v - s) > max(tol, 1e-9):
            raise ValueError("purifier bases do not match between the two states")
        term = complex(s * s * np.vdot(comp_u / s, comp_v / norm_v))
        terms.append(term)
        rhs += term
    if abs(covered_u - 1.0) > max(tol, 1e-9) or abs(covered_v - 1.0) > max(tol, 1e-9):
        raise ValueError("purifier support falls outside the shared basis")
    base = _identity_report(lhs, rhs, tol)
    return PurifiedOverlapReport(
        lhs=base.lhs, rhs=base.rhs, residual=base.residual, satisfied=base.satisfied,
        terms=tuple(terms), orthogonal=bool(abs(lhs) < tol),
    )


@dataclass(frozen=True)
class BellDemoReport:
    """Copying the relative phase of a Bell pair: a global record with no
    local trace."""

    global_overlap: complex
    reduced_overlap_before: float
    reduced_overlap_after: float
    reduced_states_equal: bool
    tag_overlap: float
    global_verdict: ActionabilityVerdict
    local_verdict: ActionabilityVerdict

    @property
    def passed(self) -> bool:
        return (
            abs(self.global_overlap) < 1e-12
            and abs(self.reduced_overlap_before - 0.5) < TOL_ALG
            and abs(self.reduced_overlap_after - 0.5) < TOL_ALG
            and self.reduced_states_equal
            and self.tag_overlap < TOL_ALG
            and self.global_verdict.actionable
            and not self.local_verdict.actionable
            and self.local_verdict.best_score < TOL_OPT
        )


def bell_phase_demo(config: OptimizationConfig) -> BellDemoReport:
    """Tag the two opposite-phase Bell pairs and inspect where the
    distinguishing information lives.

    The two pairs have identical reduced states on either half, so no
    coupling to one half alone can steer a test system; a coupling to the
    joint system writes orthogonal tags on the apparatus, and those tags are
    actionable.
    """
    from .copy_dynamics import TagSpec, build_controlled_copy

    root2 = np.sqrt(2.0)
    gamma_p = StateVector(np.array([1, 0, 0, 1]) / root2, CompositeDims((2, 2)))
    gamma_m = StateVector(np.array([1, 0, 0, -1]) / root2, CompositeDims((2, 2)))

    global_overlap = gamma_p.overlap(gamma_m)
    red_p = partial_trace(pure_density(gamma_p), (0,))
    red_m = partial_trace(pure_density(gamma_m), (0,))
    before = hs_inner(red_p, red_m)

    # Record subspaces on the joint pair: each phase eigenstate plus the
    # untouched remainder, tagged on a single apparatus qubit.
    p_plus = np.outer(gamma_p.amplitudes, gamma_p.amplitudes.conj())
    p_minus = np.outer(gamma_m.amplitudes, gamma_m.amplitudes.conj())
    p_rest = np.eye(4) - p_plus - p_minus
    decomp = RecordDecomposition((p_plus, p_minus, p_rest), (1.0, -1.0, 0.0))
    tags = TagSpec(basis_state((2,), 0), (basis_state((2,), 0), basis_state((2,), 1), basis_state((2,), 0)))
    copy = build_controlled_copy(decomp, tags)

    post = []
    for gamma in (gamma_p, gamma_m):
        amps = copy.matrix @ np.kron(gamma.amplitudes, tags.ready_state.amplitudes)
        post.append(pure_density(StateVector(amps, CompositeDims((2, 2, 2)))))
    post_p, post_m = post

    rec_overlap = hs_inner(partial_trace(post_p, (2,)), partial_trace(post_m, (2,)))
    red_after_p = partial_trace(post_p, (0,))
    red_after_m = partial_trace(post_m, (0,))
    after = hs_inner(red_after_p, red_after_m)
    equal = (
        np.max(np.abs(red_after_p.matrix - red_p.matrix)) < TOL_ALG
        and np.max(np.abs(red_after_m.matrix - red_m.matrix)) < TOL_ALG
    )

    global_verdict = actionability_test(post_p, post_m, 2, 2, config)
    local_verdict = actionability_test(pure_density(gamma_p), pure_density(gamma_m), 0, 2, config)

    return BellDemoReport(
        global_overlap=global_overlap,
        reduced_overlap_before=float(before),
        reduced_overlap_after=float(after),
        reduced_states_equal=bool(equal),
        tag_overlap=float(rec_overlap),
        global_verdict=global_verdict,
        local_verdict=local_verdict,
    )
