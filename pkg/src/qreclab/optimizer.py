"""Search over the unitary group for the theorem verifiers.

Unitaries are parameterized through the exponential map over a fixed
Hermitian operator basis (identity plus generalized Gell-Mann matrices).
Objectives are maximized by multi-restart quasi-Newton descent on a
penalized objective, with the penalty weight raised over a short ladder of
continuation stages so that soft constraints end up satisfied to tight
tolerance.  Gradients come either from caller-supplied adjoints (exact,
propagated through the exponential map) or from finite differences.

Everything is deterministic for a fixed seed; restarts are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .hilbert import CompositeDims, UnitaryOperator, _ptrace, basis_state

__all__ = [
    "UnitaryParameterization",
    "OptimizationConfig",
    "Constraint",
    "SearchResult",
    "hermitian_basis",
    "exp_unitary",
    "log_unitary",
    "maximize",
    "maximize_problem",
    "sweep_overlap_frontier",
]

# Penalty continuation ladder: multiples of the configured penalty weight
# applied in successive descent stages.  The gentle first stage lets the
# score term steer exploration before the constraints clamp the iterate to
# the feasible set, which matters for capturing global optima.
_LADDER = (1e-3, 1.0, 1e3, 1e6, 1e8)


@lru_cache(maxsize=None)
def hermitian_basis(dim: int) -> tuple:
    """Identity plus generalized Gell-Mann matrices, dim^2 operators.

    Order: identity, then for each pair j < k (lexicographic) the symmetric
    and antisymmetric off-diagonal generators, then the d-1 diagonal ones.
    All non-identity elements satisfy Tr(G_a G_b) = 2 delta_ab.
    """
    mats = [np.eye(dim, dtype=complex)]
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            mats.append(sym)
            anti = np.zeros((dim, dim), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats.append(anti)
    for l in range(1, dim):
        diag = np.zeros((dim, dim), dtype=complex)
        for m in range(l):
            diag[m, m] = 1.0
        diag[l, l] = -l
        mats.append(diag * math.sqrt(2.0 / (l * (l + 1))))
    for m in mats:
        m.setflags(write=False)
    return tuple(mats)


@lru_cache(maxsize=None)
def _basis_stack(dim: int) -> np.ndarray:
    stack = np.stack(hermitian_basis(dim))
    stack.setflags(write=False)
    return stack


@dataclass(frozen=True, eq=False)
class UnitaryParameterization:
    """Coordinates of a Hermitian generator in the fixed operator basis."""

    dim: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coefficients, dtype=float)
        if coeffs.shape != (self.dim * self.dim,):
            raise ValueError(f"expected {self.dim ** 2} coefficients, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    def generator(self) -> np.ndarray:
        return np.tensordot(self.coefficients, _basis_stack(self.dim), axes=1)


def _exp_eig(coeffs: np.ndarray, dim: int) -> tuple:
    h = np.tensordot(coeffs, _basis_stack(dim), axes=1)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(1j * w)) @ v.conj().T
    return u, w, v


def _exp_matrix(coeffs: np.ndarray, dim: int) -> np.ndarray:
    return _exp_eig(coeffs, dim)[0]


def exp_unitary(p: UnitaryParameterization) -> UnitaryOperator:
    """U = exp(i H(p)); unitary for any finite coefficient vector."""
    return UnitaryOperator(_exp_matrix(p.coefficients, p.dim), CompositeDims((p.dim,)))


def log_unitary(u: UnitaryOperator | np.ndarray, dim: int | None = None) -> UnitaryParameterization:
    """Coefficient vector whose exp-map reproduces the given unitary.

    Uses the principal branch: eigenphases are taken in (-pi, pi].
    """
    mat = u.matrix if isinstance(u, UnitaryOperator) else np.asarray(u, dtype=complex)
    d = mat.shape[0]
    # Unitary matrices are normal, so the complex Schur form is diagonal with
    # orthonormal vectors even for degenerate eigenvalues.
    from scipy.linalg import schur

    t, q = schur(mat, output="complex")
    phases = np.angle(np.diagonal(t))
    h = (q * phases) @ q.conj().T
    basis = hermitian_basis(d)
    coeffs = np.empty(d * d)
    coeffs[0] = np.trace(h).real / d
    for a in range(1, d * d):
        coeffs[a] = np.einsum("ij,ji->", basis[a], h).real / 2.0
    return UnitaryParameterization(d, coeffs)


def _grad_through_exp(adjoint: np.ndarray, w: np.ndarray, v: np.ndarray, dim: int) -> np.ndarray:
    """Chain an adjoint dF = 2 Re Tr[adjoint dU] through U = exp(iH(x)).

    Uses the spectral (Loewner) form of the exponential's directional
    derivative; the divided difference is evaluated through a sinc so
    degenerate eigenvalues are handled smoothly.
    """
    delta = w[:, None] - w[None, :]
    phi = 1j * np.exp(0.5j * (w[:, None] + w[None, :])) * np.sinc(delta / (2.0 * np.pi))
    p = v.conj().T @ adjoint @ v
    z = v @ (p * phi.T) @ v.conj().T
    return 2.0 * np.real(np.einsum("aij,ji->a", _basis_stack(dim), z))


@dataclass(frozen=True)
class OptimizationConfig:
    """Search budget and reproducibility knobs.

    step_init scales the Gaussian spread of the random initial coefficients;
    convergence_tol is the gradient-norm target of each descent stage.
    """

    restarts: int = 64
    max_iterations: int = 2000
    seed: int = 0
    penalty_weight: float = 1e3
    convergence_tol: float = 1e-10
    step_init: float = 0.5

    def __post_init__(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValueError("restarts and max_iterations must be positive")
        if self.penalty_weight <= 0 or self.convergence_tol <= 0 or self.step_init <= 0:
            raise ValueError("penalty_weight, convergence_tol and step_init must be positive")


@dataclass(frozen=True)
class Constraint:
    """Named soft constraint: fn(U) is a nonnegative smooth residual, zero
    exactly on the feasible set, penalized as penalty_weight * fn."""

    name: str
    fn: object
    tol: float = 1e-12


@dataclass(frozen=True, eq=False)
class SearchResult:
    best_score: float
    best_params: UnitaryParameterization
    constraint_residuals: dict
    iterations_used: int
    restart_index: int
    feasible: bool
    budget_exhausted: bool


class SearchProblem:
    """Fused objective/constraint evaluation for one search.

    evaluate(u) returns (score, residuals) with residuals a dict of smooth
    nonnegative constraint values, one per entry of `constraints`.
    Subclasses that can compute adjoints set has_adjoints and override
    loss_with_adjoint(u, w_score, lam), returning the penalized loss
    w_pen * sum(residuals) - w_score * score together with the matrix B such
    that d(loss) = 2 Re Tr[B dU].
    """

    has_adjoints: bool = False
    constraints: tuple = ()

    def evaluate(self, u: np.ndarray) -> tuple:
        raise NotImplementedError

    def loss_with_adjoint(self, u: np.ndarray, w_score: float, lam: float):
        raise NotImplementedError


class _CallableProblem(SearchProblem):
    """Objective plus independent constraint callables, no adjoints."""

    def __init__(self, objective, penalties):
        self.objective = objective
        self.constraints = tuple(penalties)

    def evaluate(self, u: np.ndarray) -> tuple:
        score = float(self.objective(u))
        residuals = {c.name: float(c.fn(u)) for c in self.constraints}
        return score, residuals


def _lbfgs(fun, x0: np.ndarray, maxiter: int, gtol: float, memory: int = 10) -> tuple:
    """Minimal deterministic L-BFGS with Armijo backtracking.

    `fun` returns (value, gradient).  Returns (x, iterations).
    """
    x = x0
    f, g = fun(x)
    s_list, y_list, rho_list = [], [], []
    nit = 0
    while nit < maxiter:
        if np.max(np.abs(g)) < gtol:
            break
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
            a = rho * np.dot(s, q)
            alphas.append(a)
            q -= a * y
        if y_list:
            q *= np.dot(s_list[-1], y_list[-1]) / np.dot(y_list[-1], y_list[-1])
        for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
            q += (a - rho * np.dot(y, q)) * s
        d = -q
        dg = np.dot(d, g)
        if dg >= 0.0:
            d = -g
            dg = -np.dot(g, g)
            s_list, y_list, rho_list = [], [], []
        step = 1.0
        improved = False
        for _ in range(30):
            xn = x + step * d
            fn, gn = fun(xn)
            if fn <= f + 1e-4 * step * dg:
                improved = True
                break
            step *= 0.5
        nit += 1
        if not improved:
            break
        s = xn - x
        y = gn - g
        sy = np.dot(s, y)
        if sy > 1e-12 * (np.linalg.norm(s) * np.linalg.norm(y) + 1e-300):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)
        stalled = (f - fn) <= 1e-18 * max(1.0, abs(f))
        x, f, g = xn, fn, gn
        if stalled:
            break
    return x, nit


def _stage_minimize(problem: SearchProblem, x0: np.ndarray, lam: float, dim: int,
                    maxiter: int, gtol: float, feasibility_only: bool = False) -> tuple:
    """One descent stage.  With feasibility_only the score term is dropped,
    which leaves a well-conditioned projection onto the constraint set."""
    w_score = 0.0 if feasibility_only else 1.0
    w_pen = 1.0 if feasibility_only else lam
    if problem.has_adjoints:
        def fun(x):
            u, w, v = _exp_eig(x, dim)
            loss, _, adjoint = problem.loss_with_adjoint(u, w_score, w_pen)
            return loss, _grad_through_exp(adjoint, w, v, dim)

        return _lbfgs(fun, x0, maxiter, gtol)

    def fun(x):
        u = _exp_matrix(x, dim)
        score, residuals = problem.evaluate(u)
        return -(w_score * score - w_pen * sum(residuals.values()))

    res = minimize(fun, x0, jac=None, method="L-BFGS-B",
                   options={"maxiter": maxiter, "ftol": 1e-18, "gtol": gtol, "maxls": 40})
    return res.x, int(res.nit)


def maximize_problem(problem: SearchProblem, config: OptimizationConfig, dim: int) -> SearchResult:
    """Restart engine shared by all searches; see `maximize`."""
    n = dim * dim
    stage_iters = max(25, config.max_iterations // len(_LADDER))
    endpoints = []
    total_iters = 0
    def _descend(x, ladder):
        nonlocal total_iters
        for stage, mult in enumerate(ladder):
            # Early stages only need to hand a decent iterate to the next
            # one; grind to full precision only at the end.
            gtol = config.convergence_tol if stage == len(ladder) - 1 else 10.0 ** (-5 - stage)
            x, nit = _stage_minimize(
                problem, x, config.penalty_weight * mult, dim,
                stage_iters, gtol)
            total_iters += nit
        if problem.constraints:
            # The stiff final penalty stage can stall a hair outside the
            # tolerances; finish with a plain descent on the residuals alone.
            x, nit = _stage_minimize(
                problem, x, 1.0, dim, stage_iters, config.convergence_tol,
                feasibility_only=True)
            total_iters += nit
        score, residuals = problem.evaluate(_exp_matrix(x, dim))
        feasible = all(residuals[c.name] < c.tol for c in problem.constraints)
        return x, float(score), residuals, feasible

    for i in range(config.restarts):
        rng = np.random.default_rng([config.seed, i])
        x, score, residuals, feasible = _descend(
            config.step_init * rng.standard_normal(n), _LADDER)
        # Constraint residuals occasionally settle in a shallow spurious
        # valley; a small deterministic kick and another descent from the
        # high-penalty stages escapes it.
        rescues = 0
        while not feasible and rescues < 2:
            kick = 0.02 * config.step_init * rng.standard_normal(n)
            x, score, residuals, feasible = _descend(x + kick, _LADDER[-2:])
            rescues += 1
        endpoints.append((i, x, score, residuals, feasible))

    feasible_points = [e for e in endpoints if e[4]]
    pool = feasible_points if feasible_points else endpoints
    best = max(pool, key=lambda e: (e[2], -e[0]))
    i, x, score, residuals, feasible = best
    return SearchResult(
        best_score=score,
        best_params=UnitaryParameterization(dim, x),
        constraint_residuals={k: float(r) for k, r in residuals.items()},
        iterations_used=total_iters,
        restart_index=i,
        feasible=feasible,
        budget_exhausted=not feasible_points,
    )


def maximize(objective, penalties, config: OptimizationConfig, dim: int) -> SearchResult:
    """Multi-restart penalized maximization over unitaries of size `dim`.

    `objective` and each `Constraint.fn` take the candidate unitary as a
    complex ndarray and must be pure functions.  Each restart descends on
    objective - weight * sum(residuals) from Gaussian random coefficients
    seeded by (config.seed, restart index), with the weight raised from
    config.penalty_weight over the continuation ladder.  The winner is the
    feasible endpoint (every residual below its tolerance, re-evaluated from
    the endpoint parameters, not from optimizer internals) with the highest
    objective; ties go to the lowest restart index.  If no restart ends
    feasible, the best endpoint is returned with budget_exhausted=True.
    """
    return maximize_problem(_CallableProblem(objective, penalties), config, dim)


def sweep_overlap_frontier(overlap_grid, config: OptimizationConfig):
    """Best repeatable tag distinguishability versus original-state overlap.

    For each grid value s, prepares qubit originals with <u|v> = s and
    searches couplings of the system to a qubit apparatus that maximize
    1 - Tr(rec_u rec_v), penalizing any change of the reduced system states.
    Returns a list of (s, max_tag_distinguishability) rows.
    """
    from .hilbert import DensityOperator, StateVector
    from .theorems import tag_distinguishability_search

    table = []
    for idx, s in enumerate(overlap_grid):
        s = float(s)
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"grid value {s} outside [0, 1]")
        u_vec = np.array([1.0, 0.0], dtype=complex)
        v_vec = np.array([s, math.sqrt(max(0.0, 1.0 - s * s))], dtype=complex)
        rho_u = DensityOperator(np.outer(u_vec, u_vec.conj()))
        rho_v = DensityOperator(np.outer(v_vec, v_vec.conj()))
        point_seed = int(np.random.default_rng([config.seed, idx]).integers(2 ** 31))
        point_config = OptimizationConfig(
            restarts=config.restarts, max_iterations=config.max_iterations,
            seed=point_seed, penalty_weight=config.penalty_weight,
            convergence_tol=config.convergence_tol, step_init=config.step_init)
        result = tag_distinguishability_search(rho_u, rho_v, 2, point_config)
        table.append((s, float(result.distinguishability)))
    return table
