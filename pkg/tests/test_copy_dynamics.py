"""Tagging unitaries and copy chains: construction, repeatability, bookkeeping."""

import numpy as np
import pytest

import qreclab.hilbert as hb
from qreclab.copy_dynamics import (
    CopyChain,
    RecordDecomposition,
    TagSpec,
    build_controlled_copy,
    controlled_apparatus_unitary,
    extract_record,
    random_confined_density,
    random_decomposition,
    random_disturbances,
    random_tag_spec,
    record_overlap,
    run_copy_chain,
    run_mixed_copy,
)
from qreclab.hilbert import (
    StateVector,
    basis_state,
    hs_inner,
    partial_trace,
    pure_density,
    random_density,
    random_unitary,
)

TOL = 1e-9

CNOT = np.array([
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
], dtype=complex)


def qubit_decomposition():
    return RecordDecomposition((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), (0.0, 1.0))


def computational_tags():
    return TagSpec(basis_state((2,), 0), (basis_state((2,), 0), basis_state((2,), 1)))


class TestBuildControlledCopy:
    def test_computational_case_is_cnot(self):
        v = build_controlled_copy(qubit_decomposition(), computational_tags())
        assert np.array_equal(v.matrix, CNOT)

    def test_equal_tags_transfer_nothing(self):
        tags = TagSpec(basis_state((2,), 0), (basis_state((2,), 0), basis_state((2,), 0)))
        v = build_controlled_copy(qubit_decomposition(), tags)
        assert np.allclose(v.matrix, np.eye(4), atol=TOL)
        # tag overlap |<A_u|A_v>| = 1: no information acquired
        rec_u = partial_trace(hb.apply_to_density(
            pure_density(tensor2(basis_state((2,), 0), basis_state((2,), 0))), v), (1,))
        rec_v = partial_trace(hb.apply_to_density(
            pure_density(tensor2(basis_state((2,), 1), basis_state((2,), 0))), v), (1,))
        assert record_overlap(rec_u, rec_v) == pytest.approx(1.0, abs=TOL)

    def test_disturbed_subspace_still_tags_purely(self):
        # Two 2-dim record subspaces of a dim-4 system with nontrivial
        # rotations inside each; a superposition within one subspace must
        # still leave the tag factor pure.  Oracle: direct matrix action
        # plus partial-trace purity.
        rng = np.random.default_rng(5)
        decomp = random_decomposition(4, (2, 2), rng)
        decomp = random_disturbances(decomp, rng)
        tags = random_tag_spec(2, 2, rng)
        v = build_controlled_copy(decomp, tags)
        w, vecs = np.linalg.eigh(decomp.projectors[0])
        cols = vecs[:, w > 0.5]
        alpha, beta = 0.6, 0.8
        u_state = alpha * cols[:, 0] + beta * cols[:, 1]
        out = v.matrix @ np.kron(u_state, tags.ready_state.amplitudes)
        rho = pure_density(StateVector(out, hb.CompositeDims((4, 2))))
        tag_factor = partial_trace(rho, (1,))
        assert tag_factor.purity() == pytest.approx(1.0, abs=TOL)
        # the system state moved, but only inside its record subspace
        sys_factor = partial_trace(rho, (0,))
        proj = decomp.projectors[0]
        assert np.trace(proj @ sys_factor.matrix).real == pytest.approx(1.0, abs=TOL)

    def test_tag_count_mismatch(self):
        tags = TagSpec(basis_state((2,), 0), (basis_state((2,), 0),))
        with pytest.raises(ValueError):
            build_controlled_copy(qubit_decomposition(), tags)

    def test_unitarity_for_random_scenarios(self):
        rng = np.random.default_rng(6)
        for _ in range(15):
            dim = int(rng.integers(2, 5))
            sizes = [1] * dim if rng.random() < 0.3 else None
            if sizes is None:
                first = int(rng.integers(1, dim))
                sizes = [first, dim - first]
            decomp = random_decomposition(dim, sizes, rng)
            if rng.random() < 0.5:
                decomp = random_disturbances(decomp, rng)
            tags = random_tag_spec(int(rng.integers(2, 4)), decomp.size, rng)
            v = build_controlled_copy(decomp, tags)
            assert np.max(np.abs(v.matrix.conj().T @ v.matrix - np.eye(v.dim))) < TOL

    def test_block_diagonality_without_disturbance(self):
        # Copying never moves the system between record subspaces.
        rng = np.random.default_rng(7)
        decomp = random_decomposition(4, (2, 2), rng)
        tags = random_tag_spec(2, 2, rng)
        v = build_controlled_copy(decomp, tags)
        for proj in decomp.projectors:
            lifted = np.kron(proj, np.eye(2))
            comm = v.matrix @ lifted - lifted @ v.matrix
            assert np.max(np.abs(comm)) < TOL


def tensor2(a, b):
    return hb.tensor_product(a, b)


class TestRecordDecomposition:
    def test_incomplete_rejected(self):
        with pytest.raises(ValueError):
            RecordDecomposition((np.diag([1.0, 0.0]),), (0.0,))

    def test_non_orthogonal_rejected(self):
        p = np.array([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValueError):
            RecordDecomposition((p, np.diag([1.0, 0.0])), (0.0, 1.0))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            RecordDecomposition((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), (1.0, 1.0))

    def test_disturbance_outside_subspace_rejected(self):
        flip = np.array([[0, 1], [1, 0]], dtype=complex)
        with pytest.raises(ValueError):
            RecordDecomposition(
                (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), (0.0, 1.0),
                branch_disturbance=(flip, np.eye(2)))

    def test_observable(self):
        decomp = RecordDecomposition(
            (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), (2.0, -1.0))
        assert np.allclose(decomp.observable(), np.diag([2.0, -1.0]))


class TestRunCopyChain:
    def test_confined_input_stamps_every_apparatus(self):
        chain = CopyChain(2, (2, 2), qubit_decomposition(),
                          (computational_tags(), computational_tags()))
        result = run_copy_chain(pure_density(basis_state((2,), 0)), chain)
        target = pure_density(basis_state((2,), 0)).matrix
        for k in range(2):
            assert np.allclose(result.record_state(2, k).matrix, target, atol=TOL)

    def test_mixture_across_subspaces_copies_classically(self):
        # Oracle: direct density-matrix evolution with explicitly assembled
        # unitaries at S dim 4, two qubit apparatuses.
        rng = np.random.default_rng(8)
        decomp = random_decomposition(4, (2, 2), rng)
        tags = random_tag_spec(2, 2, rng)
        chain = CopyChain(4, (2, 2), decomp, (tags, tags))
        rho_one = random_confined_density(decomp, 0, 2, rng)
        rho_two = random_confined_density(decomp, 1, 1, rng)
        weights = (0.3, 0.7)
        rho = hb.DensityOperator(weights[0] * rho_one.matrix + weights[1] * rho_two.matrix)
        result = run_copy_chain(rho, chain)

        v = build_controlled_copy(decomp, tags).matrix
        eye2 = np.eye(2)
        step_a = np.kron(v, eye2)
        # step b acts on (system, apparatus 2): assemble entrywise
        v4 = v.reshape(4, 2, 4, 2)
        step_b = np.einsum("iajb,cd->icajdb", v4, eye2).reshape(16, 16)
        ready = tags.ready_state.amplitudes
        ready_mat = np.outer(ready, ready.conj())
        full = np.kron(np.kron(rho.matrix, ready_mat), ready_mat)
        evolved = step_b @ (step_a @ full @ step_a.conj().T) @ step_b.conj().T
        assert np.max(np.abs(evolved - result.final.matrix)) < TOL

        # reduced apparatus state is the weight-matched mixture of tag projectors
        tag_mats = [np.outer(t.amplitudes, t.amplitudes.conj()) for t in tags.tag_states]
        expected = weights[0] * tag_mats[0] + weights[1] * tag_mats[1]
        for k in range(2):
            assert np.allclose(result.record_state(2, k).matrix, expected, atol=TOL)

    def test_disturbance_changes_system_but_not_records(self):
        rng = np.random.default_rng(9)
        decomp = random_decomposition(4, (2, 2), rng)
        disturbed = random_disturbances(decomp, rng)
        tags = random_tag_spec(2, 2, rng)
        chain = CopyChain(4, (2, 2), disturbed, (tags, tags))
        rho = random_confined_density(decomp, 0, 2, rng)
        result = run_copy_chain(rho, chain)
        moved = np.max(np.abs(result.system_state(2).matrix - rho.matrix))
        assert moved > 1e-3
        tag_mat = pure_density(tags.tag_states[0]).matrix
        for k in range(2):
            rec = result.record_state(2, k)
            assert hs_inner(rec, hb.DensityOperator(tag_mat)) == pytest.approx(1.0, abs=TOL)

    def test_chain_repeatability_property(self):
        # Inputs confined to one record subspace leave every apparatus in the
        # same record state.
        rng = np.random.default_rng(10)
        for _ in range(5):
            decomp = random_disturbances(random_decomposition(3, (1, 2), rng), rng)
            tags = random_tag_spec(2, 2, rng)
            chain = CopyChain(3, (2, 2), decomp, (tags, tags))
            rho = random_confined_density(decomp, 1, 2, rng)
            result = run_copy_chain(rho, chain)
            rec_first = result.record_state(2, 0).matrix
            rec_second = result.record_state(2, 1).matrix
            assert np.max(np.abs(rec_first - rec_second)) < TOL

    def test_degeneracy_invariance(self):
        # Any two states inside the same record subspace deposit the same
        # record.
        rng = np.random.default_rng(11)
        decomp = random_disturbances(random_decomposition(4, (2, 2), rng), rng)
        tags = random_tag_spec(3, 2, rng)
        chain = CopyChain(4, (2, 3), decomp, (random_tag_spec(2, 2, rng), tags))
        records = []
        for _ in range(2):
            rho = random_confined_density(decomp, 0, int(rng.integers(1, 3)), rng)
            result = run_copy_chain(rho, chain)
            records.append([result.record_state(2, k).matrix for k in range(2)])
        for rec_a, rec_b in zip(*records):
            assert np.max(np.abs(rec_a - rec_b)) < TOL

    def test_norm_bookkeeping_product_formula(self):
        # After n steps the composite overlap factorizes into the original
        # overlap times the product of record overlaps.
        rng = np.random.default_rng(12)
        decomp = random_disturbances(random_decomposition(4, (2, 2), rng), rng)
        tags_a = random_tag_spec(2, 2, rng)
        tags_b = random_tag_spec(3, 2, rng)
        chain = CopyChain(4, (2, 3), decomp, (tags_a, tags_b))
        rho_u = random_confined_density(decomp, 0, 2, rng)
        rho_v = random_confined_density(decomp, 1, 2, rng)
        res_u = run_copy_chain(rho_u, chain)
        res_v = run_copy_chain(rho_v, chain)
        lhs = hs_inner(rho_u, rho_v)
        sys_overlap = hs_inner(res_u.system_state(2), res_v.system_state(2))
        product = sys_overlap
        for k in range(2):
            product *= record_overlap(res_u.record_state(2, k), res_v.record_state(2, k))
        composite = hs_inner(res_u.final, res_v.final)
        assert composite == pytest.approx(lhs, abs=TOL)
        assert product == pytest.approx(lhs, abs=TOL)

    def test_environment_factor_is_inert(self):
        chain = CopyChain(2, (2,), qubit_decomposition(), (computational_tags(),),
                          environment_dim=3)
        result = run_copy_chain(pure_density(basis_state((2,), 0)), chain)
        assert tuple(result.final.dims) == (2, 2, 3)
        env = partial_trace(result.final, (2,))
        assert np.allclose(env.matrix, pure_density(basis_state((3,), 0)).matrix, atol=TOL)

    def test_dimension_mismatch(self):
        chain = CopyChain(2, (2,), qubit_decomposition(), (computational_tags(),))
        with pytest.raises(ValueError):
            run_copy_chain(random_density(3, 1, 1), chain)


class TestExtractRecord:
    def test_before_any_step_ready_state(self):
        chain = CopyChain(2, (2,), qubit_decomposition(), (computational_tags(),))
        result = run_copy_chain(pure_density(basis_state((2,), 0)), chain)
        rec = result.record_state(0, 0)
        assert np.allclose(rec.matrix, pure_density(basis_state((2,), 0)).matrix, atol=TOL)

    def test_after_one_step_pure_tag(self):
        chain = CopyChain(2, (2,), qubit_decomposition(), (computational_tags(),))
        result = run_copy_chain(pure_density(basis_state((2,), 1)), chain)
        rec = extract_record(result.final, chain, 0)
        assert np.allclose(rec.matrix, pure_density(basis_state((2,), 1)).matrix, atol=TOL)

    def test_mixed_tag_scenario_matches_partial_trace(self):
        rng = np.random.default_rng(13)
        ready = random_density(2, 2, rng)
        coupling = random_unitary(4, rng).with_dims((2, 2))
        result = run_mixed_copy(random_density(2, 1, rng), [ready], [coupling])
        rec = result.record_state(1, 0)
        oracle = partial_trace(result.final, (1,))
        assert np.max(np.abs(rec.matrix - oracle.matrix)) < TOL

    def test_invalid_index(self):
        chain = CopyChain(2, (2,), qubit_decomposition(), (computational_tags(),))
        result = run_copy_chain(pure_density(basis_state((2,), 0)), chain)
        with pytest.raises(IndexError):
            extract_record(result.final, chain, 1)


class TestRecordOverlap:
    def test_orthogonal_pure_tags(self):
        assert record_overlap(pure_density(basis_state((2,), 0)),
                              pure_density(basis_state((2,), 1))) == pytest.approx(0.0, abs=TOL)

    def test_identical_tags(self):
        rec = pure_density(basis_state((2,), 0))
        assert record_overlap(rec, rec) == pytest.approx(1.0, abs=TOL)

    def test_cosine_pair(self):
        theta = np.pi / 6
        a = basis_state((2,), 0)
        b = StateVector(np.array([np.cos(theta), np.sin(theta)]))
        assert record_overlap(pure_density(a), pure_density(b)) == pytest.approx(0.75, abs=TOL)


class TestMixedCopy:
    def test_conditional_coupling_writes_mixed_records(self):
        ready = random_density(4, 2, 99)
        w, vecs = np.linalg.eigh(ready.matrix)
        vecs = vecs[:, np.argsort(w)[::-1]]
        swap = np.zeros((4, 4), dtype=complex)
        swap[:, :2] = vecs[:, 2:]
        swap[:, 2:] = vecs[:, :2]
        shift = swap @ vecs.conj().T
        decomp = qubit_decomposition()
        coupling = controlled_apparatus_unitary(decomp, [np.eye(4), shift])
        res_u = run_mixed_copy(pure_density(basis_state((2,), 0)), [ready], [coupling])
        res_v = run_mixed_copy(pure_density(basis_state((2,), 1)), [ready], [coupling])
        rec_u = res_u.record_state(1, 0)
        rec_v = res_v.record_state(1, 0)
        assert record_overlap(rec_u, rec_v) == pytest.approx(0.0, abs=TOL)
        assert rec_u.purity() < 1.0 - 1e-6

    def test_environment_passthrough(self):
        env = random_density(2, 2, 3)
        coupling = random_unitary(4, 4).with_dims((2, 2))
        result = run_mixed_copy(random_density(2, 1, 5), [random_density(2, 1, 6)],
                                [coupling], environment=env)
        assert tuple(result.final.dims) == (2, 2, 2)
        recovered = partial_trace(result.final, (2,))
        assert np.max(np.abs(recovered.matrix - env.matrix)) < TOL
