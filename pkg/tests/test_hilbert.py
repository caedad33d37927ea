"""Core linear-algebra layer: composition, reduction, decomposition, sampling."""

import numpy as np
import pytest

import qreclab.hilbert as hb
from qreclab.hilbert import (
    CompositeDims,
    DensityOperator,
    StateVector,
    UnitaryOperator,
    basis_state,
    hs_inner,
    partial_trace,
    pure_density,
    purify,
    random_density,
    random_unitary,
    schmidt_decompose,
    support_overlap,
    tensor_product,
)

TOL = 1e-9


def bell_plus():
    return StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2), CompositeDims((2, 2)))


def random_state(dim, rng):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(v / np.linalg.norm(v))


class TestTensorProduct:
    def test_basis_state_composition(self):
        psi = tensor_product(basis_state((2,), 0), basis_state((2,), 0))
        assert np.allclose(psi.amplitudes, [1, 0, 0, 0])
        assert tuple(psi.dims) == (2, 2)

    def test_identity_case(self):
        eye2 = UnitaryOperator(np.eye(2))
        eye4 = tensor_product(eye2, eye2)
        assert np.allclose(eye4.matrix, np.eye(4))

    def test_sigma_z_on_plus_zero_matches_hand_expansion(self):
        # Oracle: the 4x4 matrix and the product written out entry by entry.
        sz = UnitaryOperator(np.diag([1.0, -1.0]))
        eye = UnitaryOperator(np.eye(2))
        op = tensor_product(sz, eye)
        hand_matrix = np.array([
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, -1, 0],
            [0, 0, 0, -1],
        ], dtype=complex)
        assert np.allclose(op.matrix, hand_matrix)
        plus = StateVector(np.array([1, 1]) / np.sqrt(2))
        state = tensor_product(plus, basis_state((2,), 0))
        expected = hand_matrix @ state.amplitudes
        assert np.allclose(op.matrix @ state.amplitudes, expected)
        # minus-component flips sign
        assert np.allclose(expected, np.array([1, 0, -1, 0]) / np.sqrt(2))

    def test_mixed_kinds_rejected(self):
        with pytest.raises(TypeError):
            tensor_product(basis_state((2,), 0), UnitaryOperator(np.eye(2)))


class TestPartialTrace:
    def test_bell_reduction_is_maximally_mixed(self):
        rho = pure_density(bell_plus())
        reduced = partial_trace(rho, (0,))
        assert np.allclose(reduced.matrix, np.eye(2) / 2, atol=TOL)

    def test_product_state_reduction(self):
        rng = np.random.default_rng(1)
        rho_a = random_density(2, 2, rng)
        rho_b = random_density(3, 1, rng)
        composite = tensor_product(rho_a, rho_b)
        assert np.allclose(partial_trace(composite, (0,)).matrix, rho_a.matrix, atol=TOL)
        assert np.allclose(partial_trace(composite, (1,)).matrix, rho_b.matrix, atol=TOL)

    def test_reduced_sides_share_nonzero_spectrum(self):
        # Oracle: full eigendecomposition of both reductions.
        rng = np.random.default_rng(2)
        psi = StateVector(
            (lambda v: v / np.linalg.norm(v))(
                rng.standard_normal(6) + 1j * rng.standard_normal(6)),
            CompositeDims((2, 3)))
        rho = pure_density(psi)
        eig_a = np.linalg.eigvalsh(partial_trace(rho, (0,)).matrix)
        eig_b = np.linalg.eigvalsh(partial_trace(rho, (1,)).matrix)
        nz_a = np.sort(eig_a[eig_a > 1e-12])
        nz_b = np.sort(eig_b[eig_b > 1e-12])
        assert np.allclose(nz_a, nz_b, atol=TOL)

    def test_invalid_index(self):
        rho = random_density(4, 2, 3).with_dims((2, 2))
        with pytest.raises(IndexError):
            partial_trace(rho, (2,))

    def test_trace_preserved(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            rho = random_density(8, 3, rng).with_dims((2, 2, 2))
            reduced = partial_trace(rho, (0, 2))
            assert abs(np.trace(reduced.matrix) - 1.0) < TOL

    def test_kept_factor_order_preserved(self):
        rho_a = random_density(2, 1, 11)
        rho_b = random_density(3, 1, 12)
        rho_c = random_density(2, 2, 13)
        composite = tensor_product(tensor_product(rho_a, rho_b), rho_c)
        reduced = partial_trace(composite, (2, 0))
        expected = tensor_product(rho_a, rho_c)
        assert np.allclose(reduced.matrix, expected.matrix, atol=TOL)


class TestHsInner:
    def test_orthogonal_supports(self):
        assert hs_inner(pure_density(basis_state((2,), 0)),
                        pure_density(basis_state((2,), 1))) == pytest.approx(0.0, abs=TOL)

    def test_maximally_mixed_qubit(self):
        mixed = DensityOperator(np.eye(2) / 2)
        assert hs_inner(mixed, mixed) == pytest.approx(0.5, abs=TOL)

    def test_self_inner_equals_sum_of_squared_eigenvalues(self):
        rho = random_density(3, 2, 5)
        eigs = np.linalg.eigvalsh(rho.matrix)
        assert hs_inner(rho, rho) == pytest.approx(float(np.sum(eigs ** 2)), abs=TOL)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            hs_inner(random_density(2, 1, 0), random_density(3, 1, 0))

    def test_unitary_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            rho = random_density(4, 2, rng)
            sigma = random_density(4, 3, rng)
            u = random_unitary(4, rng)
            rho_rot = DensityOperator(u.matrix @ rho.matrix @ u.matrix.conj().T)
            sigma_rot = DensityOperator(u.matrix @ sigma.matrix @ u.matrix.conj().T)
            assert hs_inner(rho_rot, sigma_rot) == pytest.approx(hs_inner(rho, sigma), abs=TOL)

    def test_range_and_pure_state_extremum(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            rho = random_density(3, int(rng.integers(1, 4)), rng)
            sigma = random_density(3, int(rng.integers(1, 4)), rng)
            val = hs_inner(rho, sigma)
            assert -TOL <= val <= 1.0 + TOL
        psi = random_state(3, rng)
        assert hs_inner(pure_density(psi), pure_density(psi)) == pytest.approx(1.0, abs=TOL)
        # equality to 1 requires identical pure states
        phi = random_state(3, rng)
        assert hs_inner(pure_density(psi), pure_density(phi)) < 1.0 - 1e-3


class TestSchmidt:
    def test_product_state_single_coefficient(self):
        psi = tensor_product(basis_state((2,), 0), basis_state((2,), 0))
        sd = schmidt_decompose(psi, 1)
        assert sd.rank() == 1
        assert sd.coefficients[0] == pytest.approx(1.0, abs=TOL)

    def test_bell_coefficients(self):
        sd = schmidt_decompose(bell_plus(), 1)
        assert np.allclose(sd.coefficients, [1 / np.sqrt(2)] * 2, atol=TOL)

    def test_coefficients_match_reduced_spectrum(self):
        # Oracle: partial trace plus eigendecomposition.
        rng = np.random.default_rng(8)
        v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        psi = StateVector(v / np.linalg.norm(v), CompositeDims((3, 3)))
        sd = schmidt_decompose(psi, 1)
        reduced = partial_trace(pure_density(psi), (0,))
        spectrum = np.sort(np.linalg.eigvalsh(reduced.matrix))[::-1]
        assert np.allclose(np.asarray(sd.coefficients) ** 2, spectrum, atol=TOL)

    def test_reconstruction(self):
        rng = np.random.default_rng(9)
        for dims in ((2, 2), (2, 3), (3, 2, 2)):
            total = int(np.prod(dims))
            v = rng.standard_normal(total) + 1j * rng.standard_normal(total)
            psi = StateVector(v / np.linalg.norm(v), CompositeDims(dims))
            sd = schmidt_decompose(psi, 1)
            assert np.max(np.abs(sd.reconstruct().amplitudes - psi.amplitudes)) < TOL

    def test_bases_orthonormal_and_weights_normalized(self):
        rng = np.random.default_rng(10)
        v = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        psi = StateVector(v / np.linalg.norm(v), CompositeDims((4, 3)))
        sd = schmidt_decompose(psi, 1)
        assert abs(np.sum(np.asarray(sd.coefficients) ** 2) - 1.0) < TOL
        left = np.column_stack([b.amplitudes for b in sd.left_basis])
        right = np.column_stack([b.amplitudes for b in sd.right_basis])
        for mat in (left, right):
            assert np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[1]))) < TOL

    def test_invalid_cut(self):
        with pytest.raises(ValueError):
            schmidt_decompose(bell_plus(), 2)


class TestPurify:
    def test_pure_input(self):
        psi = purify(pure_density(basis_state((2,), 0)))
        assert np.allclose(psi.amplitudes, [1, 0, 0, 0], atol=TOL)

    def test_maximally_mixed_gives_balanced_coefficients(self):
        psi = purify(DensityOperator(np.eye(2) / 2))
        sd = schmidt_decompose(psi, 1)
        assert np.allclose(sd.coefficients, [1 / np.sqrt(2)] * 2, atol=TOL)

    def test_diagonal_weights_and_roundtrip(self):
        rho = DensityOperator(np.diag([0.7, 0.3]))
        psi = purify(rho)
        sd = schmidt_decompose(psi, 1)
        assert np.allclose(sd.coefficients, [np.sqrt(0.7), np.sqrt(0.3)], atol=TOL)
        recovered = partial_trace(pure_density(psi), (0,))
        assert np.max(np.abs(recovered.matrix - rho.matrix)) < TOL

    def test_roundtrip_random(self):
        rng = np.random.default_rng(11)
        for dim in (2, 3, 4):
            rho = random_density(dim, int(rng.integers(1, dim + 1)), rng)
            recovered = partial_trace(pure_density(purify(rho)), (0,))
            assert np.max(np.abs(recovered.matrix - rho.matrix)) < TOL


class TestSampling:
    def test_dim_one_is_unit_modulus_scalar(self):
        u = random_unitary(1, 0)
        assert abs(abs(u.matrix[0, 0]) - 1.0) < TOL

    def test_determinism(self):
        a = random_unitary(4, 42)
        b = random_unitary(4, 42)
        assert np.array_equal(a.matrix, b.matrix)

    def test_haar_first_entry_moment(self):
        # Monte Carlo against the known Haar moment: |U00|^2 is uniform on
        # [0,1] for dim 2, so the mean is 1/2 with variance 1/12.
        n = 10_000
        rng = np.random.default_rng(123)
        values = np.empty(n)
        for i in range(n):
            values[i] = abs(random_unitary(2, rng).matrix[0, 0]) ** 2
        sigma = np.sqrt(1.0 / 12.0 / n)
        assert abs(values.mean() - 0.5) < 3 * sigma

    def test_unitarity_across_seeds(self):
        for seed in range(25):
            u = random_unitary(5, seed).matrix
            assert np.max(np.abs(u.conj().T @ u - np.eye(5))) < TOL

    def test_density_rank_one_is_pure(self):
        rho = random_density(3, 1, 7)
        assert rho.purity() == pytest.approx(1.0, abs=TOL)

    def test_density_full_rank_positive_spectrum(self):
        rho = random_density(2, 2, 8)
        eigs = rho.eigenvalues()
        assert abs(np.sum(eigs) - 1.0) < TOL
        assert np.all(eigs > 0)

    def test_density_rank_control(self):
        rho = random_density(4, 2, 9)
        eigs = rho.eigenvalues()
        assert int(np.sum(eigs > TOL)) == 2

    def test_density_rank_out_of_range(self):
        with pytest.raises(ValueError):
            random_density(2, 3, 0)


class TestSupportOverlap:
    def test_disjoint_supports(self):
        p_low = np.zeros((4, 4), dtype=complex)
        p_low[0, 0] = p_low[1, 1] = 0.5
        p_high = np.zeros((4, 4), dtype=complex)
        p_high[2, 2] = p_high[3, 3] = 0.5
        assert support_overlap(DensityOperator(p_low), DensityOperator(p_high)) == pytest.approx(
            0.0, abs=TOL)

    def test_identical_pure(self):
        rho = pure_density(random_state(3, np.random.default_rng(12)))
        assert support_overlap(rho, rho) == pytest.approx(1.0, abs=TOL)

    def test_rank_two_in_dim_three_must_intersect(self):
        # Oracle: support projectors via eigenbasis; two 2-dim subspaces of a
        # 3-dim space intersect, so the overlap is strictly positive.
        rng = np.random.default_rng(13)
        for _ in range(10):
            rho = random_density(3, 2, rng)
            sigma = random_density(3, 2, rng)

            def support(mat):
                w, v = np.linalg.eigh(mat)
                cols = v[:, w > TOL]
                return cols @ cols.conj().T

            projector_overlap = np.trace(support(rho.matrix) @ support(sigma.matrix)).real
            assert projector_overlap > TOL
            assert support_overlap(rho, sigma) > 0.0


class TestValidation:
    def test_state_norm_enforced(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 1.0]))

    def test_density_trace_enforced(self):
        with pytest.raises(ValueError):
            DensityOperator(np.eye(2))

    def test_density_negative_eigenvalue_rejected(self):
        mat = np.diag([1.2, -0.2]).astype(complex)
        with pytest.raises(ValueError):
            DensityOperator(mat)

    def test_density_roundoff_clipped(self):
        mat = np.diag([1.0 + 5e-10, -5e-10]).astype(complex)
        rho = DensityOperator(mat)
        assert rho.eigenvalues()[0] >= 0.0

    def test_unitary_enforced(self):
        with pytest.raises(ValueError):
            UnitaryOperator(np.ones((2, 2)))

    def test_dims_must_match_size(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 0.0]), CompositeDims((3,)))


class TestWireFormat:
    def test_state_roundtrip(self):
        psi = bell_plus()
        payload = hb.to_wire(psi)
        assert payload["dims"] == [2, 2]
        back = hb.state_from_wire(payload)
        assert np.allclose(back.amplitudes, psi.amplitudes)

    def test_operator_roundtrip(self):
        rho = random_density(4, 2, 17).with_dims((2, 2))
        payload = hb.to_wire(rho)
        back = hb.operator_from_wire(payload)
        assert np.allclose(back.matrix, rho.matrix)
        assert tuple(back.dims) == (2, 2)
