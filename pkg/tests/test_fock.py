import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from overlap.errors import InvalidParameter, InvalidState, ShapeMismatch, TruncationError
from overlap.fock import (
    DensityOp,
    FockVector,
    apply_channel,
    basis_vector,
    coherent_dim,
    coherent_vector,
    damping_kraus,
    multimode_kraus,
    partial_trace,
    tensor,
)


@pytest.mark.parametrize("gamma", [0.0, 0.2, 0.5, 1.0])
@pytest.mark.parametrize("dim", [1, 2, 5, 12])
def test_damping_kraus_is_complete(gamma, dim):
    kraus = damping_kraus(gamma, dim)
    assert len(kraus.operators) == dim
    assert kraus.completeness_defect() < 1e-12


def test_damping_kraus_without_loss_is_identity():
    kraus = damping_kraus(0.0, 4)
    assert_allclose(kraus.operators[0], np.eye(4))
    for op in kraus.operators[1:]:
        assert_allclose(op, 0.0)


@pytest.mark.parametrize("gamma", [-0.1, 1.5])
def test_damping_kraus_rejects_bad_gamma(gamma):
    with pytest.raises(InvalidParameter):
        damping_kraus(gamma, 3)


def test_two_photons_lose_binomially():
    gamma = 0.3
    rho = basis_vector([2], [3]).projector()
    out = apply_channel(rho, [damping_kraus(gamma, 3)])
    expected = np.diag([gamma ** 2, 2 * gamma * (1 - gamma), (1 - gamma) ** 2])
    assert_allclose(out.matrix, expected, atol=1e-14)


def test_coherent_state_shrinks_under_loss():
    dim = 25
    rho = coherent_vector(1.0, dim).projector()
    out = apply_channel(rho, [damping_kraus(0.36, dim)])
    expected = coherent_vector(0.8, dim).projector()
    assert_allclose(out.matrix, expected.matrix, atol=1e-10)


def test_channel_acts_per_mode():
    dims = (2, 3)
    rho = basis_vector([1, 2], dims).projector()
    out = apply_channel(rho, [damping_kraus(1.0, 2), damping_kraus(0.0, 3)])
    assert_allclose(out.matrix, basis_vector([0, 2], dims).projector().matrix, atol=1e-14)


def test_channel_dimension_mismatch():
    rho = basis_vector([0, 0], [2, 2]).projector()
    with pytest.raises(ShapeMismatch):
        apply_channel(rho, [damping_kraus(0.1, 3), damping_kraus(0.1, 2)])
    with pytest.raises(ShapeMismatch):
        apply_channel(rho, [damping_kraus(0.1, 2)])


def test_multimode_kraus_respects_loss_cutoff():
    kraus = [damping_kraus(0.2, 3), damping_kraus(0.2, 3)]
    terms = multimode_kraus(kraus, max_loss=1)
    assert [index for index, _ in terms] == [(0, 0), (0, 1), (1, 0)]
    assert all(op.shape == (9, 9) for _, op in terms)


def test_partial_trace_of_product():
    a = DensityOp((2,), np.diag([0.25, 0.75]))
    b = basis_vector([1], [3]).projector()
    joint = tensor(a, b)
    assert joint.mode_dims == (2, 3)
    assert_allclose(partial_trace(joint, [0]).matrix, a.matrix)
    assert_allclose(partial_trace(joint, [1]).matrix, b.matrix)


def test_partial_trace_rejects_bad_modes():
    rho = basis_vector([0, 0], [2, 2]).projector()
    with pytest.raises(InvalidParameter):
        partial_trace(rho, [])
    with pytest.raises(InvalidParameter):
        partial_trace(rho, [2])


def test_tensor_of_mixed_types():
    with pytest.raises(ShapeMismatch):
        tensor(basis_vector([0], [2]), basis_vector([0], [2]).projector())


def test_basis_vector_bounds():
    with pytest.raises(InvalidParameter):
        basis_vector([3], [3])
    with pytest.raises(ShapeMismatch):
        basis_vector([0, 1], [3])


def test_vector_length_must_match_dims():
    with pytest.raises(ShapeMismatch):
        FockVector((2, 2), np.ones(3))


def test_validate_reports_first_problem():
    with pytest.raises(InvalidState, match="trace"):
        DensityOp((2,), np.diag([0.5, 0.6])).validate()
    with pytest.raises(InvalidState, match="eigenvalue"):
        DensityOp((2,), np.diag([1.2, -0.2])).validate()
    with pytest.raises(InvalidState, match="Hermitian"):
        DensityOp((2,), np.array([[0.5, 0.3], [0.0, 0.5]])).validate()


def test_valid_state_passes():
    rho = DensityOp((2,), np.array([[0.5, 0.5j], [-0.5j, 0.5]]))
    assert rho.validate() is rho
    assert rho.diagnose().valid


def test_coherent_vector_amplitudes():
    alpha = 1.0
    vec = coherent_vector(alpha, 20)
    assert vec.norm() == pytest.approx(1.0)
    assert abs(vec.amplitudes[0]) == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert abs(vec.amplitudes[1]) == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_coherent_vector_phase():
    vec = coherent_vector(-1.0, 20)
    assert vec.amplitudes[1].real < 0
    assert vec.amplitudes[2].real > 0


def test_coherent_vector_needs_room():
    with pytest.raises(TruncationError) as excinfo:
        coherent_vector(3.0, 5)
    assert excinfo.value.required_dim >= coherent_dim(3.0)


def test_coherent_dim():
    assert coherent_dim(0.0) == 10
    assert coherent_dim(1.0) == 19
    assert coherent_dim(3.0) == 43


def test_damping_composes():
    rho = DensityOp((5,), 0.5 * (basis_vector([4], (5,)).projector().matrix + np.eye(5) / 5))
    twice = apply_channel(apply_channel(rho, [damping_kraus(0.3, 5)]), [damping_kraus(0.5, 5)])
    once = apply_channel(rho, [damping_kraus(1 - 0.7 * 0.5, 5)])
    assert_allclose(twice.matrix, once.matrix, atol=1e-12)
