import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from overlap.errors import InvalidParameter, UnsupportedOperation
from overlap.models import CODE_IDS, BlochInput
from overlap.qubit_codes import (
    CODES,
    antipode,
    apply_choi,
    bloch_representation,
    bloch_vector,
    bosonic_contraction,
    choi_from_affine,
    closed_form_output,
    effective_channel,
    encode,
    get_code,
    kl_matrix,
    logical_state,
    transcription_defect,
    transmit_and_decode,
)

SIMULATED = ["direct", "dual_rail", "three_qubit", "bosonic"]
INPUTS = [
    BlochInput(w=0.0, theta=0.0),
    BlochInput(w=math.pi, theta=0.0),
    BlochInput(w=math.pi / 2, theta=math.pi / 3),
    BlochInput(w=1.1, theta=4.0),
    BlochInput(w=2.7, theta=0.2),
]
GAMMA_GRID = [round(0.05 * i, 12) for i in range(21)]
INPUT_GRID = [
    BlochInput(w=w, theta=theta)
    for w in (0.0, math.pi / 4, math.pi / 2, 2.0, math.pi)
    for theta in (0.0, 1.0, math.pi / 2, 3.0, 5.0)
]


def test_registry_holds_every_code():
    assert set(CODES) == set(CODE_IDS)
    for code_id in CODE_IDS:
        code = get_code(code_id)
        assert abs(code.logical_zero.inner(code.logical_one)) < 1e-12


def test_unknown_code():
    with pytest.raises(InvalidParameter, match="Unknown code"):
        get_code("five_qubit")


def test_antipode_is_orthogonal():
    for q in INPUTS:
        a, b = logical_state(q), logical_state(antipode(q))
        assert abs(np.vdot(a, b)) < 1e-12


@pytest.mark.parametrize("code_id", SIMULATED)
@pytest.mark.parametrize("gamma", GAMMA_GRID)
def test_simulation_matches_closed_form(code_id, gamma):
    code = get_code(code_id)
    for q in INPUT_GRID:
        simulated = transmit_and_decode(code, gamma, q)
        assert_allclose(simulated.matrix, closed_form_output(code, gamma, q).matrix, atol=1e-9)
        partner = transmit_and_decode(code, gamma, antipode(q))
        assert_allclose(
            partner.matrix, closed_form_output(code, gamma, q, which="Qbar").matrix, atol=1e-9
        )


@pytest.mark.parametrize("code_id", CODE_IDS)
def test_outputs_are_states(code_id):
    code = get_code(code_id)
    for gamma in (0.0, 0.3, 1.0):
        for q in INPUTS:
            closed_form_output(code, gamma, q).validate()
            closed_form_output(code, gamma, q, which="Qbar").validate()


def test_four_qubit_has_no_recovery():
    code = get_code("four_qubit_approx")
    with pytest.raises(UnsupportedOperation):
        transmit_and_decode(code, 0.2, INPUTS[0])


def test_four_qubit_closed_form_is_hermitian():
    code = get_code("four_qubit_approx")
    for q in INPUTS:
        assert transcription_defect(code, 0.4, q) < 1e-14


def test_bad_gamma_and_which():
    code = get_code("direct")
    with pytest.raises(InvalidParameter):
        transmit_and_decode(code, 1.2, INPUTS[0])
    with pytest.raises(InvalidParameter):
        closed_form_output(code, 0.2, INPUTS[0], which="Q2")


def test_dual_rail_is_depolarizing():
    code = get_code("dual_rail")
    assert code.logical_zero.amplitudes[1] == 1.0  # |01> in the (2, 2) Fock basis
    assert code.logical_one.amplitudes[2] == 1.0
    gamma = 0.4
    q = INPUTS[3]
    psi = logical_state(q)
    expected = (1 - gamma) * np.outer(psi, psi.conj()) + gamma * np.eye(2) / 2
    assert_allclose(transmit_and_decode(get_code("dual_rail"), gamma, q).matrix, expected, atol=1e-12)


def test_bosonic_contraction():
    assert bosonic_contraction(0.0) == 1.0
    assert bosonic_contraction(1.0) == 0.0
    assert bosonic_contraction(0.2) == pytest.approx(0.8 ** 3 * 1.6)


@pytest.mark.parametrize("gamma", [0.1, 0.3, 0.5])
def test_bosonic_channel_is_uniform_contraction(gamma):
    t_matrix, t_vector = bloch_representation(effective_channel(get_code("bosonic"), gamma))
    k = bosonic_contraction(gamma)
    assert_allclose(t_matrix, k * np.eye(3), atol=1e-9)
    assert_allclose(t_vector, np.zeros(3), atol=1e-9)


@pytest.mark.parametrize("code_id", CODE_IDS)
def test_effective_channel_is_trace_preserving(code_id):
    choi = effective_channel(get_code(code_id), 0.35)
    assert choi.shape == (4, 4)
    reduced = np.trace(choi.reshape(2, 2, 2, 2), axis1=1, axis2=3)
    assert_allclose(reduced, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("code_id", CODE_IDS)
def test_effective_channel_reproduces_outputs(code_id):
    code = get_code(code_id)
    gamma = 0.27
    choi = effective_channel(code, gamma)
    for q in INPUTS:
        psi = logical_state(q)
        out = apply_choi(choi, np.outer(psi, psi.conj()))
        assert_allclose(out, closed_form_output(code, gamma, q).matrix, atol=1e-12)


def test_effective_channel_is_cached_by_copy():
    code = get_code("bosonic")
    first = effective_channel(code, 0.5)
    first[0, 0] = 99.0
    second = effective_channel(code, 0.5)
    assert second[0, 0] != 99.0


def test_four_qubit_affine_map():
    g = 0.3
    t_matrix, t_vector = bloch_representation(effective_channel(get_code("four_qubit_approx"), g))
    expected = np.diag([1 - 2 * g ** 2 + g ** 3, 1 - 3 * g ** 2 + 2 * g ** 3, 1 - 3 * g ** 2 + 2 * g ** 3])
    assert_allclose(t_matrix, expected, atol=1e-12)
    assert_allclose(t_vector, [0.0, 0.0, g ** 2 * (2 * g - 1)], atol=1e-12)


def test_direct_channel_is_amplitude_damping():
    g = 0.45
    t_matrix, t_vector = bloch_representation(effective_channel(get_code("direct"), g))
    root = math.sqrt(1 - g)
    assert_allclose(t_matrix, np.diag([root, root, 1 - g]), atol=1e-12)
    assert_allclose(t_vector, [0.0, 0.0, g], atol=1e-12)


@pytest.mark.parametrize(
    "code_id,deformable",
    [
        ("direct", True),
        ("dual_rail", False),
        ("three_qubit", True),
        ("bosonic", False),
        ("four_qubit_approx", True),
    ],
)
def test_kl_deformability(code_id, deformable):
    analysis = kl_matrix(get_code(code_id), 0.3)
    assert analysis.deformable is deformable
    assert analysis.matrix.shape[:2] == (2, 2)
    assert analysis.matrix.shape[2] == len(analysis.labels)


def test_kl_sector_weights_sum_to_one():
    analysis = kl_matrix(get_code("bosonic"), 0.25)
    w0 = sum(w for w, _ in analysis.sector_weights.values())
    w1 = sum(w for _, w in analysis.sector_weights.values())
    assert w0 == pytest.approx(1.0)
    assert w1 == pytest.approx(1.0)
    assert analysis.max_deformation < 1e-12


def test_kl_loss_cutoff():
    full = kl_matrix(get_code("three_qubit"), 0.2)
    cut = kl_matrix(get_code("three_qubit"), 0.2, max_loss=1)
    assert len(full.labels) == 8
    assert len(cut.labels) == 4
    assert set(cut.sector_weights) == {0, 1}


def test_encode_maps_onto_codewords():
    code = get_code("bosonic")
    state = encode(code, BlochInput(w=math.pi / 2, theta=0.0))
    assert state.norm() == pytest.approx(1.0)
    assert abs(state.inner(code.logical_zero)) ** 2 == pytest.approx(0.5)
    assert abs(state.inner(code.logical_one)) ** 2 == pytest.approx(0.5)


def test_antipode_has_opposite_bloch_vector():
    for q in INPUTS:
        assert_allclose(bloch_vector(antipode(q)), -bloch_vector(q), atol=1e-12)


def test_affine_round_trip():
    t_matrix = np.array([[0.6, 0.1, 0.0], [-0.1, 0.6, 0.0], [0.0, 0.0, 0.4]])
    t_vector = np.array([0.0, 0.0, 0.3])
    back = bloch_representation(choi_from_affine(t_matrix, t_vector))
    assert_allclose(back[0], t_matrix, atol=1e-12)
    assert_allclose(back[1], t_vector, atol=1e-12)
