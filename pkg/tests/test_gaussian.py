import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from overlap.errors import (
    ContractError,
    InvalidParameter,
    InvalidState,
    ShapeMismatch,
    UnsupportedOperation,
)
from overlap.gaussian import (
    CHANNEL_KINDS,
    GaussianChannel,
    GaussianState,
    amplifier_channel,
    apply,
    channel_normal_form,
    choi_cm,
    classical_noise_channel,
    fidelity_after_channel,
    fock_density,
    gaussian_fidelity,
    is_cptp,
    loss_channel,
    rotation,
    sample_channel_mats,
    sample_state_cms,
    squeezed_thermal_state,
    symplectic_channel,
    symplectic_form,
    thermal_state,
    tmss_cm,
    vacuum,
    validate_state,
    verify_nogo,
)
from overlap.measures import uhlmann_fidelity


def test_vacuum_and_thermal_are_valid():
    assert validate_state(vacuum())
    assert validate_state(thermal_state(1.5))
    assert validate_state(squeezed_thermal_state(0.3, 0.8, 0.4))
    assert validate_state(tmss_cm(0.7))


def test_uncertainty_violation_is_reported():
    check = validate_state(GaussianState(np.diag([0.5, 0.5])))
    assert not check
    assert check.min_eigenvalue < 0


def test_state_shape_checks():
    with pytest.raises(ShapeMismatch):
        GaussianState(np.eye(3))
    with pytest.raises(ShapeMismatch):
        GaussianState(np.eye(2), disp=np.zeros(3))
    with pytest.raises(ShapeMismatch):
        GaussianChannel(np.eye(2), np.eye(4))


@pytest.mark.parametrize("nbar", [0.0, 0.5, 2.0])
def test_fidelity_against_vacuum(nbar):
    assert gaussian_fidelity(vacuum(), thermal_state(nbar)) == pytest.approx(1 / (1 + nbar))


def test_fidelity_with_itself():
    s = squeezed_thermal_state(0.7, 0.5, 1.2)
    assert gaussian_fidelity(s, s) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "first,second",
    [
        ((0.0, 0.0, 0.0), (0.5, 0.0, 0.0)),
        ((0.2, 0.3, 0.0), (0.0, 0.6, 1.0)),
        ((1.0, 0.0, 0.0), (0.4, 0.5, 2.5)),
        ((0.6, 0.2, 0.3), (0.6, 0.2, 0.3)),
    ],
)
def test_fidelity_matches_fock_space(first, second):
    s1, s2 = squeezed_thermal_state(*first), squeezed_thermal_state(*second)
    rho1, rho2 = fock_density(s1, 60), fock_density(s2, 60)
    root = uhlmann_fidelity(rho1, rho2, method="eigen")
    assert gaussian_fidelity(s1, s2) == pytest.approx(root ** 2, abs=1e-6)


def _random_state_pairs(seed: int, count: int) -> list:
    # kept small enough that 60 Fock levels hold the states to well below 1e-6
    rng = np.random.default_rng(seed)
    params = np.column_stack([
        rng.uniform(0.0, 0.6, 2 * count),
        rng.uniform(0.0, 0.45, 2 * count),
        rng.uniform(0.0, math.pi, 2 * count),
    ])
    return [(tuple(params[2 * i]), tuple(params[2 * i + 1])) for i in range(count)]


@pytest.mark.parametrize("first,second", _random_state_pairs(seed=314, count=100))
def test_fidelity_matches_fock_space_on_random_pairs(first, second):
    s1, s2 = squeezed_thermal_state(*first), squeezed_thermal_state(*second)
    root = uhlmann_fidelity(fock_density(s1, 60), fock_density(s2, 60), method="eigen")
    assert gaussian_fidelity(s1, s2) == pytest.approx(root ** 2, abs=1e-6)


def test_fidelity_rejects_unsupported_input():
    displaced = GaussianState(np.eye(2), disp=np.array([1.0, 0.0]))
    with pytest.raises(UnsupportedOperation):
        gaussian_fidelity(displaced, vacuum())
    with pytest.raises(UnsupportedOperation):
        gaussian_fidelity(vacuum(2), vacuum(2))
    with pytest.raises(InvalidState):
        gaussian_fidelity(GaussianState(np.diag([0.5, 0.5])), vacuum())


@pytest.mark.parametrize(
    "channel",
    [
        loss_channel(0.3),
        loss_channel(1.0),
        amplifier_channel(2.0),
        classical_noise_channel(0.5),
        symplectic_channel(0.4, 0.3, 1.1),
    ],
)
def test_standard_channels_are_cptp(channel):
    assert is_cptp(channel)


def test_noiseless_attenuation_is_not_cptp():
    channel = GaussianChannel(0.5 * np.eye(2), np.zeros((2, 2)))
    assert not is_cptp(channel)
    with pytest.raises(ContractError):
        apply(channel, vacuum())


def test_multimode_cptp_condition():
    m = np.kron(np.eye(2), math.sqrt(0.6) * np.eye(2))
    assert is_cptp(GaussianChannel(m, 0.4 * np.eye(4)))
    assert not is_cptp(GaussianChannel(m, np.zeros((4, 4))))


def test_loss_channel_maps_thermal_to_thermal():
    out = apply(loss_channel(0.25), thermal_state(2.0))
    assert_allclose(out.cm, thermal_state(1.5).cm)


def test_apply_checks_modes():
    with pytest.raises(ShapeMismatch):
        apply(loss_channel(0.1), vacuum(2))


def test_choi_state_is_valid():
    for channel in (loss_channel(0.4), amplifier_channel(1.5), symplectic_channel(0.2)):
        assert validate_state(choi_cm(channel, 0.8))
    assert_allclose(choi_cm(symplectic_channel(0.0), 0.5).cm, tmss_cm(0.5).cm, atol=1e-14)


def test_channels_do_not_increase_distinguishability():
    s1, s2 = squeezed_thermal_state(0.1, 0.4, 0.0), thermal_state(0.8)
    before = gaussian_fidelity(s1, s2)
    for channel in (loss_channel(0.5), amplifier_channel(1.7), classical_noise_channel(0.3)):
        assert fidelity_after_channel(s1, s2, channel) >= before - 1e-12
    unitary = symplectic_channel(0.6, 0.2, 0.9)
    assert fidelity_after_channel(s1, s2, unitary) == pytest.approx(before, abs=1e-12)


NORMAL_FORM_CASES = [
    # det M between 0 and 1
    (rotation(0.3) @ np.diag([1.5, 0.4]) @ rotation(1.1), 0.5 * np.eye(2)),
    # det M above 1
    (rotation(-0.8) @ np.diag([2.0, 0.8]) @ rotation(0.2), 0.7 * np.eye(2)),
    # negative det M
    (
        rotation(0.7) @ np.diag([1.2, -0.9]) @ rotation(-0.4),
        rotation(0.5).T @ np.diag([2.5, 2.0]) @ rotation(0.5),
    ),
]


@pytest.mark.parametrize("m,n_mat", NORMAL_FORM_CASES)
def test_normal_form_preserves_fidelity(m, n_mat):
    channel = GaussianChannel(m, n_mat)
    assert is_cptp(channel)
    nf = channel_normal_form(channel)
    assert nf.eta == pytest.approx(math.sqrt(abs(np.linalg.det(m))))
    assert_allclose(nf.post @ nf.channel.m @ nf.pre, m, atol=1e-12)
    assert np.linalg.det(nf.channel.m) == pytest.approx(np.linalg.det(m))
    assert is_cptp(nf.channel)
    pairs = [
        (squeezed_thermal_state(0.3, 0.5, 0.2), thermal_state(1.0)),
        (squeezed_thermal_state(0.0, 0.4, 1.3), squeezed_thermal_state(0.5, 0.1, 2.0)),
    ]
    for s1, s2 in pairs:
        expected = fidelity_after_channel(s1, s2, channel)
        reduced = fidelity_after_channel(nf.transform_input(s1), nf.transform_input(s2), nf.channel)
        assert reduced == pytest.approx(expected, abs=1e-12)


def test_normal_form_of_replacement_channel():
    channel = GaussianChannel(np.zeros((2, 2)), 3.0 * np.eye(2))
    nf = channel_normal_form(channel)
    assert nf.eta == 0.0
    assert_allclose(nf.channel.m, 0.0)
    assert_allclose(nf.channel.n_mat, 3.0 * np.eye(2))
    assert nf.preserves_fidelity


def test_rank_one_channel_is_flagged():
    channel = GaussianChannel(rotation(0.4) @ np.diag([1.0, 0.0]), 1.5 * np.eye(2))
    assert is_cptp(channel)
    nf = channel_normal_form(channel)
    assert nf.eta == 0.0
    assert not nf.preserves_fidelity
    s1, s2 = squeezed_thermal_state(0.0, 0.5, 0.4), vacuum()
    reduced = fidelity_after_channel(nf.transform_input(s1), nf.transform_input(s2), nf.channel)
    assert reduced == pytest.approx(1.0, abs=1e-12)
    assert fidelity_after_channel(s1, s2, channel) < 1.0 - 1e-3


def test_samplers_give_valid_objects(rng):
    for cm in sample_state_cms(rng, 200):
        assert validate_state(GaussianState(cm))
    for kind in ("interior", "symplectic"):
        m, n_mat = sample_channel_mats(rng, 200, kind)
        assert all(is_cptp(GaussianChannel(a, b)) for a, b in zip(m, n_mat))
    m, n_mat = sample_channel_mats(rng, 200, "boundary")
    assert_allclose(np.linalg.det(n_mat), (np.linalg.det(m) - 1) ** 2, rtol=1e-9, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(n_mat) >= -1e-12)
    with pytest.raises(InvalidParameter):
        sample_channel_mats(rng, 10, "unitary")


def test_nogo_small_run():
    report = verify_nogo(3000, seed=7)
    assert report.violations == 0
    assert report.min_margin >= -1e-9
    assert report.kind == "mixed"
    assert set(report.by_kind) == set(CHANNEL_KINDS)
    assert report.by_kind["interior"].samples == 1800
    assert set(report.by_det) == {"unit", "greater", "less"}
    assert sum(s.samples for s in report.by_det.values()) == 3000
    # symplectic channels have |det M| = 1 and leave fidelities unchanged
    assert report.by_det["unit"].samples >= report.by_kind["symplectic"].samples
    assert report.by_kind["symplectic"].max_abs_margin < 1e-9


def test_nogo_is_deterministic():
    assert verify_nogo(500, seed=3) == verify_nogo(500, seed=3)
    assert verify_nogo(500, seed=3) != verify_nogo(500, seed=4)


def test_nogo_single_kind():
    report = verify_nogo(400, seed=1, kind="boundary")
    assert report.kind == "boundary"
    assert list(report.by_kind) == ["boundary"]
    assert report.violations == 0


def test_nogo_rejects_empty_run():
    with pytest.raises(InvalidParameter):
        verify_nogo(0, seed=1)


@pytest.mark.slow
def test_nogo_full_run():
    report = verify_nogo(100_000, seed=2024)
    assert report.violations == 0
    assert report.by_det["greater"].samples > 0
    assert report.by_det["less"].samples > 0


def test_symplectic_form():
    j = symplectic_form(2)
    assert j.shape == (4, 4)
    assert_allclose(j.T, -j)
    assert_allclose(j @ j, -np.eye(4))
    with pytest.raises(InvalidParameter):
        symplectic_form(0)
