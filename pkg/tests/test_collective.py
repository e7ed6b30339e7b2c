import dataclasses
import logging

import numpy as np
import pytest

from cavmodes.collective import (
    CollectiveSource,
    build_collective_model,
    collective_inputs,
    collective_spectrum_compare,
    count_dark_modes,
    rotate_two_molecule_xi,
)
from cavmodes.errors import (
    DimensionMismatchError,
    InconsistentScalingError,
    NonOrthogonalBasisError,
)
from cavmodes.harmonic import bright_vibration, model_force_constants, model_modes


@pytest.mark.parametrize("n_mol", [2, 4, 8])
def test_collective_model_matches_direct_computation(co2_surface, n_mol):
    surface = co2_surface(coupling=0.05)

    report = collective_spectrum_compare(collective_inputs(surface, n_mol), surface)

    assert report.direct is not None
    assert report.per_mode
    for row in report.per_mode:
        assert row["diff_cm1"] <= 1e-6 * abs(row["direct_cm1"])
    assert report.model.splitting_cm1 == pytest.approx(
        report.direct.splitting_cm1, rel=1e-6
    )


@pytest.mark.parametrize("n_mol", [2, 4, 8])
def test_collective_coupling_leaves_dark_modes(co2_surface, n_mol):
    surface = co2_surface(coupling=0.05)

    report = collective_spectrum_compare(collective_inputs(surface, n_mol), surface)

    assert report.model.dark_mode_count == n_mol - 1
    assert report.direct.dark_mode_count == n_mol - 1


@pytest.mark.parametrize("n_mol", [2, 4, 8, 16])
def test_bright_splitting_depends_on_collective_coupling(co2_surface, n_mol):
    single = collective_spectrum_compare(
        collective_inputs(co2_surface(coupling=0.05), 1)
    )
    ensemble = collective_spectrum_compare(
        collective_inputs(co2_surface(coupling=0.05 / np.sqrt(n_mol)), n_mol)
    )

    assert ensemble.direct is None
    assert ensemble.model.splitting_cm1 == pytest.approx(
        single.model.splitting_cm1, rel=1e-6
    )


def test_sixteen_molecules_leave_fifteen_dark_modes(co2_surface):
    spec = collective_inputs(co2_surface(coupling=0.05 / 4.0), 16)

    report = collective_spectrum_compare(spec)

    assert report.model.dark_mode_count == 15


def test_collective_model_is_symmetric_under_molecule_exchange(co2_surface):
    model = build_collective_model(collective_inputs(co2_surface(coupling=0.025), 4))
    matrix = model_force_constants(model.params)
    order = [3, 0, 2, 1]
    permutation = [
        model.index(molecule, mode) for molecule in order for mode in range(model.n_vib)
    ]
    permutation += list(range(model.n_mol * model.n_vib, matrix.shape[0]))

    permuted = matrix[np.ix_(permutation, permutation)]

    scale = float(np.max(np.abs(matrix)))
    np.testing.assert_allclose(permuted, matrix, rtol=0, atol=1e-12 * scale)


def test_polaritons_spread_equally_over_molecules(co2_surface):
    spec = collective_inputs(co2_surface(coupling=0.025), 4)
    model = build_collective_model(spec)
    vibration = bright_vibration(spec.single)

    modes = sorted(model_modes(model.params), key=lambda mode: mode.photon_character)

    for polariton in modes[-2:]:
        weights = np.array(
            [polariton.u[model.index(molecule, vibration)] for molecule in range(4)]
        )
        assert abs(weights[0]) > 0.1
        np.testing.assert_allclose(weights, weights[0], rtol=1e-8)


def test_single_molecule_direct_result_is_computed(co2_surface):
    surface = co2_surface(coupling=0.05)

    report = collective_spectrum_compare(collective_inputs(surface, 1), surface)

    assert report.direct is not None
    assert report.direct is not report.model
    assert report.per_mode
    for row in report.per_mode:
        assert row["diff_cm1"] <= 1e-6 * abs(row["direct_cm1"])
    assert report.model.dark_mode_count == 0
    assert report.direct.dark_mode_count == 0


def test_pair_source_matches_direct_computation(co2_surface):
    surface = co2_surface(coupling=0.05)
    spec = collective_inputs(surface, 2, source=CollectiveSource.PAIR)

    report = collective_spectrum_compare(spec, surface, source=CollectiveSource.PAIR)

    for row in report.per_mode:
        assert row["diff_cm1"] <= 1e-6 * abs(row["direct_cm1"])


def test_collective_spectrum_is_per_molecule(co2_surface):
    grid = np.linspace(-20000.0, 20000.0, 40001)
    single = collective_spectrum_compare(
        collective_inputs(co2_surface(coupling=0.05), 1), grid_cm1=grid
    )
    ensemble = collective_spectrum_compare(
        collective_inputs(co2_surface(coupling=0.05 / 2.0), 4), grid_cm1=grid
    )

    assert ensemble.model.spectrum.area() == pytest.approx(
        single.model.spectrum.area(), rel=1e-2
    )


def test_model_indexing(co2_surface):
    model = build_collective_model(collective_inputs(co2_surface(), 2))

    assert model.index(1, 3) == model.n_vib + 3
    with pytest.raises(IndexError):
        model.index(2, 0)


def test_report_serializes_to_a_plain_dict(co2_surface):
    report = collective_spectrum_compare(collective_inputs(co2_surface(), 2))

    payload = report.to_dict()

    assert payload["n_mol"] == 2
    assert payload["dark_mode_count"] == 1
    assert payload["splitting_direct"] is None
    assert payload["max_mode_freq_diff_cm1"] is None


def test_rotation_with_identity_basis_is_a_no_op():
    xi = np.arange(16.0).reshape(4, 4)

    np.testing.assert_array_equal(rotate_two_molecule_xi(xi, np.eye(2)), xi)


def test_rotation_applies_the_basis_to_both_molecules():
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    xi = np.diag([1.0, 2.0, 3.0, 4.0])

    rotated = rotate_two_molecule_xi(xi, swap)

    np.testing.assert_array_equal(rotated, np.diag([2.0, 1.0, 4.0, 3.0]))


@pytest.mark.parametrize(
    ("xi", "basis", "error"),
    [
        (np.zeros((4, 4)), np.zeros((2, 3)), DimensionMismatchError),
        (np.zeros((3, 3)), np.eye(2), DimensionMismatchError),
        (np.zeros((4, 4)), np.array([[1.0, 1.0], [0.0, 1.0]]), NonOrthogonalBasisError),
    ],
)
def test_rotation_rejects_bad_inputs(xi, basis, error):
    with pytest.raises(error):
        rotate_two_molecule_xi(xi, basis)


def test_inconsistent_coupling_scale_is_rejected(co2_surface):
    spec = collective_inputs(co2_surface(), 1)

    with pytest.raises(InconsistentScalingError, match="single-molecule"):
        build_collective_model(dataclasses.replace(spec, n_mol=2))


def test_many_molecules_need_pair_parameters(co2_surface):
    spec = collective_inputs(co2_surface(), 1)

    with pytest.raises(InconsistentScalingError, match="two-molecule"):
        build_collective_model(spec, CollectiveSource.PAIR)


def test_zero_molecules_are_rejected(co2_surface):
    with pytest.raises(InconsistentScalingError):
        collective_inputs(co2_surface(), 0)


def test_collective_inputs_need_a_single_molecule(co2_surface):
    pair = co2_surface().replicated(2, 50.0)

    with pytest.raises(DimensionMismatchError, match="single-molecule"):
        collective_inputs(pair, 2)


def test_pair_parameters_are_logged(co2_surface, caplog):
    with caplog.at_level(logging.INFO, logger="cavmodes"):
        collective_inputs(co2_surface(), 2)

    assert "Two-molecule parameters" in caplog.text


def test_dark_mode_count_skips_modes_without_charges(co2_surface):
    spec = collective_inputs(co2_surface(), 1)
    report = collective_spectrum_compare(spec)
    stripped = [
        dataclasses.replace(mode, z_star_nuclear=None) for mode in report.model.modes
    ]

    count = count_dark_modes(stripped, np.array([0.0, 0.0, 1.0]), 2400.0, 1000.0)

    assert count == 0
