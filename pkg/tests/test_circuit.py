import numpy as np
import pytest

from tritter.circuit import (
    CircuitUnitary,
    PhaseCalibration,
    TritterLayout,
    build_tritter,
    compose,
    coupler_unitary,
    ideal_tritter,
    phase_from_voltage,
    phase_unitary,
)
from tritter.reconstruct import fidelity, visibility_matrix

from conftest import haar


def test_coupler_limits():
    assert np.allclose(coupler_unitary(1.0, 0, 1, 2).matrix, np.eye(2))
    assert np.allclose(coupler_unitary(0.0, 0, 1, 2).matrix, [[0, 1j], [1j, 0]])
    assert np.allclose(np.abs(coupler_unitary(0.5, 0, 1, 2).matrix) ** 2, 0.5)


def test_coupler_embeds_in_larger_circuit():
    u = coupler_unitary(0.3, 0, 2, 4).matrix
    assert np.allclose(u[1, 1], 1) and np.allclose(u[3, 3], 1)
    assert np.isclose(abs(u[0, 2]) ** 2, 0.7)


@pytest.mark.parametrize("args", [(1.2, 0, 1, 2), (-0.1, 0, 1, 2), (0.5, 1, 1, 2), (0.5, 0, 2, 2)])
def test_coupler_errors(args):
    with pytest.raises(ValueError):
        coupler_unitary(*args)


def test_phase_shifter():
    assert np.allclose(phase_unitary(0.0, 1, 3).matrix, np.eye(3))
    assert np.allclose(phase_unitary(np.pi, 0, 1).matrix, [[-1]])
    assert np.allclose(phase_unitary(np.pi / 2, 1, 3).matrix, np.diag([1, 1j, 1]))


def test_compose_order(rng):
    a, b = haar(3, rng), haar(3, rng)
    assert np.allclose(compose([a]).matrix, a.matrix)
    assert np.allclose(compose([a, a.H]).matrix, np.eye(3))
    # first element acts first on the input amplitudes
    assert np.allclose(compose([a, b]).matrix, b.matrix @ a.matrix)


def test_compose_errors():
    with pytest.raises(ValueError):
        compose([])
    with pytest.raises(ValueError):
        compose([ideal_tritter(3), coupler_unitary(0.5, 0, 1, 2)])


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        CircuitUnitary(np.array([[1, 1], [0, 1]]))


def test_ideal_tritter_elements():
    u = ideal_tritter().matrix
    assert np.isclose(u[0, 0], 1 / np.sqrt(3))
    # element (2, 3) in one-based indices
    assert np.isclose(u[1, 2], np.exp(4j * np.pi / 3) / np.sqrt(3))
    assert np.max(np.abs(u.conj().T @ u - np.eye(3))) < 1e-12


def test_build_tritter_matches_ideal_visibilities(tritter):
    u = build_tritter(TritterLayout(0.5, 1 / 3, np.pi / 2))
    assert abs(fidelity(visibility_matrix(u), visibility_matrix(tritter)) - 1) < 1e-9
    u = build_tritter(TritterLayout(0.5, 1 / 3, 3 * np.pi / 2))
    assert abs(fidelity(visibility_matrix(u), visibility_matrix(tritter)) - 1) < 1e-9
    assert np.allclose(np.abs(build_tritter(TritterLayout()).matrix) ** 2, 1 / 3)


def test_build_tritter_off_setting(tritter):
    u = build_tritter(TritterLayout(0.5, 1 / 3, 0.0))
    assert fidelity(visibility_matrix(u), visibility_matrix(tritter)) < 1 - 1e-3


def test_build_tritter_without_coupling():
    for phi in (0.0, 1.0, 2.5):
        u = build_tritter(TritterLayout(1.0, 1.0, phi)).matrix
        assert np.allclose(u - np.diag(np.diag(u)), 0)
        assert np.allclose(np.abs(np.diag(u)), 1)


def test_phase_scan_maxima(tritter):
    v_ideal = visibility_matrix(tritter)
    phis = np.arange(0, 2 * np.pi, 1e-3)
    fid = np.array([fidelity(visibility_matrix(build_tritter(TritterLayout(phi=p))), v_ideal) for p in phis])
    best = np.sort(phis[np.argsort(-fid)[:2]])
    assert abs(best[0] - np.pi / 2) <= 1e-3
    assert abs(best[1] - 3 * np.pi / 2) <= 1e-3
    # the two maxima are separated by a fringe minimum
    assert fid[np.argmin(np.abs(phis - np.pi))] < 0.9


def test_phase_calibration():
    cal = PhaseCalibration.from_pairs([(0.0, 0.0), (3.1, np.pi / 2)])
    assert phase_from_voltage(cal, 0.0) == 0.0
    assert np.isclose(phase_from_voltage(cal, 3.1), np.pi / 2)
    assert np.isclose(phase_from_voltage(cal, 1.55), np.pi / 4)
    with pytest.raises(ValueError):
        phase_from_voltage(cal, 3.2)
    with pytest.raises(ValueError):
        PhaseCalibration((0.0,), (0.0,))
    with pytest.raises(ValueError):
        PhaseCalibration((1.0, 0.0), (0.0, 1.0))
