import numpy as np
import pytest

from pod_eit.core.exceptions import ArtifactError, InvalidParameterError, ProtocolMismatchError
from pod_eit.eit.protocol import build_protocol, protocol_id, skip_protocol
from pod_eit.pod.basis import (
    SnapshotMatrix,
    basis_from_document,
    basis_id,
    basis_to_document,
    covariance,
    energy_fraction,
    fit_pod,
    fit_pod_eig,
    project,
    reconstruct,
)


def _protocol(dimension):
    return build_protocol(8, skip_protocol(8).measurements[:dimension])


def _snapshots(rows, dimension=None):
    columns = np.asarray(rows, dtype=float).T
    protocol = _protocol(columns.shape[0] if dimension is None else dimension)
    return SnapshotMatrix(columns, protocol_id(protocol)), protocol


def _random(dimension, count, seed=0):
    rng = np.random.default_rng(seed)
    return _snapshots(rng.standard_normal((count, dimension)))


def test_covariance_of_repeated_frame():
    u = np.array([1.0, -2.0, 0.5, 3.0])
    snapshots, _ = _snapshots([u, u])
    np.testing.assert_allclose(covariance(snapshots), np.full((2, 2), u @ u))


def test_covariance_matches_double_loop():
    snapshots, _ = _random(6, 4)
    x = snapshots.frames
    expected = np.array([[x[:, i] @ x[:, j] / 3.0 for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(covariance(snapshots), expected, rtol=1e-12)


def test_covariance_is_positive_semidefinite():
    snapshots, _ = _random(5, 9, seed=3)
    c = covariance(snapshots, center=True)
    assert np.array_equal(c, c.T)
    assert np.linalg.eigvalsh(c).min() > -1e-12


def test_covariance_needs_two_frames():
    snapshots, _ = _snapshots([[1.0, 2.0, 3.0, 4.0]])
    with pytest.raises(InvalidParameterError):
        covariance(snapshots)


def test_rank_one_snapshots():
    u = np.array([0.5, -1.0, 2.0, 0.25, 1.5])
    snapshots, protocol = _snapshots([u, 2 * u, -u])
    basis = fit_pod(snapshots, protocol)
    assert basis.eigenvalues[0] > 0
    assert np.all(basis.eigenvalues[1:] <= 1e-12 * basis.eigenvalues[0])
    np.testing.assert_allclose(basis.modes[:, 0], u / np.linalg.norm(u), atol=1e-12)


def test_full_basis_reproduces_snapshots():
    snapshots, protocol = _random(6, 4)
    basis = fit_pod(snapshots, protocol)
    phi = basis.modes
    np.testing.assert_allclose(phi @ (phi.T @ snapshots.frames), snapshots.frames, atol=1e-10)


def test_modes_are_orthonormal_and_sorted():
    snapshots, protocol = _random(12, 30, seed=1)
    basis = fit_pod(snapshots, protocol)
    np.testing.assert_allclose(basis.modes.T @ basis.modes, np.eye(basis.rank), atol=1e-10)
    assert np.all(np.diff(basis.eigenvalues) <= 0)
    assert np.all(basis.eigenvalues >= 0)


def test_scaling_snapshots_scales_eigenvalues_only():
    snapshots, protocol = _random(8, 5, seed=2)
    scaled = SnapshotMatrix(4.0 * snapshots.frames, snapshots.protocol_id)
    a = fit_pod(snapshots, protocol)
    b = fit_pod(scaled, protocol)
    np.testing.assert_allclose(b.modes, a.modes, atol=1e-12)
    np.testing.assert_allclose(b.eigenvalues, 16.0 * a.eigenvalues, rtol=1e-12)


def test_mode_count_bounds():
    snapshots, protocol = _random(10, 4)
    assert fit_pod(snapshots, protocol).rank == 4
    assert fit_pod(snapshots, protocol, center=True).rank == 3
    assert fit_pod(snapshots, protocol, max_modes=2).rank == 2
    with pytest.raises(InvalidParameterError):
        fit_pod(snapshots, protocol, max_modes=0)


def test_eigenvalues_sum_to_total_variance():
    snapshots, protocol = _random(7, 5, seed=4)
    basis = fit_pod(snapshots, protocol)
    total = np.sum(snapshots.frames**2) / (snapshots.count - 1)
    assert basis.eigenvalues.sum() == pytest.approx(total, rel=1e-12)
    assert energy_fraction(basis, basis.rank) == pytest.approx(1.0)


def test_reconstruction_error_does_not_grow_with_modes():
    snapshots, protocol = _random(9, 20, seed=5)
    basis = fit_pod(snapshots, protocol)
    x = snapshots.frames
    errors = [np.linalg.norm(x - basis.leading(k) @ (basis.leading(k).T @ x)) for k in range(basis.rank + 1)]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(errors, errors[1:]))
    fractions = [energy_fraction(basis, k) for k in range(basis.rank + 1)]
    assert fractions == sorted(fractions)


def test_svd_and_snapshot_method_agree():
    snapshots, protocol = _random(10, 6, seed=6)
    a = fit_pod(snapshots, protocol)
    b = fit_pod_eig(snapshots, protocol)
    assert b.rank == a.rank
    np.testing.assert_allclose(b.eigenvalues, a.eigenvalues, rtol=1e-10)
    np.testing.assert_allclose(b.modes, a.modes, atol=1e-8)


def test_projection_of_mean_and_modes():
    snapshots, protocol = _random(6, 8, seed=7)
    basis = fit_pod(snapshots, protocol, center=True)
    np.testing.assert_allclose(project(basis, basis.mean), 0.0, atol=1e-12)
    p = project(basis, basis.modes[:, 0] + basis.mean)
    np.testing.assert_allclose(p, np.eye(basis.rank)[0], atol=1e-12)
    np.testing.assert_allclose(reconstruct(basis, np.zeros(basis.rank)), basis.mean)
    np.testing.assert_allclose(reconstruct(basis, np.eye(basis.rank)[0]), basis.modes[:, 0] + basis.mean)


def test_full_rank_roundtrip():
    snapshots, protocol = _random(5, 9, seed=8)
    basis = fit_pod(snapshots, protocol)
    d = np.random.default_rng(1).standard_normal(5)
    np.testing.assert_allclose(reconstruct(basis, project(basis, d)), d, atol=1e-12)


def test_projection_argument_errors():
    snapshots, protocol = _random(5, 3)
    basis = fit_pod(snapshots, protocol)
    with pytest.raises(InvalidParameterError):
        project(basis, np.zeros(5), k=basis.rank + 1)
    with pytest.raises(InvalidParameterError):
        project(basis, np.zeros(4))


def test_protocol_dimension_must_match():
    snapshots, _ = _random(6, 4)
    with pytest.raises(ProtocolMismatchError):
        fit_pod(snapshots, _protocol(7))


def test_non_finite_snapshots_rejected():
    with pytest.raises(InvalidParameterError):
        SnapshotMatrix(np.array([[1.0, np.nan], [0.0, 1.0]]), "x")


def test_basis_document_roundtrip():
    snapshots, protocol = _random(6, 8, seed=9)
    basis = fit_pod(snapshots, protocol, center=True, source="abc")
    restored = basis_from_document(basis_to_document(basis))
    np.testing.assert_array_equal(restored.modes, basis.modes)
    np.testing.assert_array_equal(restored.mean, basis.mean)
    assert restored.centered
    assert basis_id(restored) == basis_id(basis)


def test_basis_document_with_foreign_protocol_id():
    snapshots, protocol = _random(6, 8)
    document = basis_to_document(fit_pod(snapshots, protocol))
    document.protocol_id = "000000000000"
    with pytest.raises(ArtifactError):
        basis_from_document(document)
