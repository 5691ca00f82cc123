"""Proper orthogonal decomposition of measurement snapshots."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from pod_eit.core.artifacts import canonical_json, content_hash
from pod_eit.core.exceptions import ArtifactError, InvalidParameterError, ProtocolMismatchError
from pod_eit.core.models import BasisDocument
from pod_eit.eit.protocol import Protocol, protocol_from_document, protocol_id, protocol_to_document

logger = logging.getLogger(__name__)

EIGENVALUE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """Measurement frames stored column-wise, shape (D, n)."""

    frames: np.ndarray
    protocol_id: str
    timestamps: np.ndarray | None = None

    def __post_init__(self) -> None:
        frames = np.array(self.frames, dtype=float)
        if frames.ndim != 2 or frames.shape[1] < 1 or frames.shape[0] < 1:
            raise InvalidParameterError("snapshot matrix must be (D, n) with n >= 1")
        if not np.all(np.isfinite(frames)):
            raise InvalidParameterError("snapshot matrix contains non-finite entries")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        if self.timestamps is not None and len(self.timestamps) != frames.shape[1]:
            raise InvalidParameterError("one timestamp per frame is required")

    @classmethod
    def from_rows(cls, rows: np.ndarray, protocol_id: str, timestamps=None) -> "SnapshotMatrix":
        return cls(np.atleast_2d(np.asarray(rows, dtype=float)).T, protocol_id, timestamps)

    @property
    def dimension(self) -> int:
        return int(self.frames.shape[0])

    @property
    def count(self) -> int:
        return int(self.frames.shape[1])

    def rows(self) -> np.ndarray:
        return self.frames.T


@dataclass(frozen=True, eq=False)
class PodBasis:
    modes: np.ndarray
    eigenvalues: np.ndarray
    protocol: Protocol
    mean: np.ndarray | None = None
    centered: bool = False
    source: str = ""
    frame_count: int = 0

    @property
    def dimension(self) -> int:
        return int(self.modes.shape[0])

    @property
    def rank(self) -> int:
        return int(self.modes.shape[1])

    @property
    def protocol_id(self) -> str:
        return protocol_id(self.protocol)

    def leading(self, k: int) -> np.ndarray:
        _check_count(self, k)
        return self.modes[:, :k]


def _check_count(basis: PodBasis, k: int) -> None:
    if k < 0 or k > basis.rank:
        raise InvalidParameterError(f"requested {k} modes, basis has {basis.rank}")


def _prepare(snapshots: SnapshotMatrix, center: bool) -> tuple[np.ndarray, np.ndarray | None]:
    if center and snapshots.count < 2:
        raise InvalidParameterError("centering needs at least two frames")
    x = snapshots.frames
    if not center:
        return x, None
    mean = x.mean(axis=1)
    return x - mean[:, None], mean


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    if modes.size == 0:
        return modes
    pivots = np.abs(modes).argmax(axis=0)
    signs = np.sign(modes[pivots, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs


def _mode_cap(snapshots: SnapshotMatrix, center: bool, max_modes: int | None) -> int:
    if max_modes is not None and max_modes < 1:
        raise InvalidParameterError(f"max_modes must be at least 1, got {max_modes}")
    n = snapshots.count - 1 if center else snapshots.count
    cap = min(snapshots.dimension, n)
    return cap if max_modes is None else min(cap, max_modes)


def covariance(snapshots: SnapshotMatrix, center: bool = False) -> np.ndarray:
    """Snapshot Gram matrix U^T U / (n - 1), shape (n, n)."""
    if snapshots.count < 2:
        raise InvalidParameterError("covariance needs at least two frames")
    x, _ = _prepare(snapshots, center)
    gram = x.T @ x / (snapshots.count - 1)
    return 0.5 * (gram + gram.T)


def fit_pod(
    snapshots: SnapshotMatrix,
    protocol: Protocol,
    center: bool = False,
    max_modes: int | None = None,
    source: str = "",
) -> PodBasis:
    """Thin-SVD POD: modes are left singular vectors, eigenvalues s^2 / (n - 1)."""
    if snapshots.dimension != protocol.measurement_count:
        raise ProtocolMismatchError(
            f"frames have {snapshots.dimension} entries, protocol has {protocol.measurement_count}"
        )
    cap = _mode_cap(snapshots, center, max_modes)
    x, mean = _prepare(snapshots, center)
    u, s, _ = linalg.svd(x, full_matrices=False)
    eigenvalues = s[:cap] ** 2 / max(snapshots.count - 1, 1)
    basis = PodBasis(
        modes=_fix_signs(u[:, :cap]),
        eigenvalues=np.clip(eigenvalues, 0.0, None),
        protocol=protocol,
        mean=mean,
        centered=center,
        source=source,
        frame_count=snapshots.count,
    )
    logger.info(
        "Fitted POD basis with %d modes",
        basis.rank,
        extra={"frames": snapshots.count, "protocol_id": basis.protocol_id},
    )
    return basis


def fit_pod_eig(
    snapshots: SnapshotMatrix,
    protocol: Protocol,
    center: bool = False,
    max_modes: int | None = None,
) -> PodBasis:
    """Method of snapshots on the covariance; keeps only directions with positive variance."""
    cap = _mode_cap(snapshots, center, max_modes)
    x, mean = _prepare(snapshots, center)
    values, vectors = linalg.eigh(covariance(snapshots, center))
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    keep = min(cap, int(np.count_nonzero(values > EIGENVALUE_FLOOR * max(values[0], EIGENVALUE_FLOOR))))
    values = values[:keep]
    modes = x @ vectors[:, :keep] / np.sqrt((snapshots.count - 1) * values)
    return PodBasis(
        modes=_fix_signs(modes),
        eigenvalues=values,
        protocol=protocol,
        mean=mean,
        centered=center,
        frame_count=snapshots.count,
    )


def _offset(basis: PodBasis, d: np.ndarray) -> np.ndarray:
    if not basis.centered:
        return d
    return d - (basis.mean if d.ndim == 1 else basis.mean[:, None])


def project(basis: PodBasis, d: np.ndarray, k: int | None = None) -> np.ndarray:
    """POD coordinates of a frame (D,) or a column stack (D, n)."""
    d = np.asarray(d, dtype=float)
    if d.shape[0] != basis.dimension:
        raise InvalidParameterError(f"frame has {d.shape[0]} entries, basis expects {basis.dimension}")
    k = basis.rank if k is None else k
    return basis.leading(k).T @ _offset(basis, d)


def reconstruct(basis: PodBasis, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    d = basis.leading(p.shape[0]) @ p
    if basis.centered:
        d = d + (basis.mean if d.ndim == 1 else basis.mean[:, None])
    return d


def energy_fraction(basis: PodBasis, k: int) -> float:
    """Share of the total eigenvalue mass held by the first k modes."""
    _check_count(basis, k)
    total = float(basis.eigenvalues.sum())
    if total == 0.0:
        return 1.0
    return float(basis.eigenvalues[:k].sum() / total)


def basis_to_document(basis: PodBasis) -> BasisDocument:
    return BasisDocument(
        protocol_id=basis.protocol_id,
        protocol=protocol_to_document(basis.protocol),
        source=basis.source,
        frames=basis.frame_count,
        centered=basis.centered,
        mean=None if basis.mean is None else basis.mean.tolist(),
        eigenvalues=basis.eigenvalues.tolist(),
        modes=basis.modes.T.tolist(),
    )


def basis_from_document(document: BasisDocument) -> PodBasis:
    protocol = protocol_from_document(document.protocol)
    if protocol_id(protocol) != document.protocol_id:
        raise ArtifactError("basis protocol_id does not match its embedded protocol")
    modes = np.array(document.modes, dtype=float).reshape(len(document.modes), -1).T
    if modes.shape[0] != protocol.measurement_count or modes.shape[1] != len(document.eigenvalues):
        raise ArtifactError(
            f"basis modes shaped {modes.shape} do not fit {protocol.measurement_count} measurements"
        )
    if document.centered and document.mean is None:
        raise ArtifactError("centered basis is missing its mean")
    return PodBasis(
        modes=modes,
        eigenvalues=np.array(document.eigenvalues, dtype=float),
        protocol=protocol,
        mean=None if document.mean is None else np.array(document.mean, dtype=float),
        centered=document.centered,
        source=document.source,
        frame_count=document.frames,
    )


def basis_id(basis: PodBasis) -> str:
    return content_hash(canonical_json(basis_to_document(basis).model_dump(mode="json")))
