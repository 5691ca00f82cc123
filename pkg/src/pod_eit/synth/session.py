"""Synthetic measurement sessions: moving inclusions, contact jitter, sensor noise, faults."""

import logging
import math
import time
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
from joblib import Parallel, delayed

from pod_eit.core.exceptions import InvalidParameterError
from pod_eit.core.logging import elapsed_ms
from pod_eit.core.models import Anomaly, Phantom, SessionSpec, TrajectorySpec
from pod_eit.eit.fem import Conductivity, solve_forward
from pod_eit.eit.mesh import ElectrodeLayout, Mesh
from pod_eit.eit.protocol import Protocol, protocol_id, valid_subset
from pod_eit.pod.basis import SnapshotMatrix

logger = logging.getLogger(__name__)

FaultModel = Literal["drop", "zero", "saturate"]
FAULT_MODELS: tuple[str, ...] = ("drop", "zero", "saturate")
DEFAULT_RAIL = 10.0
FLAT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Session:
    frames: SnapshotMatrix
    # noiseless frames for the same phantoms and contacts
    truth: SnapshotMatrix
    contact_impedance: np.ndarray


def make_phantom(spec: Phantom, mesh: Mesh) -> Conductivity:
    """Background everywhere, overridden (in order) where an element centroid lies inside an inclusion."""
    values = np.full(mesh.element_count, float(spec.background))
    centroids = mesh.element_centroids()
    for anomaly in spec.anomalies:
        centre = np.asarray(anomaly.center, dtype=float)
        if np.hypot(*centre) + anomaly.radius > mesh.radius * (1.0 + 1e-12):
            raise InvalidParameterError(f"anomaly at {anomaly.center} with radius {anomaly.radius} leaves the disk")
        inside = np.sum((centroids - centre) ** 2, axis=1) <= anomaly.radius**2
        values[inside] = anomaly.conductivity
    return Conductivity(values)


def trajectory_anomaly(trajectory: TrajectorySpec, index: int, frame_count: int) -> Anomaly:
    """The inclusion at frame ``index`` of ``frame_count``."""
    periodic = index / frame_count
    radius = trajectory.anomaly_radius * (1.0 + trajectory.radius_swing * math.sin(2.0 * math.pi * periodic))
    if trajectory.kind == "static":
        centre = trajectory.start
    elif trajectory.kind == "orbit":
        angle = 2.0 * math.pi * trajectory.revolutions * periodic
        centre = (trajectory.orbit_radius * math.cos(angle), trajectory.orbit_radius * math.sin(angle))
    elif trajectory.kind == "sweep":
        t = index / max(frame_count - 1, 1)
        (x0, y0), (x1, y1) = trajectory.start, trajectory.end
        centre = (x0 + t * (x1 - x0), y0 + t * (y1 - y0))
    else:
        centre = trajectory.poses[index * len(trajectory.poses) // frame_count]
    return Anomaly(center=centre, radius=radius, conductivity=trajectory.anomaly_conductivity)


def trajectory_phantom(trajectory: TrajectorySpec, index: int, frame_count: int) -> Phantom:
    return Phantom(
        background=trajectory.background,
        anomalies=[trajectory_anomaly(trajectory, index, frame_count)],
    )


def _simulate_frame(
    mesh: Mesh,
    layout: ElectrodeLayout,
    protocol: Protocol,
    spec: SessionSpec,
    index: int,
    seed: np.random.SeedSequence,
    amplitude: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    jitter = np.exp(spec.contact_noise * rng.standard_normal(layout.electrode_count))
    contacts = layout.contact_impedance * jitter
    sigma = make_phantom(trajectory_phantom(spec.trajectory, index, spec.frame_count), mesh)
    clean = solve_forward(mesh, sigma, layout.with_contact_impedance(contacts), protocol, amplitude)
    noisy = clean + spec.sensor_noise * rng.standard_normal(clean.shape)
    return noisy, clean, contacts


def simulate_session(
    mesh: Mesh,
    layout: ElectrodeLayout,
    protocol: Protocol,
    spec: SessionSpec,
    amplitude: float = 1.0,
    n_jobs: int = 1,
) -> Session:
    """Frames for every trajectory step; each frame draws from its own child of ``spec.seed``."""
    started = time.perf_counter()
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.frame_count)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_simulate_frame)(mesh, layout, protocol, spec, i, seeds[i], amplitude)
        for i in range(spec.frame_count)
    )
    noisy, clean, contacts = (np.array(part) for part in zip(*results))
    pid = protocol_id(protocol)
    logger.info(
        "Simulated session",
        extra={
            "frames": spec.frame_count,
            "protocol_id": pid,
            "elapsed_ms": elapsed_ms(started),
        },
    )
    return Session(
        frames=SnapshotMatrix.from_rows(noisy, pid),
        truth=SnapshotMatrix.from_rows(clean, pid),
        contact_impedance=contacts,
    )


def inject_fault(
    frames: np.ndarray,
    protocol: Protocol,
    bad_electrodes: Iterable[int],
    model: FaultModel = "drop",
    rail: float = DEFAULT_RAIL,
) -> tuple[np.ndarray, list[int]]:
    """Corrupt row-stacked frames (n, D) as if ``bad_electrodes`` had failed.

    ``drop`` keeps only the valid columns; ``zero`` and ``saturate`` keep the
    full width with the invalid columns set to 0 or to ``rail``.
    """
    if model not in FAULT_MODELS:
        raise InvalidParameterError(f"unknown fault model {model!r}")
    frames = np.atleast_2d(np.asarray(frames, dtype=float))
    if frames.shape[1] != protocol.measurement_count:
        raise InvalidParameterError(
            f"frames have {frames.shape[1]} columns, protocol has {protocol.measurement_count}"
        )
    valid = valid_subset(protocol, bad_electrodes)
    if model == "drop":
        return frames[:, valid].copy(), valid
    corrupted = np.full_like(frames, 0.0 if model == "zero" else rail)
    corrupted[:, valid] = frames[:, valid]
    return corrupted, valid


def detect_bad_electrodes(
    frames: np.ndarray,
    protocol: Protocol,
    rail: float | None = DEFAULT_RAIL,
    tolerance: float = FLAT_TOLERANCE,
) -> list[int]:
    """Electrodes whose every measurement is flat-lined or at the rail across the session."""
    frames = np.atleast_2d(np.asarray(frames, dtype=float))
    if frames.shape[1] != protocol.measurement_count:
        raise InvalidParameterError(
            f"frames have {frames.shape[1]} columns, protocol has {protocol.measurement_count}"
        )
    scale = max(float(np.abs(frames).max()), np.finfo(float).tiny)
    flat = np.ptp(frames, axis=0) <= tolerance * scale
    if frames.shape[0] == 1:
        flat = np.abs(frames[0]) <= tolerance * scale
    suspicious = flat
    if rail is not None:
        suspicious = suspicious | np.any(np.abs(frames) >= rail, axis=0)
    bad = []
    for electrode in range(protocol.electrode_count):
        involved = np.isin(protocol.measurements, [electrode]).any(axis=1)
        if involved.any() and suspicious[involved].all():
            bad.append(electrode)
    if bad:
        logger.warning("Detected bad electrodes", extra={"bad_electrodes": bad})
    return bad
