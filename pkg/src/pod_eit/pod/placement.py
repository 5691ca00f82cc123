"""Electrode placement search scored against a data-derived POD basis.

The reference Jacobian (the layout the data was collected with) maps the
leading POD modes into mesh-element space once. Every candidate layout is then
scored by the log Gram volume of its own Jacobian expressed in those mesh
modes; a candidate that cannot span the modes scores minus infinity.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass
from typing import Iterator, Literal, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg

from pod_eit.core.exceptions import InvalidParameterError, NumericalError, ProtocolMismatchError
from pod_eit.core.logging import elapsed_ms
from pod_eit.core.models import PlacementEntry
from pod_eit.eit.fem import Conductivity, Jacobian, compute_jacobian
from pod_eit.eit.mesh import ElectrodeLayout, Mesh, default_electrode_arc, layout_from_slots
from pod_eit.eit.protocol import deduplicate_onsager, skip_protocol
from pod_eit.pod.basis import PodBasis, basis_id

logger = logging.getLogger(__name__)

ScoreKind = Literal["gram", "data_gram", "volume"]
SCORE_KINDS: tuple[str, ...] = ("gram", "data_gram", "volume")


@dataclass(frozen=True, eq=False)
class MeshPod:
    matrix: np.ndarray
    # data-space modes the mesh modes were built from, (D, P)
    data_modes: np.ndarray
    source_basis: str
    reference_jacobian: str

    @property
    def modes(self) -> int:
        return int(self.matrix.shape[1])


@dataclass(frozen=True)
class PlacementScore:
    selected_slots: tuple[int, ...]
    log_score: float
    rank: int = 0
    matrix_rank: int = 0

    @property
    def deficient(self) -> bool:
        return math.isinf(self.log_score)

    def to_entry(self) -> PlacementEntry:
        return PlacementEntry(
            slots=list(self.selected_slots),
            log_score=None if self.deficient else self.log_score,
            deficient=self.deficient,
            rank=self.rank,
        )


def _matrix(jacobian: Jacobian | np.ndarray) -> np.ndarray:
    matrix = jacobian.matrix if isinstance(jacobian, Jacobian) else np.asarray(jacobian, dtype=float)
    if matrix.ndim != 2:
        raise InvalidParameterError("a Jacobian must be two-dimensional")
    if not np.all(np.isfinite(matrix)):
        raise InvalidParameterError("Jacobian has non-finite entries")
    return matrix


def log_volume(a: np.ndarray) -> tuple[float, int]:
    """Half the log determinant of the smaller Gram matrix of ``a``, with its numerical rank.

    Returns ``-inf`` when ``a`` is rank-deficient.
    """
    s = linalg.svdvals(a)
    full = min(a.shape)
    if full == 0:
        return 0.0, 0
    tol = s[0] * max(a.shape) * np.finfo(float).eps if s.size else 0.0
    rank = int(np.count_nonzero(s > tol))
    if rank < full:
        return -math.inf, rank
    return float(np.log(s).sum()), rank


def sensitivity(jacobian: Jacobian | np.ndarray) -> float:
    """log S with S = sqrt(det(J J^T))."""
    matrix = _matrix(jacobian)
    if matrix.shape[0] > matrix.shape[1]:
        raise InvalidParameterError(
            f"sensitivity needs at most as many measurements as elements, got {matrix.shape}"
        )
    return log_volume(matrix)[0]


def mesh_pod(reference: Jacobian, basis: PodBasis, modes: int) -> MeshPod:
    """Phi_M = J^T Phi, one mesh-space column per POD mode."""
    matrix = _matrix(reference)
    if matrix.shape[0] != basis.dimension:
        raise InvalidParameterError(
            f"Jacobian has {matrix.shape[0]} rows, basis has {basis.dimension} entries per mode"
        )
    if reference.protocol_id != basis.protocol_id:
        raise ProtocolMismatchError("reference Jacobian and POD basis use different protocols")
    if modes < 1:
        raise InvalidParameterError("at least one POD mode is required")
    phi = basis.leading(modes)
    return MeshPod(
        matrix=matrix.T @ phi,
        data_modes=phi,
        source_basis=basis_id(basis),
        reference_jacobian=f"{reference.protocol_id}:{reference.layout_id}",
    )


def _candidate_score(matrix: np.ndarray, pod: MeshPod, score: ScoreKind) -> tuple[float, int]:
    if matrix.shape[1] != pod.matrix.shape[0]:
        raise InvalidParameterError(
            f"candidate Jacobian has {matrix.shape[1]} columns, mesh modes have {pod.matrix.shape[0]} rows"
        )
    if score == "gram":
        if pod.modes > matrix.shape[0]:
            raise InvalidParameterError(
                f"{pod.modes} modes exceed the candidate's {matrix.shape[0]} measurements"
            )
        return log_volume(matrix @ pod.matrix)
    if score == "data_gram":
        if matrix.shape[0] != pod.data_modes.shape[0]:
            raise InvalidParameterError("data_gram needs candidates with the reference measurement count")
        return log_volume(matrix.T @ pod.data_modes)
    raise InvalidParameterError(f"unknown score {score!r}")


def pod_sensitivity(candidate: Jacobian | np.ndarray, pod: MeshPod, score: ScoreKind = "gram") -> float:
    """log S_phi: half log det(A^T A) with A = J_cand Phi_M."""
    return _candidate_score(_matrix(candidate), pod, score)[0]


def enumerate_candidates(slot_count: int, select: int) -> Iterator[tuple[int, ...]]:
    if select < 1 or select > slot_count:
        raise InvalidParameterError(f"cannot select {select} of {slot_count} slots")
    return itertools.combinations(range(slot_count), select)


def _score_layout(
    mesh: Mesh,
    sigma0: Conductivity,
    slots: tuple[int, ...],
    slot_count: int,
    electrode_arc: float,
    contact_impedance: float,
    pod: MeshPod,
    score: ScoreKind,
) -> PlacementScore:
    layout = layout_from_slots(slot_count, slots, electrode_arc, contact_impedance)
    protocol = skip_protocol(layout.electrode_count)
    matrix = compute_jacobian(mesh, sigma0, layout, protocol).matrix
    if score == "volume":
        _, kept = deduplicate_onsager(protocol)
        value, rank = log_volume(matrix[kept])
    else:
        value, rank = _candidate_score(matrix, pod, score)
    logger.debug("Scored slots %s: %s", slots, value)
    return PlacementScore(slots, value, matrix_rank=rank)


def rank_scores(scores: Sequence[PlacementScore]) -> list[PlacementScore]:
    """Descending log score; ties go to the lexicographically smallest slot set."""
    ordered = sorted(scores, key=lambda s: (-s.log_score, s.selected_slots))
    return [
        PlacementScore(s.selected_slots, s.log_score, rank=i, matrix_rank=s.matrix_rank)
        for i, s in enumerate(ordered, start=1)
    ]


def optimize_placement(
    mesh: Mesh,
    basis: PodBasis,
    reference_layout: ElectrodeLayout,
    slot_count: int,
    select: int,
    modes: int,
    score: ScoreKind = "gram",
    background: float = 1.0,
    arc_fraction: float = 0.5,
    n_jobs: int = 1,
) -> list[PlacementScore]:
    """Score every ``select``-of-``slot_count`` layout and return them ranked."""
    if score not in SCORE_KINDS:
        raise InvalidParameterError(f"unknown score {score!r}")
    if select < 5:
        raise InvalidParameterError(f"the skip protocol needs at least 5 electrodes, got select={select}")
    reference_protocol = skip_protocol(reference_layout.electrode_count)
    sigma0 = Conductivity.homogeneous(mesh, background)
    reference = compute_jacobian(mesh, sigma0, reference_layout, reference_protocol)
    if reference.protocol_id != basis.protocol_id:
        raise ProtocolMismatchError(
            f"basis protocol {basis.protocol_id} is not the reference skip protocol {reference.protocol_id}"
        )
    pod = mesh_pod(reference, basis, modes)

    arc = default_electrode_arc(slot_count, arc_fraction)
    contact = float(np.mean(reference_layout.contact_impedance))
    candidates = list(enumerate_candidates(slot_count, select))
    logger.info(
        "Scoring candidate placements",
        extra={"candidates": len(candidates), "protocol_id": basis.protocol_id},
    )
    started = time.perf_counter()
    # joblib returns results in submission order, so ranking is independent of n_jobs
    scores = Parallel(n_jobs=n_jobs)(
        delayed(_score_layout)(mesh, sigma0, c, slot_count, arc, contact, pod, score) for c in candidates
    )
    if all(s.deficient for s in scores):
        raise NumericalError(f"all {len(scores)} candidate placements are rank-deficient for {modes} modes")
    ranking = rank_scores(scores)
    logger.info(
        "Placement search finished, best slots %s",
        ranking[0].selected_slots,
        extra={"candidates": len(ranking), "elapsed_ms": elapsed_ms(started)},
    )
    return ranking


def compare_placements(ranking: Sequence[PlacementScore], slots: Sequence[int]) -> PlacementScore:
    """The ranked entry for ``slots``, e.g. to locate the evenly spaced reference band."""
    wanted = tuple(sorted(int(s) for s in slots))
    for entry in ranking:
        if entry.selected_slots == wanted:
            return entry
    raise InvalidParameterError(f"slot set {list(wanted)} is not among the ranked candidates")
