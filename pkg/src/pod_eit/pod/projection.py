"""Compensating bad electrodes by projecting reduced frames back to full length.

Valid measurements d' are expressed in POD coordinates through the rows of the
basis that survive the dropout (Phi'), and the full frame is rebuilt from the
complete rows (Phi''): d'' = Phi'' (Phi')^-1 d'.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy import linalg

from pod_eit.core.exceptions import ConditioningError, InvalidParameterError, ProtocolMismatchError
from pod_eit.core.models import ConditioningRow, ErrorSummary
from pod_eit.eit.protocol import Protocol, protocol_id, valid_subset
from pod_eit.pod.basis import PodBasis, basis_id

logger = logging.getLogger(__name__)

DEFAULT_CONDITION_THRESHOLD = 1e8
DEFAULT_CUTOFF = 1e-10

Method = Literal["inverse", "lstsq", "pinv"]


@dataclass(frozen=True, eq=False)
class ProjectionOperator:
    bad_electrodes: tuple[int, ...]
    valid_indices: np.ndarray
    map: np.ndarray
    condition: float
    modes: int
    method: Method
    basis_id: str
    protocol_id: str
    mean: np.ndarray | None = None

    @property
    def full_count(self) -> int:
        return int(self.map.shape[0])

    @property
    def valid_count(self) -> int:
        return int(self.map.shape[1])


def restrict(frames: np.ndarray, valid_indices: Sequence[int] | np.ndarray) -> np.ndarray:
    """Keep the valid measurements of a frame (D,) or of row-stacked frames (n, D)."""
    return np.asarray(frames, dtype=float)[..., np.asarray(valid_indices, dtype=np.int64)]


def _condition(matrix: np.ndarray) -> float:
    s = linalg.svdvals(matrix)
    if s.size == 0 or s[-1] == 0.0:
        return math.inf
    return float(s[0] / s[-1])


def build_projector(
    basis: PodBasis,
    protocol: Protocol,
    bad_electrodes: Iterable[int],
    condition_threshold: float = DEFAULT_CONDITION_THRESHOLD,
    regularize: bool = False,
    cutoff: float = DEFAULT_CUTOFF,
    modes: int | None = None,
) -> ProjectionOperator:
    """Precompute the D x D' map for one set of bad electrodes.

    By default Phi' is square (D' modes) and inverted through an LU factorization.
    With ``modes`` below D' the map is a least-squares fit; ``regularize``
    switches to a pseudo-inverse that drops singular values under ``cutoff``
    relative to the largest.
    """
    pid = protocol_id(protocol)
    if pid != basis.protocol_id:
        raise ProtocolMismatchError(f"basis protocol {basis.protocol_id} does not match {pid}")
    bad = tuple(sorted(set(int(e) for e in bad_electrodes)))
    valid = np.array(valid_subset(protocol, bad), dtype=np.int64)
    d_valid = len(valid)
    k = d_valid if modes is None else int(modes)
    if k < 1 or k > d_valid:
        raise InvalidParameterError(f"mode count must lie in 1..{d_valid}, got {k}")
    if k > basis.rank:
        raise InvalidParameterError(f"{d_valid} valid measurements need {k} modes, basis has {basis.rank}")

    phi_full = basis.leading(k)
    phi_valid = phi_full[valid]
    condition = _condition(phi_valid)

    if regularize:
        inverse, effective_rank = linalg.pinv(phi_valid, atol=0.0, rtol=cutoff, return_rank=True)
        if effective_rank == 0:
            raise ConditioningError(
                f"restricted basis for bad electrodes {list(bad)} is identically zero",
                condition=math.inf,
                threshold=condition_threshold,
            )
        s = linalg.svdvals(phi_valid)
        condition = float(s[0] / s[effective_rank - 1])
        mapping = phi_full @ inverse
        method: Method = "pinv"
    else:
        if not condition <= condition_threshold:
            raise ConditioningError(
                f"restricted basis for bad electrodes {list(bad)} has condition {condition:.3e}",
                condition=condition,
                threshold=condition_threshold,
            )
        if k == d_valid:
            lu = linalg.lu_factor(phi_valid)
            # map^T = Phi'^-T Phi''^T
            mapping = linalg.lu_solve(lu, phi_full.T, trans=1).T
            method = "inverse"
        else:
            solution, *_ = linalg.lstsq(phi_valid, np.eye(d_valid))
            mapping = phi_full @ solution
            method = "lstsq"

    mapping.setflags(write=False)
    logger.info(
        "Built projector D=%d D'=%d modes=%d (%s)",
        basis.dimension,
        d_valid,
        k,
        method,
        extra={"bad_electrodes": list(bad), "condition": condition, "protocol_id": pid},
    )
    return ProjectionOperator(
        bad_electrodes=bad,
        valid_indices=valid,
        map=mapping,
        condition=condition,
        modes=k,
        method=method,
        basis_id=basis_id(basis),
        protocol_id=pid,
        mean=basis.mean if basis.centered else None,
    )


def apply_projector(op: ProjectionOperator, d_reduced: np.ndarray) -> np.ndarray:
    """Full-length frame(s) from reduced frame(s); accepts (D',) or (n, D')."""
    d = np.asarray(d_reduced, dtype=float)
    if d.shape[-1] != op.valid_count:
        raise InvalidParameterError(f"reduced frame has {d.shape[-1]} entries, projector expects {op.valid_count}")
    if op.mean is None:
        return d @ op.map.T
    return (d - op.mean[op.valid_indices]) @ op.map.T + op.mean


def relative_errors(truth: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    """Per-frame ||estimate - truth|| / ||truth|| over row-stacked frames."""
    truth = np.atleast_2d(truth)
    estimate = np.atleast_2d(estimate)
    if truth.shape != estimate.shape:
        raise InvalidParameterError(f"frame shapes differ: {truth.shape} vs {estimate.shape}")
    norms = np.linalg.norm(truth, axis=1)
    diffs = np.linalg.norm(estimate - truth, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norms > 0, diffs / np.where(norms > 0, norms, 1.0), diffs)


def zero_fill(reduced: np.ndarray, valid_indices: Sequence[int] | np.ndarray, full_count: int) -> np.ndarray:
    """Baseline reconstruction: valid entries kept, missing ones set to zero."""
    reduced = np.atleast_2d(reduced)
    out = np.zeros((reduced.shape[0], full_count))
    out[:, np.asarray(valid_indices, dtype=np.int64)] = reduced
    return out


def summarize(errors: np.ndarray) -> ErrorSummary:
    return ErrorSummary(
        median=float(np.median(errors)),
        mean=float(np.mean(errors)),
        p95=float(np.percentile(errors, 95)),
    )


def conditioning_report(
    basis: PodBasis,
    protocol: Protocol,
    threshold: float = DEFAULT_CONDITION_THRESHOLD,
    dropout_size: int = 1,
    modes: int | None = None,
    truth: np.ndarray | None = None,
    cutoff: float = DEFAULT_CUTOFF,
    frames: np.ndarray | None = None,
) -> list[ConditioningRow]:
    """One row per dropout set of ``dropout_size`` electrodes, ordered lexicographically.

    ``residual`` is the median relative error of restricting held-out
    ``frames`` (n, D) and projecting them back, measured against those same
    frames. Without frames it falls back to the worst round-trip error over
    the retained modes. When ``truth`` frames are given, ``projection_error``
    is the median relative error of the projected frames against them; the
    projected input is ``frames`` when given, else ``truth`` itself.
    Never raises on bad conditioning: such rows are flagged and evaluated
    through the regularized pseudo-inverse.
    """
    if not 1 <= dropout_size < protocol.electrode_count:
        raise InvalidParameterError(f"dropout_size must lie in 1..{protocol.electrode_count - 1}")
    if frames is not None:
        frames = np.atleast_2d(np.asarray(frames, dtype=float))
    if truth is not None:
        truth = np.atleast_2d(np.asarray(truth, dtype=float))
        if frames is not None and frames.shape != truth.shape:
            raise InvalidParameterError(f"frames {frames.shape} and truth {truth.shape} differ in shape")
    rows = []
    for bad in itertools.combinations(range(protocol.electrode_count), dropout_size):
        try:
            valid = valid_subset(protocol, bad)
        except InvalidParameterError:
            rows.append(ConditioningRow(electrodes=list(bad), valid_count=0, modes=0, condition=None, flagged=True))
            continue
        k = len(valid) if modes is None else min(modes, len(valid))
        if k > basis.rank:
            rows.append(
                ConditioningRow(electrodes=list(bad), valid_count=len(valid), modes=k, condition=None, flagged=True)
            )
            continue
        condition = _condition(basis.leading(k)[valid])
        try:
            op = build_projector(basis, protocol, bad, regularize=True, cutoff=cutoff, modes=k)
        except ConditioningError:
            rows.append(
                ConditioningRow(electrodes=list(bad), valid_count=len(valid), modes=k, condition=None, flagged=True)
            )
            continue
        if frames is not None:
            residual = float(np.median(relative_errors(frames, apply_projector(op, restrict(frames, valid)))))
        else:
            in_span = basis.leading(k).T
            if basis.centered:
                in_span = in_span + basis.mean
            residual = float(relative_errors(in_span, apply_projector(op, restrict(in_span, valid))).max())
        projection_error = None
        if truth is not None:
            source = truth if frames is None else frames
            projected = apply_projector(op, restrict(source, valid))
            projection_error = float(np.median(relative_errors(truth, projected)))
        rows.append(
            ConditioningRow(
                electrodes=list(bad),
                valid_count=len(valid),
                modes=k,
                condition=condition if math.isfinite(condition) else None,
                flagged=not condition <= threshold,
                residual=residual,
                projection_error=projection_error,
            )
        )
    return rows
