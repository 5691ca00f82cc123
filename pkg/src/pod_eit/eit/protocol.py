"""Four-electrode measurement protocols, Onsager pairing and dropout subsets."""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from pod_eit.core.artifacts import canonical_json, content_hash
from pod_eit.core.exceptions import ArtifactError, InvalidParameterError
from pod_eit.core.models import ProtocolDocument

NO_PARTNER = -1


@dataclass(frozen=True, eq=False)
class Protocol:
    electrode_count: int
    # rows are (drive+, drive-, sense+, sense-)
    measurements: np.ndarray
    onsager_partner: np.ndarray

    @property
    def measurement_count(self) -> int:
        return int(self.measurements.shape[0])

    @property
    def drive_pairs(self) -> np.ndarray:
        return self.measurements[:, :2]

    @property
    def sense_pairs(self) -> np.ndarray:
        return self.measurements[:, 2:]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def max_independent(electrode_count: int) -> int:
    """Largest number of independent four-electrode measurements, C(C-3)/2."""
    if electrode_count < 3:
        raise InvalidParameterError(f"need at least 3 electrodes, got {electrode_count}")
    return electrode_count * (electrode_count - 3) // 2


def onsager_partners(measurements: np.ndarray) -> np.ndarray:
    """Index of the measurement with drive and sense swapped, or NO_PARTNER."""
    lookup = {tuple(row): i for i, row in enumerate(measurements.tolist())}
    partners = np.full(len(measurements), NO_PARTNER, dtype=np.int64)
    for i, (a, b, c, d) in enumerate(measurements.tolist()):
        partners[i] = lookup.get((c, d, a, b), NO_PARTNER)
    return partners


def build_protocol(electrode_count: int, measurements: Iterable[Sequence[int]]) -> Protocol:
    rows = np.array([tuple(int(e) for e in m) for m in measurements], dtype=np.int64).reshape(-1, 4)
    if rows.shape[0] == 0:
        raise InvalidParameterError("a protocol needs at least one measurement")
    if rows.min() < 0 or rows.max() >= electrode_count:
        raise InvalidParameterError(f"electrode index outside 0..{electrode_count - 1}")
    for row in rows:
        if len(set(row.tolist())) != 4:
            raise InvalidParameterError(f"measurement {row.tolist()} reuses an electrode")
    return Protocol(electrode_count, _frozen(rows), _frozen(onsager_partners(rows)))


def skip_protocol(electrode_count: int) -> Protocol:
    """Adjacent drive, adjacent sense; drive-major with ascending sense pairs."""
    c = electrode_count
    if c < 5:
        raise InvalidParameterError(f"the skip protocol needs at least 5 electrodes, got {c}")
    rows = []
    for i in range(c):
        drive = (i, (i + 1) % c)
        for j in range(c):
            sense = (j, (j + 1) % c)
            if set(drive).isdisjoint(sense):
                rows.append(drive + sense)
    return build_protocol(c, rows)


def valid_subset(protocol: Protocol, bad_electrodes: Iterable[int]) -> list[int]:
    """Measurement indices whose four electrodes all avoid ``bad_electrodes``, in protocol order."""
    bad = sorted(set(int(e) for e in bad_electrodes))
    if bad and (bad[0] < 0 or bad[-1] >= protocol.electrode_count):
        raise InvalidParameterError(f"bad electrode outside 0..{protocol.electrode_count - 1}")
    touches = np.isin(protocol.measurements, bad).any(axis=1)
    valid = np.flatnonzero(~touches).tolist()
    if not valid:
        raise InvalidParameterError(f"bad electrodes {bad} invalidate every measurement")
    return valid


def deduplicate_onsager(protocol: Protocol) -> tuple[Protocol, list[int]]:
    """Keep the first member of every Onsager pair (D_0 rows for a full skip set)."""
    kept = [
        i
        for i, partner in enumerate(protocol.onsager_partner.tolist())
        if partner == NO_PARTNER or i < partner
    ]
    return build_protocol(protocol.electrode_count, protocol.measurements[kept]), kept


def rotate_measurements(protocol: Protocol, shift: int) -> np.ndarray:
    """Permutation p with measurement p[i] equal to measurement i relabelled by +shift."""
    c = protocol.electrode_count
    lookup = {tuple(row): i for i, row in enumerate(protocol.measurements.tolist())}
    rotated = (protocol.measurements + shift) % c
    try:
        return np.array([lookup[tuple(row)] for row in rotated.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise InvalidParameterError(f"protocol is not closed under rotation by {shift}") from exc


def protocol_to_document(protocol: Protocol) -> ProtocolDocument:
    return ProtocolDocument(
        electrode_count=protocol.electrode_count,
        measurements=[tuple(m) for m in protocol.measurements.tolist()],
    )


def protocol_from_document(document: ProtocolDocument) -> Protocol:
    try:
        return build_protocol(document.electrode_count, document.measurements)
    except InvalidParameterError as exc:
        raise ArtifactError(f"invalid protocol document: {exc}") from exc


def protocol_id(protocol: Protocol) -> str:
    return content_hash(canonical_json(protocol_to_document(protocol).model_dump(mode="json")))
