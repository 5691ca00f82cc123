"""Triangulated disk meshes and electrode layouts on their boundary."""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from pod_eit.core.artifacts import canonical_json, content_hash
from pod_eit.core.exceptions import ArtifactError, InvalidParameterError
from pod_eit.core.models import LayoutDocument, MeshDocument

logger = logging.getLogger(__name__)

MIN_RING_NODES = 6
BOUNDARY_TOLERANCE = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Mesh:
    radius: float
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray

    @property
    def element_count(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def node_count(self) -> int:
        return int(self.nodes.shape[0])

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def element_areas(self) -> np.ndarray:
        return np.abs(self.signed_areas())

    def element_centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    def boundary_edges(self) -> np.ndarray:
        """Consecutive counterclockwise boundary node pairs, closing the loop."""
        b = self.boundary_nodes
        return np.column_stack((b, np.roll(b, -1)))


@dataclass(frozen=True, eq=False)
class ElectrodeLayout:
    slot_count: int
    slots: tuple[int, ...]
    slot_angles: np.ndarray
    electrode_arc: float
    contact_impedance: np.ndarray = field(repr=False)

    @property
    def electrode_count(self) -> int:
        return len(self.slots)

    def with_contact_impedance(self, contact_impedance: np.ndarray) -> "ElectrodeLayout":
        z = np.asarray(contact_impedance, dtype=float).copy()
        if z.shape != (self.electrode_count,) or np.any(z <= 0):
            raise InvalidParameterError("contact impedance must be positive, one value per electrode")
        return ElectrodeLayout(self.slot_count, self.slots, self.slot_angles, self.electrode_arc, _frozen(z))


def _ring_counts(boundary_segments: int, rings: int, symmetry: int) -> list[int]:
    counts = []
    for j in range(1, rings + 1):
        n = max(MIN_RING_NODES, round(boundary_segments * j / rings))
        n = max(symmetry, -(-n // symmetry) * symmetry)
        counts.append(n)
    counts[-1] = boundary_segments
    return counts


def _stitch(inner: Sequence[int], outer: Sequence[int]) -> list[tuple[int, int, int]]:
    # walk both rings by angle; angles i/a and k/b are compared as integers so
    # that rings sharing a rotation order triangulate identically in every period
    a, b = len(inner), len(outer)
    i = k = 0
    triangles = []
    while i < a or k < b:
        advance_inner = k == b or (i < a and (i + 1) * b < (k + 1) * a)
        if advance_inner:
            triangles.append((inner[i], outer[k % b], inner[(i + 1) % a]))
            i += 1
        else:
            triangles.append((outer[k], outer[(k + 1) % b], inner[i % a]))
            k += 1
    return triangles


def build_disk_mesh(
    radius: float = 1.0,
    boundary_segments: int = 64,
    interior_density: float = 1.0,
    symmetry: int = 1,
) -> Mesh:
    """Structured polar-ring triangulation of a disk.

    Rings sit at equal radial spacing; ``interior_density`` is the ratio of the
    boundary segment length to the ring spacing. Every ring's node count is a
    multiple of ``symmetry`` so rotations by ``2*pi/symmetry`` map the mesh
    onto itself.
    """
    if not radius > 0:
        raise InvalidParameterError(f"radius must be positive, got {radius}")
    if not interior_density > 0:
        raise InvalidParameterError(f"interior_density must be positive, got {interior_density}")
    if boundary_segments < 16:
        raise InvalidParameterError(f"boundary_segments must be at least 16, got {boundary_segments}")
    if symmetry < 1 or boundary_segments % symmetry:
        raise InvalidParameterError(
            f"symmetry {symmetry} must divide boundary_segments {boundary_segments}"
        )

    rings = max(1, math.ceil(interior_density * boundary_segments / (2 * math.pi)))
    counts = _ring_counts(boundary_segments, rings, symmetry)

    coords = [(0.0, 0.0)]
    ring_indices: list[list[int]] = [[0]]
    for j, n in enumerate(counts, start=1):
        r = radius * j / rings
        start = len(coords)
        for i in range(n):
            theta = 2.0 * math.pi * i / n
            coords.append((r * math.cos(theta), r * math.sin(theta)))
        ring_indices.append(list(range(start, start + n)))

    first = ring_indices[1]
    triangles = [(0, first[i], first[(i + 1) % len(first)]) for i in range(len(first))]
    for inner, outer in zip(ring_indices[1:-1], ring_indices[2:]):
        triangles.extend(_stitch(inner, outer))

    mesh = Mesh(
        radius=float(radius),
        nodes=_frozen(np.array(coords, dtype=float)),
        triangles=_frozen(np.array(triangles, dtype=np.int64)),
        boundary_nodes=_frozen(np.array(ring_indices[-1], dtype=np.int64)),
    )
    validate_mesh(mesh)
    logger.debug(
        "Built disk mesh: rings=%d nodes=%d elements=%d", rings, mesh.node_count, mesh.element_count
    )
    return mesh


def validate_mesh(mesh: Mesh) -> None:
    """Check the structural invariants; raises ArtifactError on the first violation."""
    n = mesh.node_count
    tri = mesh.triangles
    if tri.ndim != 2 or tri.shape[1] != 3 or tri.shape[0] == 0:
        raise ArtifactError("triangles must be a non-empty (M, 3) index array")
    if tri.min() < 0 or tri.max() >= n:
        raise ArtifactError("triangle references a node that does not exist")
    if np.unique(tri).size != n:
        raise ArtifactError("mesh has orphan nodes")
    if np.any(mesh.signed_areas() <= 0):
        raise ArtifactError("mesh has triangles with non-positive counterclockwise area")

    boundary = mesh.nodes[mesh.boundary_nodes]
    radii = np.hypot(boundary[:, 0], boundary[:, 1])
    if np.any(np.abs(radii - mesh.radius) > BOUNDARY_TOLERANCE * mesh.radius):
        raise ArtifactError("boundary node off the circle")
    angles = np.mod(np.arctan2(boundary[:, 1], boundary[:, 0]), 2 * np.pi)
    if abs(boundary[0, 1]) > BOUNDARY_TOLERANCE * mesh.radius or boundary[0, 0] <= 0:
        raise ArtifactError("boundary must start at angle 0")
    if np.any(np.diff(angles[1:]) <= 0) or np.unique(mesh.boundary_nodes).size != len(mesh.boundary_nodes):
        raise ArtifactError("boundary must traverse the circle once, counterclockwise")


def mesh_to_document(mesh: Mesh) -> MeshDocument:
    return MeshDocument(
        radius=mesh.radius,
        nodes=[tuple(p) for p in mesh.nodes.tolist()],
        triangles=[tuple(t) for t in mesh.triangles.tolist()],
        boundary=mesh.boundary_nodes.tolist(),
    )


def mesh_from_document(document: MeshDocument) -> Mesh:
    mesh = Mesh(
        radius=float(document.radius),
        nodes=_frozen(np.array(document.nodes, dtype=float).reshape(-1, 2)),
        triangles=_frozen(np.array(document.triangles, dtype=np.int64).reshape(-1, 3)),
        boundary_nodes=_frozen(np.array(document.boundary, dtype=np.int64)),
    )
    validate_mesh(mesh)
    return mesh


def mesh_id(mesh: Mesh) -> str:
    return content_hash(canonical_json(mesh_to_document(mesh).model_dump(mode="json")))


def default_electrode_arc(slot_count: int, arc_fraction: float = 0.5) -> float:
    """Half-width covering ``arc_fraction`` of half the slot pitch."""
    return arc_fraction * math.pi / slot_count


def layout_from_slots(
    slot_count: int,
    selected: Iterable[int],
    electrode_arc: float | None = None,
    contact_impedance: float | Sequence[float] = 0.01,
) -> ElectrodeLayout:
    """Electrodes centred on the chosen evenly spaced slots, sorted counterclockwise."""
    slots = tuple(sorted(set(int(s) for s in selected)))
    if slot_count < 4:
        raise InvalidParameterError(f"slot_count must be at least 4, got {slot_count}")
    if len(slots) < 4:
        raise InvalidParameterError(f"a layout needs at least 4 electrodes, got {len(slots)}")
    if slots[0] < 0 or slots[-1] >= slot_count:
        raise InvalidParameterError(f"slot indices must lie in 0..{slot_count - 1}")
    arc = default_electrode_arc(slot_count) if electrode_arc is None else float(electrode_arc)
    if not arc > 0:
        raise InvalidParameterError("electrode_arc must be positive")

    angles = 2.0 * np.pi * np.array(slots, dtype=float) / slot_count
    gaps = np.diff(np.append(angles, angles[0] + 2.0 * np.pi))
    if np.any(gaps <= 2.0 * arc):
        raise InvalidParameterError("electrode arcs overlap")

    z = np.broadcast_to(np.asarray(contact_impedance, dtype=float), (len(slots),)).copy()
    if np.any(z <= 0):
        raise InvalidParameterError("contact impedance must be positive")
    return ElectrodeLayout(slot_count, slots, _frozen(angles), arc, _frozen(z))


def evenly_spaced_layout(count: int, **kwargs) -> ElectrodeLayout:
    return layout_from_slots(count, range(count), **kwargs)


def rotate_layout(layout: ElectrodeLayout, shift: int) -> ElectrodeLayout:
    """Shift every electrode by ``shift`` slot positions."""
    slots = [(s + shift) % layout.slot_count for s in layout.slots]
    # contact impedances follow their electrodes through the re-sort
    order = np.argsort(slots, kind="stable")
    return layout_from_slots(
        layout.slot_count,
        slots,
        electrode_arc=layout.electrode_arc,
        contact_impedance=layout.contact_impedance[order],
    )


def layout_to_document(layout: ElectrodeLayout) -> LayoutDocument:
    return LayoutDocument(
        slot_count=layout.slot_count,
        slots=list(layout.slots),
        electrode_arc=layout.electrode_arc,
        contact_impedance=layout.contact_impedance.tolist(),
    )


def layout_from_document(document: LayoutDocument) -> ElectrodeLayout:
    return layout_from_slots(
        document.slot_count,
        document.slots,
        electrode_arc=document.electrode_arc,
        contact_impedance=document.contact_impedance,
    )


def layout_id(layout: ElectrodeLayout) -> str:
    return content_hash(canonical_json(layout_to_document(layout).model_dump(mode="json")))
