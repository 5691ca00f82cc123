"""Complete-electrode-model forward solver and adjoint Jacobian on P1 triangles.

The unknowns are the nodal potentials ``u`` and the electrode potentials ``U``.
Electrode potentials are gauged to zero mean by writing ``U = Q @ beta`` with
``Q`` spanning the zero-sum vectors, which leaves a symmetric positive-definite
system that is factorized once and reused for every current pattern.

Contact impedance is a length: the contact admittance of an electrode edge is
the conductivity of the element owning that edge divided by ``z``. The forward
map is therefore homogeneous of degree -1 in the conductivity vector.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from pod_eit.core.exceptions import ArtifactError, InvalidParameterError, NumericalError
from pod_eit.core.models import JacobianDocument
from pod_eit.eit.mesh import ElectrodeLayout, Mesh, layout_id, layout_to_document, mesh_id
from pod_eit.eit.protocol import Protocol, protocol_id

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Conductivity:
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise InvalidParameterError("conductivity must be finite and strictly positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def homogeneous(cls, mesh: Mesh, value: float = 1.0) -> "Conductivity":
        return cls(np.full(mesh.element_count, float(value)))

    def scaled(self, factor: float) -> "Conductivity":
        return Conductivity(self.values * factor)


@dataclass(frozen=True, eq=False)
class Jacobian:
    matrix: np.ndarray
    background: Conductivity
    protocol_id: str
    layout_id: str

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass(frozen=True, eq=False)
class _MeshOperators:
    areas: np.ndarray
    # gradients of the three hat functions per element, shape (M, 3, 2)
    gradients: np.ndarray
    stiffness_rows: np.ndarray
    stiffness_cols: np.ndarray
    # unit-conductivity local stiffness, flattened (M, 9)
    stiffness_local: np.ndarray
    edge_owner: dict


@dataclass(frozen=True, eq=False)
class _ContactRecords:
    """One record per (boundary edge, electrode) overlap."""

    element: np.ndarray
    electrode: np.ndarray
    node_a: np.ndarray
    node_b: np.ndarray
    # integrals over the overlap of phi_a^2, phi_a phi_b, phi_b^2, phi_a, phi_b, 1
    m_aa: np.ndarray
    m_ab: np.ndarray
    m_bb: np.ndarray
    m_a: np.ndarray
    m_b: np.ndarray
    length: np.ndarray


def _as_values(sigma: Conductivity | np.ndarray, mesh: Mesh) -> np.ndarray:
    if not isinstance(sigma, Conductivity):
        sigma = Conductivity(np.asarray(sigma, dtype=float))
    if sigma.values.shape != (mesh.element_count,):
        raise InvalidParameterError(
            f"conductivity has {sigma.values.size} entries, mesh has {mesh.element_count} elements"
        )
    return sigma.values


@lru_cache(maxsize=8)
def _mesh_operators(mesh: Mesh) -> _MeshOperators:
    tri = mesh.triangles
    p = mesh.nodes[tri]
    areas = mesh.element_areas()
    # hat-function gradients: grad phi_i = (y_j - y_k, x_k - x_j) / (2A)
    x, y = p[..., 0], p[..., 1]
    b = np.stack((y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]), axis=1)
    c = np.stack((x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]), axis=1)
    gradients = np.stack((b, c), axis=2) / (2.0 * areas[:, None, None])
    local = areas[:, None, None] * np.einsum("mid,mjd->mij", gradients, gradients)

    edge_owner = {}
    for k, (a, b_, c_) in enumerate(tri.tolist()):
        for e in ((a, b_), (b_, c_), (c_, a)):
            edge_owner.setdefault(tuple(sorted(e)), k)

    return _MeshOperators(
        areas=areas,
        gradients=gradients,
        stiffness_rows=np.repeat(tri, 3, axis=1).reshape(-1),
        stiffness_cols=np.tile(tri, (1, 3)).reshape(-1),
        stiffness_local=local.reshape(len(tri), 9),
        edge_owner=edge_owner,
    )


def _wrap(angle: np.ndarray | float) -> np.ndarray | float:
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def _chord_parameter(phi: float, span: float) -> float:
    """Position along a circle chord of angular ``span`` seen at angle ``phi`` from its start."""
    return float(np.sin(phi) / (np.sin(phi) + np.sin(span - phi)))


def _contact_records(mesh: Mesh, layout: ElectrodeLayout) -> _ContactRecords:
    ops = _mesh_operators(mesh)
    edges = mesh.boundary_edges()
    pts = mesh.nodes
    theta = np.arctan2(pts[edges, 1], pts[edges, 0])
    span = np.mod(theta[:, 1] - theta[:, 0], 2.0 * np.pi)
    lengths = np.linalg.norm(pts[edges[:, 1]] - pts[edges[:, 0]], axis=1)

    rows: list[tuple] = []
    w = layout.electrode_arc
    for electrode, centre in enumerate(layout.slot_angles.tolist()):
        start = _wrap(theta[:, 0] - centre)
        for e in np.flatnonzero((start < w) & (start + span > -w)).tolist():
            lo = max(start[e], -w) - start[e]
            hi = min(start[e] + span[e], w) - start[e]
            t0 = _chord_parameter(lo, span[e])
            t1 = _chord_parameter(hi, span[e])
            if t1 <= t0:
                continue
            length = lengths[e]
            a, b = int(edges[e, 0]), int(edges[e, 1])
            rows.append(
                (
                    ops.edge_owner[tuple(sorted((a, b)))],
                    electrode,
                    a,
                    b,
                    length * ((1 - t0) ** 3 - (1 - t1) ** 3) / 3.0,
                    length * ((t1**2 - t0**2) / 2.0 - (t1**3 - t0**3) / 3.0),
                    length * (t1**3 - t0**3) / 3.0,
                    length * ((t1 - t0) - (t1**2 - t0**2) / 2.0),
                    length * (t1**2 - t0**2) / 2.0,
                    length * (t1 - t0),
                )
            )
    if len({r[1] for r in rows}) != layout.electrode_count:
        raise InvalidParameterError("an electrode does not touch the mesh boundary")
    cols = list(zip(*rows))
    ints = [np.array(col, dtype=np.int64) for col in cols[:4]]
    floats = [np.array(col, dtype=float) for col in cols[4:]]
    return _ContactRecords(*ints, *floats)


def _gauge_basis(electrode_count: int) -> np.ndarray:
    q = np.zeros((electrode_count, electrode_count - 1))
    q[0, :] = 1.0
    q[np.arange(1, electrode_count), np.arange(electrode_count - 1)] = -1.0
    return q


class ForwardModel:
    """Assembled and factorized CEM system for one mesh, layout and conductivity."""

    def __init__(self, mesh: Mesh, sigma: Conductivity | np.ndarray, layout: ElectrodeLayout) -> None:
        self.mesh = mesh
        self.layout = layout
        self.sigma = _as_values(sigma, mesh)
        self._ops = _mesh_operators(mesh)
        self._contacts = _contact_records(mesh, layout)
        self._q = _gauge_basis(layout.electrode_count)
        self._lu = self._factorize()

    @property
    def contact_weights(self) -> np.ndarray:
        rec = self._contacts
        return self.sigma[rec.element] / self.layout.contact_impedance[rec.electrode]

    def _factorize(self):
        n = self.mesh.node_count
        ne = self.layout.electrode_count
        ops, rec = self._ops, self._contacts
        w = self.contact_weights

        k_data = (ops.stiffness_local * self.sigma[:, None]).reshape(-1)
        rows = np.concatenate((ops.stiffness_rows, rec.node_a, rec.node_a, rec.node_b, rec.node_b))
        cols = np.concatenate((ops.stiffness_cols, rec.node_a, rec.node_b, rec.node_a, rec.node_b))
        data = np.concatenate((k_data, w * rec.m_aa, w * rec.m_ab, w * rec.m_ab, w * rec.m_bb))
        k_uu = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

        k_ue = sparse.coo_matrix(
            (
                np.concatenate((-w * rec.m_a, -w * rec.m_b)),
                (np.concatenate((rec.node_a, rec.node_b)), np.concatenate((rec.electrode, rec.electrode))),
            ),
            shape=(n, ne),
        ).tocsr()
        k_ee = np.zeros(ne)
        np.add.at(k_ee, rec.electrode, w * rec.length)

        q = self._q
        system = sparse.bmat(
            [
                [k_uu, sparse.csr_matrix(k_ue @ q)],
                [sparse.csr_matrix((k_ue @ q).T), sparse.csr_matrix(q.T @ (k_ee[:, None] * q))],
            ],
            format="csc",
        )
        try:
            return splu(system)
        except RuntimeError as exc:
            raise NumericalError(f"CEM system is singular: {exc}") from exc

    def solve_pairs(self, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unit current into ``pair[0]`` and out of ``pair[1]`` for each row.

        Returns nodal potentials (P, N) and electrode potentials (P, C).
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        n = self.mesh.node_count
        ne = self.layout.electrode_count
        currents = np.zeros((ne, len(pairs)))
        currents[pairs[:, 0], np.arange(len(pairs))] += 1.0
        currents[pairs[:, 1], np.arange(len(pairs))] -= 1.0
        rhs = np.zeros((n + ne - 1, len(pairs)))
        rhs[n:] = self._q.T @ currents
        states = self._lu.solve(rhs)
        if not np.all(np.isfinite(states)):
            raise NumericalError("CEM solve produced non-finite potentials")
        return states[:n].T, (self._q @ states[n:]).T

    def electrode_currents(self, u: np.ndarray, electrode_potentials: np.ndarray) -> np.ndarray:
        """Currents leaving each electrode into the body, for states shaped (P, N) and (P, C)."""
        rec = self._contacts
        w = self.contact_weights
        u = np.atleast_2d(u)
        ue = np.atleast_2d(electrode_potentials)
        flux = w * (rec.length * ue[:, rec.electrode] - rec.m_a * u[:, rec.node_a] - rec.m_b * u[:, rec.node_b])
        out = np.zeros((u.shape[0], self.layout.electrode_count))
        np.add.at(out.T, rec.electrode, flux.T)
        return out

    def contact_sensitivity(
        self, u: np.ndarray, ue: np.ndarray, v: np.ndarray, ve: np.ndarray
    ) -> np.ndarray:
        """Per-record (1/z) * integral of (u - U)(v - V) for row-aligned state pairs, shape (D, R)."""
        rec = self._contacts
        ua, ub, uz = u[:, rec.node_a], u[:, rec.node_b], ue[:, rec.electrode]
        va, vb, vz = v[:, rec.node_a], v[:, rec.node_b], ve[:, rec.electrode]
        integral = (
            rec.m_aa * ua * va
            + rec.m_ab * (ua * vb + ub * va)
            + rec.m_bb * ub * vb
            - uz * (rec.m_a * va + rec.m_b * vb)
            - vz * (rec.m_a * ua + rec.m_b * ub)
            + rec.length * uz * vz
        )
        return integral / self.layout.contact_impedance[rec.electrode]

    def element_gradients(self, u: np.ndarray) -> np.ndarray:
        """Constant field gradient per element for nodal states (P, N) -> (P, M, 2)."""
        return np.einsum("pmi,mid->pmd", u[:, self.mesh.triangles], self._ops.gradients)

    @property
    def contact_elements(self) -> np.ndarray:
        return self._contacts.element

    @property
    def element_areas(self) -> np.ndarray:
        return self._ops.areas


def _check_compatible(layout: ElectrodeLayout, protocol: Protocol) -> None:
    if protocol.electrode_count != layout.electrode_count:
        raise InvalidParameterError(
            f"protocol expects {protocol.electrode_count} electrodes, layout has {layout.electrode_count}"
        )


def _unique_pairs(*pair_sets: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    stacked = np.concatenate(pair_sets, axis=0)
    unique, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    splits = np.cumsum([len(p) for p in pair_sets])[:-1]
    return unique, np.split(inverse, splits)


def solve_forward(
    mesh: Mesh,
    sigma: Conductivity | np.ndarray,
    layout: ElectrodeLayout,
    protocol: Protocol,
    amplitude: float = 1.0,
    model: ForwardModel | None = None,
) -> np.ndarray:
    """Boundary voltage differences, one per protocol measurement.

    A prebuilt ``model`` is reused only when it was factorized for the same
    mesh, layout and conductivity as the other arguments.
    """
    _check_compatible(layout, protocol)
    if model is None:
        model = ForwardModel(mesh, sigma, layout)
    elif (
        (model.mesh is not mesh and mesh_id(model.mesh) != mesh_id(mesh))
        or layout_id(model.layout) != layout_id(layout)
        or not np.array_equal(model.sigma, _as_values(sigma, mesh))
    ):
        raise InvalidParameterError("forward model was built for a different mesh, layout or conductivity")
    drives, (drive_idx,) = _unique_pairs(protocol.drive_pairs)
    _, ue = model.solve_pairs(drives)
    sense = protocol.sense_pairs
    rows = ue[drive_idx]
    d = rows[np.arange(len(rows)), sense[:, 0]] - rows[np.arange(len(rows)), sense[:, 1]]
    return amplitude * d


def compute_jacobian(
    mesh: Mesh,
    sigma0: Conductivity | np.ndarray,
    layout: ElectrodeLayout,
    protocol: Protocol,
    amplitude: float = 1.0,
) -> Jacobian:
    """d(measurement)/d(element conductivity) by the adjoint field product."""
    _check_compatible(layout, protocol)
    background = sigma0 if isinstance(sigma0, Conductivity) else Conductivity(sigma0)
    model = ForwardModel(mesh, background, layout)
    pairs, (drive_idx, sense_idx) = _unique_pairs(protocol.drive_pairs, protocol.sense_pairs)
    u, ue = model.solve_pairs(pairs)

    grads = model.element_gradients(u)
    interior = model.element_areas * np.einsum("dmk,dmk->dm", grads[drive_idx], grads[sense_idx])
    contact = model.contact_sensitivity(u[drive_idx], ue[drive_idx], u[sense_idx], ue[sense_idx])
    np.add.at(interior.T, model.contact_elements, contact.T)

    matrix = -amplitude * interior
    matrix.setflags(write=False)
    logger.debug("Computed Jacobian %s", matrix.shape)
    return Jacobian(matrix, background, protocol_id(protocol), layout_id(layout))


def jacobian_to_document(jacobian: Jacobian, mesh: Mesh, layout: ElectrodeLayout) -> JacobianDocument:
    return JacobianDocument(
        protocol_id=jacobian.protocol_id,
        layout_id=jacobian.layout_id,
        mesh_id=mesh_id(mesh),
        layout=layout_to_document(layout),
        shape=jacobian.shape,
        background=jacobian.background.values.tolist(),
        matrix=jacobian.matrix.tolist(),
    )


def jacobian_from_document(document: JacobianDocument) -> Jacobian:
    matrix = np.array(document.matrix, dtype=float)
    if matrix.shape != tuple(document.shape):
        raise ArtifactError(f"Jacobian matrix is {matrix.shape}, document declares {tuple(document.shape)}")
    if len(document.background) != matrix.shape[1]:
        raise ArtifactError("Jacobian background does not have one value per element")
    matrix.setflags(write=False)
    return Jacobian(matrix, Conductivity(document.background), document.protocol_id, document.layout_id)
