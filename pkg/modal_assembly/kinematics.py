"""Small displacement torsors and functional-requirement domains.

Axis convention, used everywhere in the package: the nominal faces lie in
the x-z plane and their normal is +y. A torsor with translation ``T`` and
rotation ``R`` at point ``P`` moves a point ``M`` by ``T + R x (M - P)``;
along the normal of a face point this gives

    v = T_y + R_z * (x - x_P) - R_x * (z - z_P)

Only the components that move a face along its normal are analysed:
``(T_y, R_z)`` for a planar assembly, ``(T_y, R_x, R_z)`` for a spatial one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull, HalfspaceIntersection

from modal_assembly.constants import (
    ACTIVE_COMPONENTS,
    RANK_TOLERANCE,
    SAME_POINT_TOLERANCE,
    BasisKind,
    Case,
)
from modal_assembly.errors import InternalError, InvalidArgumentError
from modal_assembly.mesh import SurfaceField
from modal_assembly.signature import project

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import ArrayLike, NDArray

    from modal_assembly.modal import ModalBasis

Point = tuple[float, float, float]

COMPONENTS = ("tx", "ty", "tz", "rx", "ry", "rz")
ORIGIN: Point = (0.0, 0.0, 0.0)


def _vector(values: ArrayLike) -> NDArray[np.float64]:
    vector = np.broadcast_to(np.asarray(values, dtype=float), (3,)).copy()
    vector.setflags(write=False)
    return vector


def _zeros() -> NDArray[np.float64]:
    return _vector(0.0)


@dataclass(frozen=True, eq=False)
class SDT:
    """A small displacement torsor at ``point``.

    Translations are in mm, rotations in rad.
    """

    point: Point = ORIGIN
    translation: NDArray[np.float64] = field(default_factory=_zeros)
    rotation: NDArray[np.float64] = field(default_factory=_zeros)

    def __post_init__(self) -> None:
        """Freeze the vectors and reject non-finite values."""
        translation = _vector(self.translation)
        rotation = _vector(self.rotation)
        x, y, z = (float(c) for c in self.point)
        if not np.all(np.isfinite(np.concatenate([translation, rotation]))):
            msg = "torsor components must be finite"
            raise InvalidArgumentError(msg)
        object.__setattr__(self, "translation", translation)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "point", (x, y, z))

    @classmethod
    def from_components(
        cls, case: Case, values: ArrayLike, point: Point = ORIGIN
    ) -> SDT:
        """Build a torsor from the active components of ``case``."""
        names = ACTIVE_COMPONENTS[Case(case)]
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != len(names):
            msg = (
                f"expected {len(names)} components {names}, "
                f"got {values.size}"
            )
            raise InvalidArgumentError(msg)
        full = dict.fromkeys(COMPONENTS, 0.0)
        full.update(zip(names, values.tolist()))
        return cls(
            point=point,
            translation=np.array([full["tx"], full["ty"], full["tz"]]),
            rotation=np.array([full["rx"], full["ry"], full["rz"]]),
        )

    def as_dict(self) -> dict[str, float]:
        """Return all six components by name."""
        values = np.concatenate([self.translation, self.rotation])
        return dict(zip(COMPONENTS, values.tolist()))

    def components(self, case: Case) -> NDArray[np.float64]:
        """Return the active components of ``case``, in canonical order."""
        full = self.as_dict()
        return np.array([full[name] for name in ACTIVE_COMPONENTS[Case(case)]])

    def __add__(self, other: SDT) -> SDT:
        """Sum two torsors at the same point."""
        return compose(self, other)

    def __sub__(self, other: SDT) -> SDT:
        """Subtract two torsors at the same point."""
        return compose(self, other, sign=-1)

    def __neg__(self) -> SDT:
        """Return the opposite torsor."""
        return SDT(self.point, -self.translation, -self.rotation)


def same_point(first: Point, second: Point) -> bool:
    """Check whether two reference points coincide."""
    return bool(
        np.allclose(first, second, rtol=0.0, atol=SAME_POINT_TOLERANCE)
    )


def transport(sdt: SDT, to_point: Point) -> SDT:
    """Move a torsor to another reference point.

    Rotations are unchanged; translations pick up ``R x (to_point - P)``.
    """
    arm = np.asarray(to_point, dtype=float) - np.asarray(sdt.point)
    return SDT(
        point=to_point,
        translation=sdt.translation + np.cross(sdt.rotation, arm),
        rotation=sdt.rotation,
    )


def compose(first: SDT, second: SDT, sign: int = 1) -> SDT:
    """Add (``sign=1``) or subtract (``sign=-1``) two torsors.

    Raises:
        InvalidArgumentError: if the reference points differ.
    """
    if not same_point(first.point, second.point):
        msg = (
            f"torsors at {first.point} and {second.point} must be "
            "transported to a common point first"
        )
        raise InvalidArgumentError(msg)
    if sign not in (1, -1):
        msg = f"sign must be 1 or -1, got {sign}"
        raise InvalidArgumentError(msg)
    return SDT(
        point=first.point,
        translation=first.translation + sign * second.translation,
        rotation=first.rotation + sign * second.rotation,
    )


def rigid_field(
    basis: ModalBasis, case: Case, values: ArrayLike, center: Point
) -> SurfaceField:
    """Normal displacement of the mesh nodes under a rigid motion."""
    mesh = basis.mesh
    nodes = mesh.nodes
    dx = nodes[:, 0] - center[0]
    dz = nodes[:, 1] - center[2]
    shapes = {"ty": np.ones(mesh.n_nodes), "rz": dx, "rx": -dz}
    names = ACTIVE_COMPONENTS[Case(case)]
    columns = np.column_stack([shapes[name] for name in names])
    return SurfaceField(mesh, columns @ np.asarray(values, dtype=float))


@dataclass(frozen=True, eq=False)
class AlphaMatrix:
    """Linear map from active torsor components to rigid coefficients."""

    alpha: NDArray[np.float64]
    inverse: NDArray[np.float64]
    case: Case
    point: Point

    @property
    def size(self) -> int:
        """Number of rigid modes (and active components)."""
        return int(self.alpha.shape[0])


def case_of(basis: ModalBasis) -> Case:
    """Return the analysis case a basis belongs to."""
    return Case.TWO_D if basis.kind is BasisKind.BEAM1D else Case.THREE_D


def build_alpha(
    basis: ModalBasis, surface_center: tuple[float, float]
) -> AlphaMatrix:
    """Build the map between torsor components and rigid coefficients.

    Column ``j`` is the projection, on the rigid modes only, of the field
    generated by the unit value of the ``j``-th active component about
    ``surface_center`` (x, z).

    Raises:
        InternalError: if the map is singular.
    """
    case = case_of(basis)
    point: Point = (float(surface_center[0]), 0.0, float(surface_center[1]))
    size = len(ACTIVE_COMPONENTS[case])
    if size != basis.n_rigid:
        msg = f"{basis.n_rigid} rigid modes cannot carry {size} components"
        raise InternalError(msg)

    alpha = np.empty((size, size))
    for j, unit in enumerate(np.eye(size)):
        unit_field = rigid_field(basis, case, unit, point)
        alpha[:, j] = project(unit_field, basis, basis.n_rigid).lam
    if np.linalg.cond(alpha) > 1.0 / RANK_TOLERANCE:
        msg = "the rigid-mode map is singular"
        raise InternalError(msg)
    inverse = np.linalg.inv(alpha)
    alpha.setflags(write=False)
    inverse.setflags(write=False)
    return AlphaMatrix(alpha, inverse, case, point)


def rigid_to_sdt(lam_rigid: ArrayLike, alpha: AlphaMatrix) -> SDT:
    """Convert rigid modal coefficients into a torsor at the face centre.

    Raises:
        InvalidArgumentError: on a length mismatch.
    """
    lam = np.asarray(lam_rigid, dtype=float).reshape(-1)
    if lam.size != alpha.size:
        msg = f"expected {alpha.size} rigid coefficients, got {lam.size}"
        raise InvalidArgumentError(msg)
    return SDT.from_components(alpha.case, alpha.inverse @ lam, alpha.point)


def sdt_to_rigid(sdt: SDT, alpha: AlphaMatrix) -> NDArray[np.float64]:
    """Convert a torsor into rigid modal coefficients.

    The torsor is transported to the face centre first.
    """
    at_center = transport(sdt, alpha.point)
    return alpha.alpha @ at_center.components(alpha.case)


@dataclass(frozen=True)
class FaceGeometry:
    """Nominal functional face B, assumed perfect.

    ``offset`` locates its centre from the centre of the mating face (mm);
    ``lbx`` and ``lz`` are its side lengths along x and z.
    """

    offset: Point
    lbx: float
    lz: float = 0.0


@dataclass(frozen=True, eq=False)
class Domain:
    """Convex set ``normals @ s <= offsets`` of admissible components."""

    normals: NDArray[np.float64]
    offsets: NDArray[np.float64]
    case: Case
    point: Point
    label: str = "FR"

    @property
    def components(self) -> tuple[str, ...]:
        """Names of the coordinates the half-spaces act on."""
        return ACTIVE_COMPONENTS[self.case]


class Containment(NamedTuple):
    """Inclusion verdict and its margin (mm, negative outside)."""

    inside: bool
    margin: float


def summits(geometry: FaceGeometry, case: Case) -> NDArray[np.float64]:
    """Perimeter summits of face B relative to its centre, as (dx, dz)."""
    half_x = geometry.lbx / 2.0
    if Case(case) is Case.TWO_D:
        return np.array([[-half_x, 0.0], [half_x, 0.0]])
    half_z = geometry.lz / 2.0
    return np.array(
        [
            [-half_x, -half_z],
            [half_x, -half_z],
            [-half_x, half_z],
            [half_x, half_z],
        ]
    )


def fr_domain(
    t: float,
    geometry: FaceGeometry,
    case: Case,
    a_center: Point = ORIGIN,
) -> Domain:
    """Build the location-tolerance domain of face B at its centre.

    Each summit ``S`` of B gives ``|T_y + R_z dx - R_x dz| <= t/2``, that is
    two half-spaces. The planar case has two summits (four half-spaces),
    the spatial case four (eight half-spaces, an octahedron).

    Raises:
        InvalidArgumentError: on ``t <= 0`` or a non-positive side length.
    """
    case = Case(case)
    if t <= 0:
        msg = f"tolerance t must be positive, got {t}"
        raise InvalidArgumentError(msg)
    if geometry.lbx <= 0 or (case is Case.THREE_D and geometry.lz <= 0):
        msg = "face B side lengths must be positive"
        raise InvalidArgumentError(msg)

    rows = []
    for dx, dz in summits(geometry, case):
        gradient = {"ty": 1.0, "rz": dx, "rx": -dz}
        row = np.array([gradient[name] for name in ACTIVE_COMPONENTS[case]])
        rows.extend([row, -row])
    normals = np.array(rows)
    offsets = np.full(len(rows), t / 2.0)
    normals.setflags(write=False)
    offsets.setflags(write=False)
    point: Point = (
        a_center[0] + geometry.offset[0],
        a_center[1] + geometry.offset[1],
        a_center[2] + geometry.offset[2],
    )
    return Domain(normals, offsets, case, point, label=f"FR t={t:g}")


def domain_margins(
    domain: Domain, components: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Margins of many component vectors (rows) at once."""
    rows = np.atleast_2d(components)
    slack = domain.offsets[None, :] - rows @ domain.normals.T
    return slack.min(axis=1)


def domain_contains(domain: Domain, sdt: SDT) -> Containment:
    """Test a torsor against the domain; the boundary counts as inside.

    Raises:
        InvalidArgumentError: if the torsor is not at the domain's point.
    """
    if not same_point(domain.point, sdt.point):
        msg = (
            f"torsor at {sdt.point} must be transported to {domain.point} "
            "before the inclusion test"
        )
        raise InvalidArgumentError(msg)
    margin = float(domain_margins(domain, sdt.components(domain.case))[0])
    return Containment(inside=margin >= 0.0, margin=margin)


def domain_vertices(domain: Domain) -> NDArray[np.float64]:
    """Vertices of the domain polytope, sorted lexicographically."""
    halfspaces = np.column_stack([domain.normals, -domain.offsets])
    interior = np.zeros(domain.normals.shape[1])
    intersection = HalfspaceIntersection(halfspaces, interior)
    points = intersection.intersections
    # polytope vertices shared by more than d facets come out repeated
    points = points[ConvexHull(points).vertices]
    return points[np.lexsort(points.T[::-1])]


def domain_frame(domain: Domain) -> pd.DataFrame:
    """Half-space rows ``normal . s <= offset`` as a table."""
    frame = pd.DataFrame(
        domain.normals, columns=[f"n_{name}" for name in domain.components]
    )
    frame["offset"] = domain.offsets
    return frame


def vertices_frame(domain: Domain) -> pd.DataFrame:
    """Polytope vertices as a table, one column per component."""
    return pd.DataFrame(
        domain_vertices(domain), columns=list(domain.components)
    )
