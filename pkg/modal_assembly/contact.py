"""Static mating of two faces with form errors.

Part 1 is the upper part (its face A1 looks down, -y), part 2 the lower
part (face A2 looks up, +y). Both deviation fields are measured along +y.
Making A1 perfect leaves A2 with the difference surface

    d = reconstruct(lambda_A2 - lambda_A1)

and the perfect upper face, pressed down by the force, comes to rest on the
upper convex hull of ``d``. Its placement ``g`` is the hull facet pierced by
the force axis; ``gap = g - d`` is zero at the contacts and positive
elsewhere.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull, QhullError

from modal_assembly.constants import (
    BARYCENTRIC_TOLERANCE,
    COPLANAR_TOLERANCE,
    MeshKind,
)
from modal_assembly.errors import (
    InvalidArgumentError,
    NoStableContactError,
)
from modal_assembly.kinematics import SDT, AlphaMatrix, rigid_to_sdt
from modal_assembly.mesh import Mesh, SurfaceField
from modal_assembly.signature import (
    ModalSignature,
    form_part,
    project,
    reconstruct,
    truncate,
)

if TYPE_CHECKING:  # pragma: no cover
    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

# outward normals of facets facing the counterpart, in scaled coordinates
FACING_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MatingSetup:
    """Where the mating force acts and how many modes are retained.

    The force acts along -y at ``force_point`` (x, z) in mm; ``z`` is
    ignored for a profile.
    """

    force_point: tuple[float, float]
    m: int

    def validate(self, mesh: Mesh) -> None:
        """Check the setup against the face it presses on.

        Raises:
            InvalidArgumentError: if the force point is not strictly inside
                the footprint or ``m`` is below 1.
        """
        if self.m < 1:
            msg = f"retained mode count must be at least 1, got {self.m}"
            raise InvalidArgumentError(msg)
        x, z = self.force_point
        if not mesh.contains(x, z, strict=True):
            msg = (
                f"force point {self.force_point} is not strictly inside the "
                f"{mesh.lx:g} x {mesh.lz:g} mm footprint"
            )
            raise InvalidArgumentError(msg)


@dataclass(frozen=True, eq=False)
class Facet:
    """Contact facet of the difference surface.

    ``indices`` are the contact nodes (2 on a profile, 3 on a grid) sorted
    ascending; ``plane`` holds ``(a, b, c)`` of ``g = a + b x + c z``;
    ``weights`` are the barycentric coordinates of the force point; ``flat``
    marks the coplanar convention.
    """

    indices: tuple[int, ...]
    plane: tuple[float, float, float]
    weights: tuple[float, ...]
    flat: bool = False

    def height(
        self, x: NDArray[np.float64], z: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        """Evaluate the support plane."""
        a, b, c = self.plane
        return a + b * x + c * z


@dataclass(frozen=True, eq=False)
class AssemblyResult:
    """Outcome of one mating.

    Torsors are those of the upper part's face relative to a perfect
    assembly, at the centre of face A.
    """

    facet: Facet
    rigid_coefficients: NDArray[np.float64]
    sdt_with_form: SDT
    sdt_rigid_only: SDT
    sdt_form_effect: SDT
    gap: SurfaceField

    @property
    def contacts(self) -> tuple[int, ...]:
        """Indices of the contact nodes."""
        return self.facet.indices

    @property
    def min_gap(self) -> float:
        """Smallest gap between the faces (mm)."""
        return float(self.gap.v.min())


def difference_signature(
    sig_a1: ModalSignature, sig_a2: ModalSignature
) -> ModalSignature:
    """Return ``lambda_A2 - lambda_A1``, the shorter one padded with zeros.

    Raises:
        InvalidArgumentError: if the signatures use different bases.
    """
    if not sig_a1.basis.same_as(sig_a2.basis):
        msg = "signatures of mating faces must share their modal basis"
        raise InvalidArgumentError(msg)
    m = max(sig_a1.m, sig_a2.m)
    first = truncate(sig_a1, m).lam
    second = truncate(sig_a2, m).lam
    return ModalSignature(second - first, sig_a2.basis)


def _fit_plane(
    columns: NDArray[np.float64], v: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Least-squares plane (or line) and the residual of every node."""
    coefficients, *_ = np.linalg.lstsq(columns, v, rcond=None)
    return coefficients, v - columns @ coefficients


def _scaled_hull(
    coordinates: NDArray[np.float64], residual: NDArray[np.float64]
) -> Optional[ConvexHull]:
    """Hull of the sheared and rescaled surface, None if Qhull sees it flat.

    Shearing by the fitted plane and rescaling are affine maps that keep
    the upper hull and its facets.
    """
    spans = np.ptp(coordinates, axis=0)
    scaled = np.column_stack(
        [coordinates / spans, residual / np.abs(residual).max()]
    )
    try:
        return ConvexHull(scaled)
    except QhullError:
        logger.debug("qhull rejected the difference surface as flat")
        return None


def _check_profile_force(field: SurfaceField, x_force: float) -> None:
    if field.mesh.kind is not MeshKind.PROFILE1D:
        msg = "a profile contact needs a profile1d field"
        raise InvalidArgumentError(msg)
    if not field.mesh.contains(x_force, strict=True):
        msg = f"force abscissa {x_force} is outside (0, {field.mesh.lx:g})"
        raise InvalidArgumentError(msg)


def _segment_facet(
    x: NDArray[np.float64],
    v: NDArray[np.float64],
    pair: tuple[int, int],
    x_force: float,
    *,
    flat: bool = False,
) -> Facet:
    i, j = sorted(pair)
    slope = (v[j] - v[i]) / (x[j] - x[i])
    weight_j = (x_force - x[i]) / (x[j] - x[i])
    return Facet(
        indices=(i, j),
        plane=(float(v[i] - slope * x[i]), float(slope), 0.0),
        weights=(float(1.0 - weight_j), float(weight_j)),
        flat=flat,
    )


def contact_facet_2d(field: SurfaceField, x_force: float) -> Facet:
    """Find the hull segment of a profile pierced by the force axis.

    A force abscissa on a hull vertex touches two segments; the one with
    the smaller node indices is kept.

    Raises:
        InvalidArgumentError: on a grid field or an outside force abscissa.
        NoStableContactError: if no upward segment spans the abscissa.
    """
    _check_profile_force(field, x_force)
    x = field.mesh.x_coords
    v = field.v
    columns = np.column_stack([np.ones_like(x), x])
    _, residual = _fit_plane(columns, v)

    hull = None
    if np.abs(residual).max() >= COPLANAR_TOLERANCE:
        hull = _scaled_hull(x[:, None], residual)
    if hull is None:
        # a straight profile touches along its whole length
        return _segment_facet(x, v, (0, x.size - 1), x_force, flat=True)

    candidates = []
    for simplex, equation in zip(hull.simplices, hull.equations):
        if equation[1] <= FACING_TOLERANCE:
            continue
        i, j = sorted(int(k) for k in simplex)
        if x[i] <= x_force <= x[j]:
            candidates.append((i, j))
    if not candidates:
        msg = f"no contact segment carries the force at x = {x_force}"
        raise NoStableContactError(msg)
    return _segment_facet(x, v, min(candidates), x_force)


def _cross(
    u: NDArray[np.float64], w: NDArray[np.float64]
) -> NDArray[np.float64]:
    return u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0]


def barycentric(
    triangles: NDArray[np.float64], point: tuple[float, float]
) -> NDArray[np.float64]:
    """Barycentric coordinates of ``point`` in each ``(3, 2)`` triangle.

    Degenerate triangles get NaN coordinates.
    """
    a, b, c = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    p = np.asarray(point, dtype=float)

    area = _cross(b - a, c - a)
    scale = np.maximum(
        np.abs(b - a).max(axis=-1), np.abs(c - a).max(axis=-1)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        degenerate = np.abs(area) <= 1e-12 * scale**2
        area = np.where(degenerate, np.nan, area)
        weights = np.column_stack(
            [_cross(b - p, c - p), _cross(c - p, a - p), _cross(a - p, b - p)]
        )
        return weights / area[:, None]


def _triangle_facet(
    nodes: NDArray[np.float64],
    v: NDArray[np.float64],
    triangle: tuple[int, ...],
    weights: NDArray[np.float64],
    *,
    flat: bool = False,
) -> Facet:
    vertices = list(triangle)
    columns = np.column_stack([np.ones(3), nodes[vertices]])
    plane = np.linalg.solve(columns, v[vertices])
    return Facet(
        indices=tuple(vertices),
        plane=(float(plane[0]), float(plane[1]), float(plane[2])),
        weights=tuple(float(w) for w in weights),
        flat=flat,
    )


def _pick_triangle(
    nodes: NDArray[np.float64],
    triangles: NDArray[np.intp],
    force: tuple[float, float],
) -> Optional[tuple[tuple[int, ...], NDArray[np.float64]]]:
    """Smallest sorted index triple whose projection holds the force."""
    triangles = np.sort(triangles, axis=1)
    weights = barycentric(nodes[triangles], force)
    with np.errstate(invalid="ignore"):
        holds = np.all(weights >= -BARYCENTRIC_TOLERANCE, axis=1)
    if not np.any(holds):
        return None
    candidates = sorted(
        (tuple(int(k) for k in triangles[f]), f) for f in np.flatnonzero(holds)
    )
    triangle, index = candidates[0]
    return triangle, weights[index]


def corner_triangles(mesh: Mesh) -> NDArray[np.intp]:
    """The four triangles spanned by the footprint corners."""
    last = mesh.n_nodes - 1
    corners = [0, mesh.nx - 1, last - mesh.nx + 1, last]
    return np.array(
        [
            [corners[0], corners[1], corners[2]],
            [corners[0], corners[1], corners[3]],
            [corners[0], corners[2], corners[3]],
            [corners[1], corners[2], corners[3]],
        ],
        dtype=np.intp,
    )


def contact_facet_3d(
    field: SurfaceField, force_point: tuple[float, float]
) -> Facet:
    """Find the hull triangle of a grid field pierced by the force axis.

    A flat difference surface touches everywhere; the corner triangle
    holding the force point is reported with the fitted plane. Ties
    between triangles keep the smallest sorted index triple among the
    simplices Qhull returns. A planar facet with more than three nodes is
    triangulated by Qhull and its other nodes are dropped as coplanar, so
    which of its triangles is reported follows that triangulation. The
    support plane and the height under the force are the same for all of
    them.

    Raises:
        InvalidArgumentError: on a profile field or an outside force point.
        NoStableContactError: if no upward facet holds the force point.
    """
    mesh = field.mesh
    if mesh.kind is not MeshKind.GRID2D:
        msg = "a grid contact needs a grid2d field"
        raise InvalidArgumentError(msg)
    if not mesh.contains(*force_point, strict=True):
        msg = f"force point {force_point} is outside the footprint"
        raise InvalidArgumentError(msg)

    nodes = mesh.nodes
    v = field.v
    columns = np.column_stack([np.ones(mesh.n_nodes), nodes])
    plane, residual = _fit_plane(columns, v)

    hull = None
    if np.abs(residual).max() >= COPLANAR_TOLERANCE:
        hull = _scaled_hull(nodes, residual)
    if hull is None:
        picked = _pick_triangle(nodes, corner_triangles(mesh), force_point)
        if picked is None:  # pragma: no cover - interior points always fit
            msg = "no corner triangle holds the force point"
            raise NoStableContactError(msg)
        triangle, weights = picked
        return Facet(
            indices=triangle,
            plane=(float(plane[0]), float(plane[1]), float(plane[2])),
            weights=tuple(float(w) for w in weights),
            flat=True,
        )

    facing = hull.equations[:, 2] > FACING_TOLERANCE
    picked = _pick_triangle(nodes, hull.simplices[facing], force_point)
    if picked is None:
        msg = f"no contact facet carries the force at {force_point}"
        raise NoStableContactError(msg)
    triangle, weights = picked
    return _triangle_facet(nodes, v, triangle, weights)


def contact_facet(
    field: SurfaceField, force_point: tuple[float, float]
) -> Facet:
    """Dispatch to the profile or grid facet search."""
    if field.mesh.kind is MeshKind.PROFILE1D:
        return contact_facet_2d(field, force_point[0])
    return contact_facet_3d(field, force_point)


def assemble(
    sig_a1: ModalSignature,
    sig_a2: ModalSignature,
    setup: MatingSetup,
    alpha: AlphaMatrix,
) -> AssemblyResult:
    """Mate two faces and compare with the rigid-only assembly.

    Both signatures are low-pass filtered to ``setup.m`` modes. The
    with-form torsor comes from the contact facet; the rigid-only torsor
    from the rigid coefficients of the difference signature alone.

    Raises:
        InvalidArgumentError: on an invalid setup or mismatched bases.
        NoStableContactError: if the force axis misses every facet.
    """
    basis = sig_a2.basis
    setup.validate(basis.mesh)
    diff = difference_signature(
        truncate(sig_a1, setup.m), truncate(sig_a2, setup.m)
    )
    surface = reconstruct(diff)

    facet = contact_facet(surface, setup.force_point)
    nodes = basis.mesh.nodes
    placement = SurfaceField(
        basis.mesh, facet.height(nodes[:, 0], nodes[:, 1])
    )
    rigid_coefficients = project(placement, basis, basis.n_rigid).lam

    with_form = rigid_to_sdt(rigid_coefficients, alpha)
    rigid_only = rigid_to_sdt(diff.rigid, alpha)
    gap = placement - surface
    logger.debug(
        "contact at nodes %s, min gap %.3g mm", facet.indices, gap.v.min()
    )
    return AssemblyResult(
        facet=facet,
        rigid_coefficients=rigid_coefficients,
        sdt_with_form=with_form,
        sdt_rigid_only=rigid_only,
        sdt_form_effect=with_form - rigid_only,
        gap=gap,
    )


def flatness(field: SurfaceField) -> float:
    """Peak-to-valley height of a field (mm)."""
    return float(np.ptp(field.v))


def form_bound(sig_a1: ModalSignature, sig_a2: ModalSignature) -> float:
    """Sum of the flatness of both form parts.

    Bounds the normal shift form errors add at the face centre when the
    force acts there.
    """
    return flatness(reconstruct(form_part(sig_a1))) + flatness(
        reconstruct(form_part(sig_a2))
    )


def assembly_frame(result: AssemblyResult) -> pd.DataFrame:
    """One-row table: contacts, the three torsors and the minimum gap."""
    row: dict[str, Union[int, float, bool]] = {
        f"contact_{k + 1}": index for k, index in enumerate(result.contacts)
    }
    row["flat"] = result.facet.flat
    for prefix, sdt in (
        ("with_form", result.sdt_with_form),
        ("rigid_only", result.sdt_rigid_only),
        ("form_effect", result.sdt_form_effect),
    ):
        for name, value in sdt.as_dict().items():
            row[f"{prefix}_{name}"] = value
    row["min_gap"] = result.min_gap
    return pd.DataFrame([row])


def gap_frame(result: AssemblyResult) -> pd.DataFrame:
    """Gap at every node, for topographic plots."""
    nodes = result.gap.mesh.nodes
    return pd.DataFrame(
        {"x": nodes[:, 0], "z": nodes[:, 1], "gap_mm": result.gap.v}
    )
