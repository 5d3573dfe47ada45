"""Discretised nominal faces and measured point sets.

Node ordering is row-major in (z, x): node ``k`` sits at column
``k % nx`` and row ``k // nx``. Every vector and matrix in the package
follows this ordering.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
from scipy.interpolate import (
    LinearNDInterpolator,
    NearestNDInterpolator,
    RegularGridInterpolator,
)

from modal_assembly.constants import MeshKind
from modal_assembly.errors import (
    DegenerateInputError,
    FormatError,
    InvalidArgumentError,
)

if TYPE_CHECKING:  # pragma: no cover
    from pathlib import Path

    from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

MIN_NODES = 2


@dataclass(frozen=True)
class Mesh:
    """A regular node lattice over the nominal face.

    A ``profile1d`` mesh has ``nz == 1`` and ``lz == 0``.
    """

    kind: MeshKind
    lx: float
    lz: float
    nx: int
    nz: int

    @property
    def n_nodes(self) -> int:
        """Total number of nodes."""
        return self.nx * self.nz

    @property
    def x_coords(self) -> NDArray[np.float64]:
        """Abscissae of the node columns."""
        return np.linspace(0.0, self.lx, self.nx)

    @property
    def z_coords(self) -> NDArray[np.float64]:
        """Ordinates of the node rows."""
        if self.kind is MeshKind.PROFILE1D:
            return np.zeros(1)
        return np.linspace(0.0, self.lz, self.nz)

    @property
    def nodes(self) -> NDArray[np.float64]:
        """Node coordinates as an ``(n_nodes, 2)`` array of (x, z)."""
        xx, zz = np.meshgrid(self.x_coords, self.z_coords)
        return np.column_stack([xx.ravel(), zz.ravel()])

    @property
    def center(self) -> tuple[float, float]:
        """Centre of the footprint as (x, z)."""
        return (self.lx / 2.0, self.lz / 2.0)

    def node_index(self, ix: int, iz: int = 0) -> int:
        """Return the flat index of the node in column ``ix``, row ``iz``."""
        return iz * self.nx + ix

    def contains(
        self, x: float, z: float = 0.0, *, strict: bool = True
    ) -> bool:
        """Check whether a point lies inside the footprint."""
        if strict:
            inside_x = 0.0 < x < self.lx
            inside_z = self.kind is MeshKind.PROFILE1D or 0.0 < z < self.lz
        else:
            inside_x = 0.0 <= x <= self.lx
            inside_z = self.kind is MeshKind.PROFILE1D or 0.0 <= z <= self.lz
        return inside_x and inside_z


@dataclass(frozen=True, eq=False)
class SurfaceField:
    """Normal deviation of a face, one value per mesh node (mm)."""

    mesh: Mesh
    v: NDArray[np.float64]
    extrapolated: int = field(default=0)

    def __post_init__(self) -> None:
        """Validate the length and values of the field."""
        values = np.asarray(self.v, dtype=float)
        if values.shape != (self.mesh.n_nodes,):
            msg = (
                f"field has {values.size} values, the mesh has "
                f"{self.mesh.n_nodes} nodes"
            )
            raise InvalidArgumentError(msg)
        if not np.all(np.isfinite(values)):
            msg = "field values must be finite"
            raise InvalidArgumentError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "v", values)

    def __add__(self, other: SurfaceField) -> SurfaceField:
        """Add two fields over the same mesh."""
        _same_mesh(self.mesh, other.mesh)
        return SurfaceField(self.mesh, self.v + other.v)

    def __sub__(self, other: SurfaceField) -> SurfaceField:
        """Subtract two fields over the same mesh."""
        _same_mesh(self.mesh, other.mesh)
        return SurfaceField(self.mesh, self.v - other.v)

    def as_grid(self) -> NDArray[np.float64]:
        """Return the values reshaped to ``(nz, nx)``."""
        return self.v.reshape(self.mesh.nz, self.mesh.nx)


def _same_mesh(first: Mesh, second: Mesh) -> None:
    if first != second:
        msg = "fields are defined over different meshes"
        raise InvalidArgumentError(msg)


def build_mesh(
    kind: Union[MeshKind, str],
    lx: float,
    lz: Optional[float] = None,
    nx: int = MIN_NODES,
    nz: Optional[int] = None,
) -> Mesh:
    """Build the regular lattice covering ``[0, lx] x [0, lz]``.

    ``lz`` and ``nz`` are ignored for a profile.

    Raises:
        InvalidArgumentError: on a non-positive length or a count below 2.
    """
    kind = MeshKind(kind)
    if lx <= 0:
        msg = f"length lx must be positive, got {lx}"
        raise InvalidArgumentError(msg)
    if nx < MIN_NODES:
        msg = f"nx must be at least {MIN_NODES}, got {nx}"
        raise InvalidArgumentError(msg)

    if kind is MeshKind.PROFILE1D:
        return Mesh(kind, float(lx), 0.0, int(nx), 1)

    if lz is None or lz <= 0:
        msg = f"length lz must be positive, got {lz}"
        raise InvalidArgumentError(msg)
    if nz is None or nz < MIN_NODES:
        msg = f"nz must be at least {MIN_NODES}, got {nz}"
        raise InvalidArgumentError(msg)
    return Mesh(kind, float(lx), float(lz), int(nx), int(nz))


def required_nodes(kind: MeshKind, m: int) -> int:
    """Minimum nodes per axis to sample ``m`` retained modes.

    A grid holding ``m`` modes carries about ``sqrt(m)`` half-waves per axis,
    a profile carries ``m``; two samples per half-wave plus one are needed.
    """
    per_axis = math.ceil(math.sqrt(m)) if kind is MeshKind.GRID2D else m
    return 2 * per_axis + 1


def check_sampling(mesh: Mesh, m: int) -> None:
    """Check that the mesh is fine enough for ``m`` retained modes.

    The mesh is never coarsened or refined automatically.

    Raises:
        InvalidArgumentError: when an axis has too few nodes.
    """
    if m < 1:
        msg = f"retained mode count must be at least 1, got {m}"
        raise InvalidArgumentError(msg)
    needed = required_nodes(mesh.kind, m)
    counts = [mesh.nx]
    if mesh.kind is MeshKind.GRID2D:
        counts.append(mesh.nz)
    if min(counts) < needed:
        msg = (
            f"{m} retained modes need at least {needed} nodes per axis, "
            f"the mesh has {'x'.join(str(c) for c in counts)}"
        )
        raise InvalidArgumentError(msg)


def _lattice_axes(
    points: NDArray[np.float64],
) -> Optional[tuple[NDArray[np.float64], NDArray[np.float64]]]:
    """Return the axes if the points form a complete rectilinear lattice."""
    xs = np.unique(points[:, 0])
    zs = np.unique(points[:, 1])
    if xs.size < MIN_NODES or zs.size < MIN_NODES:
        return None
    if xs.size * zs.size != len(points):
        return None
    keys = {(float(x), float(z)) for x, z in points[:, :2]}
    if len(keys) != len(points):
        return None
    return xs, zs


def _interpolate_profile(
    points: NDArray[np.float64], mesh: Mesh
) -> tuple[NDArray[np.float64], int]:
    order = np.argsort(points[:, 0], kind="stable")
    xs, values = points[order, 0], points[order, 1]
    if np.unique(xs).size < MIN_NODES:
        msg = "a profile needs at least two distinct abscissae"
        raise DegenerateInputError(msg)

    nodes_x = mesh.x_coords
    # np.interp holds the end values outside the span: nearest-point rule
    v = np.interp(nodes_x, xs, values)
    outside = int(np.count_nonzero((nodes_x < xs[0]) | (nodes_x > xs[-1])))
    return v, outside


def _interpolate_grid(
    points: NDArray[np.float64], mesh: Mesh
) -> tuple[NDArray[np.float64], int]:
    xz = points[:, :2]
    centred = xz - xz.mean(axis=0)
    if len(points) < 3 or np.linalg.matrix_rank(centred) < 2:  # noqa: PLR2004
        msg = "grid interpolation needs at least three non-collinear points"
        raise DegenerateInputError(msg)

    nodes = mesh.nodes
    axes = _lattice_axes(points)
    if axes is not None:
        xs, zs = axes
        grid = np.full((xs.size, zs.size), np.nan)
        ix = np.searchsorted(xs, points[:, 0])
        iz = np.searchsorted(zs, points[:, 1])
        grid[ix, iz] = points[:, 2]
        interpolant = RegularGridInterpolator(
            (xs, zs), grid, method="linear", bounds_error=False
        )
        v = interpolant(nodes)
    else:
        v = LinearNDInterpolator(xz, points[:, 2])(nodes)

    outside = ~np.isfinite(v)
    if np.any(outside):
        nearest = NearestNDInterpolator(xz, points[:, 2])
        v[outside] = nearest(nodes[outside])
    return np.asarray(v, dtype=float), int(np.count_nonzero(outside))


def interpolate_to_nodes(points: ArrayLike, mesh: Mesh) -> SurfaceField:
    """Map a measured point set onto the mesh nodes.

    Points are rows of ``(x, z, v)`` for a grid and ``(x, v)`` for a
    profile. Complete rectilinear point lattices are interpolated bilinearly,
    scattered points with the piecewise-linear interpolant; both reproduce
    affine fields exactly. Nodes outside the span of the points take the
    value of the nearest point and are counted in ``extrapolated``.

    Raises:
        InvalidArgumentError: on an empty or wrongly shaped point set.
        DegenerateInputError: when the points cannot span the face.
    """
    data = np.asarray(points, dtype=float)
    width = 2 if mesh.kind is MeshKind.PROFILE1D else 3
    if data.size == 0:
        msg = "the point set is empty"
        raise InvalidArgumentError(msg)
    data = np.atleast_2d(data)
    if data.shape[1] != width:
        msg = f"expected {width} columns per point, got {data.shape[1]}"
        raise InvalidArgumentError(msg)
    if not np.all(np.isfinite(data)):
        msg = "point coordinates and values must be finite"
        raise InvalidArgumentError(msg)

    if mesh.kind is MeshKind.PROFILE1D:
        v, outside = _interpolate_profile(data, mesh)
    else:
        v, outside = _interpolate_grid(data, mesh)

    if outside:
        logger.warning(
            "%d node(s) outside the measured span took the nearest value",
            outside,
        )
    return SurfaceField(mesh, v, extrapolated=outside)


def read_points(path: Path, kind: Union[MeshKind, str]) -> NDArray[np.float64]:
    """Read a point file: one ``x z v`` (or ``x v``) record per line.

    Lines starting with ``#`` are comments.

    Raises:
        FormatError: when a record has the wrong number of columns.
    """
    width = 2 if MeshKind(kind) is MeshKind.PROFILE1D else 3
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        msg = f"cannot parse point file {path}: {exc}"
        raise FormatError(msg) from exc
    if data.size and data.shape[1] != width:
        msg = f"{path}: expected {width} columns, found {data.shape[1]}"
        raise FormatError(msg)
    return data


def write_points(path: Path, field_: SurfaceField) -> None:
    """Write a field as a point file, one record per node."""
    nodes = field_.mesh.nodes
    if field_.mesh.kind is MeshKind.PROFILE1D:
        data = np.column_stack([nodes[:, 0], field_.v])
        header = "x v (mm)"
    else:
        data = np.column_stack([nodes, field_.v])
        header = "x z v (mm)"
    np.savetxt(path, data, fmt="%.17g", header=header)
