"""Modal shape bases of the nominal face.

The beam model is a free-free Euler-Bernoulli beam with two-node cubic
elements and two DOF per node, ``(T_y, R_z)``. Material constants are unit:
only the mode shapes and their ordering matter, never the frequencies.

Plate bases are tensor products of the two beam bases along x and z. A basis
built elsewhere (a true plate FEM for instance) can be loaded from a file as
long as it satisfies the invariants checked by ``check_basis``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import rtoml
from scipy import linalg

from modal_assembly.constants import (
    BASIS_FORMAT_VERSION,
    BASIS_MAGIC,
    EIGEN_TIE_RATIO,
    RIGID_EIGEN_RATIO,
    RIGID_MODES,
    SHAPE_DECIMALS,
    SIGN_TIE_RATIO,
    BasisKind,
    MeshKind,
)
from modal_assembly.errors import (
    FormatError,
    InternalError,
    InvalidArgumentError,
)
from modal_assembly.mesh import Mesh, build_mesh

if TYPE_CHECKING:  # pragma: no cover
    from pathlib import Path

    from numpy.typing import NDArray

logger = logging.getLogger(__name__)

DOF_PER_NODE = 2
INF_NORM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class ModalBasis:
    """Ordered mode shapes over the mesh nodes.

    ``modes`` has one column per mode, in mm per unit coefficient, sorted by
    ascending ``omega2``. The first ``n_rigid`` columns are rigid-body modes.
    """

    mesh: Mesh
    modes: NDArray[np.float64]
    omega2: NDArray[np.float64]
    n_rigid: int
    kind: BasisKind

    def __post_init__(self) -> None:
        """Freeze the arrays."""
        modes = np.array(self.modes, dtype=float)
        omega2 = np.array(self.omega2, dtype=float)
        modes.setflags(write=False)
        omega2.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "omega2", omega2)

    @property
    def n_modes(self) -> int:
        """Number of modes held by the basis."""
        return int(self.modes.shape[1])

    def matrix(self, m: int) -> NDArray[np.float64]:
        """Return the first ``m`` mode shapes as columns."""
        return self.modes[:, :m]

    def same_as(self, other: ModalBasis) -> bool:
        """Check whether two bases describe the same shapes."""
        return self is other or (
            self.mesh == other.mesh
            and self.kind == other.kind
            and np.array_equal(self.modes, other.modes)
        )


def _beam_element(length: float) -> tuple[NDArray[np.float64], ...]:
    h, h2 = length, length * length
    stiffness = (1.0 / h**3) * np.array(
        [
            [12, 6 * h, -12, 6 * h],
            [6 * h, 4 * h2, -6 * h, 2 * h2],
            [-12, -6 * h, 12, -6 * h],
            [6 * h, 2 * h2, -6 * h, 4 * h2],
        ],
        dtype=float,
    )
    mass = (h / 420.0) * np.array(
        [
            [156, 22 * h, 54, -13 * h],
            [22 * h, 4 * h2, 13 * h, -3 * h2],
            [54, 13 * h, 156, -22 * h],
            [-13 * h, -3 * h2, -22 * h, 4 * h2],
        ],
        dtype=float,
    )
    return mass, stiffness


def beam_matrices(
    mesh: Mesh,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Assemble the mass and stiffness matrices of the free-free beam.

    DOF ``2k`` is the translation ``T_y`` of node ``k`` and ``2k + 1`` its
    rotation ``R_z``. ``EI = 1`` and ``rho A = 1``.

    Raises:
        InvalidArgumentError: if the mesh is not a profile.
    """
    if mesh.kind is not MeshKind.PROFILE1D:
        msg = "beam matrices need a profile1d mesh"
        raise InvalidArgumentError(msg)

    n_dof = DOF_PER_NODE * mesh.nx
    M = np.zeros((n_dof, n_dof))
    K = np.zeros((n_dof, n_dof))
    element_mass, element_stiffness = _beam_element(mesh.lx / (mesh.nx - 1))
    for element in range(mesh.nx - 1):
        dofs = slice(DOF_PER_NODE * element, DOF_PER_NODE * element + 4)
        M[dofs, dofs] += element_mass
        K[dofs, dofs] += element_stiffness
    return M, K


def modal_eigenpairs(
    M: NDArray[np.float64], K: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Solve ``K q = omega^2 M q`` for every DOF, ascending ``omega^2``."""
    omega2, vectors = linalg.eigh(K, M)
    return omega2, vectors


def normalize_shapes(shapes: NDArray[np.float64]) -> NDArray[np.float64]:
    """Scale columns to infinity norm 1 with a positive leading peak.

    The leading peak is the first entry whose magnitude is within
    ``SIGN_TIE_RATIO`` of the column maximum.
    """
    result = np.array(shapes, dtype=float)
    for k in range(result.shape[1]):
        column = result[:, k]
        peak = np.abs(column).max()
        if peak == 0.0:
            msg = f"mode {k + 1} is identically zero"
            raise InternalError(msg)
        first = int(np.argmax(np.abs(column) >= (1.0 - SIGN_TIE_RATIO) * peak))
        result[:, k] = column / (peak * np.sign(column[first]))
    return result


def order_modes(
    omega2: NDArray[np.float64], shapes: NDArray[np.float64]
) -> NDArray[np.intp]:
    """Return the column order: ascending ``omega2``, ties by shape.

    Eigenvalues within ``EIGEN_TIE_RATIO`` of the largest are tied; tied
    columns are ordered by descending lexicographic comparison of their
    (already sign-fixed) shapes rounded to ``SHAPE_DECIMALS`` decimals, so
    the last bits of the eigensolver never change the order.
    """
    order = np.argsort(omega2, kind="stable")
    rounded = np.round(shapes, SHAPE_DECIMALS)
    scale = max(float(np.abs(omega2).max()), np.finfo(float).tiny)
    result: list[int] = []
    start = 0
    while start < order.size:
        stop = start + 1
        while (
            stop < order.size
            and omega2[order[stop]] - omega2[order[start]]
            <= EIGEN_TIE_RATIO * scale
        ):
            stop += 1
        group = sorted(
            (int(k) for k in order[start:stop]),
            key=lambda k: tuple(rounded[:, k]),
            reverse=True,
        )
        result.extend(group)
        start = stop
    return np.asarray(result, dtype=np.intp)


def rigid_shapes(mesh: Mesh) -> NDArray[np.float64]:
    """Exact rigid shapes of a profile: translation, then rotation.

    The rotation is about the centre of the profile, at infinity norm 1 and
    positive at ``x = 0``.
    """
    x = mesh.x_coords
    return np.column_stack([np.ones_like(x), 1.0 - 2.0 * x / mesh.lx])


def _leading_first(
    omega2: NDArray[np.float64],
    shapes: NDArray[np.float64],
    leading: NDArray[np.intp],
) -> NDArray[np.intp]:
    """Put ``leading`` columns first, in that order, then sort the others."""
    rest = np.setdiff1d(np.arange(omega2.size), leading)
    if rest.size == 0:
        return leading
    tail = rest[order_modes(omega2[rest], shapes[:, rest])]
    return np.concatenate([leading, tail]).astype(np.intp)


def _check_mode_count(n_modes: int, n_dof: int, n_nodes: int) -> None:
    if n_modes < 1:
        msg = f"n_modes must be at least 1, got {n_modes}"
        raise InvalidArgumentError(msg)
    if n_modes > n_dof:
        msg = f"n_modes {n_modes} exceeds the {n_dof} DOF of the model"
        raise InvalidArgumentError(msg)
    if n_modes > n_nodes:
        msg = (
            f"n_modes {n_modes} exceeds the {n_nodes} nodes: translational "
            "shapes beyond the node count cannot be independent"
        )
        raise InvalidArgumentError(msg)


def solve_modal_basis(
    M: NDArray[np.float64],
    K: NDArray[np.float64],
    n_modes: int,
    mesh: Mesh,
) -> ModalBasis:
    """Solve the beam eigenproblem and keep ``n_modes`` translational shapes.

    Rotational DOF are dropped after the solve; shapes are normalised to
    infinity norm 1. The eigensolver returns an arbitrary basis of the rigid
    null space, so the rigid pair is replaced by the exact translation and
    rotation of ``rigid_shapes`` and placed first.

    Raises:
        InvalidArgumentError: if ``n_modes`` exceeds the DOF or node count.
        InternalError: if the model does not show two rigid modes.
    """
    n_dof = M.shape[0]
    _check_mode_count(n_modes, n_dof, n_dof // DOF_PER_NODE)

    omega2, vectors = modal_eigenpairs(M, K)
    rigid = omega2 < RIGID_EIGEN_RATIO * omega2.max()
    n_rigid = int(np.count_nonzero(rigid))
    expected = RIGID_MODES[BasisKind.BEAM1D]
    if n_rigid != expected:
        msg = f"free-free beam shows {n_rigid} rigid modes, not {expected}"
        raise InternalError(msg)

    omega2 = np.where(rigid, 0.0, omega2)[:n_modes]
    shapes = vectors[0::DOF_PER_NODE, :n_modes].copy()
    kept = min(n_rigid, n_modes)
    shapes[:, :kept] = rigid_shapes(mesh)[:, :kept]
    shapes = normalize_shapes(shapes)
    order = _leading_first(omega2, shapes, np.arange(kept, dtype=np.intp))
    logger.debug("beam basis: %d modes, %d rigid", n_modes, n_rigid)
    return ModalBasis(
        mesh=mesh,
        modes=shapes[:, order],
        omega2=omega2[order],
        n_rigid=n_rigid,
        kind=BasisKind.BEAM1D,
    )


def beam_basis(mesh: Mesh, n_modes: int) -> ModalBasis:
    """Build the beam basis of a profile in one call."""
    M, K = beam_matrices(mesh)
    return solve_modal_basis(M, K, n_modes, mesh)


def plate_basis_tensor(mesh: Mesh, n_modes: int) -> ModalBasis:
    """Build a plate basis from products of free-free beam modes.

    Mode ``(a, b)`` is ``psi_a(z) * phi_b(x)`` with frequency
    ``omega_a^2 + omega_b^2``. The first three are the rigid modes ``T_y``,
    ``R_x`` (linear in z) and ``R_z`` (linear in x); the fourth is the
    bilinear twist, also at zero frequency. These four are placed by
    construction, never by the tie rule.

    Raises:
        InvalidArgumentError: on a profile mesh or too many modes.
    """
    if mesh.kind is not MeshKind.GRID2D:
        msg = "a plate basis needs a grid2d mesh"
        raise InvalidArgumentError(msg)
    _check_mode_count(n_modes, DOF_PER_NODE * mesh.n_nodes, mesh.n_nodes)

    x_axis = build_mesh(MeshKind.PROFILE1D, mesh.lx, nx=mesh.nx)
    z_axis = build_mesh(MeshKind.PROFILE1D, mesh.lz, nx=mesh.nz)
    along_x = beam_basis(x_axis, mesh.nx)
    along_z = beam_basis(z_axis, mesh.nz)

    # node iz * nx + ix, column a * nx + b: psi_a(z_iz) * phi_b(x_ix)
    products = np.einsum("za,xb->zxab", along_z.modes, along_x.modes)
    shapes = products.reshape(mesh.n_nodes, mesh.nz * mesh.nx)
    omega2 = np.add.outer(along_z.omega2, along_x.omega2).ravel()

    shapes = normalize_shapes(shapes)
    # constant, linear in z, linear in x, twist: all four have omega2 = 0
    leading = np.array([0, mesh.nx, 1, mesh.nx + 1], dtype=np.intp)
    order = _leading_first(omega2, shapes, leading)[:n_modes]
    return ModalBasis(
        mesh=mesh,
        modes=shapes[:, order],
        omega2=omega2[order],
        n_rigid=RIGID_MODES[BasisKind.PLATE2D],
        kind=BasisKind.PLATE2D,
    )


def build_basis(mesh: Mesh, n_modes: int) -> ModalBasis:
    """Build the basis matching the mesh kind."""
    if mesh.kind is MeshKind.PROFILE1D:
        return beam_basis(mesh, n_modes)
    return plate_basis_tensor(mesh, n_modes)


def check_basis(basis: ModalBasis) -> None:
    """Check every basis invariant.

    Raises:
        FormatError: naming the first invariant that fails.
    """
    modes, omega2 = basis.modes, basis.omega2
    if modes.shape[0] != basis.mesh.n_nodes:
        msg = (
            f"basis has {modes.shape[0]} rows, the mesh has "
            f"{basis.mesh.n_nodes} nodes"
        )
        raise FormatError(msg)
    if omega2.shape != (basis.n_modes,):
        msg = "one eigenvalue per mode is required"
        raise FormatError(msg)
    if not (np.all(np.isfinite(modes)) and np.all(np.isfinite(omega2))):
        msg = "basis holds non-finite values"
        raise FormatError(msg)
    if basis.n_rigid != RIGID_MODES[basis.kind]:
        msg = (
            f"a {basis.kind.value} basis has {RIGID_MODES[basis.kind]} rigid "
            f"modes, not {basis.n_rigid}"
        )
        raise FormatError(msg)
    if basis.n_modes < basis.n_rigid:
        msg = "basis holds fewer modes than rigid modes"
        raise FormatError(msg)

    norms = np.abs(modes).max(axis=0)
    if np.any(np.abs(norms - 1.0) > INF_NORM_TOLERANCE):
        msg = "every mode must have infinity norm 1"
        raise FormatError(msg)
    scale = max(float(np.abs(omega2).max()), np.finfo(float).tiny)
    if np.any(np.diff(omega2) < -EIGEN_TIE_RATIO * scale):
        msg = "modes must be sorted by ascending eigenvalue"
        raise FormatError(msg)
    if np.any(omega2[: basis.n_rigid] >= RIGID_EIGEN_RATIO * scale):
        msg = "the leading modes are not rigid"
        raise FormatError(msg)
    if np.linalg.matrix_rank(modes) != basis.n_modes:
        msg = "mode shapes are not linearly independent"
        raise FormatError(msg)


def save_basis(basis: ModalBasis, path: Path) -> None:
    """Write a basis file.

    The file is text: a commented TOML header, then one row of eigenvalues,
    then one row per node. Values are written with 17 significant digits so
    the round trip is exact.
    """
    header = {
        "format_version": BASIS_FORMAT_VERSION,
        "kind": basis.kind.value,
        "mesh_kind": basis.mesh.kind.value,
        "nx": basis.mesh.nx,
        "nz": basis.mesh.nz,
        "lx": basis.mesh.lx,
        "lz": basis.mesh.lz,
        "n_modes": basis.n_modes,
        "n_rigid": basis.n_rigid,
    }
    lines = [BASIS_MAGIC, *rtoml.dumps(header).strip().splitlines()]
    with path.open("w", encoding="utf-8") as handle:
        handle.writelines(f"# {line}\n" for line in lines)
        np.savetxt(
            handle, np.vstack([basis.omega2, basis.modes]), fmt="%.17e"
        )


def _read_header(path: Path) -> dict[str, object]:
    lines: list[str] = []
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            lines.append(line[1:].strip())
    if not lines or lines[0] != BASIS_MAGIC:
        msg = f"{path} is not a modal basis file"
        raise FormatError(msg)
    try:
        return rtoml.loads("\n".join(lines[1:]))
    except rtoml.TomlParsingError as exc:
        msg = f"invalid basis header in {path}: {exc}"
        raise FormatError(msg) from exc


def load_basis(path: Path) -> ModalBasis:
    """Read and validate a basis file.

    Raises:
        FormatError: if the file is corrupt or violates an invariant.
    """
    header = _read_header(path)
    try:
        if header["format_version"] != BASIS_FORMAT_VERSION:
            msg = f"unsupported basis format {header['format_version']}"
            raise FormatError(msg)
        mesh = Mesh(
            kind=MeshKind(header["mesh_kind"]),
            lx=float(header["lx"]),  # type: ignore[arg-type]
            lz=float(header["lz"]),  # type: ignore[arg-type]
            nx=int(header["nx"]),  # type: ignore[call-overload]
            nz=int(header["nz"]),  # type: ignore[call-overload]
        )
        kind = BasisKind(header["kind"])
        n_modes = int(header["n_modes"])  # type: ignore[call-overload]
        n_rigid = int(header["n_rigid"])  # type: ignore[call-overload]
    except (KeyError, TypeError, ValueError) as exc:
        msg = f"incomplete basis header in {path}: {exc}"
        raise FormatError(msg) from exc

    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        msg = f"cannot parse basis values in {path}: {exc}"
        raise FormatError(msg) from exc
    if data.shape != (mesh.n_nodes + 1, n_modes):
        msg = (
            f"{path}: expected {mesh.n_nodes + 1} rows of {n_modes} values, "
            f"found {data.shape[0]} rows of {data.shape[1]}"
        )
        raise FormatError(msg)

    basis = ModalBasis(
        mesh=mesh, modes=data[1:], omega2=data[0], n_rigid=n_rigid, kind=kind
    )
    check_basis(basis)
    return basis
