"""Test the mesh module."""

from pathlib import Path

import numpy as np
import pytest

from modal_assembly.constants import MeshKind
from modal_assembly.errors import (
    DegenerateInputError,
    FormatError,
    InvalidArgumentError,
)
from modal_assembly.mesh import (
    Mesh,
    SurfaceField,
    build_mesh,
    check_sampling,
    interpolate_to_nodes,
    read_points,
    required_nodes,
    write_points,
)


class TestBuildMesh:
    """Test building node lattices."""

    def test_grid_node_count_and_order(self) -> None:
        """Nodes run along x first, then along z."""
        mesh = build_mesh(MeshKind.GRID2D, 40.0, 20.0, 5, 3)
        assert mesh.n_nodes == 15
        nodes = mesh.nodes
        assert nodes[1].tolist() == [10.0, 0.0]
        assert nodes[5].tolist() == [0.0, 10.0]
        assert nodes[-1].tolist() == [40.0, 20.0]
        assert mesh.node_index(2, 1) == 7

    def test_profile_ignores_z(self) -> None:
        """A profile has one row and lz = 0."""
        mesh = build_mesh("profile1d", 40.0, 99.0, 21, 7)
        assert mesh.nz == 1
        assert mesh.lz == 0.0
        assert mesh.n_nodes == 21
        assert mesh.center == (20.0, 0.0)

    def test_minimal_profile(self) -> None:
        """Two nodes are enough for a profile."""
        mesh = build_mesh(MeshKind.PROFILE1D, 1.0, nx=2)
        assert mesh.x_coords.tolist() == [0.0, 1.0]

    @pytest.mark.parametrize(
        ("lx", "lz", "nx", "nz"),
        [(0.0, 40.0, 21, 21), (40.0, -1.0, 21, 21), (40.0, 40.0, 1, 21)],
    )
    def test_invalid_grid(self, lx, lz, nx, nz) -> None:
        """Non-positive lengths and counts below 2 are rejected."""
        with pytest.raises(InvalidArgumentError):
            build_mesh(MeshKind.GRID2D, lx, lz, nx, nz)

    def test_contains(self, grid_mesh: Mesh) -> None:
        """The boundary is outside in strict mode only."""
        assert grid_mesh.contains(20.0, 20.0)
        assert not grid_mesh.contains(0.0, 20.0)
        assert grid_mesh.contains(0.0, 20.0, strict=False)
        assert not grid_mesh.contains(20.0, 41.0, strict=False)


class TestSampling:
    """Test the sampling rule."""

    def test_required_nodes(self) -> None:
        """A grid needs 2 ceil(sqrt(m)) + 1 nodes, a profile 2 m + 1."""
        assert required_nodes(MeshKind.GRID2D, 20) == 11
        assert required_nodes(MeshKind.GRID2D, 16) == 9
        assert required_nodes(MeshKind.PROFILE1D, 9) == 19

    def test_fine_enough(self, grid_mesh: Mesh) -> None:
        """The 21 x 21 grid carries 20 modes."""
        check_sampling(grid_mesh, 20)

    def test_too_coarse(self, profile_mesh: Mesh) -> None:
        """A 21-node profile cannot carry 11 modes."""
        with pytest.raises(InvalidArgumentError, match="21"):
            check_sampling(profile_mesh, 11)


class TestSurfaceField:
    """Test the field container."""

    def test_wrong_length(self, profile_mesh: Mesh) -> None:
        """The field needs one value per node."""
        with pytest.raises(InvalidArgumentError):
            SurfaceField(profile_mesh, np.zeros(5))

    def test_non_finite(self, profile_mesh: Mesh) -> None:
        """NaN values are rejected."""
        values = np.zeros(profile_mesh.n_nodes)
        values[3] = np.nan
        with pytest.raises(InvalidArgumentError):
            SurfaceField(profile_mesh, values)

    def test_arithmetic_and_grid(self, small_grid_mesh: Mesh) -> None:
        """Fields add node by node and reshape to (nz, nx)."""
        ones = SurfaceField(small_grid_mesh, np.ones(121))
        ramp = SurfaceField(small_grid_mesh, np.arange(121.0))
        total = ones + ramp - ones
        np.testing.assert_array_equal(total.v, ramp.v)
        assert total.as_grid()[1, 0] == 11.0

    def test_values_are_frozen(self, profile_mesh: Mesh) -> None:
        """A field cannot be changed in place."""
        field = SurfaceField(profile_mesh, np.zeros(21))
        with pytest.raises(ValueError, match="read-only"):
            field.v[0] = 1.0


class TestInterpolation:
    """Test mapping point sets onto nodes."""

    def test_identity_on_nodes(self, small_grid_mesh: Mesh) -> None:
        """Points on the nodes are copied exactly."""
        rng = np.random.default_rng(3)
        values = rng.normal(size=small_grid_mesh.n_nodes)
        points = np.column_stack([small_grid_mesh.nodes, values])
        field = interpolate_to_nodes(points, small_grid_mesh)
        np.testing.assert_allclose(field.v, values, atol=1e-12)
        assert field.extrapolated == 0

    def test_affine_on_a_lattice(self, small_grid_mesh: Mesh) -> None:
        """A coarser lattice reproduces an affine field."""
        xs, zs = np.meshgrid(np.linspace(0, 40, 5), np.linspace(0, 40, 4))
        x, z = xs.ravel(), zs.ravel()
        points = np.column_stack([x, z, 1.0 + 0.1 * x - 0.2 * z])
        field = interpolate_to_nodes(points, small_grid_mesh)
        nodes = small_grid_mesh.nodes
        expected = 1.0 + 0.1 * nodes[:, 0] - 0.2 * nodes[:, 1]
        np.testing.assert_allclose(field.v, expected, atol=1e-12)

    def test_affine_scattered(self, small_grid_mesh: Mesh) -> None:
        """Scattered points around the face reproduce an affine field."""
        rng = np.random.default_rng(11)
        corners = np.array([[-5.0, -5.0], [45, -5], [-5, 45], [45, 45]])
        xz = np.vstack([corners, rng.uniform(0, 40, size=(60, 2))])
        points = np.column_stack([xz, 2.0 - 0.05 * xz[:, 0] + xz[:, 1] / 80])
        field = interpolate_to_nodes(points, small_grid_mesh)
        nodes = small_grid_mesh.nodes
        expected = 2.0 - 0.05 * nodes[:, 0] + nodes[:, 1] / 80
        np.testing.assert_allclose(field.v, expected, atol=1e-10)
        assert field.extrapolated == 0

    def test_extrapolated_nodes_are_flagged(
        self, profile_mesh: Mesh
    ) -> None:
        """Nodes beyond the measured span take the nearest value."""
        points = np.array([[10.0, 1.0], [30.0, 3.0]])
        field = interpolate_to_nodes(points, profile_mesh)
        assert field.v[0] == 1.0
        assert field.v[-1] == 3.0
        assert field.v[10] == pytest.approx(2.0)
        assert field.extrapolated == 10

    def test_collinear_points(self, small_grid_mesh: Mesh) -> None:
        """Collinear points cannot define a surface."""
        points = np.array([[0, 0, 1], [10, 10, 1], [20, 20, 1.0]])
        with pytest.raises(DegenerateInputError):
            interpolate_to_nodes(points, small_grid_mesh)

    def test_empty(self, profile_mesh: Mesh) -> None:
        """An empty point set is an invalid argument."""
        with pytest.raises(InvalidArgumentError):
            interpolate_to_nodes(np.empty((0, 2)), profile_mesh)

    def test_wrong_columns(self, profile_mesh: Mesh) -> None:
        """A profile takes (x, v) pairs."""
        with pytest.raises(InvalidArgumentError):
            interpolate_to_nodes(np.ones((4, 3)), profile_mesh)


class TestPointFiles:
    """Test reading and writing point files."""

    def test_write_then_read(self, tmp_path: Path, small_grid_mesh) -> None:
        """A written field reads back onto the same nodes."""
        values = np.linspace(-1.0, 1.0, small_grid_mesh.n_nodes)
        path = tmp_path / "face.txt"
        write_points(path, SurfaceField(small_grid_mesh, values))
        points = read_points(path, MeshKind.GRID2D)
        assert points.shape == (121, 3)
        field = interpolate_to_nodes(points, small_grid_mesh)
        np.testing.assert_allclose(field.v, values, atol=1e-12)

    def test_wrong_column_count(self, tmp_path: Path) -> None:
        """A profile file must hold two columns."""
        path = tmp_path / "profile.txt"
        path.write_text("# x z v\n0 0 1\n1 0 2\n")
        with pytest.raises(FormatError):
            read_points(path, "profile1d")

    def test_garbage(self, tmp_path: Path) -> None:
        """Unparsable records raise a format error."""
        path = tmp_path / "bad.txt"
        path.write_text("0 one\n")
        with pytest.raises(FormatError):
            read_points(path, MeshKind.PROFILE1D)
