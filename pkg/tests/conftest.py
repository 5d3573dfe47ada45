"""Shared fixtures: meshes, bases and an isolated home folder."""

from collections.abc import Iterator
from pathlib import Path

import pytest

from modal_assembly.constants import MeshKind
from modal_assembly.kinematics import AlphaMatrix, build_alpha
from modal_assembly.mesh import Mesh, build_mesh
from modal_assembly.modal import ModalBasis, build_basis

LENGTH = 40.0


@pytest.fixture(autouse=True, scope="session")
def isolated_home(tmp_path_factory) -> Iterator[Path]:
    """Keep the user settings file out of the real home folder."""
    home = tmp_path_factory.mktemp("home")
    with pytest.MonkeyPatch.context() as patch:
        patch.setenv("HOME", str(home))
        patch.setenv("USERPROFILE", str(home))
        yield home


@pytest.fixture(scope="session")
def profile_mesh() -> Mesh:
    """A 40 mm profile on 21 nodes."""
    return build_mesh(MeshKind.PROFILE1D, LENGTH, nx=21)


@pytest.fixture(scope="session")
def grid_mesh() -> Mesh:
    """A 40 x 40 mm face on a 21 x 21 grid."""
    return build_mesh(MeshKind.GRID2D, LENGTH, LENGTH, 21, 21)


@pytest.fixture(scope="session")
def small_grid_mesh() -> Mesh:
    """A 40 x 40 mm face on an 11 x 11 grid."""
    return build_mesh(MeshKind.GRID2D, LENGTH, LENGTH, 11, 11)


@pytest.fixture(scope="session")
def beam(profile_mesh: Mesh) -> ModalBasis:
    """Every mode of the 21-node beam."""
    return build_basis(profile_mesh, 21)


@pytest.fixture(scope="session")
def plate(grid_mesh: Mesh) -> ModalBasis:
    """The first 100 modes of the 21 x 21 plate."""
    return build_basis(grid_mesh, 100)


@pytest.fixture(scope="session")
def small_plate(small_grid_mesh: Mesh) -> ModalBasis:
    """The first 36 modes of the 11 x 11 plate."""
    return build_basis(small_grid_mesh, 36)


@pytest.fixture(scope="session")
def beam_alpha(beam: ModalBasis) -> AlphaMatrix:
    """Alpha matrix of the beam at the profile centre."""
    return build_alpha(beam, beam.mesh.center)


@pytest.fixture(scope="session")
def plate_alpha(plate: ModalBasis) -> AlphaMatrix:
    """Alpha matrix of the plate at the face centre."""
    return build_alpha(plate, plate.mesh.center)
