"""Test the pydantic schemas."""

from pathlib import Path

import pytest
from pydantic import ValidationError

from modal_assembly.constants import Case, MeshKind, Pairing
from modal_assembly.schema import GeometryConfig, RunConfig


def planar(**mating: object) -> dict:
    """A 2d configuration with extra mating keys."""
    return {
        "geometry": {"case": "2d", "lx": 40.0, "nx": 21, "n_modes": 21},
        "mating": {"force_point": [20.0, 0.0], "m": 9, **mating},
    }


def test_defaults_are_the_spatial_demo() -> None:
    """The defaults describe a valid 3d run."""
    config = RunConfig()
    assert config.geometry.case is Case.THREE_D
    assert config.geometry.mesh_kind is MeshKind.GRID2D
    assert config.batch.part1.mu0 == 0.2
    assert config.batch.part2.sigma0 == 0.01
    assert config.batch.part2 == config.batch.part1
    assert config.output_dir == Path("results")
    assert config.workers is None


def test_planar_run() -> None:
    """A profile run ignores lz and nz."""
    config = RunConfig.model_validate(planar())
    mesh = config.geometry.build_mesh()
    assert mesh.kind is MeshKind.PROFILE1D
    assert mesh.n_nodes == 21


def test_unknown_key() -> None:
    """Misspelt keys are errors, not silently ignored."""
    with pytest.raises(ValidationError, match="extra"):
        RunConfig.model_validate({"geometry": {"n_mode": 20}})


@pytest.mark.parametrize(
    "geometry",
    [
        {"case": "2d", "nx": 21, "n_modes": 22},
        {"case": "2d", "nx": 21, "n_modes": 1},
        {"case": "3d", "nx": 5, "nz": 5, "n_modes": 26},
        {"lx": 0.0},
        {"nx": 1},
    ],
)
def test_invalid_geometry(geometry: dict) -> None:
    """Mode counts outside rigid..nodes and bad lattices."""
    with pytest.raises(ValidationError):
        GeometryConfig.model_validate(geometry)


def test_filtering_beyond_the_basis() -> None:
    """m cannot exceed the basis size."""
    with pytest.raises(ValidationError, match="n_modes"):
        RunConfig.model_validate(
            {"geometry": {"n_modes": 10}, "mating": {"m": 11}}
        )


@pytest.mark.parametrize("force_point", [[0.0, 20.0], [20.0, 40.0]])
def test_force_point_on_the_edge(force_point: list) -> None:
    """The force acts strictly inside face A."""
    with pytest.raises(ValidationError, match="strictly inside"):
        RunConfig.model_validate({"mating": {"force_point": force_point}})


def test_sampling_rule() -> None:
    """21 profile nodes carry at most 10 modes, unless unchecked."""
    with pytest.raises(ValidationError, match="21"):
        RunConfig.model_validate(planar(m=11))
    config = RunConfig.model_validate(planar(m=11, check_sampling=False))
    assert config.mating.m == 11


@pytest.mark.parametrize(
    "batch",
    [{"n": 1}, {"N": 0}, {"seed": -1}, {"repeat": 0}, {"pairing": "zip"}],
)
def test_invalid_batch(batch: dict) -> None:
    """Batch sizes, seed, repetitions and pairing are checked."""
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"batch": batch})


def test_pairing_by_value() -> None:
    """Pairings are read from their TOML spelling."""
    config = RunConfig.model_validate({"batch": {"pairing": "all-pairs"}})
    assert config.batch.pairing is Pairing.ALL_PAIRS


def test_negative_spread() -> None:
    """Part productions have non-negative means and spreads."""
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"batch": {"part1": {"sigma0": -0.1}}})
