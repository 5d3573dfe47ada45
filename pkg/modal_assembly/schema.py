"""Define the Pydantic schemas of a run configuration.

Every precondition of the library that a configuration can break is checked
here, so a bad file is rejected before any computation starts.
"""

from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from modal_assembly.constants import (
    RIGID_MODES,
    BasisKind,
    Case,
    MeshKind,
    Pairing,
)
from modal_assembly.mesh import Mesh, build_mesh, check_sampling

MAX_SEED = 2**64


class Section(BaseModel):
    """Base for every configuration block: unknown keys are errors."""

    model_config = ConfigDict(extra="forbid")


class GeometryConfig(Section):
    """Mating face A and its discretisation.

    ``lz`` and ``nz`` are ignored in the 2d case.
    """

    case: Case = Case.THREE_D
    lx: float = Field(40.0, gt=0)
    lz: float = Field(40.0, gt=0)
    nx: int = Field(21, ge=2)
    nz: int = Field(21, ge=2)
    n_modes: int = Field(100, ge=1)

    @property
    def mesh_kind(self) -> MeshKind:
        """Mesh kind matching the case."""
        return (
            MeshKind.PROFILE1D if self.case is Case.TWO_D else MeshKind.GRID2D
        )

    @property
    def basis_kind(self) -> BasisKind:
        """Basis kind matching the case."""
        return (
            BasisKind.BEAM1D if self.case is Case.TWO_D else BasisKind.PLATE2D
        )

    def build_mesh(self) -> Mesh:
        """Build the mesh of face A."""
        return build_mesh(self.mesh_kind, self.lx, self.lz, self.nx, self.nz)

    @model_validator(mode="after")
    def check_mode_count(self) -> "GeometryConfig":
        """The basis needs its rigid modes and no more modes than nodes."""
        nodes = self.nx if self.case is Case.TWO_D else self.nx * self.nz
        rigid = RIGID_MODES[self.basis_kind]
        if not rigid <= self.n_modes <= nodes:
            msg = f"n_modes must lie in {rigid}..{nodes}, got {self.n_modes}"
            raise ValueError(msg)
        return self


class FaceBConfig(Section):
    """Functional face B, located from the centre of face A (mm)."""

    offset: tuple[float, float, float] = (10.0, 20.0, 0.0)
    lbx: float = Field(20.0, gt=0)
    lz: float = Field(40.0, gt=0)


class ToleranceConfig(Section):
    """Location tolerance of face B."""

    t: float = Field(0.1, gt=0)


class MatingConfig(Section):
    """Mating force and filtering."""

    force_point: tuple[float, float] = (20.0, 20.0)
    m: int = Field(20, ge=1)
    check_sampling: bool = True


class PartConfig(Section):
    """Mother shape and spread of one part's production."""

    mu0: float = Field(0.2, ge=0)
    sigma0: float = Field(0.01, ge=0)


class BatchConfig(Section):
    """Pilot and virtual productions."""

    part1: PartConfig = Field(default_factory=PartConfig)
    part2: PartConfig = Field(default_factory=PartConfig)
    n: int = Field(10, ge=2)
    N: int = Field(100, ge=1)
    seed: int = Field(0, ge=0, lt=MAX_SEED)
    pairing: Pairing = Pairing.INDEX
    repeat: int = Field(1, ge=1)


class RunConfig(Section):
    """A complete, validated run configuration."""

    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    face_b: FaceBConfig = Field(default_factory=FaceBConfig)
    tolerance: ToleranceConfig = Field(default_factory=ToleranceConfig)
    mating: MatingConfig = Field(default_factory=MatingConfig)
    batch: BatchConfig = Field(default_factory=BatchConfig)
    output_dir: Path = Path("results")
    workers: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def check_downstream(self) -> "RunConfig":
        """Cross-block checks: filtering, force point and sampling."""
        geometry = self.geometry
        if self.mating.m > geometry.n_modes:
            msg = (
                f"mating.m ({self.mating.m}) exceeds geometry.n_modes "
                f"({geometry.n_modes})"
            )
            raise ValueError(msg)

        mesh = geometry.build_mesh()
        x, z = self.mating.force_point
        if not mesh.contains(x, z, strict=True):
            msg = (
                f"mating.force_point {self.mating.force_point} must lie "
                "strictly inside face A"
            )
            raise ValueError(msg)
        if self.mating.check_sampling:
            check_sampling(mesh, self.mating.m)
        return self
