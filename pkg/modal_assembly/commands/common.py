"""Options and plumbing shared by every command."""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Optional

import rtoml
import typer
from pydantic import ValidationError
from rich import print  # pylint: disable=redefined-builtin
from rich.markup import escape

from modal_assembly.config import get_settings
from modal_assembly.constants import ExitErrors
from modal_assembly.contact import MatingSetup
from modal_assembly.errors import InvalidArgumentError, ModalAssemblyError
from modal_assembly.helpers import load_run_config
from modal_assembly.kinematics import (
    AlphaMatrix,
    Domain,
    FaceGeometry,
    build_alpha,
    case_of,
    fr_domain,
)

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterator

    from modal_assembly.modal import ModalBasis
    from modal_assembly.schema import RunConfig

logger = logging.getLogger(__name__)

ConfigOption = Annotated[
    Optional[Path],
    typer.Option(
        "--config",
        "-c",
        help="Run configuration (TOML).",
        exists=True,
        dir_okay=False,
        show_default=False,
    ),
]
PresetOption = Annotated[
    Optional[str],
    typer.Option(
        "--preset",
        "-p",
        help="Use a bundled configuration (demo-2d, demo-3d).",
        show_default=False,
    ),
]
SetOption = Annotated[
    Optional[list[str]],
    typer.Option(
        "--set",
        help="Override a configuration value: key.path=value.",
        show_default=False,
    ),
]
SeedOption = Annotated[
    Optional[int],
    typer.Option(
        "--seed", help="Master seed (unsigned 64 bit).", show_default=False
    ),
]
OutOption = Annotated[
    Optional[Path],
    typer.Option(
        "--out",
        "-o",
        help="Output directory.",
        file_okay=False,
        show_default=False,
    ),
]
WorkersOption = Annotated[
    Optional[int],
    typer.Option(
        "--workers",
        "-w",
        help="Parallel worker processes.",
        min=1,
        show_default=False,
    ),
]


def fail(message: str, code: ExitErrors) -> typer.Exit:
    """Print an error in red and return the matching ``typer.Exit``."""
    print(f"[red]Error: {escape(message)}[/red]")
    return typer.Exit(int(code))


@contextmanager
def handle_errors() -> Iterator[None]:
    """Turn library and I/O errors into a message and an exit code."""
    try:
        yield
    except ValidationError as exc:
        raise fail(
            f"invalid configuration\n{exc}", ExitErrors.VALIDATION_ERROR
        ) from exc
    except rtoml.TomlParsingError as exc:
        raise fail(
            f"invalid TOML file: {exc}", ExitErrors.VALIDATION_ERROR
        ) from exc
    except ModalAssemblyError as exc:
        raise fail(str(exc), exc.exit_code) from exc
    except OSError as exc:
        raise fail(str(exc), ExitErrors.OS_ERROR) from exc


def resolve_config(  # noqa: PLR0913
    config: Optional[Path] = None,
    preset: Optional[str] = None,
    overrides: Optional[list[str]] = None,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
    workers: Optional[int] = None,
) -> RunConfig:
    """Load the run configuration with the command line on top."""
    return load_run_config(
        config,
        preset,
        overrides or [],
        values={"batch.seed": seed, "output_dir": out, "workers": workers},
    )


def worker_count(run: RunConfig) -> int:
    """Workers from the run configuration, else from the user settings."""
    return get_settings().workers(run.workers)


def output_dir(run: RunConfig) -> Path:
    """Create and return the output directory."""
    run.output_dir.mkdir(parents=True, exist_ok=True)
    return run.output_dir


def float_format() -> str:
    """CSV float format from the user settings."""
    return get_settings().csv_float_format()


@dataclass(frozen=True)
class Pipeline:
    """Objects every assembly computation of a run needs."""

    basis: ModalBasis
    alpha: AlphaMatrix
    domain: Domain
    setup: MatingSetup


def build_pipeline(run: RunConfig, basis: ModalBasis) -> Pipeline:
    """Derive the alpha matrix, FR domain and mating setup of a run.

    The SDT of face A is expressed at the centre of A and the FR domain at
    the centre of B, located by ``face_b.offset`` from the centre of A.
    """
    cx, cz = basis.mesh.center
    alpha = build_alpha(basis, (cx, cz))
    geometry = FaceGeometry(
        offset=run.face_b.offset, lbx=run.face_b.lbx, lz=run.face_b.lz
    )
    domain = fr_domain(
        run.tolerance.t, geometry, run.geometry.case, a_center=(cx, 0.0, cz)
    )
    setup = MatingSetup(force_point=run.mating.force_point, m=run.mating.m)
    logger.debug("alpha at %s, domain at %s", alpha.point, domain.point)
    return Pipeline(basis=basis, alpha=alpha, domain=domain, setup=setup)


def check_case(run: RunConfig, basis: ModalBasis) -> None:
    """Refuse a basis built for the other analysis case.

    Raises:
        InvalidArgumentError: if the cases differ.
    """
    case = case_of(basis)
    if case is not run.geometry.case:
        msg = (
            f"the basis is a {case.value} basis but the configuration is "
            f"for the {run.geometry.case.value} case"
        )
        raise InvalidArgumentError(msg)
