"""Decompose a measured surface on a saved modal basis."""

import logging
from pathlib import Path
from typing import Annotated, Optional

import pandas as pd
import typer
from rich import print  # pylint: disable=W0622
from rich.console import Console
from rich.table import Table

from modal_assembly.commands.common import (
    OutOption,
    float_format,
    handle_errors,
)
from modal_assembly.helpers import write_frame
from modal_assembly.mesh import interpolate_to_nodes, read_points
from modal_assembly.modal import load_basis
from modal_assembly.signature import (
    project,
    residue,
    spectrum,
    spectrum_frame,
    write_signature,
)

DEFAULT_OUT = Path("results")
TOP_MODES = 10

app = typer.Typer(no_args_is_help=True)
logger = logging.getLogger(__name__)


def _show_spectrum(pairs: list[tuple[int, float]], n_rigid: int) -> None:
    table = Table(
        title="Modal spectrum",
        header_style="bold blue",
        title_style="bold cyan",
        title_justify="left",
    )
    table.add_column("Mode", justify="right")
    table.add_column("Lambda (mm)", justify="right")
    table.add_column("Rigid")
    for mode, value in pairs:
        rigid = "yes" if mode <= n_rigid else ""
        table.add_row(str(mode), f"{value:.6g}", rigid)
    Console().print(table)


@app.callback(invoke_without_command=True)
def decompose(
    surface: Annotated[
        Path,
        typer.Argument(
            help="Point file of the measured surface (x [z] v per line).",
            exists=True,
            dir_okay=False,
            show_default=False,
        ),
    ],
    basis_file: Annotated[
        Path,
        typer.Argument(
            metavar="BASIS",
            help="Basis file written by gen-basis.",
            exists=True,
            dir_okay=False,
            show_default=False,
        ),
    ],
    m: Annotated[
        Optional[int],
        typer.Option(
            "-m",
            "--modes",
            help="Number of modes to project on (default: all).",
            min=1,
            show_default=False,
        ),
    ] = None,
    out: OutOption = None,
) -> None:
    """Project a surface on the first m modes and export its spectrum."""
    folder = out or DEFAULT_OUT
    with handle_errors():
        basis = load_basis(basis_file)
        points = read_points(surface, basis.mesh.kind)
        field = interpolate_to_nodes(points, basis.mesh)
        sig = project(field, basis, m or basis.n_modes)
        left = residue(field, sig)

        folder.mkdir(parents=True, exist_ok=True)
        fmt = float_format()
        stem = surface.stem
        sig_path = folder / f"{stem}.sig"
        write_signature(sig_path, sig)
        write_frame(
            spectrum_frame(sig), folder / f"{stem}_spectrum.csv", fmt
        )
        nodes = basis.mesh.nodes
        write_frame(
            pd.DataFrame(
                {
                    "x": nodes[:, 0],
                    "z": nodes[:, 1],
                    "residue_mm": left.field.v,
                }
            ),
            folder / f"{stem}_residue.csv",
            fmt,
        )
        logger.info("wrote signature of %s to %s", surface, folder)

    if field.extrapolated:
        print(
            f"[yellow]{field.extrapolated} node(s) lay outside the measured "
            "span and took the nearest value[/yellow]"
        )
    _show_spectrum(spectrum(sig)[:TOP_MODES], basis.n_rigid)
    print(
        f"Residue over {sig.m} modes: norm {left.norm:.6g} mm, "
        f"peak {left.peak:.6g} mm"
    )
    print(f"Signature written to [green]{sig_path}[/green]")
