"""Build and save the modal basis of face A."""

import logging

import typer
from rich import print  # pylint: disable=W0622

from modal_assembly.commands.common import (
    ConfigOption,
    OutOption,
    PresetOption,
    SetOption,
    handle_errors,
    output_dir,
    resolve_config,
)
from modal_assembly.helpers import show_table
from modal_assembly.modal import build_basis, save_basis

BASIS_FILE = "basis.txt"
SHOWN_FREQUENCIES = 6

app = typer.Typer()
logger = logging.getLogger(__name__)


@app.callback(invoke_without_command=True)
def gen_basis(
    config: ConfigOption = None,
    preset: PresetOption = None,
    overrides: SetOption = None,
    out: OutOption = None,
) -> None:
    """Build the modal basis of face A and save it to basis.txt."""
    with handle_errors():
        run = resolve_config(config, preset, overrides, out=out)
        mesh = run.geometry.build_mesh()
        basis = build_basis(mesh, run.geometry.n_modes)
        path = output_dir(run) / BASIS_FILE
        save_basis(basis, path)
        logger.info("wrote %s", path)

    shown = min(SHOWN_FREQUENCIES, basis.n_modes)
    show_table(
        {
            "kind": basis.kind.value,
            "nodes": mesh.n_nodes,
            "modes": basis.n_modes,
            "rigid_modes": basis.n_rigid,
            "first_omega2": ", ".join(
                f"{value:.6g}" for value in basis.omega2[:shown]
            ),
        },
        title="Modal basis",
        columns=("Property", "Value"),
    )
    print(f"Basis written to [green]{path}[/green]")
