"""Main application entry point."""

from typing import Optional

import typer
from rich import print  # pylint: disable=redefined-builtin

from modal_assembly.commands import (
    assemble,
    config,
    decompose,
    gen_basis,
    simulate,
)
from modal_assembly.config import get_settings
from modal_assembly.helpers import get_app_version
from modal_assembly.log import setup_logging

app = typer.Typer(
    pretty_exceptions_show_locals=False,
    add_completion=False,
    no_args_is_help=True,
    rich_markup_mode="rich",
)


@app.callback(invoke_without_command=True)
def main(
    version: Optional[bool] = typer.Option(
        None, "-v", "--version", is_eager=True
    ),
    verbose: bool = typer.Option(
        False, "-V", "--verbose", help="Log progress and debug detail."
    ),
    quiet: bool = typer.Option(
        False, "-q", "--quiet", help="Only log errors."
    ),
) -> None:
    """Tolerance analysis of assemblies with form errors."""
    if version:
        print(
            "\n[green]Modal Assembly - Tolerance analysis of assemblies "
            f"with form errors.\n[/green]Version: {get_app_version()}\n"
        )
        raise typer.Exit

    if verbose:
        level = "DEBUG"
    elif quiet:
        level = "ERROR"
    else:
        level = get_settings().log_level
    setup_logging(level)


app.add_typer(
    gen_basis.app, name="gen-basis", help="Build and save the modal basis."
)
app.add_typer(
    decompose.app,
    name="decompose",
    help="Project a measured surface on the modal basis.",
)
app.add_typer(
    assemble.app,
    name="assemble",
    help="Assemble two parts and check the tolerance.",
)
app.add_typer(
    simulate.app,
    name="simulate",
    help="Simulate productions and compute the non-conformity rate.",
)
app.add_typer(
    config.app, name="config", help="Write or show configurations."
)


def run_app() -> None:
    """Run the main application.

    Breaking it out like this for testing.
    """
    app()


if __name__ == "__main__":
    run_app()
