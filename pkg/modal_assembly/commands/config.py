"""Write, resolve and show configurations."""

from pathlib import Path
from typing import Annotated

import typer
from rich import print  # pylint: disable=W0622

from modal_assembly.commands.common import (
    ConfigOption,
    PresetOption,
    SetOption,
    fail,
    handle_errors,
    resolve_config,
)
from modal_assembly.config import get_settings
from modal_assembly.constants import ExitErrors
from modal_assembly.helpers import (
    dump_config,
    flatten,
    header,
    preset_text,
    show_table,
)

DEFAULT_PRESET = "demo-3d"

app = typer.Typer(no_args_is_help=True)


@app.command()
def init(
    path: Annotated[
        Path,
        typer.Argument(
            help="Where to write the configuration.",
            dir_okay=False,
            show_default=False,
        ),
    ] = Path("modasm.toml"),
    preset: Annotated[
        str,
        typer.Option("--preset", "-p", help="Bundled configuration to copy."),
    ] = DEFAULT_PRESET,
    force: Annotated[
        bool, typer.Option("--force", "-f", help="Overwrite an existing file.")
    ] = False,
) -> None:
    """Write a bundled configuration to disk as a starting point."""
    if path.exists() and not force:
        raise fail(
            f"{path} already exists, use --force to overwrite it",
            ExitErrors.VALIDATION_ERROR,
        )
    with handle_errors():
        path.write_text(preset_text(preset), encoding="utf-8")
    print(f"Configuration '{preset}' written to [green]{path}[/green]")


@app.command()
def show(
    config: ConfigOption = None,
    preset: PresetOption = None,
    overrides: SetOption = None,
    as_toml: Annotated[
        bool, typer.Option("--toml", help="Print TOML instead of a table.")
    ] = False,
) -> None:
    """Show the resolved run configuration, overrides included."""
    with handle_errors():
        run = resolve_config(config, preset, overrides)
    if as_toml:
        typer.echo(dump_config(run), nl=False)
        return
    header()
    show_table(flatten(run.model_dump(mode="json")), title="Run configuration")


@app.command()
def user() -> None:
    """Show the per-user settings."""
    header()
    settings = get_settings()
    location = settings.settings_folder / settings.settings_file_name
    show_table(settings.get_attrs(), title=str(location))
