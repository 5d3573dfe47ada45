"""Helpers for the command line: configuration files, tables and exports."""

from __future__ import annotations

import sys
from importlib import metadata, resources
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional

import rtoml
from rich import print  # pylint: disable=redefined-builtin
from rich.console import Console
from rich.table import Table

from modal_assembly.constants import ExitErrors
from modal_assembly.errors import InvalidArgumentError
from modal_assembly.schema import RunConfig

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterable, Mapping

    import pandas as pd

PRESET_PACKAGE = "modal_assembly.presets"


def pretty_attrib(attr: str) -> str:
    """Return a pretty version of the attribute name."""
    return attr.replace("_", " ").title()


def header() -> None:
    """Print a header for the application."""
    print(
        "[bold]Modal Assembly[/bold] - Tolerance analysis of assemblies "
        "with form errors.\n"
    )


def show_table(
    settings: Mapping[str, Any],
    title: Optional[str] = None,
    columns: tuple[str, str] = ("Setting", "Value"),
) -> None:
    """Show settings or results in a tabulated format."""
    console = Console()
    table = Table(
        title=title,
        show_header=True,
        header_style="bold blue",
        title_style="bold cyan",
        title_justify="left",
    )
    for column in columns:
        table.add_column(column)

    for key, value in settings.items():
        table.add_row(pretty_attrib(key), str(value))
    console.print(table)


def flatten(data: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    """Flatten nested tables into dotted key paths."""
    flat: dict[str, Any] = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, f"{path}."))
        else:
            flat[path] = value
    return flat


def preset_names() -> list[str]:
    """List the bundled configuration presets."""
    folder = resources.files(PRESET_PACKAGE)
    return sorted(
        item.name.removesuffix(".toml").replace("_", "-")
        for item in folder.iterdir()
        if item.name.endswith(".toml")
    )


def preset_text(name: str) -> str:
    """Return the TOML text of a bundled preset.

    Raises:
        InvalidArgumentError: if no preset has this name.
    """
    if name not in preset_names():
        msg = f"unknown preset '{name}', choose from {preset_names()}"
        raise InvalidArgumentError(msg)
    filename = f"{name.replace('-', '_')}.toml"
    resource = resources.files(PRESET_PACKAGE) / filename
    return resource.read_text(encoding="utf-8")


def parse_override(item: str) -> tuple[list[str], Any]:
    """Split a ``key.path=value`` override.

    The value is read as a TOML literal, and kept as a string when it is not
    one, so ``batch.pairing=all-pairs`` needs no quotes.

    Raises:
        InvalidArgumentError: if there is no ``=`` or no key.
    """
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        msg = f"override '{item}' must look like key.path=value"
        raise InvalidArgumentError(msg)
    try:
        value = rtoml.loads(f"value = {raw.strip()}")["value"]
    except rtoml.TomlParsingError:
        value = raw.strip()
    return key.split("."), value


def set_path(
    data: dict[str, Any],
    path: list[str],
    value: Any,  # noqa: ANN401
) -> None:
    """Set a value at a dotted key path, creating tables on the way."""
    table = data
    for part in path[:-1]:
        child = table.setdefault(part, {})
        if not isinstance(child, dict):
            dotted = ".".join(path)
            msg = f"'{dotted}': '{part}' is not a table"
            raise InvalidArgumentError(msg)
        table = child
    table[path[-1]] = value


def apply_overrides(
    data: dict[str, Any], overrides: Iterable[str]
) -> dict[str, Any]:
    """Set each ``key.path=value`` override in a nested dict, in place."""
    for item in overrides:
        path, value = parse_override(item)
        set_path(data, path, value)
    return data


def load_run_config(
    path: Optional[Path] = None,
    preset: Optional[str] = None,
    overrides: Iterable[str] = (),
    values: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Read, override and validate a run configuration.

    Without a file or a preset the built-in defaults are used. The
    ``--set`` style ``overrides`` are applied first, then ``values``, a
    mapping of dotted key paths to already typed values (the dedicated
    command line flags).

    Raises:
        InvalidArgumentError: when both a file and a preset are given.
        pydantic.ValidationError: when the result is not a valid run.
    """
    if path is not None and preset is not None:
        msg = "use either --config or --preset, not both"
        raise InvalidArgumentError(msg)
    data: dict[str, Any] = {}
    if path is not None:
        data = rtoml.load(path)
    elif preset is not None:
        data = rtoml.loads(preset_text(preset))
    apply_overrides(data, overrides)
    for key, value in (values or {}).items():
        if value is not None:
            set_path(data, key.split("."), value)
    return RunConfig.model_validate(data)


def dump_config(config: RunConfig) -> str:
    """Serialise a configuration to TOML."""
    return rtoml.dumps(
        config.model_dump(mode="json", exclude_none=True), pretty=True
    )


def write_frame(frame: pd.DataFrame, path: Path, float_format: str) -> Path:
    """Write a table as CSV with a fixed float format and line ending."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path, index=False, float_format=float_format, lineterminator="\n"
    )
    return path


def get_toml_path() -> Path:
    """Return the full path of the pyproject.toml.

    This only works during development mode, since the pyproject.toml will not
    exist when the application is installed as a package.
    """
    package = Path(str(resources.files("modal_assembly")))
    return package / ".." / "pyproject.toml"


def get_app_version() -> str:
    """Return the version from the pyproject.toml file or package metadata.

    The local file is checked first, so the application can be tested
    without being installed.
    """
    toml_path = get_toml_path()

    if toml_path.exists():
        # we are locally developing the package
        try:
            config = rtoml.load(toml_path)
            version: str = config["tool"]["poetry"]["version"]
        except (KeyError, OSError) as exc:
            print(f"Problem getting the Version : {exc}")
            sys.exit(ExitErrors.OS_ERROR)
        except rtoml.TomlParsingError as exc:
            print(f"Invalid 'pyproject.toml' file : {exc}")
            sys.exit(ExitErrors.VALIDATION_ERROR)
        else:
            return version
    else:
        # if we are here then the package must be installed not local dev
        try:
            return metadata.version("modal-assembly")
        except metadata.PackageNotFoundError as exc:
            print(f"Problem getting the Version : {exc}")
            sys.exit(ExitErrors.OS_ERROR)
