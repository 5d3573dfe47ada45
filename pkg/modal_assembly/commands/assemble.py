"""Mate two faces and check the functional requirement."""

import logging
from pathlib import Path
from typing import Annotated

import typer
from rich import print  # pylint: disable=W0622
from rich.console import Console
from rich.table import Table

from modal_assembly.commands.common import (
    ConfigOption,
    OutOption,
    PresetOption,
    SetOption,
    build_pipeline,
    check_case,
    float_format,
    handle_errors,
    output_dir,
    resolve_config,
)
from modal_assembly.contact import assemble, assembly_frame, gap_frame
from modal_assembly.helpers import write_frame
from modal_assembly.kinematics import (
    SDT,
    Containment,
    Domain,
    domain_contains,
    transport,
)
from modal_assembly.modal import load_basis
from modal_assembly.signature import read_signature

ASSEMBLY_FILE = "assembly.csv"
GAP_FILE = "gap.csv"

app = typer.Typer(no_args_is_help=True)
logger = logging.getLogger(__name__)

SignatureArgument = Annotated[
    Path,
    typer.Argument(
        help="Signature file written by decompose.",
        exists=True,
        dir_okay=False,
        show_default=False,
    ),
]


def _check(domain: Domain, sdt: SDT) -> tuple[SDT, Containment]:
    at_domain = transport(sdt, domain.point)
    return at_domain, domain_contains(domain, at_domain)


def _verdict(containment: Containment) -> str:
    if containment.inside:
        return "[green]conform[/green]"
    return "[red]non-conform[/red]"


@app.callback(invoke_without_command=True)
def assemble_parts(  # noqa: PLR0913
    sig1: SignatureArgument,
    sig2: SignatureArgument,
    basis_file: Annotated[
        Path,
        typer.Option(
            "--basis",
            "-b",
            help="Basis file the signatures were computed on.",
            exists=True,
            dir_okay=False,
            show_default=False,
        ),
    ],
    config: ConfigOption = None,
    preset: PresetOption = None,
    overrides: SetOption = None,
    out: OutOption = None,
) -> None:
    """Assemble part 1 (SIG1, upper) on part 2 (SIG2, lower).

    The torsor of face B is checked against the location tolerance both
    with the form errors and with the associated planes only.
    """
    with handle_errors():
        run = resolve_config(config, preset, overrides, out=out)
        basis = load_basis(basis_file)
        check_case(run, basis)
        pipeline = build_pipeline(run, basis)
        result = assemble(
            read_signature(sig1, basis),
            read_signature(sig2, basis),
            pipeline.setup,
            pipeline.alpha,
        )

        domain = pipeline.domain
        with_form, with_form_check = _check(domain, result.sdt_with_form)
        rigid_only, rigid_only_check = _check(domain, result.sdt_rigid_only)

        frame = assembly_frame(result)
        frame["conform_with_form"] = with_form_check.inside
        frame["margin_with_form"] = with_form_check.margin
        frame["conform_rigid_only"] = rigid_only_check.inside
        frame["margin_rigid_only"] = rigid_only_check.margin
        folder = output_dir(run)
        fmt = float_format()
        write_frame(frame, folder / ASSEMBLY_FILE, fmt)
        write_frame(gap_frame(result), folder / GAP_FILE, fmt)
        logger.info("wrote assembly results to %s", folder)

    table = Table(
        title=f"Torsor of face B at {domain.point}",
        header_style="bold blue",
        title_style="bold cyan",
        title_justify="left",
    )
    table.add_column("Component")
    table.add_column("With form", justify="right")
    table.add_column("Rigid only", justify="right")
    for name in domain.components:
        table.add_row(
            name,
            f"{with_form.as_dict()[name]:.6g}",
            f"{rigid_only.as_dict()[name]:.6g}",
        )
    table.add_row(
        "margin",
        f"{with_form_check.margin:.6g}",
        f"{rigid_only_check.margin:.6g}",
    )
    Console().print(table)

    contacts = ", ".join(str(index) for index in result.contacts)
    flat = " (flat contact)" if result.facet.flat else ""
    print(f"Contact nodes: {contacts}{flat}")
    print(f"With form:  {_verdict(with_form_check)}")
    print(f"Rigid only: {_verdict(rigid_only_check)}")
