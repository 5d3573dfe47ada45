"""Simulate pilot productions and compute the non-conformity rate."""

import logging
from pathlib import Path
from typing import Annotated, Optional

import pandas as pd
import typer
from rich import print  # pylint: disable=W0622

from modal_assembly.batch import (
    Production,
    ellipse_frame,
    ncr_dispersion,
    repeat_ncr,
    report_frame,
    summary_text,
)
from modal_assembly.commands.common import (
    ConfigOption,
    OutOption,
    PresetOption,
    SeedOption,
    SetOption,
    WorkersOption,
    build_pipeline,
    check_case,
    float_format,
    handle_errors,
    output_dir,
    resolve_config,
    worker_count,
)
from modal_assembly.helpers import show_table, write_frame
from modal_assembly.kinematics import domain_frame, vertices_frame
from modal_assembly.modal import build_basis, load_basis

ASSEMBLIES_FILE = "ncr_assemblies.csv"
ELLIPSE_FILE = "ncr_ellipse.csv"
SUMMARY_FILE = "ncr_summary.txt"
DISPERSION_FILE = "ncr_dispersion.csv"
DOMAIN_FILE = "domain.csv"
VERTICES_FILE = "domain_vertices.csv"

app = typer.Typer()
logger = logging.getLogger(__name__)


@app.callback(invoke_without_command=True)
def simulate(  # noqa: PLR0913
    config: ConfigOption = None,
    preset: PresetOption = None,
    overrides: SetOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    workers: WorkersOption = None,
    repeat: Annotated[
        Optional[int],
        typer.Option(
            "--repeat",
            "-r",
            help="Seeded repetitions, for the NCR dispersion.",
            min=1,
            show_default=False,
        ),
    ] = None,
    basis_file: Annotated[
        Optional[Path],
        typer.Option(
            "--basis",
            "-b",
            help="Use a saved basis instead of building one.",
            exists=True,
            dir_okay=False,
            show_default=False,
        ),
    ] = None,
) -> None:
    """Draw pilot and virtual batches, assemble them and count failures."""
    with handle_errors():
        extra = [f"batch.repeat={repeat}"] if repeat is not None else []
        run = resolve_config(
            config,
            preset,
            [*(overrides or []), *extra],
            seed=seed,
            out=out,
            workers=workers,
        )
        if basis_file is None:
            basis = build_basis(
                run.geometry.build_mesh(), run.geometry.n_modes
            )
        else:
            basis = load_basis(basis_file)
            check_case(run, basis)
        pipeline = build_pipeline(run, basis)

        batch = run.batch
        reports = repeat_ncr(
            batch.repeat,
            basis=basis,
            alpha=pipeline.alpha,
            domain=pipeline.domain,
            setup=pipeline.setup,
            parts=(
                Production(batch.part1.mu0, batch.part1.sigma0),
                Production(batch.part2.mu0, batch.part2.sigma0),
            ),
            n=batch.n,
            N=batch.N,
            seed=batch.seed,
            pairing=batch.pairing,
            workers=worker_count(run),
        )
        report = reports[0]
        dispersion = ncr_dispersion(reports) if len(reports) > 1 else None

        folder = output_dir(run)
        fmt = float_format()
        write_frame(report_frame(report), folder / ASSEMBLIES_FILE, fmt)
        write_frame(ellipse_frame(report), folder / ELLIPSE_FILE, fmt)
        write_frame(domain_frame(pipeline.domain), folder / DOMAIN_FILE, fmt)
        write_frame(
            vertices_frame(pipeline.domain), folder / VERTICES_FILE, fmt
        )
        if dispersion is not None:
            rates = pd.DataFrame(
                {
                    "repetition": range(len(reports)),
                    "ncr_with_form": [r.ncr_with_form for r in reports],
                    "ncr_rigid_only": [r.ncr_rigid_only for r in reports],
                }
            )
            write_frame(rates, folder / DISPERSION_FILE, fmt)
        text = summary_text(report, dispersion)
        (folder / SUMMARY_FILE).write_text(text, encoding="utf-8")
        logger.info("wrote simulation results to %s", folder)

    results = {
        "assemblies": report.n_assemblies,
        "ncr_with_form": f"{report.ncr_with_form:.4f}",
        "ncr_rigid_only": f"{report.ncr_rigid_only:.4f}",
        "unstable_contacts": report.unstable,
    }
    if dispersion is not None:
        results["ncr_with_form_std"] = (
            f"{dispersion.with_form.std:.4f} "
            f"(binomial {dispersion.with_form.binomial:.4f})"
        )
        results["ncr_rigid_only_std"] = (
            f"{dispersion.rigid_only.std:.4f} "
            f"(binomial {dispersion.rigid_only.binomial:.4f})"
        )
    show_table(
        results,
        title=f"Simulation, seed {batch.seed}",
        columns=("Result", "Value"),
    )
    if report.clamped:
        print(
            f"[yellow]{report.clamped} negative covariance eigenvalue(s) "
            "were clamped to zero[/yellow]"
        )
    print(f"Results written to [green]{folder}[/green]")
