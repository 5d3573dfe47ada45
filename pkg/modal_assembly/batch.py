"""Pilot productions, virtual batches and non-conformity rates.

Random streams
--------------
Every random draw comes from its own ``PCG64`` stream seeded with
``SeedSequence(seed, spawn_key=key)``. Keys start with the repetition number
and the stage, then name the part (and, for virtual batches, the block of
``DRAW_BLOCK_SIZE`` signatures)::

    pilot batch of part p, repetition r:   (r, 0, p)
    virtual block b of part p:             (r, 1, p, b)

Batches are drawn in the calling process before any parallel work starts,
so results never depend on the worker count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import TYPE_CHECKING, Any, Optional, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from modal_assembly.constants import DRAW_BLOCK_SIZE, Pairing
from modal_assembly.contact import AssemblyResult, MatingSetup, assemble
from modal_assembly.errors import InvalidArgumentError, NoStableContactError
from modal_assembly.kinematics import (
    AlphaMatrix,
    Domain,
    domain_contains,
    rigid_to_sdt,
    transport,
)
from modal_assembly.signature import ModalSignature

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

    from modal_assembly.modal import ModalBasis

logger = logging.getLogger(__name__)

STAGE_PILOT = 0
STAGE_VIRTUAL = 1
PSD_TOLERANCE = 1e-12  # mm^2
SIGMA_LEVEL = 6.0  # the ellipse spans +/- 3 sigma


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the independent random stream named by ``key``."""
    sequence = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(sequence))


@dataclass(frozen=True, eq=False)
class SignatureBatch:
    """A batch of signatures, one row of ``lam`` per part."""

    lam: NDArray[np.float64]
    basis: ModalBasis
    clamped: int = 0

    def __post_init__(self) -> None:
        """Freeze the coefficients."""
        lam = np.array(self.lam, dtype=float, ndmin=2)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    def __len__(self) -> int:
        """Number of parts."""
        return int(self.lam.shape[0])

    def __getitem__(self, index: int) -> ModalSignature:
        """Signature of one part."""
        return ModalSignature(self.lam[index], self.basis)

    @property
    def m(self) -> int:
        """Number of coefficients per signature."""
        return int(self.lam.shape[1])


@dataclass(frozen=True, eq=False)
class BatchStats:
    """Mean signature and covariance (mm, mm^2) of a production."""

    mu: NDArray[np.float64]
    cov: NDArray[np.float64]
    n: int

    def __post_init__(self) -> None:
        """Check shapes, symmetry and positive semidefiniteness.

        Raises:
            InvalidArgumentError: when an invariant fails.
        """
        mu = np.array(self.mu, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float, ndmin=2)
        if cov.shape != (mu.size, mu.size):
            msg = f"covariance must be {mu.size}x{mu.size}, got {cov.shape}"
            raise InvalidArgumentError(msg)
        scale = max(float(np.abs(cov).max()), 1.0)
        if not np.allclose(cov, cov.T, rtol=0.0, atol=PSD_TOLERANCE * scale):
            msg = "covariance matrix must be symmetric"
            raise InvalidArgumentError(msg)
        if np.linalg.eigvalsh(cov).min() < -PSD_TOLERANCE * scale:
            msg = "covariance matrix must be positive semidefinite"
            raise InvalidArgumentError(msg)
        mu.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "cov", cov)

    @property
    def m(self) -> int:
        """Number of modal coefficients."""
        return int(self.mu.size)


def batch_stats(batch: SignatureBatch) -> BatchStats:
    """Sample mean and covariance (divisor n - 1) of a batch.

    Raises:
        InvalidArgumentError: with fewer than two signatures.
    """
    if len(batch) < 2:  # noqa: PLR2004
        msg = "a covariance needs at least two signatures"
        raise InvalidArgumentError(msg)
    cov = np.cov(batch.lam, rowvar=False, ddof=1)
    return BatchStats(
        mu=batch.lam.mean(axis=0),
        cov=np.atleast_2d(cov),
        n=len(batch),
    )


def mother_shape(mu0: float, m: int, basis: ModalBasis) -> ModalSignature:
    """Mean shape of a production: ``lambda_i = mu0 / i``.

    Raises:
        InvalidArgumentError: on a negative ``mu0`` or ``m`` below 1.
    """
    if mu0 < 0:
        msg = f"mu0 must be non-negative, got {mu0}"
        raise InvalidArgumentError(msg)
    if m < 1:
        msg = f"mode count must be at least 1, got {m}"
        raise InvalidArgumentError(msg)
    return ModalSignature(mu0 / np.arange(1, m + 1), basis)


def draw_pilot_batch(
    mother: ModalSignature,
    sigma0: float,
    n: int,
    seed: int,
    key: Sequence[int] = (0, STAGE_PILOT, 1),
) -> tuple[SignatureBatch, BatchStats]:
    """Draw ``n`` parts around the mother shape.

    Coefficient ``i`` is drawn from ``Normal(mother_i, (sigma0 / i)^2)``,
    independently for every part and mode.

    Raises:
        InvalidArgumentError: on ``n < 2`` or a negative ``sigma0``.
    """
    if n < 2:  # noqa: PLR2004
        msg = f"a pilot batch needs at least 2 parts, got {n}"
        raise InvalidArgumentError(msg)
    if sigma0 < 0:
        msg = f"sigma0 must be non-negative, got {sigma0}"
        raise InvalidArgumentError(msg)
    sigmas = sigma0 / np.arange(1, mother.m + 1)
    noise = substream(seed, *key).standard_normal((n, mother.m))
    batch = SignatureBatch(mother.lam + noise * sigmas, mother.basis)
    return batch, batch_stats(batch)


def _factor(stats: BatchStats) -> tuple[NDArray[np.float64], int]:
    """Return ``P sqrt(C_diag)`` and the number of clamped eigenvalues."""
    variances, directions = np.linalg.eigh(stats.cov)
    negative = variances < 0.0
    clamped = int(np.count_nonzero(negative))
    if clamped:
        scale = max(float(variances.max()), np.finfo(float).tiny)
        level = (
            logging.WARNING
            if variances.min() < -PSD_TOLERANCE * scale
            else logging.DEBUG
        )
        logger.log(
            level, "clamped %d negative covariance eigenvalue(s)", clamped
        )
    return directions * np.sqrt(np.where(negative, 0.0, variances)), clamped


def generate_virtual_batch(
    stats: BatchStats,
    N: int,
    seed: int,
    basis: ModalBasis,
    key: Sequence[int] = (0, STAGE_VIRTUAL, 1),
) -> SignatureBatch:
    """Draw ``N`` virtual parts with the statistics of a pilot batch.

    With ``C = P C_diag P^T``, each part is ``P sqrt(C_diag) r + mu`` for a
    standard normal vector ``r``. Draws come in blocks of
    ``DRAW_BLOCK_SIZE``; block ``b`` uses the stream ``(*key, b)``.

    Raises:
        InvalidArgumentError: on ``N < 1``.
    """
    if N < 1:
        msg = f"a virtual batch needs at least 1 part, got {N}"
        raise InvalidArgumentError(msg)
    factor, clamped = _factor(stats)
    blocks = []
    for block in range(math.ceil(N / DRAW_BLOCK_SIZE)):
        rng = substream(seed, *key, block)
        blocks.append(rng.standard_normal((DRAW_BLOCK_SIZE, stats.m)))
    standard = np.concatenate(blocks)[:N]
    return SignatureBatch(
        standard @ factor.T + stats.mu, basis, clamped=clamped
    )


@dataclass(frozen=True)
class Population:
    """Mean and covariance of the torsor components of an assembly set."""

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    @classmethod
    def of(cls, components: NDArray[np.float64], size: int) -> Population:
        """Summarise rows of components; ``size`` is the component count."""
        if len(components) == 0:
            return cls(np.zeros(size), np.zeros((size, size)))
        mean = components.mean(axis=0)
        if len(components) < 2:  # noqa: PLR2004
            return cls(mean, np.zeros((size, size)))
        cov = np.atleast_2d(np.cov(components, rowvar=False, ddof=1))
        return cls(mean, cov)


@dataclass(frozen=True, eq=False)
class NcrReport:
    """Non-conformity of a simulated production.

    ``assemblies`` holds one row per assembly: the part indices, the
    with-form and rigid-only components at the domain point, both margins
    and verdicts, and whether a stable contact existed.
    """

    n_assemblies: int
    ncr_with_form: float
    ncr_rigid_only: float
    unstable: int
    with_form: Population
    rigid_only: Population
    components: tuple[str, ...]
    assemblies: pd.DataFrame
    seed: Optional[int] = None
    clamped: int = 0


@dataclass(frozen=True)
class Production:
    """Statistical description of the parts a supplier makes."""

    mu0: float
    sigma0: float


def _pairs(n1: int, n2: int, pairing: Pairing) -> list[tuple[int, int]]:
    if Pairing(pairing) is Pairing.INDEX:
        if n1 != n2:
            msg = f"index pairing needs batches of equal size, got {n1}, {n2}"
            raise InvalidArgumentError(msg)
        return [(k, k) for k in range(n1)]
    return list(product(range(n1), range(n2)))


def _assess(
    pairs: list[tuple[int, int]],
    lam1: NDArray[np.float64],
    lam2: NDArray[np.float64],
    basis: ModalBasis,
    setup: MatingSetup,
    alpha: AlphaMatrix,
    domain: Domain,
) -> list[dict[str, Any]]:
    """Assemble and check a chunk of part pairs."""
    size = len(domain.components)
    rows = []
    for part1, part2 in pairs:
        sig1 = ModalSignature(lam1[part1], basis)
        sig2 = ModalSignature(lam2[part2], basis)
        row: dict[str, Any] = {"part1": part1, "part2": part2}
        result: Optional[AssemblyResult]
        try:
            result = assemble(sig1, sig2, setup, alpha)
        except NoStableContactError:
            result = None
        row["stable"] = result is not None

        if result is None:
            with_form = np.full(size, np.nan)
            row["margin_with_form"] = np.nan
            row["conform_with_form"] = False
            rigid_sdt = rigid_to_sdt(sig2.rigid - sig1.rigid, alpha)
        else:
            at_domain = transport(result.sdt_with_form, domain.point)
            verdict = domain_contains(domain, at_domain)
            with_form = at_domain.components(domain.case)
            row["margin_with_form"] = verdict.margin
            row["conform_with_form"] = verdict.inside
            rigid_sdt = result.sdt_rigid_only

        at_domain = transport(rigid_sdt, domain.point)
        verdict = domain_contains(domain, at_domain)
        rigid_only = at_domain.components(domain.case)
        row["margin_rigid_only"] = verdict.margin
        row["conform_rigid_only"] = verdict.inside
        for name, w, r in zip(domain.components, with_form, rigid_only):
            row[f"with_form_{name}"] = float(w)
            row[f"rigid_only_{name}"] = float(r)
        rows.append(row)
    return rows


def _chunks(
    pairs: list[tuple[int, int]], workers: int
) -> list[list[tuple[int, int]]]:
    count = max(1, min(len(pairs), 4 * workers))
    size = math.ceil(len(pairs) / count)
    return [pairs[k : k + size] for k in range(0, len(pairs), size)]


def run_ncr(  # noqa: PLR0913
    batch1: SignatureBatch,
    batch2: SignatureBatch,
    setup: MatingSetup,
    alpha: AlphaMatrix,
    domain: Domain,
    pairing: Union[Pairing, str] = Pairing.INDEX,
    seed: Optional[int] = None,
    workers: int = 1,
) -> NcrReport:
    """Assemble every pair and count those outside the domain.

    Both the with-form and the rigid-only torsors are moved to the domain
    point before the test. Assemblies without a stable contact count as
    non-conform with form and are reported in ``unstable``. Chunks run on
    ``workers`` processes and are reduced in pair order.

    Raises:
        InvalidArgumentError: on unequal batches under index pairing.
    """
    if not batch1.basis.same_as(batch2.basis):
        msg = "both batches must share their modal basis"
        raise InvalidArgumentError(msg)
    pairs = _pairs(len(batch1), len(batch2), Pairing(pairing))
    tasks = (
        delayed(_assess)(
            chunk,
            batch1.lam,
            batch2.lam,
            batch1.basis,
            setup,
            alpha,
            domain,
        )
        for chunk in _chunks(pairs, workers)
    )
    chunks = Parallel(n_jobs=workers)(tasks)
    frame = pd.DataFrame([row for chunk in chunks for row in chunk])
    frame.insert(0, "assembly", np.arange(len(frame)))

    unstable = int((~frame["stable"]).sum())
    if unstable:
        logger.warning("%d assembly(ies) without a stable contact", unstable)

    names = domain.components
    stable = frame[frame["stable"]]
    size = len(names)
    return NcrReport(
        n_assemblies=len(frame),
        ncr_with_form=float((~frame["conform_with_form"]).mean()),
        ncr_rigid_only=float((~frame["conform_rigid_only"]).mean()),
        unstable=unstable,
        with_form=Population.of(
            stable[[f"with_form_{n}" for n in names]].to_numpy(), size
        ),
        rigid_only=Population.of(
            frame[[f"rigid_only_{n}" for n in names]].to_numpy(), size
        ),
        components=names,
        assemblies=frame,
        seed=seed,
        clamped=batch1.clamped + batch2.clamped,
    )


def simulate_production(  # noqa: PLR0913
    basis: ModalBasis,
    alpha: AlphaMatrix,
    domain: Domain,
    setup: MatingSetup,
    parts: tuple[Production, Production],
    n: int,
    N: int,
    seed: int,
    pairing: Union[Pairing, str] = Pairing.INDEX,
    repetition: int = 0,
    workers: int = 1,
) -> NcrReport:
    """Run the whole chain: pilot batches, virtual batches, NCR."""
    virtual = []
    for number, part in enumerate(parts, start=1):
        mother = mother_shape(part.mu0, setup.m, basis)
        _, stats = draw_pilot_batch(
            mother, part.sigma0, n, seed, key=(repetition, STAGE_PILOT, number)
        )
        virtual.append(
            generate_virtual_batch(
                stats,
                N,
                seed,
                basis,
                key=(repetition, STAGE_VIRTUAL, number),
            )
        )
    return run_ncr(
        virtual[0],
        virtual[1],
        setup,
        alpha,
        domain,
        pairing=pairing,
        seed=seed,
        workers=workers,
    )


def repeat_ncr(repeats: int, **production: Any) -> list[NcrReport]:
    """Run ``simulate_production`` for repetitions ``0 .. repeats - 1``.

    Raises:
        InvalidArgumentError: on ``repeats < 1``.
    """
    if repeats < 1:
        msg = f"repeat count must be at least 1, got {repeats}"
        raise InvalidArgumentError(msg)
    return [
        simulate_production(repetition=r, **production)
        for r in range(repeats)
    ]


@dataclass(frozen=True)
class Dispersion:
    """Spread of the NCR over repeated runs of one population."""

    mean: float
    std: float
    binomial: float
    runs: int


@dataclass(frozen=True)
class NcrDispersion:
    """Spread of both NCRs over repeated runs."""

    with_form: Dispersion
    rigid_only: Dispersion
    n_assemblies: int


def binomial_std(p: float, n: int) -> float:
    """Standard deviation of a rate estimated from ``n`` Bernoulli trials."""
    return math.sqrt(p * (1.0 - p) / n)


def _dispersion(rates: ArrayLike, n: int) -> Dispersion:
    values = np.asarray(rates, dtype=float)
    mean = float(values.mean())
    return Dispersion(
        mean=mean,
        std=float(values.std(ddof=1)),
        binomial=binomial_std(mean, n),
        runs=int(values.size),
    )


def ncr_dispersion(reports: Sequence[NcrReport]) -> NcrDispersion:
    """Sample standard deviation of the NCR across runs.

    The binomial reference ``sqrt(p (1 - p) / N)`` uses the mean rate.

    Raises:
        InvalidArgumentError: with fewer than two runs or runs of
            different sizes.
    """
    if len(reports) < 2:  # noqa: PLR2004
        msg = "a dispersion needs at least two runs"
        raise InvalidArgumentError(msg)
    sizes = {report.n_assemblies for report in reports}
    if len(sizes) != 1:
        msg = f"runs have different sizes {sorted(sizes)}"
        raise InvalidArgumentError(msg)
    n = sizes.pop()
    return NcrDispersion(
        with_form=_dispersion([r.ncr_with_form for r in reports], n),
        rigid_only=_dispersion([r.ncr_rigid_only for r in reports], n),
        n_assemblies=n,
    )


def report_frame(report: NcrReport) -> pd.DataFrame:
    """Per-assembly components and verdicts."""
    return report.assemblies


def ellipse_frame(report: NcrReport) -> pd.DataFrame:
    """Mean and covariance of both populations, for six-sigma ellipses.

    One row per population and component: the mean then one covariance
    column per component.
    """
    rows = []
    for label, population in (
        ("with_form", report.with_form),
        ("rigid_only", report.rigid_only),
    ):
        for k, name in enumerate(report.components):
            row: dict[str, Union[str, float]] = {
                "population": label,
                "component": name,
                "mean": float(population.mean[k]),
            }
            for j, other in enumerate(report.components):
                row[f"cov_{other}"] = float(population.cov[k, j])
            rows.append(row)
    return pd.DataFrame(rows)


def summary_text(
    report: NcrReport, dispersion: Optional[NcrDispersion] = None
) -> str:
    """Human-readable summary of a simulation."""
    lines = [
        f"assemblies        {report.n_assemblies}",
        f"seed              {report.seed}",
        f"NCR with form     {report.ncr_with_form:.4f}",
        f"NCR rigid only    {report.ncr_rigid_only:.4f}",
        f"unstable contacts {report.unstable}",
    ]
    for label, population in (
        ("with form", report.with_form),
        ("rigid only", report.rigid_only),
    ):
        spread = SIGMA_LEVEL / 2.0 * np.sqrt(np.diag(population.cov))
        for name, mean, half in zip(
            report.components, population.mean, spread
        ):
            lines.append(
                f"{label:<10} {name:<3} mean {mean: .6g} "
                f"+/- {half:.6g} (3 sigma)"
            )
    if dispersion is not None:
        for label, spread in (
            ("with form", dispersion.with_form),
            ("rigid only", dispersion.rigid_only),
        ):
            lines.append(
                f"dispersion {label:<10} mean {spread.mean:.4f} "
                f"std {spread.std:.4f} binomial {spread.binomial:.4f} "
                f"over {spread.runs} runs"
            )
    return "\n".join(lines) + "\n"
