"""Modal signatures: projection of deviation fields onto a basis.

Mode numbers in this module are 1-based, as they appear in reports and
signature files; array positions are 0-based as usual.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np
import pandas as pd
from scipy import linalg

from modal_assembly.constants import RANK_TOLERANCE
from modal_assembly.errors import (
    DegenerateBasisError,
    FormatError,
    InvalidArgumentError,
)
from modal_assembly.mesh import SurfaceField

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterable
    from pathlib import Path

    from numpy.typing import NDArray

    from modal_assembly.modal import ModalBasis


@dataclass(frozen=True, eq=False)
class ModalSignature:
    """Coefficients ``lam`` (mm) of a field in the first ``m`` modes."""

    lam: NDArray[np.float64]
    basis: ModalBasis

    def __post_init__(self) -> None:
        """Validate and freeze the coefficients."""
        lam = np.array(self.lam, dtype=float).reshape(-1)
        if lam.size > self.basis.n_modes:
            msg = (
                f"signature has {lam.size} coefficients, the basis only "
                f"{self.basis.n_modes} modes"
            )
            raise InvalidArgumentError(msg)
        if not np.all(np.isfinite(lam)):
            msg = "signature coefficients must be finite"
            raise InvalidArgumentError(msg)
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def m(self) -> int:
        """Number of coefficients."""
        return int(self.lam.size)

    @property
    def rigid(self) -> NDArray[np.float64]:
        """The rigid-body coefficients, zero padded to ``n_rigid``."""
        n_rigid = self.basis.n_rigid
        padded = np.zeros(n_rigid)
        count = min(n_rigid, self.m)
        padded[:count] = self.lam[:count]
        return padded


@dataclass(frozen=True)
class Residue:
    """What the truncated signature leaves unexplained.

    ``norm`` is the Euclidean norm of the residual field, ``peak`` its
    largest absolute value; both in mm.
    """

    field: SurfaceField
    norm: float
    peak: float


def zero_signature(basis: ModalBasis, m: int) -> ModalSignature:
    """Return the signature of a perfect face."""
    return ModalSignature(np.zeros(m), basis)


def _check_mode_count(basis: ModalBasis, m: int) -> None:
    if not 1 <= m <= basis.n_modes:
        msg = f"mode count must lie in 1..{basis.n_modes}, got {m}"
        raise InvalidArgumentError(msg)


def _factorize(
    basis: ModalBasis, m: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    q, r = linalg.qr(basis.matrix(m), mode="economic")
    diagonal = np.abs(np.diag(r))
    if diagonal.min() <= RANK_TOLERANCE * diagonal.max():
        msg = f"the first {m} modes are not linearly independent"
        raise DegenerateBasisError(msg)
    return q, r


def project(field: SurfaceField, basis: ModalBasis, m: int) -> ModalSignature:
    """Least-squares coefficients of a field in the first ``m`` modes.

    The solve uses a QR factorisation of the truncated basis and is
    recomputed for every ``m``: the modes are not orthogonal, so truncating
    a longer signature gives a different (worse) fit.

    Raises:
        InvalidArgumentError: on a mesh mismatch or ``m`` out of range.
        DegenerateBasisError: if the truncated basis is rank deficient.
    """
    if field.mesh != basis.mesh:
        msg = "field and basis are defined over different meshes"
        raise InvalidArgumentError(msg)
    _check_mode_count(basis, m)
    q, r = _factorize(basis, m)
    lam = linalg.solve_triangular(r, q.T @ field.v)
    return ModalSignature(lam, basis)


def reconstruct(sig: ModalSignature) -> SurfaceField:
    """Rebuild the field ``Q lam`` of a signature."""
    v = sig.basis.matrix(sig.m) @ sig.lam
    return SurfaceField(sig.basis.mesh, v)


def residue(field: SurfaceField, sig: ModalSignature) -> Residue:
    """Return the part of ``field`` the signature does not explain."""
    remainder = field - reconstruct(sig)
    return Residue(
        field=remainder,
        norm=float(np.linalg.norm(remainder.v)),
        peak=float(np.abs(remainder.v).max()),
    )


def filter_modes(sig: ModalSignature, keep: Iterable[int]) -> ModalSignature:
    """Zero every coefficient whose mode number is not in ``keep``.

    Raises:
        InvalidArgumentError: if a mode number lies outside ``1..m``.
    """
    numbers = sorted(set(keep))
    if numbers and (numbers[0] < 1 or numbers[-1] > sig.m):
        msg = f"mode numbers must lie in 1..{sig.m}, got {numbers}"
        raise InvalidArgumentError(msg)
    lam = np.zeros(sig.m)
    positions = np.asarray(numbers, dtype=int) - 1
    lam[positions] = sig.lam[positions]
    return ModalSignature(lam, sig.basis)


def rigid_part(sig: ModalSignature) -> ModalSignature:
    """Keep only the position and orientation coefficients."""
    return filter_modes(sig, range(1, min(sig.basis.n_rigid, sig.m) + 1))


def form_part(sig: ModalSignature) -> ModalSignature:
    """Keep only the form coefficients."""
    return filter_modes(sig, range(sig.basis.n_rigid + 1, sig.m + 1))


def truncate(sig: ModalSignature, m: int) -> ModalSignature:
    """Drop (or zero pad) coefficients so the signature has ``m`` of them.

    Truncation is a low-pass filter of an existing signature; to fit a field
    in fewer modes use ``project`` instead.
    """
    _check_mode_count(sig.basis, m)
    lam = np.zeros(m)
    count = min(m, sig.m)
    lam[:count] = sig.lam[:count]
    return ModalSignature(lam, sig.basis)


def spectrum(
    sig: ModalSignature, threshold: float = 0.0
) -> list[tuple[int, float]]:
    """List ``(mode number, lambda)`` by decreasing magnitude.

    Coefficients with ``|lambda| <= threshold`` are left out; equal
    magnitudes keep ascending mode order.
    """
    magnitudes = np.abs(sig.lam)
    order = np.argsort(-magnitudes, kind="stable")
    return [
        (int(k) + 1, float(sig.lam[k]))
        for k in order
        if magnitudes[k] > threshold
    ]


def spectrum_frame(sig: ModalSignature) -> pd.DataFrame:
    """Return the full spectrum, in mode order, as a table."""
    modes = np.arange(1, sig.m + 1)
    return pd.DataFrame(
        {
            "mode": modes,
            "lambda_mm": sig.lam,
            "rigid": modes <= sig.basis.n_rigid,
        }
    )


def write_signature(
    path: Path, sig: ModalSignature, float_format: str = "%.17g"
) -> None:
    """Write a signature file, one ``index lambda_mm`` record per line."""
    with path.open("w", encoding="utf-8") as handle:
        handle.write("# index lambda_mm\n")
        for number, value in enumerate(sig.lam, start=1):
            handle.write(f"{number} {float_format % value}\n")


def read_signature(
    path: Path, basis: ModalBasis, m: Optional[int] = None
) -> ModalSignature:
    """Read a signature file written by ``write_signature``.

    Missing trailing modes read as zero when ``m`` asks for more
    coefficients than the file holds.

    Raises:
        FormatError: on bad records or non-consecutive mode numbers.
    """
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        msg = f"cannot parse signature file {path}: {exc}"
        raise FormatError(msg) from exc
    if data.size == 0:
        msg = f"{path} holds no coefficients"
        raise FormatError(msg)
    if data.shape[1] != 2:  # noqa: PLR2004
        msg = f"{path}: expected 'index lambda_mm' records"
        raise FormatError(msg)
    numbers = data[:, 0]
    if not np.array_equal(numbers, np.arange(1, len(numbers) + 1)):
        msg = f"{path}: mode numbers must run 1, 2, 3, ... without gaps"
        raise FormatError(msg)
    if len(numbers) > basis.n_modes:
        msg = (
            f"{path} holds {len(numbers)} coefficients, the basis only "
            f"{basis.n_modes} modes"
        )
        raise FormatError(msg)

    sig = ModalSignature(data[:, 1], basis)
    return sig if m is None else truncate(sig, m)

