"""Some constants needed for the rest of the App."""

from enum import Enum, IntEnum


class ExitErrors(IntEnum):
    """Exit errors.

    Error codes for the application. Zero is success and is left to Typer.
    """

    VALIDATION_ERROR = 2
    COMPUTATION_ERROR = 3
    OS_ERROR = 4


class MeshKind(str, Enum):
    """The two supported discretisations of a nominal face."""

    PROFILE1D = "profile1d"
    GRID2D = "grid2d"


class BasisKind(str, Enum):
    """The structural model a modal basis was derived from."""

    BEAM1D = "beam1d"
    PLATE2D = "plate2d"


class Case(str, Enum):
    """Planar (2D) or spatial (3D) assembly analysis."""

    TWO_D = "2d"
    THREE_D = "3d"


class Pairing(str, Enum):
    """How two virtual batches are combined into assemblies."""

    INDEX = "index"
    ALL_PAIRS = "all-pairs"


# rigid-body modes of the out-of-plane models: (T_y, R_z) and (T_y, R_x, R_z)
RIGID_MODES: dict[BasisKind, int] = {BasisKind.BEAM1D: 2, BasisKind.PLATE2D: 3}

# SDT components active in each case, in the order used by every vector
ACTIVE_COMPONENTS: dict[Case, tuple[str, ...]] = {
    Case.TWO_D: ("ty", "rz"),
    Case.THREE_D: ("ty", "rx", "rz"),
}

# numerical tolerances
RIGID_EIGEN_RATIO = 1e-8  # rigid when omega^2 < ratio * max(omega^2)
EIGEN_TIE_RATIO = 1e-9  # relative gap under which eigenvalues are tied
SIGN_TIE_RATIO = 1e-9  # entries this close to the peak count as the peak
SHAPE_DECIMALS = 9  # tied modes compare their shapes rounded to this
RANK_TOLERANCE = 1e-12  # relative diagonal of R below which Q is singular
COPLANAR_TOLERANCE = 1e-12  # mm, plane-fit residual of a flat surface
BARYCENTRIC_TOLERANCE = 1e-12
SAME_POINT_TOLERANCE = 1e-12  # mm

# random streams: virtual batches are drawn in fixed blocks
DRAW_BLOCK_SIZE = 256

BASIS_FORMAT_VERSION = 1
BASIS_MAGIC = "modal-assembly basis"
