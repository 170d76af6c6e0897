"""Numerical Toeplitz operator theory on truncated Fock and Bergman spaces."""

__version__ = "0.1.0"

from .bergman import BergmanParams  # noqa: E402
from .errors import (  # noqa: E402
    CoverageError,
    DomainError,
    NumericalError,
    ParameterError,
    SchemaError,
    ToeplitzKitError,
    TruncationWarning,
)
from .fock import FockParams  # noqa: E402
from .geometry import Lattice, build_lattice  # noqa: E402
from .operators import (  # noqa: E402
    OperatorMatrix,
    berezin,
    localization_scan,
    op_norm,
    rank_one,
    toeplitz_matrix,
)
from .representation import (  # noqa: E402
    ConvergenceReport,
    ToeplitzCombination,
    bergman_intrep,
    bergman_rank_sum,
    diagonal_toeplitzize,
    fock_intrep,
    polarized_toeplitzize,
    synthesize_compact,
    toeplitz_A_l,
)
from .symbols import SymbolFn, list_symbols, make_symbol  # noqa: E402

__all__ = [
    "BergmanParams",
    "ConvergenceReport",
    "CoverageError",
    "DomainError",
    "FockParams",
    "Lattice",
    "NumericalError",
    "OperatorMatrix",
    "ParameterError",
    "SchemaError",
    "SymbolFn",
    "ToeplitzCombination",
    "ToeplitzKitError",
    "TruncationWarning",
    "berezin",
    "bergman_intrep",
    "bergman_rank_sum",
    "build_lattice",
    "diagonal_toeplitzize",
    "fock_intrep",
    "list_symbols",
    "localization_scan",
    "make_symbol",
    "op_norm",
    "polarized_toeplitzize",
    "rank_one",
    "synthesize_compact",
    "toeplitz_A_l",
]
