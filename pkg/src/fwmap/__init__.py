"""MAP inference by Lagrangean decomposition.

The dual is maximised with a proximal bundle method whose proximal steps are
solved by multi-plane block-coordinate Frank-Wolfe.  Terms only need a
min-oracle; oracles for tree MRFs, tomography projection rows and graph
matching are included.
"""

from .exceptions import (
    ArityError,
    DuplicateIndexInTerm,
    EmptyCache,
    FWMAPError,
    InfeasibleMatching,
    InfeasibleRow,
    OracleFailure,
    ParseError,
    VariableUncovered,
    ZeroGradient,
)
from .model import (
    Decomposition,
    ExplicitOracle,
    MinOracle,
    PrimalIterate,
    Term,
    build_decomposition,
    eval_dual,
    project_to_lambda_space,
)
from .proximal import FWMAP, GapReport, compute_gap, default_prox_weight, solve
from .subgradient import SubgradientAscent

__version__ = "0.1.0"

__all__ = [
    "FWMAP",
    "SubgradientAscent",
    "Decomposition",
    "ExplicitOracle",
    "MinOracle",
    "PrimalIterate",
    "Term",
    "GapReport",
    "build_decomposition",
    "compute_gap",
    "default_prox_weight",
    "eval_dual",
    "project_to_lambda_space",
    "solve",
    "ArityError",
    "DuplicateIndexInTerm",
    "EmptyCache",
    "FWMAPError",
    "InfeasibleMatching",
    "InfeasibleRow",
    "OracleFailure",
    "ParseError",
    "VariableUncovered",
    "ZeroGradient",
]
