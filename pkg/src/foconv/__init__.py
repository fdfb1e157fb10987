"""First-order convergence toolkit for finite graphs.

Exact Stone pairings, root selection for algebraic vertices, boolean-lattice
reconstruction of filter masses and the random bipartite counterexample.
"""

from .evaluate import (
    DefinableSet, EvaluationError, StoneValue, definable_set, pushforward, satisfies, solution_count,
    stone_pairing,
)
from .formula import FormulaScopeError, FormulaSyntaxError, arity, deroot, free_vars, parse, to_text
from .graph import Graph, GraphFormatError, GraphSequence, RootedGraph
from .lattice import (
    FTable, LevelMultisets, RootRecoveryError, SubsetMeasure, forward_F, forward_table,
    newton_power_sums_to_roots, reconstruct,
)
from .rooting import choose_I, extend_prefix, find_exponents, order_roots, root_multi, root_single

__version__ = "0.1.0"

__all__ = [
    "DefinableSet", "EvaluationError", "StoneValue", "definable_set", "pushforward", "satisfies",
    "solution_count", "stone_pairing", "FormulaScopeError", "FormulaSyntaxError", "arity", "deroot",
    "free_vars", "parse", "to_text", "Graph", "GraphFormatError", "GraphSequence", "RootedGraph", "FTable",
    "LevelMultisets", "RootRecoveryError", "SubsetMeasure", "forward_F", "forward_table",
    "newton_power_sums_to_roots", "reconstruct", "choose_I", "extend_prefix", "find_exponents",
    "order_roots", "root_multi", "root_single",
]
