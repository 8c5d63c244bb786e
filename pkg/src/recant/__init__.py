"""Identifiability of path-specific effects in acyclic directed mixed graphs.

The package decides identifiability via the recanting-district criterion,
emits identification formulas over interventional and observational
distributions, and verifies them against an exact discrete structural causal
model oracle, including the bit-parity counterexample pairs that certify
non-identifiability.
"""

from .admg import Admg, District
from .counterexample import counterexample_models, parity_models, verify_counterexample
from .counterfactual import CfTerm, Const, unroll
from .errors import (
    BundleError,
    ConstructionError,
    EnumerationLimitError,
    GraphError,
    ModelError,
    NotIdentifiableError,
    ParseError,
    PositivityError,
    RecantError,
    RecantingDistrictError,
)
from .evaluate import Environment, decompose, evaluate, total_effect
from .formula import (
    Difference,
    DoTerm,
    Expectation,
    ExpTerm,
    LinearComb,
    ObsTerm,
    Product,
    Scalar,
    Sum,
    Sym,
    active,
    baseline,
    canonicalize,
    canonically_equal,
    idx,
    render,
)
from .identify import (
    Hedge,
    identify_interventional,
    identify_pse,
    identify_pse_by_substitution,
    identify_total,
    interventional_functional,
    mediation_effects,
)
from .paths import (
    CausalPath,
    PathBundle,
    RecantingReport,
    bundle_all,
    bundle_none,
    find_recanting_districts,
    make_bundle,
    proper_causal_paths,
    relevant_nodes,
)
from .scm import DiscreteScm, DistTable, Noise, truncated_factorization
from .textio import (
    ProblemSpec,
    parse_formula,
    parse_model,
    parse_problem,
    parse_table,
    render_formula,
    render_model,
    render_problem,
    render_table,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
