"""Workbench for the strictly positive quantified modal logic QRC1."""

from .syntax import (
    And,
    CaptureError,
    Const,
    Diamond,
    Forall,
    Formula,
    FormulaError,
    ParseError,
    Rel,
    Signature,
    SignatureError,
    Term,
    Top,
    TOP,
    Var,
    canonical,
    cdepth,
    close_with_constants,
    closure,
    depths,
    free_for,
    free_vars,
    mdepth,
    parse_formula,
    pretty,
    substitute,
    udepth,
)
from .calculus import (
    Derivation,
    Sequent,
    Witness,
    check_derivation,
    derivation_errors,
    derivation_from_json,
    derivation_to_json,
    derived_rule_instances,
    format_tree,
    prove,
)
from .semantics import (
    AdequacyReport,
    Derivable,
    InconclusiveError,
    KripkeModel,
    Refuted,
    Verdict,
    check_adequate,
    constant_domain_model,
    decide,
    enumerate_models,
    model_from_json,
    model_to_dot,
    model_to_json,
    satisfies,
)
from .countermodel import (
    DerivabilityOracle,
    Pair,
    PairFrame,
    TermModel,
    build_model,
    countermodel_for,
    hat_r,
    lindenbaum,
    pair_successor,
    truth_lemma_check,
)

__version__ = "0.1.0"
