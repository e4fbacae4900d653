"""Modal logic problems in TPTP syntax, embedded into classical higher-order logic (THF)."""

from modalembed.embedding import EmbeddingOptions, EmbeddingPlan, embed_formula, embed_problem, plan
from modalembed.errors import (
    LogicSpecError, MissingConjecture, ModalEmbedError, OutsideFragment, ParseError, StageMismatch,
    TypeCheckError, UnsupportedFeature,
)
from modalembed.logic_spec import LogicSpec, resolve, simple_spec, to_expr
from modalembed.parser import (
    Dialect, convert_qmltp, parse_file, parse_formula, parse_logic_annotation, parse_problem,
)
from modalembed.syntax_core import AnnotatedFormula, Problem, Role
from modalembed.thf_printer import format_formula, print_problem

__version__ = "0.1.0"

__all__ = [
    "AnnotatedFormula", "Dialect", "EmbeddingOptions", "EmbeddingPlan", "LogicSpec", "LogicSpecError",
    "MissingConjecture", "ModalEmbedError", "OutsideFragment", "ParseError", "Problem", "Role",
    "StageMismatch", "TypeCheckError", "UnsupportedFeature", "convert_qmltp", "embed_formula",
    "embed_problem", "format_formula", "parse_file", "parse_formula", "parse_logic_annotation",
    "parse_problem", "plan", "print_problem", "resolve", "simple_spec", "to_expr",
]
