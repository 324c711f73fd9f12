"""Expression language, jets and the evaluation IR."""
from .ast import Expr, parse, to_string
from .jet import Jet, Jet2
from .program import (
    Builder, Chart, EvalProgram, compile_exprs, eval_jet, evaluate, evaluate_jet, evaluate_jet_many, evaluate_many,
)
from .serialize import deserialize, serialize

__all__ = [
    "Builder", "Chart", "EvalProgram", "Expr", "Jet", "Jet2", "compile_exprs", "deserialize",
    "eval_jet", "evaluate", "evaluate_jet", "evaluate_jet_many", "evaluate_many", "parse", "serialize", "to_string",
]
