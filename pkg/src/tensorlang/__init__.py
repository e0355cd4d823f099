"""Tensor-language expressions over labelled graphs: parsing, exact evaluation,
Weisfeiler-Leman refinement, variable-minimising rewrites, counting-logic
translation, GNN encoders and separation-power checks."""

from .evaluator import evaluate, evaluate_bundle
from .expr import (
    Add, Apply, EdgePred, EqPred, Expr, GuardedAgg, LabelPred, One, Product, Scale, SumAgg, UncondAgg, analyze,
)
from .graph import Graph, complete_graph, cycle_graph, disjoint_union, exhaustive_graphs, load_corpus, load_graph, path_graph
from .parser import ParseError, parse, render
from .registry import DEFAULT_AGGREGATIONS, DEFAULT_FUNCTIONS, AggregationRegistry, FunctionRegistry

__version__ = "0.1.0"

__all__ = [
    "Add", "AggregationRegistry", "Apply", "DEFAULT_AGGREGATIONS", "DEFAULT_FUNCTIONS", "EdgePred", "EqPred", "Expr",
    "FunctionRegistry", "Graph", "GuardedAgg", "LabelPred", "One", "ParseError", "Product", "Scale", "SumAgg",
    "UncondAgg", "analyze", "complete_graph", "cycle_graph", "disjoint_union", "evaluate", "evaluate_bundle",
    "exhaustive_graphs", "load_corpus", "load_graph", "parse", "path_graph", "render",
]
