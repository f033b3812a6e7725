"""Scenario-coding notation: lexer, parser, and decision-graph compiler.

The notation turns a narrative behavior description into an executable
decision graph.  A source has up to three sections (Synopsis, Scenario,
Explicate); headerless input is treated as a bare scenario.  Quoted
terms are the operative vocabulary and must be explicated; bracket
terms are meta-classifications; plain narrative words only matter where
the documented grammar binds them (verbs, moves, facilities, objects).

See docs/scenario_grammar.md for the normative grammar.
"""

from .lexer import Diagnostic, Token, tokenize
from .parser import ScenarioAst, Statement, ScenarioObject, analyze, parse
from .graph import DecisionGraph, GraphEdge, GraphNode, compile_ast, deserialize, render

__all__ = [
    "Diagnostic", "Token", "tokenize",
    "ScenarioAst", "Statement", "ScenarioObject", "analyze", "parse",
    "DecisionGraph", "GraphEdge", "GraphNode", "compile_ast", "deserialize", "render",
]
