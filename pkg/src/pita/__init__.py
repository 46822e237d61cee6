"""Propositional inference dataset pipeline and transitive-inference tools."""

from .formula import canonicalize, evaluate, is_tautology, parse, to_text
from .prover import classify, extract_trace, prove, search, trace_depth
from .render import parse_document, render_document, split_prompt_completion

__version__ = "0.1.0"

__all__ = [
    "canonicalize",
    "classify",
    "evaluate",
    "extract_trace",
    "is_tautology",
    "parse",
    "parse_document",
    "prove",
    "render_document",
    "search",
    "split_prompt_completion",
    "to_text",
    "trace_depth",
]
