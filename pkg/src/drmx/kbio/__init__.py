"""Readers and writers for the drmx input and output artifacts."""

from .config import RunConfig, load_config
from .dataset import Dataset, KnowledgeBase, class_order, format_examples, parse_examples
from .modes import ModeDecl, body_modes, format_modes, head_mode, parse_modes
from .relevance import RelevanceMap, format_relevance, parse_relevance
from .syntax import (format_program, parse_clause, parse_program, parse_statements,
                     parse_term)

__all__ = [
    "RunConfig", "load_config", "Dataset", "KnowledgeBase", "class_order",
    "format_examples", "parse_examples", "ModeDecl", "body_modes", "format_modes",
    "head_mode", "parse_modes", "RelevanceMap", "format_relevance", "parse_relevance",
    "format_program", "parse_clause", "parse_program", "parse_statements", "parse_term",
]
