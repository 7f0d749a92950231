"""Role-labeled definition graphs and explainable entailment by graph navigation."""

from .annotation import AnnotatedDefinition, RoleLabel, RoleSpan, validate
from .distsem import EmbeddingTable, load_embeddings, phrase_similarity
from .entail import EntailConfig, Verdict, entail, justify, navigate
from .kgraph import DefinitionGraph, GraphPolicy, build_graph, parse_ntriples, serialize_ntriples
from .labeler import RuleConfig, preannotate, recover_supertype
from .treebank import ParseTree, parse_tree

__all__ = [
    "AnnotatedDefinition", "RoleLabel", "RoleSpan", "validate",
    "EmbeddingTable", "load_embeddings", "phrase_similarity",
    "EntailConfig", "Verdict", "entail", "justify", "navigate",
    "DefinitionGraph", "GraphPolicy", "build_graph", "parse_ntriples", "serialize_ntriples",
    "RuleConfig", "preannotate", "recover_supertype",
    "ParseTree", "parse_tree",
]
__version__ = "0.1.0"
