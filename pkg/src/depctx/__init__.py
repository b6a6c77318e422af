"""Dependency-context embedding toolkit.

Extracts typed dependency contexts from parsed corpora, trains skip-gram
negative-sampling embeddings from arbitrary (word, context) pairs, and
searches the space of context-bag configurations for the best one per word
class.
"""

from .conllu import ConlluError, Sentence, Token, parse_conllu, read_corpus
from .evaluation import (
    EvalResult,
    FoldSplit,
    WordPairDataset,
    cosine,
    evaluate,
    spearman,
    split_folds,
    toefl_evaluate,
)
from .extraction import (
    BagMappingTable,
    DependencyPair,
    ExtractionConfig,
    Manifest,
    collapse_prepositions,
    compose_configuration,
    extract_bow_pairs,
    extract_conj_pairs,
    extract_deps_pairs,
    extract_posit_pairs,
    write_bag_files,
)
from .search import (
    Configuration,
    ConfigurationSpace,
    FitnessCache,
    SearchTrace,
    best_configuration_search,
    build_pool,
    count_space,
    exhaustive_search,
    greedy_search,
)
from .sgns import (
    EmbeddingStore,
    TrainerConfig,
    Vocabulary,
    build_vocab,
    load_embeddings,
    save_embeddings,
    subsample,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BagMappingTable",
    "Configuration",
    "ConfigurationSpace",
    "ConlluError",
    "DependencyPair",
    "EmbeddingStore",
    "EvalResult",
    "ExtractionConfig",
    "FitnessCache",
    "FoldSplit",
    "Manifest",
    "SearchTrace",
    "Sentence",
    "Token",
    "TrainerConfig",
    "Vocabulary",
    "WordPairDataset",
    "best_configuration_search",
    "build_pool",
    "build_vocab",
    "collapse_prepositions",
    "compose_configuration",
    "cosine",
    "count_space",
    "evaluate",
    "exhaustive_search",
    "extract_bow_pairs",
    "extract_conj_pairs",
    "extract_deps_pairs",
    "extract_posit_pairs",
    "greedy_search",
    "load_embeddings",
    "parse_conllu",
    "read_corpus",
    "save_embeddings",
    "spearman",
    "split_folds",
    "subsample",
    "toefl_evaluate",
    "train",
    "write_bag_files",
]
