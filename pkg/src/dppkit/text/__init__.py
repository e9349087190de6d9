"""Extractive multi-document summarization on top of conditional DPPs."""
from .corpus import Cluster, ClusterFormatError, Sentence, ingest, ingest_corpus, tokenize
from .features import FeatureConfig, build_idf, fit_bins, lexrank, phi_features, quality_features, tfidf_vectors
from .oracle import assemble_summary, begin_summary, oracle_sequence, oracle_summary
from .rouge import NgramScore, ngram_score

__all__ = [
    "Cluster",
    "ClusterFormatError",
    "Sentence",
    "ingest",
    "ingest_corpus",
    "tokenize",
    "FeatureConfig",
    "build_idf",
    "fit_bins",
    "lexrank",
    "phi_features",
    "quality_features",
    "tfidf_vectors",
    "assemble_summary",
    "begin_summary",
    "oracle_sequence",
    "oracle_summary",
    "NgramScore",
    "ngram_score",
]
