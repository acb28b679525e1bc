"""Federated sadness/depression text classification with LIME explanations."""
from .corpus import Corpus, Document, clean_text, corpus_stats, generate_synthetic, load_corpus
from .explain import Explanation, LimeConfig, explain_instance
from .federated import FedConfig, PartitionSpec, run_federated
from .features import SparseVector, VectorizerConfig, cosine_similarity, tokenize, vectorize
from .kernels import BACKEND_NAME
from .model import ModelParams, TrainConfig, evaluate, fit_centralized, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "Corpus", "Document", "Explanation", "FedConfig", "LimeConfig", "ModelParams",
    "PartitionSpec", "SparseVector", "TrainConfig", "VectorizerConfig", "clean_text", "corpus_stats",
    "cosine_similarity", "evaluate", "explain_instance", "fit_centralized", "generate_synthetic",
    "load_corpus", "run_federated", "tokenize", "train", "vectorize",
]
