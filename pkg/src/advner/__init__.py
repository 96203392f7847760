"""Adversarial test-set generation and fine-grained evaluation for BIO-tagged NER corpora."""

__version__ = "0.1.0"

from .corpus import (AnnotatedSentence, Corpus, EntitySpan, SplitSpec, concat_corpora, extract_spans, parse_conll,
                     read_corpus, replace_span, serialize_conll, split_corpus, write_corpus)
from .evaluate import EvalReport, EvalSchema, SchemaCounts, compare_reports, evaluate, micro_f1, prf_from_counts
from .perturb import Gazetteer, PerturbationConfig, perturb, remap_paraphrase
from .stats import RunSeries, paired_t_test, summarize

__all__ = [
    "AnnotatedSentence", "Corpus", "EntitySpan", "SplitSpec", "concat_corpora", "extract_spans", "parse_conll",
    "read_corpus", "replace_span", "serialize_conll", "split_corpus", "write_corpus",
    "EvalReport", "EvalSchema", "SchemaCounts", "compare_reports", "evaluate", "micro_f1", "prf_from_counts",
    "Gazetteer", "PerturbationConfig", "perturb", "remap_paraphrase",
    "RunSeries", "paired_t_test", "summarize",
]
