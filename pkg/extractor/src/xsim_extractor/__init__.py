"""Encoder hidden-state extractor producing XEMB datasets."""

from .extract import ExtractionJob, extract, read_corpus_tsv
from .xemb import write_manifest, write_xemb

__version__ = "0.1.0"
