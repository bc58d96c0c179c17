"""Batch inference over an aligned corpus, dumping every layer's hidden
states (layer 0 = embedding output) to XEMB files plus a manifest."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .xemb import write_manifest, write_xemb

log = logging.getLogger("xsim_extractor")


@dataclass
class ExtractionJob:
    model_name: str
    corpus: dict[str, list[str]]        # language code -> aligned sentences
    output_root: str
    batch_size: int = 32
    max_length: int = 128
    device: str = "cpu"
    dataset_id: str = "extracted"

    def validate(self) -> None:
        if not self.corpus:
            raise ValueError("corpus has no languages")
        sizes = {lang: len(sents) for lang, sents in self.corpus.items()}
        if len(set(sizes.values())) != 1:
            raise ValueError(f"language lists are not equal length: {sizes}")
        if next(iter(sizes.values())) == 0:
            raise ValueError("corpus is empty")
        for lang, sents in self.corpus.items():
            for i, s in enumerate(sents):
                if not s.strip():
                    raise ValueError(f"{lang}: sentence {i} is empty")
        if self.batch_size < 1 or self.max_length < 2:
            raise ValueError("batch_size must be >= 1 and max_length >= 2")


def read_corpus_tsv(path: str, languages: list[str] | None = None) -> dict[str, list[str]]:
    """Aligned TSV: header row of language codes, one aligned tuple per row."""
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter="\t")
        header = next(reader, None)
        if not header:
            raise ValueError(f"{path}: empty corpus")
        wanted = languages or header
        missing = [lang for lang in wanted if lang not in header]
        if missing:
            raise ValueError(f"{path}: languages {missing} not in header {header}")
        cols = {lang: header.index(lang) for lang in wanted}
        corpus: dict[str, list[str]] = {lang: [] for lang in wanted}
        for row_num, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}:{row_num}: {len(row)} columns, header has {len(header)}")
            for lang, idx in cols.items():
                corpus[lang].append(row[idx])
    return corpus


def _embed_language(model, tokenizer, sentences, batch_size, max_length, device):
    """Returns per-layer lists of per-sentence (tokens, dim) f32 arrays and
    the number of truncated sentences."""
    per_layer: list[list[np.ndarray]] | None = None
    truncated = 0
    model.eval()
    with torch.no_grad():
        for start in range(0, len(sentences), batch_size):
            batch = sentences[start:start + batch_size]
            full_lengths = [len(ids) for ids in tokenizer(batch)["input_ids"]]
            truncated += sum(length > max_length for length in full_lengths)
            enc = tokenizer(batch, padding=True, truncation=True,
                            max_length=max_length, return_tensors="pt").to(device)
            out = model(**enc, output_hidden_states=True)
            hidden = out.hidden_states  # (num_layers + 1) x (B, L, D)
            if per_layer is None:
                per_layer = [[] for _ in hidden]
            mask = enc["attention_mask"].bool()
            for layer, states in enumerate(hidden):
                states = states.float().cpu().numpy()
                for b in range(len(batch)):
                    keep = mask[b].cpu().numpy()
                    per_layer[layer].append(
                        np.ascontiguousarray(states[b][keep], dtype=np.float32))
    return per_layer, truncated


def extract(job: ExtractionJob, model=None, tokenizer=None) -> str:
    """Run the job; returns the path of the written manifest.

    `model`/`tokenizer` default to a hub download of job.model_name but can
    be injected (local checkpoints, tests).
    """
    job.validate()
    if model is None or tokenizer is None:
        from transformers import AutoModel, AutoTokenizer
        tokenizer = tokenizer or AutoTokenizer.from_pretrained(job.model_name)
        model = model or AutoModel.from_pretrained(job.model_name)
    model.to(job.device)

    os.makedirs(job.output_root, exist_ok=True)
    languages = list(job.corpus)
    num_sentences = len(job.corpus[languages[0]])
    file_index: dict[str, dict[str, str]] = {}
    num_layers = None
    hidden_dim = None

    for lang in languages:
        per_layer, truncated = _embed_language(
            model, tokenizer, job.corpus[lang], job.batch_size,
            job.max_length, job.device)
        if truncated:
            log.warning("%s: truncated %d of %d sentences to %d tokens",
                        lang, truncated, num_sentences, job.max_length)
        num_layers = len(per_layer)
        hidden_dim = per_layer[0][0].shape[1]
        file_index[lang] = {}
        for layer, sentence_vectors in enumerate(per_layer):
            name = f"{lang}.{layer}.xemb"
            write_xemb(os.path.join(job.output_root, name), sentence_vectors)
            file_index[lang][str(layer)] = name
        log.info("%s: wrote %d layers", lang, num_layers)

    write_manifest(job.output_root, dataset_id=job.dataset_id,
                   languages=languages, num_layers=num_layers,
                   hidden_dim=hidden_dim, num_sentences=num_sentences,
                   model_name=job.model_name, file_index=file_index)
    return os.path.join(job.output_root, "manifest.json")
