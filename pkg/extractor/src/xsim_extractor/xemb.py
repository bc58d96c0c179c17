"""Standalone writer for the XEMB container and dataset manifest.

Deliberately self-contained: the analysis side and this extractor agree
on the byte layout, not on code. Little-endian; payload f32.

Layout: magic "XEMB" | version u32=1 | dtype u32 (0=f32) | hidden_dim u32
| num_sentences u64 | total_tokens u64 | offsets (S+1) x u64 | data T x D f32.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"XEMB"
VERSION = 1
DTYPE_F32 = 0
_HEAD = struct.Struct("<IIIQQ")

ALIGNMENT_NOTE = "rows are mutual translations: row i of every language is the same sentence"


def write_xemb(path: str, sentence_vectors: list[np.ndarray]) -> None:
    """Write one file from per-sentence (tokens, hidden_dim) arrays."""
    if not sentence_vectors:
        raise ValueError("no sentences to write")
    dim = sentence_vectors[0].shape[1]
    for i, arr in enumerate(sentence_vectors):
        if arr.ndim != 2 or arr.shape[1] != dim:
            raise ValueError(f"sentence {i}: shape {arr.shape} inconsistent with dim {dim}")
        if arr.shape[0] < 1:
            raise ValueError(f"sentence {i} has no tokens")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"sentence {i} contains NaN/Inf")
    lengths = np.array([arr.shape[0] for arr in sentence_vectors], dtype=np.uint64)
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype("<u8")
    data = np.concatenate(sentence_vectors).astype("<f4")
    header = MAGIC + _HEAD.pack(VERSION, DTYPE_F32, dim,
                                len(sentence_vectors), int(offsets[-1]))
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(header)
        f.write(offsets.tobytes())
        f.write(data.tobytes())
    os.replace(tmp, path)


def write_manifest(root: str, dataset_id: str, languages: list[str],
                   num_layers: int, hidden_dim: int, num_sentences: int,
                   model_name: str, file_index: dict[str, dict[str, str]]) -> None:
    manifest = {
        "dataset_id": dataset_id,
        "languages": languages,
        "num_layers": num_layers,
        "hidden_dim": hidden_dim,
        "num_sentences": num_sentences,
        "model_name": model_name,
        "file_index": file_index,
        "alignment_note": ALIGNMENT_NOTE,
    }
    tmp = os.path.join(root, "manifest.json.tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    os.replace(tmp, os.path.join(root, "manifest.json"))
