"""Token-to-sentence pooling: cls, first_token, and mean strategies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embstore import POOLING_KINDS, SentenceMatrix, TokenEmbeddingSet
from .errors import ValidationError


@dataclass
class PoolingStrategy:
    """Selects how a sentence's token vectors collapse to one row.

    cls takes token 0, first_token takes token 1 (the first token after
    CLS), mean averages all tokens. ``mean_excludes_special`` drops the
    first and last token of each sentence before averaging; it only
    applies to mean.
    """

    kind: str = "mean"
    mean_excludes_special: bool = False

    def __post_init__(self):
        if self.kind not in POOLING_KINDS:
            raise ValidationError(f"unknown pooling {self.kind!r}")


def pool(emb: TokenEmbeddingSet, strategy: PoolingStrategy | str) -> SentenceMatrix:
    """Pool a ragged token set into an (S, D) sentence matrix."""
    if isinstance(strategy, str):
        strategy = PoolingStrategy(strategy)
    emb.validate()
    offs = emb.offsets
    lengths = np.diff(offs)
    s, d = emb.num_sentences, emb.hidden_dim
    data = emb.data.astype(np.float64, copy=False)

    if strategy.kind == "cls":
        out = data[offs[:-1]]
    elif strategy.kind == "first_token":
        short = np.nonzero(lengths < 2)[0]
        if len(short):
            i = int(short[0])
            raise ValidationError(
                f"sentence {i} has {int(lengths[i])} token; first_token needs >= 2")
        out = data[offs[:-1] + 1]
    else:  # mean
        if strategy.mean_excludes_special:
            short = np.nonzero(lengths < 3)[0]
            if len(short):
                i = int(short[0])
                raise ValidationError(
                    f"sentence {i} has {int(lengths[i])} tokens; "
                    "mean without special tokens needs >= 3")
            sums = np.add.reduceat(data, offs[:-1], axis=0)
            sums -= data[offs[:-1]] + data[offs[1:] - 1]
            out = sums / (lengths - 2)[:, None]
        else:
            out = np.add.reduceat(data, offs[:-1], axis=0) / lengths[:, None]

    mat = SentenceMatrix(values=np.ascontiguousarray(out, dtype=np.float32),
                         pooling=strategy.kind,
                         language=emb.language, layer=emb.layer)
    assert mat.rows == s and mat.cols == d
    return mat
