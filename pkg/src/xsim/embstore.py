"""Binary containers for token embeddings (XEMB), pooled matrices (XMAT),
and the dataset manifest tying them together.

Both formats are little-endian throughout. Payloads are stored as f32;
all index math elsewhere promotes to f64.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError

XEMB_MAGIC = b"XEMB"
XMAT_MAGIC = b"XMAT"
FORMAT_VERSION = 1
DTYPE_F32 = 0

POOLING_KINDS = ("cls", "first_token", "mean")
_POOLING_CODE = {name: i for i, name in enumerate(POOLING_KINDS)}

ALIGNMENT_NOTE = "rows are mutual translations: row i of every language is the same sentence"

# header layouts (past the 4-byte magic)
_XEMB_HEAD = struct.Struct("<IIIQQ")   # version, dtype, hidden_dim, num_sentences, total_tokens
_XMAT_HEAD = struct.Struct("<IIQIB3s")  # version, dtype, rows, cols, pooling, reserved


@dataclass
class TokenEmbeddingSet:
    """Ragged per-sentence token vectors for one (language, layer).

    ``data`` is a (total_tokens, hidden_dim) array; sentence i occupies
    rows offsets[i]:offsets[i+1].
    """

    language: str
    layer: int
    offsets: np.ndarray
    data: np.ndarray

    @property
    def num_sentences(self) -> int:
        return len(self.offsets) - 1

    @property
    def hidden_dim(self) -> int:
        return self.data.shape[1]

    @property
    def total_tokens(self) -> int:
        return self.data.shape[0]

    def sentence(self, i: int) -> np.ndarray:
        return self.data[self.offsets[i]:self.offsets[i + 1]]

    def validate(self) -> None:
        if not self.language:
            raise ValidationError("language code is empty")
        if self.layer < 0:
            raise ValidationError(f"layer must be >= 0, got {self.layer}")
        if self.data.ndim != 2:
            raise ValidationError(f"data must be 2-D, got shape {self.data.shape}")
        t, d = self.data.shape
        if d < 1:
            raise ValidationError("hidden_dim must be positive")
        offs = np.asarray(self.offsets)
        if offs.ndim != 1 or len(offs) < 2:
            raise ValidationError("offsets must hold at least one sentence")
        if offs[0] != 0:
            raise ValidationError(f"offsets[0] must be 0, got {offs[0]}")
        if offs[-1] != t:
            raise ValidationError(
                f"offsets[-1] ({offs[-1]}) does not match total_tokens ({t})")
        diffs = np.diff(offs)
        if np.any(diffs < 0):
            raise ValidationError("offsets not nondecreasing")
        if np.any(diffs == 0):
            i = int(np.argmin(diffs))
            raise ValidationError(f"sentence {i} has 0 tokens")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("data contains NaN/Inf")

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenEmbeddingSet):
            return NotImplemented
        return (self.language == other.language
                and self.layer == other.layer
                and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.data, other.data))


@dataclass
class SentenceMatrix:
    """N x D matrix of pooled sentence vectors, rows aligned across languages.

    ``language`` and ``layer`` are carried in memory only; the XMAT file
    stores shape and pooling.
    """

    values: np.ndarray
    pooling: str
    language: str = ""
    layer: int = -1

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def validate(self) -> None:
        if self.pooling not in POOLING_KINDS:
            raise ValidationError(f"unknown pooling {self.pooling!r}")
        if self.values.ndim != 2:
            raise ValidationError(f"matrix must be 2-D, got shape {self.values.shape}")
        n, d = self.values.shape
        if n == 0:
            raise ValidationError("empty matrix")
        if d == 0:
            raise ValidationError("matrix has zero columns")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("matrix contains NaN/Inf")


def _atomic_write(path: str | os.PathLike, payload: bytes) -> None:
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(payload)
    os.replace(tmp, path)


def write_token_embeddings(emb: TokenEmbeddingSet, path: str | os.PathLike) -> None:
    emb.validate()
    offs = np.ascontiguousarray(emb.offsets, dtype="<u8")
    data = np.ascontiguousarray(emb.data, dtype="<f4")
    head = XEMB_MAGIC + _XEMB_HEAD.pack(
        FORMAT_VERSION, DTYPE_F32, emb.hidden_dim, emb.num_sentences, emb.total_tokens)
    _atomic_write(path, head + offs.tobytes() + data.tobytes())


def read_token_embeddings(path: str | os.PathLike, language: str = "",
                          layer: int = 0) -> TokenEmbeddingSet:
    with open(path, "rb") as f:
        raw = f.read()
    return parse_token_embeddings(raw, language=language, layer=layer)


def parse_token_embeddings(raw: bytes, language: str = "x",
                           layer: int = 0) -> TokenEmbeddingSet:
    if len(raw) < 4 or raw[:4] != XEMB_MAGIC:
        raise FormatError(f"bad magic: expected {XEMB_MAGIC!r}, got {raw[:4]!r}")
    if len(raw) < 4 + _XEMB_HEAD.size:
        raise FormatError("truncated header")
    version, dtype, d, s, t = _XEMB_HEAD.unpack_from(raw, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}")
    if d == 0:
        raise FormatError("hidden_dim is 0")
    if s == 0:
        raise FormatError("num_sentences is 0")
    off_start = 4 + _XEMB_HEAD.size
    off_bytes = (s + 1) * 8
    data_bytes = t * d * 4
    expect = off_start + off_bytes + data_bytes
    if len(raw) < expect:
        raise FormatError(
            f"truncated data: need {expect} bytes, file has {len(raw)}")
    if len(raw) > expect:
        raise FormatError(
            f"trailing bytes: expected {expect} bytes, file has {len(raw)}")
    offs = np.frombuffer(raw, dtype="<u8", count=s + 1, offset=off_start).astype(np.int64)
    if offs[0] != 0:
        raise FormatError(f"offsets[0] must be 0, got {offs[0]}")
    diffs = np.diff(offs)
    if np.any(diffs < 0):
        raise FormatError("offsets not nondecreasing")
    if np.any(diffs == 0):
        raise FormatError(f"sentence {int(np.argmin(diffs))} has 0 tokens")
    if offs[-1] != t:
        raise FormatError(
            f"offsets[-1] ({offs[-1]}) does not match total_tokens ({t})")
    data = np.frombuffer(raw, dtype="<f4", count=t * d,
                         offset=off_start + off_bytes).reshape(t, d)
    if not np.all(np.isfinite(data)):
        raise FormatError("NaN payload")
    return TokenEmbeddingSet(language=language, layer=layer,
                             offsets=offs, data=data.copy())


def write_matrix(mat: SentenceMatrix, path: str | os.PathLike) -> None:
    mat.validate()
    values = np.ascontiguousarray(mat.values, dtype="<f4")
    head = XMAT_MAGIC + _XMAT_HEAD.pack(
        FORMAT_VERSION, DTYPE_F32, mat.rows, mat.cols,
        _POOLING_CODE[mat.pooling], b"\x00\x00\x00")
    _atomic_write(path, head + values.tobytes())


def read_matrix(path: str | os.PathLike, language: str = "",
                layer: int = -1) -> SentenceMatrix:
    with open(path, "rb") as f:
        raw = f.read()
    return parse_matrix(raw, language=language, layer=layer)


def parse_matrix(raw: bytes, language: str = "", layer: int = -1) -> SentenceMatrix:
    if len(raw) < 4 or raw[:4] != XMAT_MAGIC:
        raise FormatError(f"bad magic: expected {XMAT_MAGIC!r}, got {raw[:4]!r}")
    if len(raw) < 4 + _XMAT_HEAD.size:
        raise FormatError("truncated header")
    version, dtype, n, d, pool_code, reserved = _XMAT_HEAD.unpack_from(raw, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}")
    if dtype != DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype}")
    if n == 0:
        raise FormatError("empty matrix")
    if d == 0:
        raise FormatError("matrix has zero columns")
    if pool_code >= len(POOLING_KINDS):
        raise FormatError(f"unknown pooling code {pool_code}")
    if reserved != b"\x00\x00\x00":
        raise FormatError("reserved bytes not zero")
    start = 4 + _XMAT_HEAD.size
    expect = start + n * d * 4
    if len(raw) < expect:
        raise FormatError(
            f"truncated data: need {expect} bytes, file has {len(raw)}")
    if len(raw) > expect:
        raise FormatError(
            f"trailing bytes: expected {expect} bytes, file has {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", count=n * d, offset=start).reshape(n, d)
    if not np.all(np.isfinite(values)):
        raise FormatError("NaN payload")
    return SentenceMatrix(values=values.copy(), pooling=POOLING_KINDS[pool_code],
                          language=language, layer=layer)


@dataclass
class DatasetManifest:
    """Index of a dataset directory: which XEMB file holds which (language, layer)."""

    dataset_id: str
    languages: list[str]
    num_layers: int
    hidden_dim: int
    num_sentences: int
    model_name: str
    file_index: dict[str, dict[str, str]] = field(default_factory=dict)
    alignment_note: str = ALIGNMENT_NOTE

    def path_for(self, language: str, layer: int) -> str:
        try:
            return self.file_index[language][str(layer)]
        except KeyError:
            raise ValidationError(
                f"manifest has no file for ({language}, layer {layer})") from None

    def validate(self) -> None:
        if self.num_layers < 1 or self.hidden_dim < 1 or self.num_sentences < 1:
            raise ValidationError("num_layers, hidden_dim, num_sentences must be positive")
        if len(set(self.languages)) != len(self.languages):
            raise ValidationError("duplicate language codes")
        for lang in self.languages:
            layers = self.file_index.get(lang)
            if layers is None:
                raise ValidationError(f"file_index missing language {lang!r}")
            for layer in range(self.num_layers):
                if str(layer) not in layers:
                    raise ValidationError(
                        f"file_index missing ({lang}, layer {layer})")

    def verify_files(self, root: str | os.PathLike) -> None:
        """Check every referenced file exists and parses with matching D, S."""
        self.validate()
        for lang in self.languages:
            for layer in range(self.num_layers):
                path = os.path.join(os.fspath(root), self.path_for(lang, layer))
                if not os.path.exists(path):
                    raise ValidationError(f"missing file {path}")
                emb = read_token_embeddings(path, language=lang, layer=layer)
                if emb.hidden_dim != self.hidden_dim:
                    raise ValidationError(
                        f"{path}: hidden_dim {emb.hidden_dim} != manifest {self.hidden_dim}")
                if emb.num_sentences != self.num_sentences:
                    raise ValidationError(
                        f"{path}: num_sentences {emb.num_sentences} != manifest {self.num_sentences}")

    def to_json(self) -> str:
        return json.dumps({
            "dataset_id": self.dataset_id,
            "languages": self.languages,
            "num_layers": self.num_layers,
            "hidden_dim": self.hidden_dim,
            "num_sentences": self.num_sentences,
            "model_name": self.model_name,
            "file_index": self.file_index,
            "alignment_note": self.alignment_note,
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"manifest is not valid JSON: {e}") from None
        required = ("dataset_id", "languages", "num_layers", "hidden_dim",
                    "num_sentences", "model_name", "file_index")
        for key in required:
            if key not in obj:
                raise FormatError(f"manifest missing field {key!r}")
        m = cls(dataset_id=obj["dataset_id"], languages=list(obj["languages"]),
                num_layers=int(obj["num_layers"]), hidden_dim=int(obj["hidden_dim"]),
                num_sentences=int(obj["num_sentences"]), model_name=obj["model_name"],
                file_index=obj["file_index"],
                alignment_note=obj.get("alignment_note", ALIGNMENT_NOTE))
        m.validate()
        return m


def load_manifest(root: str | os.PathLike) -> DatasetManifest:
    path = os.path.join(os.fspath(root), "manifest.json")
    if not os.path.exists(path):
        raise FileNotFoundError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as f:
        return DatasetManifest.from_json(f.read())


def save_manifest(manifest: DatasetManifest, root: str | os.PathLike) -> None:
    manifest.validate()
    _atomic_write(os.path.join(os.fspath(root), "manifest.json"),
                  manifest.to_json().encode("utf-8"))
