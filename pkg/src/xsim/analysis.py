"""Experiment orchestration: layer profiles, matching probe, all-pairs
matrices, boxplot summaries, and agglomerative clustering."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .embstore import DatasetManifest, read_token_embeddings
from .errors import ValidationError, XsimError
from .pooling import PoolingStrategy, pool
from .simindex import IndexSpec, score

LINKAGES = ("average", "complete", "single")


@dataclass
class LayerProfile:
    pair: tuple[str, str]
    index: IndexSpec
    pooling: PoolingStrategy
    scores: list[float]


@dataclass
class PairwiseMatrix:
    layer: int
    index: IndexSpec
    pooling: str
    languages: list[str]
    values: np.ndarray


@dataclass
class LayerSummary:
    layer: int
    q1: float
    median: float
    q3: float
    lo_whisker: float
    hi_whisker: float
    outliers: list[tuple[str, str, float]] = field(default_factory=list)


@dataclass
class Dendrogram:
    leaves: list[str]
    merges: list[tuple[int, int, float]]  # child node ids + merge height
    linkage: str


def _load_pooled(root, manifest: DatasetManifest, lang: str, layer: int,
                 strategy: PoolingStrategy):
    path = os.path.join(os.fspath(root), manifest.path_for(lang, layer))
    emb = read_token_embeddings(path, language=lang, layer=layer)
    if emb.num_sentences != manifest.num_sentences:
        raise ValidationError(
            f"{path}: num_sentences {emb.num_sentences} != manifest {manifest.num_sentences}")
    return pool(emb, strategy)


def layer_profile(root, manifest: DatasetManifest, pair: tuple[str, str],
                  index: IndexSpec, strategy: PoolingStrategy) -> LayerProfile:
    """Score one language pair at every layer. The first language of the
    pair is the reference view for asymmetric indexes."""
    a, b = pair
    for lang in pair:
        if lang not in manifest.languages:
            raise ValidationError(f"language {lang!r} not in manifest")
    scores = []
    for layer in range(manifest.num_layers):
        try:
            x = _load_pooled(root, manifest, a, layer, strategy)
            y = _load_pooled(root, manifest, b, layer, strategy)
            value, _ = score(x, y, index)
        except XsimError as e:
            raise type(e)(f"layer {layer}: {e}") from None
        scores.append(value)
    return LayerProfile(pair=pair, index=index, pooling=strategy, scores=scores)


def matching(x, y, metric: str = "cosine", block: int = 1024):
    """Translation-matching probe.

    For each row of x, the nearest row of y (cosine by default, euclidean
    behind the flag); ties go to the smallest index. Returns (accuracy,
    argmax vector).
    """
    xv = np.asarray(getattr(x, "values", x), dtype=np.float64)
    yv = np.asarray(getattr(y, "values", y), dtype=np.float64)
    if xv.shape != yv.shape:
        raise ValidationError(f"shape mismatch: {xv.shape} vs {yv.shape}")
    n = xv.shape[0]
    if metric == "cosine":
        for name, m in (("x", xv), ("y", yv)):
            norms = np.linalg.norm(m, axis=1)
            bad = np.nonzero(norms == 0.0)[0]
            if len(bad):
                raise ValidationError(f"zero-norm row {int(bad[0])} in {name}")
        xv = xv / np.linalg.norm(xv, axis=1, keepdims=True)
        yv = yv / np.linalg.norm(yv, axis=1, keepdims=True)
    elif metric != "euclidean":
        raise ValidationError(f"unknown matching metric {metric!r}")

    idx = np.empty(n, dtype=np.int64)
    y_sq = (yv * yv).sum(axis=1)
    for start in range(0, n, block):
        chunk = xv[start:start + block]
        sims = chunk @ yv.T
        if metric == "euclidean":
            # argmin distance == argmax (2<x,y> - |y|^2)
            sims = 2.0 * sims - y_sq
        idx[start:start + block] = np.argmax(sims, axis=1)
    accuracy = float(np.mean(idx == np.arange(n)))
    return accuracy, idx


def matching_accuracy(x, y, metric: str = "cosine") -> float:
    return matching(x, y, metric=metric)[0]


def pairwise_matrix(root, manifest: DatasetManifest, layer: int, index: IndexSpec,
                    strategy: PoolingStrategy, jobs: int | None = None) -> PairwiseMatrix:
    """All-pairs similarity at one layer. Pair order follows the manifest
    language list; the earlier-listed language is the reference view."""
    if layer < 0 or layer >= manifest.num_layers:
        raise ValidationError(
            f"layer {layer} out of range (num_layers {manifest.num_layers})")
    langs = manifest.languages
    jobs = jobs or os.cpu_count() or 1

    with ThreadPoolExecutor(max_workers=jobs) as ex:
        pooled = dict(zip(langs, ex.map(
            lambda lang: _load_pooled(root, manifest, lang, layer, strategy), langs)))

        pairs = [(i, j) for i in range(len(langs)) for j in range(i + 1, len(langs))]

        def one(pair):
            i, j = pair
            try:
                value, _ = score(pooled[langs[i]], pooled[langs[j]], index)
            except XsimError as e:
                raise type(e)(
                    f"pair ({langs[i]}, {langs[j]}) layer {layer}: {e}") from None
            return value

        values = list(ex.map(one, pairs))

    out = np.ones((len(langs), len(langs)))
    for (i, j), v in zip(pairs, values):
        out[i, j] = out[j, i] = v
    return PairwiseMatrix(layer=layer, index=index, pooling=strategy.kind,
                          languages=list(langs), values=out)


def five_number(scores: np.ndarray):
    q1, med, q3 = np.percentile(scores, [25, 50, 75])
    iqr = q3 - q1
    lo = float(scores[scores >= q1 - 1.5 * iqr].min())
    hi = float(scores[scores <= q3 + 1.5 * iqr].max())
    return float(q1), float(med), float(q3), lo, hi


def layer_summary(root, manifest: DatasetManifest, index: IndexSpec,
                  strategy: PoolingStrategy, jobs: int | None = None) -> list[LayerSummary]:
    """Boxplot statistics of all pairwise scores per layer, flagging pairs
    that fall below the lower whisker (1.5 IQR rule)."""
    out = []
    for layer in range(manifest.num_layers):
        mat = pairwise_matrix(root, manifest, layer, index, strategy, jobs=jobs)
        iu = np.triu_indices(len(mat.languages), k=1)
        scores = mat.values[iu]
        q1, med, q3, lo, hi = five_number(scores)
        outliers = [(mat.languages[i], mat.languages[j], float(mat.values[i, j]))
                    for i, j in zip(*iu) if mat.values[i, j] < lo]
        outliers.sort(key=lambda t: t[2])
        out.append(LayerSummary(layer=layer, q1=q1, median=med, q3=q3,
                                lo_whisker=lo, hi_whisker=hi, outliers=outliers))
    return out


def agglomerative_cluster(matrix: PairwiseMatrix, linkage: str = "average") -> Dendrogram:
    """Agglomerative clustering on distances 1 - similarity.

    Ties between equally close cluster pairs break toward the pair whose
    smallest leaf labels sort lexicographically first, making the tree
    deterministic.
    """
    if linkage not in LINKAGES:
        raise ValidationError(f"unknown linkage {linkage!r}")
    sims = np.asarray(matrix.values, dtype=np.float64)
    langs = matrix.languages
    n = len(langs)
    if sims.shape != (n, n):
        raise ValidationError(f"matrix shape {sims.shape} does not match {n} languages")
    if n < 2:
        raise ValidationError("need at least 2 languages to cluster")
    if np.abs(sims - sims.T).max() > 1e-8:
        raise ValidationError("matrix not symmetric within 1e-8")
    dist = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = 0.5 * ((1.0 - sims[i, j]) + (1.0 - sims[j, i]))

    size = {i: 1 for i in range(n)}
    minleaf = {i: langs[i] for i in range(n)}
    active = set(range(n))
    merges: list[tuple[int, int, float]] = []
    next_id = n

    def pair_key(a, b):
        return tuple(sorted((minleaf[a], minleaf[b])))

    while len(active) > 1:
        d_min = min(dist.values())
        a, b = min((p for p, d in dist.items() if d == d_min),
                   key=lambda p: pair_key(*p))
        if minleaf[b] < minleaf[a]:
            a, b = b, a
        merges.append((a, b, d_min))
        new = next_id
        next_id += 1
        for k in active - {a, b}:
            dak = dist.pop(tuple(sorted((a, k))))
            dbk = dist.pop(tuple(sorted((b, k))))
            if linkage == "single":
                d = min(dak, dbk)
            elif linkage == "complete":
                d = max(dak, dbk)
            else:
                d = (size[a] * dak + size[b] * dbk) / (size[a] + size[b])
            dist[(k, new)] = d
        dist.pop(tuple(sorted((a, b))))
        active -= {a, b}
        active.add(new)
        size[new] = size[a] + size[b]
        minleaf[new] = min(minleaf[a], minleaf[b])

    return Dendrogram(leaves=list(langs), merges=merges, linkage=linkage)


def to_newick(tree: Dendrogram) -> str:
    """Render a dendrogram as a Newick string with branch lengths."""
    n = len(tree.leaves)
    height = {i: 0.0 for i in range(n)}
    children = {}
    for node, (a, b, h) in enumerate(tree.merges, start=n):
        children[node] = (a, b)
        height[node] = h

    def render(node: int) -> str:
        if node < n:
            return tree.leaves[node]
        a, b = children[node]
        parts = [f"{render(c)}:{height[node] - height[c]:.10g}" for c in (a, b)]
        return "(" + ",".join(parts) + ")"

    root = n + len(tree.merges) - 1
    return render(root) + ";"


def pairwise_to_csv(matrix: PairwiseMatrix) -> str:
    lines = ["," + ",".join(matrix.languages)]
    for lang, row in zip(matrix.languages, matrix.values):
        lines.append(lang + "," + ",".join(f"{v:.12g}" for v in row))
    return "\n".join(lines) + "\n"


def pairwise_from_csv(text: str, layer: int = -1, index: IndexSpec | None = None,
                      pooling: str = "mean") -> PairwiseMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty matrix CSV")
    header = lines[0].split(",")
    if header[0] != "":
        raise ValidationError("matrix CSV must start with an empty header cell")
    langs = header[1:]
    n = len(langs)
    if len(lines) - 1 != n:
        raise ValidationError(f"matrix CSV has {len(lines) - 1} rows for {n} languages")
    values = np.empty((n, n))
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if cells[0] != langs[i]:
            raise ValidationError(
                f"row label {cells[0]!r} does not match column {langs[i]!r}")
        if len(cells) != n + 1:
            raise ValidationError(f"row {langs[i]!r} has {len(cells) - 1} values, need {n}")
        try:
            values[i] = [float(c) for c in cells[1:]]
        except ValueError as e:
            raise ValidationError(f"row {langs[i]!r}: {e}") from None
    return PairwiseMatrix(layer=layer, index=index or IndexSpec(kind="cka"),
                          pooling=pooling, languages=langs, values=values)
