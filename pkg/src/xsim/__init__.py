"""Cross-lingual representation similarity toolkit."""

from .analysis import (
    Dendrogram,
    LayerProfile,
    LayerSummary,
    PairwiseMatrix,
    agglomerative_cluster,
    layer_profile,
    layer_summary,
    matching,
    matching_accuracy,
    pairwise_from_csv,
    pairwise_matrix,
    pairwise_to_csv,
    to_newick,
)
from .embstore import (
    DatasetManifest,
    SentenceMatrix,
    TokenEmbeddingSet,
    load_manifest,
    read_matrix,
    read_token_embeddings,
    save_manifest,
    write_matrix,
    write_token_embeddings,
)
from .errors import FormatError, ValidationError, XsimError
from .pooling import PoolingStrategy, pool
from .simindex import (
    CcaResult,
    IndexSpec,
    cca,
    cka,
    cosine_parallel,
    cosine_permuted,
    pwcca,
    score,
    svcca,
)

__version__ = "0.1.0"
