"""Command-line front end. Emits plot-ready tabular data only; rendering
is left to external tools.

Exit codes: 0 success, 1 environment/I-O, 2 validation/usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import analysis, embstore, pooling, simindex
from .errors import XsimError

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


def _write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _data_root(args) -> str:
    root = args.data or os.environ.get("XSIM_DATA")
    if not root:
        raise XsimError("no dataset root: pass --data or set XSIM_DATA")
    return root


def _index_spec(args) -> simindex.IndexSpec:
    return simindex.IndexSpec(
        kind=args.index,
        svcca_components=args.svcca_k,
        pwcca_reference=args.pwcca_reference,
        rank_tolerance=args.rank_tol,
        regularization=args.ridge,
    )


def _pooling(args) -> pooling.PoolingStrategy:
    return pooling.PoolingStrategy(kind=args.pooling,
                                   mean_excludes_special=args.exclude_special)


def _index_record(spec: simindex.IndexSpec, result) -> dict:
    rec = {"index": dataclasses.asdict(spec)}
    if result is not None:
        rec["correlations"] = [float(r) for r in result.correlations]
        rec["weights"] = [float(w) for w in result.weights]
        rec["effective_rank"] = list(result.effective_rank)
    return rec


def _add_index_flags(p: argparse.ArgumentParser, default: str = "cka") -> None:
    p.add_argument("--index", default=default, choices=simindex.INDEX_KINDS)
    p.add_argument("--svcca-k", type=int, default=20)
    p.add_argument("--pwcca-reference", default="first_argument",
                   choices=("first_argument", "symmetric_mean"))
    p.add_argument("--rank-tol", type=float, default=1e-10)
    p.add_argument("--ridge", type=float, default=0.0)


def _add_pooling_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pooling", default="mean", choices=embstore.POOLING_KINDS)
    p.add_argument("--exclude-special", action="store_true",
                   help="drop first/last token of each sentence before mean pooling")


def cmd_pool(args) -> int:
    root = _data_root(args)
    manifest = embstore.load_manifest(root)
    strategy = pooling.PoolingStrategy(kind=args.strategy,
                                       mean_excludes_special=args.exclude_special)
    path = os.path.join(root, manifest.path_for(args.lang, args.layer))
    emb = embstore.read_token_embeddings(path, language=args.lang, layer=args.layer)
    mat = pooling.pool(emb, strategy)
    embstore.write_matrix(mat, args.out)
    print(f"wrote {args.out}: {mat.rows}x{mat.cols} {mat.pooling}")
    return EXIT_OK


def cmd_score(args) -> int:
    x = embstore.read_matrix(args.x)
    y = embstore.read_matrix(args.y)
    spec = _index_spec(args)
    if spec.kind == "cosine" and args.permuted:
        value = simindex.cosine_permuted(x, y, seed=args.seed)
        result = None
    else:
        value, result = simindex.score(x, y, spec)
    print(f"{value:.12g}")
    rec = _index_record(spec, result)
    rec["score"] = value
    print(json.dumps(rec, sort_keys=True))
    return EXIT_OK


def cmd_profile(args) -> int:
    root = _data_root(args)
    manifest = embstore.load_manifest(root)
    pair = tuple(args.pair.split(","))
    if len(pair) != 2:
        raise XsimError(f"--pair must be two comma-separated codes, got {args.pair!r}")
    spec = _index_spec(args)
    strategy = _pooling(args)
    prof = analysis.layer_profile(root, manifest, pair, spec, strategy)
    record = {
        "pair": list(prof.pair),
        "index": dataclasses.asdict(spec),
        "pooling": dataclasses.asdict(strategy),
        "scores": prof.scores,
    }
    _write_text(args.out, json.dumps(record, indent=2, sort_keys=True) + "\n")
    if args.csv:
        lines = ["layer,score"] + [f"{i},{s:.12g}" for i, s in enumerate(prof.scores)]
        _write_text(args.csv, "\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_pairwise(args) -> int:
    root = _data_root(args)
    manifest = embstore.load_manifest(root)
    mat = analysis.pairwise_matrix(root, manifest, args.layer, _index_spec(args),
                                   _pooling(args), jobs=args.jobs)
    _write_text(args.out, analysis.pairwise_to_csv(mat))
    print(f"wrote {args.out}: {len(mat.languages)}x{len(mat.languages)} matrix")
    return EXIT_OK


def cmd_match(args) -> int:
    x = embstore.read_matrix(args.x)
    y = embstore.read_matrix(args.y)
    accuracy, idx = analysis.matching(x, y, metric=args.metric)
    print(f"{accuracy:.12g}")
    if args.out:
        _write_text(args.out, "\n".join(str(i) for i in idx) + "\n")
    return EXIT_OK


def cmd_summary(args) -> int:
    root = _data_root(args)
    manifest = embstore.load_manifest(root)
    summaries = analysis.layer_summary(root, manifest, _index_spec(args),
                                       _pooling(args), jobs=args.jobs)
    records = [{
        "layer": s.layer,
        "q1": s.q1, "median": s.median, "q3": s.q3,
        "lo_whisker": s.lo_whisker, "hi_whisker": s.hi_whisker,
        "outliers": [{"pair": [a, b], "score": v} for a, b, v in s.outliers],
    } for s in summaries]
    _write_text(args.out, json.dumps(records, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    if args.matrix:
        with open(args.matrix, encoding="utf-8") as f:
            mat = analysis.pairwise_from_csv(f.read())
    else:
        root = _data_root(args)
        manifest = embstore.load_manifest(root)
        if args.layer is None:
            raise XsimError("--layer required when clustering from a dataset")
        mat = analysis.pairwise_matrix(root, manifest, args.layer, _index_spec(args),
                                       _pooling(args), jobs=args.jobs)
    tree = analysis.agglomerative_cluster(mat, linkage=args.linkage)
    newick = analysis.to_newick(tree)
    print(newick)
    if args.out:
        _write_text(args.out, newick + "\n")
    if args.merges:
        record = {
            "leaves": tree.leaves,
            "linkage": tree.linkage,
            "merges": [{"nodes": [a, b], "height": h} for a, b, h in tree.merges],
        }
        _write_text(args.merges, json.dumps(record, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="xsim",
        description="Cross-lingual representation similarity toolkit")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for permuted-cosine baselines")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pool", help="pool one (language, layer) into an XMAT file")
    sp.add_argument("--data", default=None)
    sp.add_argument("--lang", required=True)
    sp.add_argument("--layer", type=int, required=True)
    sp.add_argument("--strategy", required=True, choices=embstore.POOLING_KINDS)
    sp.add_argument("--exclude-special", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_pool)

    sp = sub.add_parser("score", help="score two XMAT files with one index")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--permuted", action="store_true",
                    help="with --index cosine, permute y rows (seeded)")
    _add_index_flags(sp)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("profile", help="per-layer score curve for one language pair")
    sp.add_argument("--data", default=None)
    sp.add_argument("--pair", required=True, help="e.g. en,et (first code is the reference view)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--csv", default=None, help="also write a layer,score CSV")
    _add_index_flags(sp)
    _add_pooling_flags(sp)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("pairwise", help="all-pairs similarity matrix at one layer")
    sp.add_argument("--data", default=None)
    sp.add_argument("--layer", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--jobs", type=int, default=None)
    _add_index_flags(sp)
    _add_pooling_flags(sp)
    sp.set_defaults(func=cmd_pairwise)

    sp = sub.add_parser("match", help="translation-matching probe on two XMAT files")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--metric", default="cosine", choices=("cosine", "euclidean"))
    sp.add_argument("--out", default=None, help="write per-sentence argmax indices")
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("summary", help="per-layer boxplot statistics over all pairs")
    sp.add_argument("--data", default=None)
    sp.add_argument("--out", required=True)
    sp.add_argument("--jobs", type=int, default=None)
    _add_index_flags(sp)
    _add_pooling_flags(sp)
    sp.set_defaults(func=cmd_summary)

    sp = sub.add_parser("cluster", help="agglomerative clustering of a pairwise matrix")
    sp.add_argument("--matrix", default=None, help="pairwise CSV (else computed from --data)")
    sp.add_argument("--data", default=None)
    sp.add_argument("--layer", type=int, default=None)
    sp.add_argument("--linkage", default="average", choices=analysis.LINKAGES)
    sp.add_argument("--out", default=None, help="write Newick tree")
    sp.add_argument("--merges", default=None, help="write merge-list JSON")
    sp.add_argument("--jobs", type=int, default=None)
    _add_index_flags(sp)
    _add_pooling_flags(sp)
    sp.set_defaults(func=cmd_cluster)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except XsimError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
