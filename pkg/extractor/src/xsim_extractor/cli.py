import argparse
import logging
import sys

from .extract import ExtractionJob, extract, read_corpus_tsv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="xsim-extract",
        description="Dump per-layer encoder hidden states to an XEMB dataset")
    p.add_argument("--model", required=True,
                   help="model id or local checkpoint directory")
    p.add_argument("--corpus", required=True,
                   help="aligned TSV; header row holds language codes")
    p.add_argument("--langs", default=None,
                   help="comma-separated subset of the corpus languages")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--max-len", type=int, default=128)
    p.add_argument("--device", default="cpu")
    p.add_argument("--dataset-id", default="extracted")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    langs = args.langs.split(",") if args.langs else None
    try:
        corpus = read_corpus_tsv(args.corpus, langs)
        job = ExtractionJob(model_name=args.model, corpus=corpus,
                            output_root=args.out, batch_size=args.batch,
                            max_length=args.max_len, device=args.device,
                            dataset_id=args.dataset_id)
        manifest = extract(job)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
