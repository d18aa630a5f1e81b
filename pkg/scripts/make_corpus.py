"""Build a prepared benchmark corpus: synthesize JPEGs (or take a directory of
existing ones) and center-crop them to 224x224."""
import argparse
from pathlib import Path

from dctpipe.bench import make_synthetic_corpus, prepare_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("output_dir", type=Path)
    ap.add_argument("--source", type=Path, help="directory of JPEGs; synthesized when omitted")
    ap.add_argument("--count", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quality", type=int, help="re-encode quality; default keeps source tables")
    args = ap.parse_args()
    src = args.source
    if src is None:
        src = args.output_dir / "raw"
        make_synthetic_corpus(src, count=args.count, seed=args.seed)
    manifest = prepare_corpus(src, args.output_dir / "prepared", quality=args.quality)
    print(f"{len(manifest.entries)} images, {len(manifest.skipped)} skipped -> {args.output_dir / 'prepared'}")


if __name__ == "__main__":
    main()
