"""Command-line interface.

Subcommands: init-model, calibrate, profile, embed, bench, eval-retrieval.
Domain errors print to stderr and exit with status 2.
"""

import argparse
import json
import random
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .archive import load_archive, save_archive
from .attention import attention_rate, export_heatmap
from .bench import VARIANTS, bench_run, save_report
from .calibration import load_mask, save_mask, static_region_mask
from .config import load_config
from .errors import FormatError, InputError
from .filtering import DetectorSpec, atf_embed, filter_tokens
from .netpbm import read_image
from .retrieval import RetrievalSet, recall_at_k
from .vit import encode, init_weights, load_weights, save_weights, tokenize

# CLI spelling (hyphenated) -> internal detector kind
DETECTOR_NAMES = {
    "ground-truth": "ground_truth",
    "luminance": "luminance",
    "score-map": "score_map",
}


def _config_arg(parser):
    parser.add_argument("--config", required=True, help="model config JSON")


def _weights_arg(parser):
    parser.add_argument("--weights", required=True, help="weights archive manifest")


def _detector_args(parser):
    parser.add_argument(
        "--detector", choices=sorted(DETECTOR_NAMES), help="object-region detector"
    )
    parser.add_argument(
        "--threshold", type=float, default=0.4, help="detector score threshold"
    )
    parser.add_argument(
        "--dilation", type=int, default=12, help="detection dilation radius in pixels"
    )


def _detector_spec(args):
    if args.detector is None:
        return None
    return DetectorSpec(
        kind=DETECTOR_NAMES[args.detector],
        threshold=args.threshold,
        dilation_radius=args.dilation,
    )


def _image_paths(directory):
    paths = sorted(
        p for p in Path(directory).iterdir() if p.suffix.lower() in (".pgm", ".ppm")
    )
    if not paths:
        raise InputError(f"{directory}: no .pgm/.ppm images")
    return paths


def _cmd_init_model(args):
    config = load_config(args.config)
    weights = init_weights(config, seed=args.seed)
    save_weights(weights, args.out)
    print(f"wrote {args.out} (seed {args.seed}, {config.token_count} tokens)")
    return 0


def _cmd_calibrate(args):
    config = load_config(args.config)
    weights = load_weights(args.weights, config)
    paths = _image_paths(args.images)
    if len(paths) > args.samples:
        rng = random.Random(args.sample_seed)
        paths = sorted(rng.sample(paths, args.samples))
    images = [read_image(p) for p in paths]
    mask = static_region_mask(images, weights, config)
    save_mask(mask, args.out)
    print(f"wrote {args.out} ({int(mask.sum())}/{mask.size} static tokens, {len(paths)} samples)")
    return 0


def _cmd_profile(args):
    config = load_config(args.config)
    weights = load_weights(args.weights, config)
    paths = _image_paths(args.images)
    rate_map = attention_rate([read_image(p) for p in paths], weights, config)
    export_heatmap(rate_map, config.grid, args.out)
    print(f"wrote {args.out} ({config.grid[0]}x{config.grid[1]}, {len(paths)} samples)")
    return 0


def _cmd_embed(args):
    config = load_config(args.config)
    weights = load_weights(args.weights, config)
    image = read_image(args.image)
    spec = _detector_spec(args)
    static = None
    if args.static_mask is not None:
        static = load_mask(args.static_mask, expected_length=config.token_count)
    if spec is None and static is None:
        embedding = encode(tokenize(image, weights, config), weights, config)
        kept = config.token_count
    elif spec is None:
        # static mask only: no per-image detection stage
        token_set = filter_tokens(tokenize(image, weights, config), static)
        embedding = encode(token_set, weights, config)
        kept = token_set.count
    else:
        if static is None:
            static = np.zeros(config.token_count, dtype=bool)
        embedding, stats = atf_embed(image, weights, config, static, spec, args.aux)
        kept = stats.tokens_after
    save_archive({"embedding": embedding}, args.out)
    print(f"wrote {args.out} ({kept}/{config.token_count} tokens)")
    return 0


def _cmd_bench(args):
    config = load_config(args.config)
    weights = load_weights(args.weights, config)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    static = None
    if args.static_mask is not None:
        static = load_mask(args.static_mask, expected_length=config.token_count)
    report = bench_run(
        args.dataset,
        weights,
        config,
        variants,
        static_mask=static,
        detector=_detector_spec(args),
        repetitions=args.reps,
    )
    table = report.render_table()
    if args.out is not None:
        save_report(report, args.out)
    sys.stdout.write(table)
    return 0


def _cmd_eval_retrieval(args):
    gallery = _load_embeddings(args.gallery)
    queries = _load_embeddings(args.queries)
    truth_raw = json.loads(Path(args.truth).read_text(encoding="utf-8"))
    if not isinstance(truth_raw, list) or not all(isinstance(i, int) for i in truth_raw):
        raise FormatError(f"{args.truth}: expected a JSON list of gallery indices")
    rset = RetrievalSet(
        gallery=gallery, queries=queries, truth=np.asarray(truth_raw, dtype=np.int64)
    )
    ks = [int(k) for k in args.k.split(",")]
    results = {k: recall_at_k(rset, k) for k in ks}
    for k, rate in results.items():
        print(f"Recall@{k}: {rate:.4f}")
    if args.out is not None:
        Path(args.out).write_text(
            json.dumps({str(k): v for k, v in results.items()}, indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def _load_embeddings(path):
    tensors = load_archive(path)
    if "embeddings" not in tensors or tensors["embeddings"].ndim != 2:
        raise FormatError(f"{path}: expected a 2-D 'embeddings' tensor")
    return tensors["embeddings"]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="attnfilter",
        description="Vision-transformer embedding with attention-guided token filtering.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-model", help="write seeded random weights")
    _config_arg(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output weights manifest path")
    p.set_defaults(func=_cmd_init_model)

    p = sub.add_parser("calibrate", help="derive the static-region token mask")
    _config_arg(p)
    _weights_arg(p)
    p.add_argument("images", help="directory of sample images")
    p.add_argument("--samples", type=int, default=128, help="max sample images used")
    p.add_argument("--sample-seed", type=int, default=0, help="sampling RNG seed")
    p.add_argument("--out", required=True, help="output mask file path")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("profile", help="export the attention-rate heatmap")
    _config_arg(p)
    _weights_arg(p)
    p.add_argument("images", help="directory of sample images")
    p.add_argument("--out", required=True, help="output PGM path (patch-grid sized)")
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("embed", help="embed one image, optionally filtered")
    _config_arg(p)
    _weights_arg(p)
    p.add_argument("image", help="input image (.pgm/.ppm)")
    p.add_argument("--static-mask", help="calibrated static-region mask file")
    _detector_args(p)
    p.add_argument("--aux", help="detector aux file (mask PGM or score archive)")
    p.add_argument("--out", required=True, help="output embedding archive path")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("bench", help="time pipeline variants over a dataset")
    _config_arg(p)
    _weights_arg(p)
    p.add_argument("dataset", help="dataset directory (images/ plus optional aux)")
    p.add_argument(
        "--variants",
        default="baseline,atf",
        help=f"comma-separated subset of {','.join(VARIANTS)}",
    )
    p.add_argument("--static-mask", help="calibrated static-region mask file")
    _detector_args(p)
    p.add_argument("--reps", type=int, default=5, help="timing repetitions per image")
    p.add_argument("--out", help="report JSON path (table written alongside)")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("eval-retrieval", help="Recall@K over embedding archives")
    p.add_argument("--gallery", required=True, help="gallery embedding archive")
    p.add_argument("--queries", required=True, help="query embedding archive")
    p.add_argument("--truth", required=True, help="JSON list: query -> gallery index")
    p.add_argument("--k", default="1,5,10", help="comma-separated K values")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=_cmd_eval_retrieval)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, InputError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
