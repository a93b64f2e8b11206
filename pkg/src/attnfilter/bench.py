"""Benchmark runner: per-variant timing, token accounting, optional recall.

Variants:
  baseline    full token set, no detector (detector time reported as 0)
  atf         calibrated static mask unioned with detected object regions
  atf_no_srt  detected object regions only (ablation of the static mask)

Detector and encoder stages are timed separately per image with a
monotonic clock, medians taken over repetitions after one untimed warm-up
run.  Token counts are exact integers, so their means are timing-noise
free.  If the dataset ships query embeddings and a truth file, Recall@K of
each variant's gallery is included.
"""

import json
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archive import load_archive
from .errors import FormatError, InputError
from .filtering import atf_embed, resolve_aux
from .netpbm import read_image
from .retrieval import RetrievalSet, recall_at_k
from .vit import encode, tokenize

VARIANTS = ("baseline", "atf", "atf_no_srt")
RECALL_KS = (1, 5, 10)


@dataclass(frozen=True)
class BenchRow:
    variant: str
    recall: dict | None   # {k: rate} or None when the dataset has no queries
    detector_ms: float    # mean over images of per-image medians
    encoder_ms: float
    total_ms: float
    total_tokens: int     # exact sum of per-image encoder token counts
    image_count: int

    @property
    def mean_tokens(self):
        return self.total_tokens / self.image_count


@dataclass(frozen=True)
class BenchReport:
    rows: tuple
    repetitions: int

    def to_dict(self):
        return {
            "repetitions": self.repetitions,
            "rows": [
                {
                    "variant": r.variant,
                    "recall": None
                    if r.recall is None
                    else {str(k): v for k, v in r.recall.items()},
                    "detector_ms": r.detector_ms,
                    "encoder_ms": r.encoder_ms,
                    "total_ms": r.total_ms,
                    "total_tokens": r.total_tokens,
                    "image_count": r.image_count,
                    "mean_tokens": r.mean_tokens,
                }
                for r in self.rows
            ],
        }

    def render_table(self):
        """Aligned plain-text table: recall columns, split timing, tokens."""
        header = ["Method", "R@1", "R@5", "R@10", "Avg", "Time ms/image", "Tokens/image"]
        lines = [header]
        for r in self.rows:
            if r.recall is None:
                recall_cells = ["--", "--", "--", "--"]
            else:
                rates = [r.recall.get(k) for k in RECALL_KS]
                recall_cells = [
                    "--" if v is None else f"{100.0 * v:.1f}%" for v in rates
                ]
                present = [v for v in rates if v is not None]
                recall_cells.append(
                    f"{100.0 * sum(present) / len(present):.1f}%" if present else "--"
                )
                recall_cells = recall_cells[:3] + [recall_cells[3]]
            lines.append(
                [
                    r.variant,
                    *recall_cells,
                    f"{r.total_ms:.1f} ({r.detector_ms:.1f} + {r.encoder_ms:.1f})",
                    f"{r.mean_tokens:.1f}",
                ]
            )
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        rendered = []
        for row in lines:
            rendered.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        rendered.insert(1, "-" * len(rendered[0]))
        return "\n".join(rendered) + "\n"


def dataset_images(dataset_dir):
    """Sorted netpbm image paths under <dataset>/images."""
    image_dir = Path(dataset_dir) / "images"
    if not image_dir.is_dir():
        raise InputError(f"{dataset_dir}: no images/ directory")
    paths = sorted(
        p for p in image_dir.iterdir() if p.suffix.lower() in (".pgm", ".ppm")
    )
    if not paths:
        raise InputError(f"{image_dir}: no .pgm/.ppm images")
    return paths


def _load_queries(dataset_dir, d_model):
    """Optional (queries, truth) pair from queries.json + truth.json."""
    queries_path = Path(dataset_dir) / "queries.json"
    truth_path = Path(dataset_dir) / "truth.json"
    if not queries_path.exists() or not truth_path.exists():
        return None
    tensors = load_archive(queries_path)
    if "embeddings" not in tensors or tensors["embeddings"].ndim != 2:
        raise FormatError(f"{queries_path}: expected a 2-D 'embeddings' tensor")
    queries = tensors["embeddings"]
    if queries.shape[1] != d_model:
        raise FormatError(
            f"{queries_path}: query width {queries.shape[1]} != d_model {d_model}"
        )
    truth_raw = json.loads(truth_path.read_text(encoding="utf-8"))
    if not isinstance(truth_raw, list) or not all(isinstance(i, int) for i in truth_raw):
        raise FormatError(f"{truth_path}: expected a JSON list of gallery indices")
    return queries, np.asarray(truth_raw, dtype=np.int64)


def _run_once(image, weights, config, variant, static_mask, detector, aux):
    """One timed run; returns (embedding, tokens, detector_s, encoder_s)."""
    if variant == "baseline":
        t0 = time.perf_counter()
        token_set = tokenize(image, weights, config)
        embedding = encode(token_set, weights, config)
        t1 = time.perf_counter()
        return embedding, token_set.count, 0.0, t1 - t0
    mask = static_mask if variant == "atf" else np.zeros(config.token_count, dtype=bool)
    embedding, stats = atf_embed(image, weights, config, mask, detector, aux)
    return embedding, stats.tokens_after, stats.detector_seconds, stats.encoder_seconds


def bench_run(
    dataset_dir,
    weights,
    config,
    variants,
    *,
    static_mask=None,
    detector=None,
    repetitions=5,
):
    """Time the requested variants over a dataset directory."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    needs_detector = any(v != "baseline" for v in variants)
    if needs_detector and detector is None:
        raise InputError("atf variants need a detector spec")
    if "atf" in variants and static_mask is None:
        raise InputError("the atf variant needs a calibrated static mask")

    paths = dataset_images(dataset_dir)
    images = [read_image(p) for p in paths]
    auxes = [
        resolve_aux(p, detector, dataset_dir) if needs_detector and detector else None
        for p in paths
    ]
    retrieval = _load_queries(dataset_dir, config.d_model)

    rows = []
    for variant in variants:
        det_means = []
        enc_means = []
        total_tokens = 0
        gallery = []
        for image, aux in zip(images, auxes):
            det_times = []
            enc_times = []
            embedding = None
            tokens = 0
            for rep in range(repetitions + 1):
                embedding, tokens, det_s, enc_s = _run_once(
                    image, weights, config, variant, static_mask, detector, aux
                )
                if rep == 0:
                    continue  # warm-up, untimed
                det_times.append(det_s)
                enc_times.append(enc_s)
            det_means.append(statistics.median(det_times))
            enc_means.append(statistics.median(enc_times))
            total_tokens += tokens
            gallery.append(embedding)
        recall = None
        if retrieval is not None:
            queries, truth = retrieval
            rset = RetrievalSet(
                gallery=np.stack(gallery), queries=queries, truth=truth
            )
            recall = {k: recall_at_k(rset, k) for k in RECALL_KS}
        n = len(images)
        det_ms = 1000.0 * sum(det_means) / n
        enc_ms = 1000.0 * sum(enc_means) / n
        rows.append(
            BenchRow(
                variant=variant,
                recall=recall,
                detector_ms=det_ms,
                encoder_ms=enc_ms,
                total_ms=det_ms + enc_ms,
                total_tokens=total_tokens,
                image_count=n,
            )
        )
    return BenchReport(rows=tuple(rows), repetitions=repetitions)


def save_report(report, json_path):
    """Write the report as JSON plus a sibling .txt table."""
    json_path = Path(json_path)
    json_path.write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    table_path = json_path.with_suffix(".txt")
    table_path.write_text(report.render_table(), encoding="utf-8")
    return table_path
