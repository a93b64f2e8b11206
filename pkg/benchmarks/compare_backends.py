#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallbacks.

Times each hot kernel on realistic shapes (T = 2916 tokens, d = 64) plus a
full single-image encode, and checks both backends agree numerically.

Usage: python benchmarks/compare_backends.py [--reps N] [--full]
"""

import argparse
import time

import numpy as np

from attnfilter import VitConfig, encode, init_weights, tokenize, use_backend
from attnfilter.backend import available_backends, kernels

T, D = 2916, 64


def bench(fn, reps):
    fn()  # warm-up (includes any JIT compile)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    scores = rng.standard_normal((T, T)).astype(np.float32)
    acts = rng.standard_normal((T, 4 * D)).astype(np.float32)
    rows = rng.standard_normal((T, D)).astype(np.float32)
    gamma = np.ones(D, dtype=np.float32)
    beta = np.zeros(D, dtype=np.float32)
    mask = rng.random((216, 216)) < 0.01
    return [
        ("softmax_rows 2916x2916", lambda k: k.softmax_rows(scores)),
        ("softmax_colmean 2916x2916", lambda k: k.softmax_colmean(scores)),
        ("layer_norm 2916x64", lambda k: k.layer_norm(rows, gamma, beta, 1e-6)),
        ("gelu 2916x256", lambda k: k.gelu(acts.ravel())),
        ("dilate 216x216 r=12", lambda k: k.dilate(mask, 12)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=5)
    parser.add_argument(
        "--full", action="store_true", help="also time a full 2916-token encode"
    )
    args = parser.parse_args()

    names = available_backends()
    if "numba" not in names:
        print("numba not importable; nothing to compare")
        return

    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    print(f"{'kernel':<28} {'numpy':>10} {'numba':>10} {'speed-up':>9}   max|diff|")
    for label, call in cases:
        results = {}
        timings = {}
        for name in ("numpy", "numba"):
            use_backend(name)
            k = kernels()
            timings[name] = bench(lambda: call(k), args.reps)
            results[name] = np.asarray(call(k), dtype=np.float64)
        diff = np.abs(results["numpy"] - results["numba"]).max()
        ratio = timings["numpy"] / timings["numba"]
        print(
            f"{label:<28} {1e3 * timings['numpy']:>8.2f}ms {1e3 * timings['numba']:>8.2f}ms"
            f" {ratio:>8.2f}x   {diff:.2e}"
        )

    if args.full:
        config = VitConfig(image_size=216, patch_size=4, channels=1)
        weights = init_weights(config, seed=0)
        image = rng.integers(0, 256, size=(216, 216), dtype=np.uint8)
        embeddings = {}
        print(f"\n{'full encode T=2916':<28}", end="")
        for name in ("numpy", "numba"):
            use_backend(name)
            token_set = tokenize(image, weights, config)
            t = bench(lambda: encode(token_set, weights, config), args.reps)
            embeddings[name] = encode(token_set, weights, config)
            print(f" {1e3 * t:>8.0f}ms", end="")
        diff = np.abs(
            embeddings["numpy"].astype(np.float64) - embeddings["numba"].astype(np.float64)
        ).max()
        print(f"   max|diff| {diff:.2e}")

    use_backend("numba")


if __name__ == "__main__":
    main()
