"""Benchmark the compiled kernels against the numpy fallback.

Times the two hot loops (skeleton thinning, log-polar binning) on a
synthetic 1024x1024 street-scene layer stack and compares both backends.

    python benchmarks/bench_kernels.py [--repeats 3]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from _synth import synth_label_sequence  # noqa: E402

from ssrvpr import (  # noqa: E402
    RefineConfig,
    SegmentationMap,
    build_layers,
    load_category_config,
    refine_layer,
)
from ssrvpr._kernels import _fallback  # noqa: E402
from ssrvpr.shapectx import ring_boundaries  # noqa: E402


def load_backends():
    backends = {"python": _fallback}
    try:
        from ssrvpr._kernels import _core

        backends["compiled"] = _core
    except ImportError:
        print("compiled kernels not built; timing the fallback only")
    return backends


def make_layers() -> list[np.ndarray]:
    config_dir = Path(__file__).resolve().parent.parent / "src/ssrvpr/configs"
    categories = load_category_config(config_dir / "cityscapes.cfg")
    frame = synth_label_sequence(1, 1024, 1024, seed=1, density=1.5)[0]
    stack = build_layers(SegmentationMap(frame), categories)
    refine = RefineConfig().resolve(1024, 1024)
    return [refine_layer(stack.layers[k], refine) for k in range(stack.num_layers)]


def time_call(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = load_backends()
    layers = make_layers()
    populated = [m for m in layers if m.any()]
    total_px = sum(int(m.sum()) for m in populated)
    print(f"workload: {len(populated)} refined 1024x1024 layers, "
          f"{total_px} foreground pixels\n")

    results: dict[str, dict[str, float]] = {}

    for name, impl in backends.items():
        results[name] = {}
        results[name]["thin"] = time_call(
            lambda impl=impl: [impl.thin(m) for m in populated], args.repeats
        )

    # shape-context workload: centroid+keypoints of each thinned layer
    # against its full skeleton cloud, as the encoder does
    from ssrvpr.skeleton import extract_features

    features = [extract_features(m, k) for k, m in enumerate(populated)]
    bounds = ring_boundaries(5, float(np.hypot(1024, 1024)) / 2.0)
    jobs = []
    for feats in features:
        if feats.is_empty:
            continue
        refs = np.concatenate(
            [np.array([feats.centroid]), feats.keypoints_xy.astype(np.float64)]
        )
        jobs.append((refs, feats.skeleton_xy.astype(np.float64)))
    n_pairs = sum(len(r) * len(c) for r, c in jobs)
    print(f"binning workload: {sum(len(r) for r, _ in jobs)} reference points, "
          f"{n_pairs} point pairs\n")

    for name, impl in backends.items():
        results[name]["shape_context"] = time_call(
            lambda impl=impl: [
                impl.shape_context_bins(r, c, bounds, 12) for r, c in jobs
            ],
            args.repeats,
        )

    print(f"{'kernel':<16}" + "".join(f"{n:>14}" for n in results)
          + ("   speedup" if len(results) == 2 else ""))
    for kernel in ("thin", "shape_context"):
        row = f"{kernel:<16}"
        times = [results[n][kernel] for n in results]
        for t in times:
            row += f"{t * 1e3:>12.1f}ms"
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    # sanity: identical outputs across backends
    if len(backends) == 2:
        a = backends["python"]
        b = backends["compiled"]
        for mask in populated:
            assert np.array_equal(a.thin(mask), b.thin(mask))
        for refs, cloud in jobs:
            assert np.array_equal(
                a.shape_context_bins(refs, cloud, bounds, 12),
                b.shape_context_bins(refs, cloud, bounds, 12),
            )
        print("\noutputs identical across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
