"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--size WxH]

Times each kernel on a synthetic screenshot-sized input, then the whole
partition pipeline with each backend swapped in, and checks the outputs
are identical.
"""
import argparse
import time

import numpy as np

from guiprune import _backend, vision
from guiprune.sim import synth_screenshot


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def kernel_cases(img, gray):
    gx, gy = vision.sobel(gray)
    mag = np.hypot(gx, gy)
    thin = _backend.python_kernels.nonmax_suppression(mag, gx, gy)
    edges = _backend.python_kernels.hysteresis(thin, 30.0, 100.0)
    labels, n = _backend.python_kernels.label_components(edges)
    rgb = np.ascontiguousarray(img.data)
    h, w = rgb.shape[:2]
    return {
        "resize_bilinear": lambda k: k.resize_bilinear(rgb, h // 2, w // 2),
        "nonmax_suppression": lambda k: k.nonmax_suppression(mag, gx, gy),
        "hysteresis": lambda k: k.hysteresis(thin, 30.0, 100.0),
        "label_components": lambda k: k.label_components(edges),
        "component_boxes": lambda k: k.component_boxes(labels, n),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def partition_with(kern, img):
    saved = vision.kernels
    vision.kernels = kern
    try:
        return vision.partition_frame(img).mask.is_foreground
    finally:
        vision.kernels = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", default="1080x2400", help="screenshot size WxH")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    w, h = (int(v) for v in args.size.lower().split("x"))
    img = synth_screenshot(args.seed, w, h).image
    gray = vision.preprocess_gray(img).data
    backends = _backend.available_backends()
    if "compiled" not in backends:
        print("compiled kernels not built; only the numpy fallback is available")

    names = sorted(backends)
    print(f"input {w}x{h}, best of {args.repeat}")
    print(f"{'kernel':<20}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}  match")
    cases = kernel_cases(img, gray)
    cases["partition_frame"] = None
    for name, fn in cases.items():
        times, outs = {}, {}
        for b in names:
            if fn is None:
                times[b], outs[b] = best_of(lambda: partition_with(backends[b], img), args.repeat)
            else:
                times[b], outs[b] = best_of(lambda: fn(backends[b]), args.repeat)
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        match = all(same(outs[names[0]], outs[b]) for b in names[1:])
        print(f"{name:<20}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in names) + f"{speed:>9.1f}x  {match}")


if __name__ == "__main__":
    main()
