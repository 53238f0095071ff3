"""Compare the numba and numpy kernel backends on the hot paths.

Runs each workload with backend pinned per call (no env churn), prints
the median wall time per backend and the speedup.  Workloads cover the
two kernel families (ray visibility, convolution/matmul) plus the two
end-to-end consumers (radiation scoring, a VAE training step).

Usage: python3 benchmarks/compare_backends.py [--repeat N] [--quick]
"""

from __future__ import annotations

import argparse
import os
import statistics
import time

import numpy as np

from heliogen.config import SkyConfig
from heliogen.kernels import conv2d, conv2d_bwd_w, conv2d_bwd_x, matmul
from heliogen.nn.vae import VaeModel, vae_loss
from heliogen.scene import Heightmap, boundary_condition_from_id
from heliogen.solar import Scene, SkyModel, avg_radiation

BACKENDS = ("numba", "numpy")


def timed(fn, repeat: int) -> float:
    fn()  # warm-up: first numba call pays JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def workloads(quick: bool):
    rng = np.random.default_rng(0)
    sky = SkyModel.from_config(SkyConfig(day_step=14 if quick else 7))
    h = Heightmap(rng.uniform(0.0, 10.0, (5, 5)))
    scene = Scene.build(h, boundary_condition_from_id(85, 6), 11)

    n = 16 if quick else 64
    x = rng.standard_normal((n, 16, 16, 8)).astype(np.float32)
    w = rng.standard_normal((3, 3, 8, 16)).astype(np.float32)
    dy = rng.standard_normal((n, 8, 8, 16)).astype(np.float32)
    a = rng.standard_normal((n * 4, 256)).astype(np.float32)
    b = rng.standard_normal((256, 256)).astype(np.float32)

    model = VaeModel(16, 16, seed=3)
    batch = rng.uniform(0.0, 1.0, (32, 16, 16)).astype(np.float32)
    eps = rng.standard_normal((32, 16)).astype(np.float32)

    def train_step(backend):
        # backend flows to the kernel layer through the env switch
        os.environ["HELIOGEN_BACKEND"] = backend
        try:
            for p in model.parameters():
                p.grad = None
            vae_loss(model, batch, eps).total.backward()
        finally:
            os.environ.pop("HELIOGEN_BACKEND", None)

    return [
        ("radiation (mesh 11)", lambda be: avg_radiation(scene, sky, backend=be)),
        ("conv2d fwd", lambda be: conv2d(x, w, 2, 1, backend=be)),
        ("conv2d bwd_x", lambda be: conv2d_bwd_x(dy, w, 2, 1, 16, 16, backend=be)),
        ("conv2d bwd_w", lambda be: conv2d_bwd_w(x, dy, 2, 1, 3, 3, backend=be)),
        ("matmul", lambda be: matmul(a, b, backend=be)),
        ("vae train step", train_step),
    ]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=9, help="timed runs per cell")
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()

    rows = []
    for name, fn in workloads(args.quick):
        cells = {be: timed(lambda be=be: fn(be), args.repeat) for be in BACKENDS}
        rows.append((name, cells["numba"], cells["numpy"]))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, fast, slow in rows:
        print(f"{name:<{width}}  {fast * 1e3:>8.2f}ms  {slow * 1e3:>8.2f}ms  "
              f"{slow / fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
