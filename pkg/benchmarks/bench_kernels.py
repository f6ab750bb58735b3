"""Compare the numba and numpy backends of the pole-sum and log-increment kernels.

    python3 benchmarks/bench_kernels.py [--len 8] [--points 1024] [--repeat 5]

Inputs are the genus-2 reference group's holomorphic differential evaluated on
its boundary circles, which is the workload of period and variation runs.
"""

import argparse
import time

import numpy as np

from schottky import _kernels, fixtures
from schottky.series import HolomorphicDifferential


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--len", type=int, default=8)
    ap.add_argument("--points", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba unavailable (or SCHOTTKY_DISABLE_NUMBA set); nothing to compare")

    group = fixtures.genus2()
    h = HolomorphicDifferential.build(group, 0, args.len)
    d = group.disks[0].D
    u = d.center + d.radius * np.exp(2j * np.pi * np.arange(args.points) / args.points)
    print(f"poles {len(h.poles)}, layers {h.n_layers}, points {args.points}")

    # compile outside the timed region
    _kernels.pole_layer_sums(u[:2], h.poles, h.weights, h.offsets, use_numba=True)
    _kernels.log_increments(u[0], u[1], h.poles, h.weights, use_numba=True)

    rows = []
    t_nb, (s_nb, _) = best_of(lambda: _kernels.pole_layer_sums(u, h.poles, h.weights, h.offsets, use_numba=True), args.repeat)
    t_np, (s_np, _) = best_of(lambda: _kernels.pole_layer_sums(u, h.poles, h.weights, h.offsets, use_numba=False), args.repeat)
    rows.append(("pole_layer_sums", t_nb, t_np, float(np.max(np.abs(s_nb - s_np)))))

    def logs(flag):
        return sum(_kernels.log_increments(a, b, h.poles, h.weights, use_numba=flag)[0]
                   for a, b in zip(u[:64], u[1:65]))

    t_nb, l_nb = best_of(lambda: logs(True), args.repeat)
    t_np, l_np = best_of(lambda: logs(False), args.repeat)
    rows.append(("log_increments x64", t_nb, t_np, abs(l_nb - l_np)))

    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, a, b, diff in rows:
        print(f"{name:<22}{a:>12.4f}{b:>12.4f}{b / a:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
