"""Compare the pure-Python and the compiled backends.

Times the 2x2 kernel, one pass of weight computation over all pairs, and a
complete run, and checks that both backends give bitwise identical results.

    python benchmarks/bench_backends.py [--order 16] [--kernels 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from hyperkog import Config, _backend, run
from hyperkog.harness import TestSpec, generate
from hyperkog.kernel2x2 import _hsvd2
from hyperkog.sweep import IterationState, build_pair_partition, compute_all_weights


def best_of(repeat, fn):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_kernel(count, repeat):
    rng = np.random.default_rng(1)
    pivots = [[complex(z) for z in rng.standard_normal(4) + 1j * rng.standard_normal(4)]
              for _ in range(count)]
    kernels = {"python": _hsvd2}
    if "compiled" in _backend.available():
        from hyperkog._core import hsvd2_raw

        kernels["compiled"] = hsvd2_raw
    rows = {}
    for name, k in kernels.items():
        t, out = best_of(repeat, lambda k=k: [k(*g, 1, -1, 1.0, True) for g in pivots])
        rows[name] = (t, repr(out))
    return rows


def bench_weights(g, repeat):
    rows = {}
    for name in _backend.available():
        state = IterationState.start(g.G0, g.J0, accumulate=False)
        part = build_pair_partition(state.J)
        t, w = best_of(repeat, lambda: compute_all_weights(state, part, 1.0, 1, name))
        rows[name] = (t, w.tobytes())
    return rows


def bench_run(g, repeat):
    rows = {}
    for name in _backend.available():
        t, res = best_of(repeat, lambda: run(g.G0, g.J0, Config(backend=name, tasks=1)))
        rows[name] = (t, res.Sigma.tobytes() + res.U.tobytes() + res.V_inv.tobytes())
    return rows


def show(title, rows):
    base = rows["python"][0]
    same = len({v[1] for v in rows.values()}) == 1
    print(f"{title}  (results {'identical' if same else 'DIFFER'})")
    for name, (t, _) in rows.items():
        print(f"  {name:9s} {t * 1e3:10.2f} ms   speed-up {base / t:7.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order", type=int, default=16)
    ap.add_argument("--field", default="complex", choices=("real", "complex"))
    ap.add_argument("--kernels", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"backends available: {', '.join(_backend.available())}")
    g = generate(TestSpec(order=args.order, field=args.field, range=3, seed=1))
    show(f"2x2 kernel, {args.kernels} complex hyperbolic pivots", bench_kernel(args.kernels, args.repeat))
    show(f"all weights, n = {args.order} {args.field}", bench_weights(g, args.repeat))
    show(f"full run, n = {args.order} {args.field}", bench_run(g, args.repeat))


if __name__ == "__main__":
    main()
