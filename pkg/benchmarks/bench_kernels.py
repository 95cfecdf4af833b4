"""Compare the compiled kernels with the numpy fallback on the same workloads.

Run with ``python benchmarks/bench_kernels.py``. Each workload is timed on
both backends and the outputs are checked for agreement.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from rotsync import rng
from rotsync.classifier import lift_cover
from rotsync.fixtures import generic
from rotsync.kernels import build_program, program_class


def _programs(system, backends):
    return {b: build_program([list(g.atoms) for g in system.generators], backend=b) for b in backends}


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def workloads(system, scale: float):
    n_words = max(1, int(200 * scale))
    words = [rng.letters_from_uniforms(rng.uniform_block(rng.stream_key(7, i), 0, 100), system.cumnu).astype(np.int32)
             for i in range(n_words)]
    xs = np.arange(4096) / 4096
    keys = rng.stream_keys(11, np.arange(max(1, int(2000 * scale))))
    return {
        "eval_word (100 letters x 4096 points)": lambda p: p.eval_word(words[0], xs),
        f"translation_number ({n_words} words)": lambda p: np.array(
            [p.translation_number(w, 1e-3, 4096, 64, 1e-10)[1] for w in words]),
        f"stationary_endpoints ({keys.size} chains x 200 steps)": lambda p: p.stationary_endpoints(
            system.cumnu, keys, 200, 0.0),
        f"spectrum ({keys.size} draws, N=200)": lambda p: p.spectrum(system.cumnu, keys, 200, 1 / 800, 64, 12, 1e-10),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scale", type=float, default=1.0, help="workload size multiplier")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    try:
        program_class("cython")
        backends = ["cython", "python"]
    except RuntimeError:
        backends = ["python"]
        print("compiled kernels unavailable; timing the fallback only")
    for name, system in [("generic", generic()), ("cover l=2", lift_cover(generic(), 2))]:
        progs = _programs(system, backends)
        print(f"\n[{name}]")
        print(f"{'workload':<52}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>12}")
        for label, fn in workloads(system, args.scale).items():
            res = {b: _time(lambda: fn(progs[b]), args.repeat) for b in backends}
            row = f"{label:<52}" + "".join(f"{res[b][0]:>11.4f}s" for b in backends)
            if len(backends) == 2:
                diff = float(np.max(np.abs(np.asarray(res["cython"][1]) - np.asarray(res["python"][1]))))
                row += f"{res['python'][0] / res['cython'][0]:>9.1f}x{diff:>12.2e}"
            print(row)


if __name__ == "__main__":
    main()
