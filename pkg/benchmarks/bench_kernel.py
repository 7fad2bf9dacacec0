"""Compare the compiled slot kernel against the NumPy fallback.

    python benchmarks/bench_kernel.py [--reps 5] [--repeat 3]

Times whole simulations (one worker, so only the kernel differs) and checks
that both backends produce identical energies.
"""

import argparse
import time

import numpy as np

from coopnet.engine import SimConfig, run_simulation
from coopnet.kernel import BACKENDS

CASES = [
    ("adhoc", "coop"),
    ("adhoc", "tft"),
    ("central", "wsls"),
    ("central", "minimal"),
]


def best_time(config, backend, repeat):
    times, result = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        result = run_simulation(config, workers=1, backend=backend)
        times.append(time.perf_counter() - t)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--iters", type=int, default=300)
    ap.add_argument("--slots", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if "compiled" not in BACKENDS:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .`")
    print(f"{'case':<18}{'compiled s':>12}{'python s':>12}{'speedup':>10}  identical")
    for arch, strategy in CASES:
        cfg = SimConfig(architecture=arch, strategy=strategy, reps=args.reps, iters=args.iters,
                        slots=args.slots, seed=1)
        tc, rc = best_time(cfg, "compiled", args.repeat)
        tp, rp = best_time(cfg, "python", args.repeat)
        same = np.array_equal(rc.energy, rp.energy) and np.array_equal(rc.coop_count, rp.coop_count)
        print(f"{arch + '/' + strategy:<18}{tc:>12.3f}{tp:>12.3f}{tp / tc:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
