"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--plan]

``--plan`` also times a full tight-passage plan under each backend, each in a
fresh interpreter so the backend switch takes effect at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from busplanner import _pykernels
from busplanner.fixtures import tight_passage
from busplanner.scenario import scenario_from_dict

PLAN_SNIPPET = """
import time
from busplanner import fixtures, kernels
from busplanner.planner import sqp_plan
from busplanner.scenario import scenario_from_dict
sc = scenario_from_dict(fixtures.tight_passage())
sc.path, sc.corridor
t = time.perf_counter()
r = sqp_plan(sc)
print(kernels.BACKEND, r.status, r.iterations, time.perf_counter() - t)
"""


def workloads(path, rng):
    x, y, psi, kappa, ds = path.x, path.y, path.psi, path.kappa, path.delta_s
    n_pts = 20000
    pts = path.to_cartesian_many(rng.uniform(0, path.length, n_pts), rng.uniform(-3, 3, n_pts))
    s_query = rng.uniform(0, path.length, 200000)
    m = 200000
    arc = (
        rng.uniform(0, 50, m), rng.uniform(-1, 1, m), rng.uniform(-0.2, 0.2, m),
        rng.uniform(-0.07, 0.07, m), rng.uniform(0, 60, m), rng.choice([-1.275, 1.275], m),
    )
    return {
        "hermite_eval (200k stations)": lambda k: k.hermite_eval(x, y, psi, ds, s_query),
        "project_points (20k points)": lambda k: k.project_points(x, y, psi, kappa, ds, pts[:, 0], pts[:, 1]),
        "arc_edge (200k rows)": lambda k: k.arc_edge(*arc),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--plan", action="store_true", help="also time a full plan per backend")
    args = parser.parse_args(argv)

    try:
        from busplanner import _ckernels
    except ImportError:
        print("compiled kernels are not built; run `python3 setup.py build_ext --inplace`", file=sys.stderr)
        return 1

    path = scenario_from_dict(tight_passage()).path
    jobs = workloads(path, np.random.default_rng(0))
    print(f"{'kernel':32s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, job in jobs.items():
        t_py = min(timeit.repeat(lambda: job(_pykernels), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: job(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:32s} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:8.1f}x")

    if args.plan:
        for pure in (False, True):
            env = dict(os.environ)
            env.pop("BUSPLANNER_PURE_PYTHON", None)
            if pure:
                env["BUSPLANNER_PURE_PYTHON"] = "1"
            out = subprocess.run([sys.executable, "-c", PLAN_SNIPPET], env=env, capture_output=True, text=True, check=True)
            backend, status, iters, seconds = out.stdout.split()
            print(f"plan tight_passage [{backend}]: {status} in {iters} iterations, {float(seconds):.3f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
