"""Time the jitted and numpy node-QP kernels, and full branch-and-bound solves.

    python3 benchmarks/bench_qp.py [--nodes 300] [--problems 40] [--seed 1]

Node timings call both kernels in one process through ``solve_hourly_qp(kernel=...)``.
Full solves pick their kernel at import time, so the numpy run happens in a
child process with ``GREENMPC_DISABLE_NUMBA=1``.
"""
import argparse
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from greenmpc.mpc import _qp_numba, _qp_numpy, qp

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

PPFD_MIN, PPFD_MAX = 130.0, 880.0


def random_nodes(count, seed, hours=24):
    rng = np.random.default_rng(seed)
    nodes = []
    while len(nodes) < count:
        mode = rng.integers(0, 3, hours)
        solar = np.where(rng.random(hours) < 0.5, rng.uniform(0, 1100, hours), 0.0)
        r_lo = np.where(solar > 1, PPFD_MIN, 0.0)
        r_hi = np.full(hours, PPFD_MAX)
        q = rng.uniform(-0.02, 0.2, hours)
        lo, hi = qp.hour_ranges(mode, solar, r_lo, r_hi, PPFD_MIN, PPFD_MAX)
        if np.any(lo > hi):
            continue
        nodes.append((mode, q, solar, r_lo, r_hi, rng.uniform(lo.sum(), hi.sum())))
    return nodes


def time_kernel(kernel, nodes):
    kw = dict(beta=1e-4, gamma=0.05, ppfd_min=PPFD_MIN, ppfd_max=PPFD_MAX)
    qp.solve_hourly_qp(*nodes[0][:5], total=nodes[0][5], kernel=kernel, **kw)  # warm up / compile
    objs, iters = [], []
    t0 = time.perf_counter()
    for n in nodes:
        r = qp.solve_hourly_qp(*n[:5], total=n[5], kernel=kernel, **kw)
        objs.append(r.objective)
        iters.append(r.iterations)
    return (time.perf_counter() - t0) / len(nodes), np.array(objs), np.array(iters)


def full_solves(count, seed):
    """Mean wall time of ``solve`` on random day problems with the active kernel."""
    from helpers import random_problems

    from greenmpc.mpc import solve

    problems = random_problems(seed, count, min_free=6, max_free=14)
    solve(problems[0])
    t0 = time.perf_counter()
    for p in problems:
        solve(p)
    return (time.perf_counter() - t0) / len(problems)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=300)
    ap.add_argument("--problems", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--full-only", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)

    if args.full_only:
        print(json.dumps({"seconds": full_solves(args.problems, args.seed)}))
        return

    nodes = random_nodes(args.nodes, args.seed)
    t_nb, o_nb, it_nb = time_kernel(_qp_numba, nodes)
    t_np, o_np, it_np = time_kernel(_qp_numpy, nodes)
    diff = np.max(np.abs(o_nb - o_np) / np.maximum(1.0, np.abs(o_nb)))
    print(f"node QP, {len(nodes)} random 24-hour nodes")
    print(f"  numba  {t_nb * 1e6:9.1f} us/node  ({it_nb.mean():.1f} iterations avg)")
    print(f"  numpy  {t_np * 1e6:9.1f} us/node  ({it_np.mean():.1f} iterations avg)")
    print(f"  speedup {t_np / t_nb:.1f}x, max objective rel diff {diff:.1e}")

    here = [sys.executable, __file__, "--full-only", "--problems", str(args.problems),
            "--seed", str(args.seed)]
    res = {}
    for name, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, GREENMPC_DISABLE_NUMBA=flag)
        out = subprocess.run(here, env=env, check=True, capture_output=True, text=True).stdout
        res[name] = json.loads(out.strip().splitlines()[-1])["seconds"]
    print(f"branch-and-bound solve, {args.problems} random problems")
    for name, sec in res.items():
        print(f"  {name}  {sec * 1e3:9.2f} ms/problem")
    print(f"  speedup {res['numpy'] / res['numba']:.1f}x")


if __name__ == "__main__":
    main()
