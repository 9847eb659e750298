"""Time the compiled and NumPy collision kernels against each other.

    python benchmarks/bench_collision.py [--side 8] [--repeat 20] [--csv out.csv]
"""

import argparse
import csv
import sys
import timeit

import numpy as np

from kmslab import kinetic
from kmslab._kernels import available_backends, get_backend


def bench(side, repeat, dispersion):
    grid = kinetic.MomentumGrid(side, 2)
    eps = kinetic.cosine_dispersion(grid) if dispersion == "cosine" else kinetic.quadratic_dispersion(grid)
    kernel = kinetic.CollisionKernel(grid, eps)
    i1, i2, i3, i4, w = kernel.quadruples
    rho = np.random.Generator(np.random.PCG64(0)).uniform(0.05, 0.95, grid.size)
    args = (grid.integer_momenta, grid.side, eps, kernel.shell_tol, False, 0.1)
    rows = []
    for name in available_backends():
        be = get_backend(name)
        t_enum = min(timeit.repeat(lambda: be.enumerate_quadruples(*args), number=1, repeat=max(3, repeat // 5)))
        t_sum = min(timeit.repeat(lambda: be.collision_sum(rho, i1, i2, i3, i4, w), number=1, repeat=repeat))
        rows.append(dict(backend=name, side=side, quadruples=len(i1), enumerate_s=t_enum, collision_s=t_sum))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--side", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--dispersion", choices=["quadratic", "cosine"], default="quadratic")
    ap.add_argument("--csv", help="also write the table as CSV")
    a = ap.parse_args(argv)
    rows = bench(a.side, a.repeat, a.dispersion)
    print(f"{'backend':>9} {'side':>4} {'quads':>8} {'enumerate [ms]':>15} {'collision [ms]':>15}")
    for r in rows:
        print(f"{r['backend']:>9} {r['side']:>4} {r['quadruples']:>8} "
              f"{1e3 * r['enumerate_s']:>15.3f} {1e3 * r['collision_s']:>15.3f}")
    by = {r["backend"]: r for r in rows}
    if "compiled" in by:
        print(f"speedup: enumerate x{by['python']['enumerate_s'] / by['compiled']['enumerate_s']:.1f}, "
              f"collision x{by['python']['collision_s'] / by['compiled']['collision_s']:.1f}")
    else:
        print("compiled backend not built; only the NumPy fallback was timed", file=sys.stderr)
    if a.csv:
        with open(a.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
