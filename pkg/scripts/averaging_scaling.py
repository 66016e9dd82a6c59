"""Deviation between the exact geodesic and the reduced flow on [0, 1/eps], as eps shrinks.

The sup deviation of normalized momenta should scale roughly linearly in eps.
"""

import argparse
from pathlib import Path

import numpy as np

from sphere_reduction import io as sio
from sphere_reduction.core import Deformation, ParticleState
from sphere_reduction.liepoisson import compare_full_vs_reduced


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="+", default=[4e-2, 2e-2, 1e-2, 5e-3])
    ap.add_argument("--coeffs", type=float, nargs=3, default=[1.0, 2.0, 3.0])
    ap.add_argument("--out", type=Path, default=Path("results/averaging"))
    args = ap.parse_args()

    s0 = ParticleState([1.0, 0.3, 0.2], [-0.2, 0.5, 1.0])
    rows = []
    for eps in args.eps:
        rep = compare_full_vs_reduced(Deformation.quartic(args.coeffs, eps), s0, 1.0 / eps)
        rows.append(rep.to_json())
        print(f"eps={eps:.1e}  sup deviation={rep.sup_deviation:.4e}  ratio to eps={rep.sup_deviation / eps:.3f}")
    e = np.log([r["epsilon"] for r in rows])
    d = np.log([r["sup_deviation"] for r in rows])
    slope = float(np.polyfit(e, d, 1)[0]) if len(rows) > 1 else float("nan")
    print(f"log-log slope: {slope:.3f}")
    sio.write_json(args.out / "scaling.json", {"coeffs": args.coeffs, "runs": rows, "slope": slope})


if __name__ == "__main__":
    main()
