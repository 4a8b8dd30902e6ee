#!/usr/bin/env python3
"""Empirical 1/sqrt(epsilon) scaling study on an isotropic quadratic.

The optimum is withheld from the solver, so each run terminates on its
certified bound gamma_cap * r_bar^2 <= epsilon.  Quartering epsilon should
then double the iteration count for both accelerated variants.
"""

import argparse
import math
import sys

from agdsmooth.config import run_sweep, sweep_from_dict


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--epsilon", type=float, default=1e-4)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--scale", type=float, default=0.1,
                    help="starting point is scale * ones(d)")
    args = ap.parse_args()

    for algorithm in ("agd1", "agd2"):
        spec = sweep_from_dict({
            "axis": "epsilon-quartering",
            "levels": args.levels,
            "base": {
                "algorithm": algorithm,
                "problem": "quadratic",
                "problem_params": {"L": 1.0, "d": args.d, "known_optimum": False},
                "x0": [args.scale] * args.d,
                "r_bar": args.scale * math.sqrt(args.d),
                "gamma_cap0": 1.0,
                "epsilon": args.epsilon,
                "budget": 10**7,
                "check_invariants": False,
                "trace_path": "",
            },
        })
        report = run_sweep(spec, write_files=False)
        print(f"\n{algorithm}: certified iterations per epsilon level")
        for point in report["points"]:
            print(f"  eps={point['epsilon']:.3e}  iterations={point['iterations']}"
                  + (f"  [{point['error']}]" if point["error"] else ""))
        ratios = ", ".join(f"{r:.3f}" for r in report["ratios"] if r is not None)
        print(f"  quartering ratios: {ratios} (ideal 2.0)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
