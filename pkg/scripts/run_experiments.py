#!/usr/bin/env python3
"""Run the full solve pipeline over the gallery and summarize.

For every gallery operator: verify the declared hypotheses, then (for
the monotone members) run the a->0 continuation against a seeded target
and report the certificate outcomes.  Reports and traces land in the
output directory.

Usage:
    python3 scripts/run_experiments.py [--out out/] [--dim 5] [--seed 1]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dsmsolve import (  # noqa: E402
    ContinuationSchedule,
    FlowConfig,
    check_coercive,
    check_monotone,
    make_gallery,
    run_continuation,
)
from dsmsolve.flow import trace_to_csv  # noqa: E402
from dsmsolve.validation import subrng, subseed  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out")
    ap.add_argument("--dim", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for op in make_gallery(args.dim):
        mono = check_monotone(op, subseed(args.seed, f"m:{op.name}"), 500, 5.0, 1e-10)
        coer = check_coercive(op, [1, 10, 100], subseed(args.seed, f"c:{op.name}"), 32)
        row = {
            "operator": op.name,
            "dim": op.dim,
            "monotone": mono.passed,
            "coercive": coer.passed,
        }
        if mono.passed:
            rng = subrng(args.seed, f"h:{op.name}")
            h = rng.standard_normal(op.dim)
            h *= min(1.0, 5.0 / np.linalg.norm(h))

            def callback(a, sol, _name=op.name):
                rel = f"{_name}_a{a:.3e}.csv"
                trace_to_csv(sol.trace, out / rel)
                return rel

            rep = run_continuation(
                op, h, ContinuationSchedule(), FlowConfig(),
                minty_seed=subseed(args.seed, f"minty:{op.name}"),
                stage_callback=callback,
            )
            (out / f"{op.name}_report.json").write_text(rep.to_json() + "\n")
            row.update(
                final_residual=rep.final_residual_eq5,
                bound=rep.bound_report.passed,
                minty=rep.minty_report.passed,
                cauchy=rep.cauchy_report.passed,
            )
        rows.append(row)
        print(json.dumps(row))

    (out / "summary.json").write_text(json.dumps(rows, indent=2) + "\n")
    print(f"\nwrote {out}/summary.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
