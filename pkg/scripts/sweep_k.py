"""Chunk blending decay sweep: weight vectors, tracking error and plan smoothness per k."""

import argparse
import sys

from toptime import analysis


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/k_sweep")
    ap.add_argument("--k", default=",".join(f"{k:g}" for k in analysis.DEFAULT_KS))
    ap.add_argument("--seeds", type=int, default=2)
    args = ap.parse_args()

    ks = [float(x) for x in args.k.split(",")]
    suite = analysis.SuiteConfig(seeds=tuple(range(args.seeds)))
    res = analysis.run_k_sweep(ks, suite, progress=lambda msg: print(msg, file=sys.stderr))
    analysis.emit_report(res, args.out)
    for row in res.rows:
        w = " ".join(f"{x:.3f}" for x in row["weights"])
        print(f"k={row['k']:<5g} success={row['success_rate']:.2f} E_jpe={row['E_jpe']:.4f} "
              f"time={row['time_cost']:.2f}  w=[{w}]")


if __name__ == "__main__":
    main()
