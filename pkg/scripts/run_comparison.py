"""Fixed 0.01/0.03/0.05 s baselines against optimized plans over the bundled suite.

Writes comparison tables, per-run rows, a Pareto plot and a one-line trend check.
"""

import argparse
import sys

from toptime import analysis, assets


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/comparison")
    ap.add_argument("--seeds", type=int, default=5, help="seeds 0..N-1 per motion")
    ap.add_argument("--motions", default=",".join(assets.SUITE_NAMES))
    ap.add_argument("--no-push", action="store_true", help="disable periodic pushes")
    args = ap.parse_args()

    suite = analysis.SuiteConfig(motions=tuple(args.motions.split(",")), seeds=tuple(range(args.seeds)),
                                 push_interval=0.0 if args.no_push else 5.0)
    res = analysis.run_comparison(suite, progress=lambda msg: print(msg, file=sys.stderr))
    for path in analysis.emit_report(res, args.out):
        print(path)

    opt = res.row("method", analysis.OPTIMIZED)
    f01, f05 = res.row("method", "fixed_0.01"), res.row("method", "fixed_0.05")
    print(f"{'method':<12} {'success':>8} {'E_g':>10} {'E_jpe':>8} {'time':>8}")
    for row in res.rows:
        print(f"{row['method']:<12} {row['success_rate']:>8.2f} {row['E_g']:>10.2e} "
              f"{row['E_jpe']:>8.4f} {row['time_cost']:>8.2f}")
    print("optimized success >= fixed_0.01:", opt["success_rate"] >= f01["success_rate"])
    print("optimized time < fixed_0.05:", opt["time_cost"] < f05["time_cost"])


if __name__ == "__main__":
    main()
