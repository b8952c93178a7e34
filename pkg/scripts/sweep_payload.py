"""End-effector payload sweep on one motion, with a quadratic fit of peak margin against mass."""

import argparse
import sys

from toptime import analysis


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/payload_sweep")
    ap.add_argument("--masses", default=",".join(f"{m:g}" for m in analysis.PAYLOADS))
    ap.add_argument("--motion", default="fast_swing")
    ap.add_argument("--fixed-dt", default="0.03", help="comma-separated baseline durations")
    args = ap.parse_args()

    masses = [float(m) for m in args.masses.split(",")]
    dts = [float(x) for x in args.fixed_dt.split(",")] if args.fixed_dt else []
    res = analysis.run_payload_sweep(masses, args.motion, dts, progress=lambda m: print(m, file=sys.stderr))
    analysis.emit_report(res, args.out)
    for method in dict.fromkeys(r["method"] for r in res.rows):
        rows = [r for r in res.rows if r["method"] == method]
        for r in rows:
            print(f"{method:<12} {r['payload_kg']:>5g} kg  peak d={r['peak_d']:.3f}  E_g={r['E_g']:.2e}  "
                  f"success={r['success_rate']:.2f}")
        if len(rows) > 2:
            fit = analysis.polyfit([r["payload_kg"] for r in rows], [r["peak_d"] for r in rows], 2,
                                   "payload_kg", "peak_d")
            print(f"{method:<12} peak d ~ " + " + ".join(f"{c:.4g} m^{i}" for i, c in enumerate(fit.coefficients)))


if __name__ == "__main__":
    main()
