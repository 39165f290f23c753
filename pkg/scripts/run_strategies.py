"""Solve one network under all four strategies and print a comparison table.

Usage: python scripts/run_strategies.py [NETWORK.json] [--gap G] [--no K]

With no argument the bundled medium feeder is used.  Strategies that the
network cannot support (no compensator, or a demand profile only switching
can serve) show up as rows marked infeasible instead of aborting the rest.
"""

import argparse
import json
import sys
import time

from phasebalance import cli, fixtures


def run_one(doc: dict, strategy: int, args) -> dict:
    cfg = cli.ScenarioConfig(
        network=doc,
        strategy=strategy,
        n_o=args.no,
        gap_tol=args.gap,
        workers=args.workers,
    )
    t0 = time.perf_counter()
    try:
        rep = cli.run_scenario(cfg)
    except cli.InfeasibleError as exc:
        return {"strategy": strategy, "status": str(exc), "wall": time.perf_counter() - t0}
    return {
        "strategy": strategy,
        "status": "ok",
        "objective": rep.objective,
        "exact": rep.objective_exact,
        "rel_err": abs(rep.objective_exact - rep.objective) / max(abs(rep.objective_exact), 1e-12),
        "nsv": max(rep.nsv_ratio.values()),
        "nodes": rep.nodes_explored,
        "wall": time.perf_counter() - t0,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("network", nargs="?", help="network document (default: bundled medium feeder)")
    ap.add_argument("--gap", type=float, default=1e-4)
    ap.add_argument("--no", type=int, default=None, help="adjustments per horizon")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    if args.network:
        doc = json.loads(open(args.network).read())
    else:
        doc = fixtures.medium_feeder_doc()

    rows = [run_one(doc, s, args) for s in (1, 2, 3, 4)]
    print(f"{'strategy':>8}  {'F model':>12}  {'F exact':>12}  {'rel err':>9}  {'max nsv':>8}  {'nodes':>6}  {'wall s':>7}")
    for r in rows:
        if r["status"] != "ok":
            print(f"{r['strategy']:>8}  {r['status']} ({r['wall']:.1f} s)")
            continue
        print(
            f"{r['strategy']:>8}  {r['objective']:>12.6f}  {r['exact']:>12.6f}"
            f"  {r['rel_err']:>9.2%}  {r['nsv']:>8.3f}  {r['nodes']:>6}  {r['wall']:>7.1f}"
        )
    base = next((r for r in rows if r["status"] == "ok"), None)
    if base and rows[-1]["status"] == "ok" and base is not rows[-1]:
        drop = 1.0 - rows[-1]["objective"] / max(base["objective"], 1e-12)
        print(f"\nunbalance drop, strategy {rows[-1]['strategy']} vs {base['strategy']}: {drop:.1%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
