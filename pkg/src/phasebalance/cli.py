"""Scenario runner: strategy comparison, adjustment-count and compensator sweeps.

Loads a network document, solves one subproblem per switching window,
validates the dispatch against the exact power flow and writes
machine-readable reports (JSON for the full solution, tidy CSV for
tables and plot data).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import bnb, formulation, netmodel, pforacle
from .formulation import PAIRS

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_TIME_LIMIT = 3
EXIT_INPUT = 4

_F_CONSISTENCY = 1e-9


class CliError(Exception):
    """Error with a process exit code attached."""

    exit_code = EXIT_INPUT

    def __init__(self, message: str, exit_code: int | None = None):
        super().__init__(message)
        if exit_code is not None:
            self.exit_code = exit_code


class InfeasibleError(CliError):
    exit_code = EXIT_INFEASIBLE


class TimeLimitError(CliError):
    exit_code = EXIT_TIME_LIMIT


@dataclass(frozen=True)
class ScenarioConfig:
    """One solver run: network source plus strategy and solver knobs."""

    network: object  # path, JSON string or dict document
    strategy: int = 4
    n_o: int | None = None  # override the document's adjustment count
    svc_cap: float | None = None  # override both compensator ratings, volt-amperes
    delta_deg: float | None = None  # angle half-width for the terminal regions
    gap_tol: float = 1e-4
    time_limit: float | None = None
    node_limit: int = bnb.DEFAULT_NODE_LIMIT
    out_dir: object = None
    workers: int = 1

    def __post_init__(self):
        if self.strategy not in formulation.STRATEGIES:
            raise CliError(f"strategy must be 1..4, got {self.strategy!r}")
        if self.n_o is not None and self.n_o < 1:
            raise CliError(f"n_o must be >= 1, got {self.n_o}")
        if self.svc_cap is not None and self.svc_cap < 0:
            raise CliError(f"svc capacity must be >= 0, got {self.svc_cap}")
        if self.gap_tol <= 0:
            raise CliError(f"gap tolerance must be positive, got {self.gap_tol}")
        if self.workers < 1:
            raise CliError(f"worker count must be >= 1, got {self.workers}")


@dataclass
class RunReport:
    """Merged solution of all windows plus its exact-power-flow grading."""

    strategy: int
    n_o: int
    windows: list  # per window: {"window", "periods", "assignment", ...}
    z_neg: dict  # t -> model z^-_t
    z_zero: dict  # t -> model z^0_t
    z_total: dict  # t -> z^-_t + z^0_t
    z_exact: dict  # t -> oracle objective for the same dispatch
    nsv_ratio: dict  # t -> max node |V^-| / limit
    zsv_ratio: dict  # t -> max node |V^0| / limit
    dt_decomp: dict  # t -> (|I^+|, |I^-|, |I^0|) at the transformer
    svc_dispatch: dict  # (pair, t) -> complex branch current
    objective: float  # total model F
    objective_exact: float
    validation: pforacle.ValidationMetrics
    timings: dict  # stage -> seconds
    gap: float
    nodes_explored: int
    i_base_amps: float

    def __post_init__(self):
        total = sum(self.z_total.values())
        if abs(total - self.objective) > _F_CONSISTENCY * max(1.0, abs(total)):
            raise ValueError(
                f"objective {self.objective!r} != sum of period terms {total!r}"
            )


def _load_document(source) -> dict:
    if isinstance(source, dict):
        return copy.deepcopy(source)
    if not isinstance(source, (str, Path)):
        raise CliError(f"unsupported network source {type(source).__name__}")
    text = str(source)
    if not text.lstrip().startswith("{"):
        path = Path(text)
        if not path.exists():
            raise CliError(f"network document not found: {path}")
        text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"network document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliError("network document must be a JSON object")
    return doc


def _prepare_network(cfg: ScenarioConfig) -> netmodel.Network:
    """Apply config overrides to the raw document, then load and validate."""
    doc = _load_document(cfg.network)
    if cfg.n_o is not None:
        doc.setdefault("horizon", {})["n_o"] = cfg.n_o
    if cfg.svc_cap is not None:
        if doc.get("svc") is None:
            raise CliError("svc capacity override given but the document has no svc")
        doc["svc"]["s_cap"] = cfg.svc_cap
        doc["svc"]["s_ind"] = cfg.svc_cap
    try:
        net = netmodel.load_network(doc)
    except netmodel.NetworkError as exc:
        raise CliError(str(exc)) from exc
    strategy = formulation.STRATEGIES[cfg.strategy]
    if strategy.use_svc and net.svc is None:
        raise CliError(f"strategy {cfg.strategy} needs a compensator but none is defined")
    return net


def _build_fits(net: netmodel.Network, cfg: ScenarioConfig) -> dict:
    if cfg.delta_deg is None:
        return formulation.build_fits(net)
    return formulation.build_fits(net, half_width=math.radians(cfg.delta_deg))


def _solve_window(args):
    net, cfg, fits, k, budget = args
    t0 = time.perf_counter()
    model = formulation.build_subproblem(net, k, cfg.strategy, fits)
    res = bnb.solve_misocp(
        model,
        gap_tol=cfg.gap_tol,
        time_limit=budget,
        node_limit=cfg.node_limit,
    )
    wall = time.perf_counter() - t0
    if res.status == bnb.STATUS_INFEASIBLE:
        raise InfeasibleError(f"window {k}: infeasible")
    if res.status == bnb.STATUS_TIME_LIMIT:
        raise TimeLimitError(f"window {k}: time limit reached")
    if res.incumbent is None:
        raise TimeLimitError(f"window {k}: stopped without an incumbent ({res.status})")
    sol = formulation.extract_solution(model, res.incumbent)
    return k, sol, res, wall


def worker_count(cfg_workers: int | None = None) -> int:
    """Resolve the worker pool size; the env var beats the default of 1."""
    if cfg_workers is not None and cfg_workers >= 1:
        return cfg_workers
    try:
        return max(1, int(os.environ.get("PHASEBALANCE_WORKERS", "1")))
    except ValueError:
        return 1


def run_scenario(cfg: ScenarioConfig) -> RunReport:
    """Solve every window, grade against the exact flow, write reports."""
    t_start = time.perf_counter()
    net = _prepare_network(cfg)
    fits = _build_fits(net, cfg)
    n_windows = len(net.horizon.subsets)
    deadline = None if cfg.time_limit is None else t_start + cfg.time_limit

    def budget():
        if deadline is None:
            return None
        left = deadline - time.perf_counter()
        if left <= 0:
            raise TimeLimitError("time limit exhausted before all windows solved")
        return left

    t_solve = time.perf_counter()
    if cfg.workers > 1 and n_windows > 1:
        import multiprocessing

        jobs = [(net, cfg, fits, k, budget()) for k in range(n_windows)]
        with multiprocessing.get_context("fork").Pool(
            min(cfg.workers, n_windows)
        ) as pool:
            solved = pool.map(_solve_window, jobs)
    else:
        # budget() re-evaluated before each window so the limit spans the run
        solved = [
            _solve_window((net, cfg, fits, k, budget())) for k in range(n_windows)
        ]
    solved.sort(key=lambda item: item[0])
    solve_wall = time.perf_counter() - t_solve

    windows = []
    z_neg, z_zero, z_total = {}, {}, {}
    svc_dispatch = {}
    window_walls = {}
    gap = 0.0
    nodes = 0
    for k, sol, res, wall in solved:
        windows.append(
            {
                "window": k,
                "periods": list(sol.periods),
                "assignment": dict(sorted(sol.assignment.items())),
                "objective": sol.objective,
                "gap": res.gap,
                "nodes": res.nodes_explored,
                "status": res.status,
            }
        )
        for t in sol.periods:
            z_neg[t] = sol.z_neg[t]
            z_zero[t] = sol.z_zero[t]
            z_total[t] = sol.z_neg[t] + sol.z_zero[t]
        svc_dispatch.update(sol.svc_currents)
        window_walls[k] = wall
        gap = max(gap, res.gap)
        nodes += res.nodes_explored

    t_val = time.perf_counter()
    z_exact, nsv_ratio, zsv_ratio, dt_decomp = {}, {}, {}, {}
    vnom = net.nominal_vm
    metrics = []
    for k, sol, res, _ in solved:
        metrics.append(pforacle.validate_solution(net, sol))
        for t in sol.periods:
            svc_t = None
            if net.svc is not None:
                svc_t = {pair: sol.svc_currents.get((pair, t), 0j) for pair in PAIRS}
            state = pforacle.solve_power_flow(net, sol.assignment, svc_t, t)
            z_exact[t] = state.objective
            nsv_ratio[t] = max(
                (net.nu_neg * vnom - ns) / (net.nu_neg * vnom)
                for ns, _ in state.sequence_slacks.values()
            )
            zsv_ratio[t] = max(
                (net.nu_zero * vnom - zs) / (net.nu_zero * vnom)
                for _, zs in state.sequence_slacks.values()
            )
            seq = state.dt_sequence
            dt_decomp[t] = (abs(seq.pos), abs(seq.neg), abs(seq.zero))
    validation = pforacle.ValidationMetrics(
        objective_exact=sum(m.objective_exact for m in metrics),
        objective_model=sum(m.objective_model for m in metrics),
        max_vm_violation=max(m.max_vm_violation for m in metrics),
        max_ampacity_violation=max(m.max_ampacity_violation for m in metrics),
        max_nsv_ratio=max(m.max_nsv_ratio for m in metrics),
        max_zsv_ratio=max(m.max_zsv_ratio for m in metrics),
        max_voltage_error=max(m.max_voltage_error for m in metrics),
    )
    validate_wall = time.perf_counter() - t_val

    timings = {"solve": solve_wall, "validate": validate_wall}
    for k, wall in sorted(window_walls.items()):
        timings[f"window_{k}"] = wall
    timings["total"] = time.perf_counter() - t_start

    report = RunReport(
        strategy=cfg.strategy,
        n_o=len(net.horizon.subsets),
        windows=windows,
        z_neg=z_neg,
        z_zero=z_zero,
        z_total=z_total,
        z_exact=z_exact,
        nsv_ratio=nsv_ratio,
        zsv_ratio=zsv_ratio,
        dt_decomp=dt_decomp,
        svc_dispatch=svc_dispatch,
        objective=sum(z_total.values()),
        objective_exact=sum(z_exact.values()),
        validation=validation,
        timings=timings,
        gap=gap,
        nodes_explored=nodes,
        i_base_amps=1000.0 * net.base_kva / net.base_volts,
    )
    if cfg.out_dir is not None:
        write_report(report, cfg.out_dir)
    return report


# ---------------------------------------------------------------------------
# report files


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list, rows: list):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def report_to_dict(report: RunReport) -> dict:
    val = report.validation
    return {
        "strategy": report.strategy,
        "n_o": report.n_o,
        "objective": report.objective,
        "objective_exact": report.objective_exact,
        "gap": report.gap,
        "nodes_explored": report.nodes_explored,
        "i_base_amps": report.i_base_amps,
        "windows": report.windows,
        "periods": {
            str(t): {
                "z_neg": report.z_neg[t],
                "z_zero": report.z_zero[t],
                "z_total": report.z_total[t],
                "z_exact": report.z_exact[t],
                "nsv_ratio": report.nsv_ratio[t],
                "zsv_ratio": report.zsv_ratio[t],
                "dt_pos": report.dt_decomp[t][0],
                "dt_neg": report.dt_decomp[t][1],
                "dt_zero": report.dt_decomp[t][2],
            }
            for t in sorted(report.z_total)
        },
        "svc_dispatch": {
            f"{pair},{t}": [cur.real, cur.imag]
            for (pair, t), cur in sorted(report.svc_dispatch.items())
        },
        "validation": {
            "objective_exact": val.objective_exact,
            "objective_model": val.objective_model,
            "max_vm_violation": val.max_vm_violation,
            "max_ampacity_violation": val.max_ampacity_violation,
            "max_nsv_ratio": val.max_nsv_ratio,
            "max_zsv_ratio": val.max_zsv_ratio,
            "max_voltage_error": val.max_voltage_error,
        },
        "timings": report.timings,
    }


def write_report(report: RunReport, out_dir) -> Path:
    """Emit report.json plus tidy CSV tables; returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    payload = report_to_dict(report)
    # timings vary run to run; everything else is deterministic, so keep
    # the wall clocks in their own file
    timings = payload.pop("timings")
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    _write_csv(
        out / "timings.csv",
        ["stage", "seconds"],
        [(stage, secs) for stage, secs in sorted(timings.items())],
    )

    _write_csv(
        out / "periods.csv",
        [
            "t",
            "z_neg",
            "z_zero",
            "z_total",
            "z_exact",
            "z_total_amps",
            "nsv_ratio",
            "zsv_ratio",
            "dt_pos",
            "dt_neg",
            "dt_zero",
        ],
        [
            (
                t,
                report.z_neg[t],
                report.z_zero[t],
                report.z_total[t],
                report.z_exact[t],
                report.z_total[t] * report.i_base_amps,
                report.nsv_ratio[t],
                report.zsv_ratio[t],
                report.dt_decomp[t][0],
                report.dt_decomp[t][1],
                report.dt_decomp[t][2],
            )
            for t in sorted(report.z_total)
        ],
    )
    _write_csv(
        out / "assignments.csv",
        ["window", "period_first", "period_last", "customer", "phase"],
        [
            (w["window"], w["periods"][0], w["periods"][-1], cid, ph)
            for w in report.windows
            for cid, ph in sorted(w["assignment"].items())
        ],
    )
    _write_csv(
        out / "svc.csv",
        ["pair", "t", "current_re", "current_im", "magnitude"],
        [
            (pair, t, cur.real, cur.imag, abs(cur))
            for (pair, t), cur in sorted(report.svc_dispatch.items())
        ],
    )
    val = report.validation
    _write_csv(
        out / "validation.csv",
        ["metric", "value"],
        [
            ("objective_exact", val.objective_exact),
            ("objective_model", val.objective_model),
            ("max_vm_violation", val.max_vm_violation),
            ("max_ampacity_violation", val.max_ampacity_violation),
            ("max_nsv_ratio", val.max_nsv_ratio),
            ("max_zsv_ratio", val.max_zsv_ratio),
            ("max_voltage_error", val.max_voltage_error),
        ],
    )
    return out


# ---------------------------------------------------------------------------
# sweeps


def _subset_label(subsets) -> str:
    return "|".join(f"{s[0]}..{s[-1]}" for s in subsets)


def sweep_no(cfg: ScenarioConfig, values) -> list:
    """One scenario run per adjustment count; rows sorted as given."""
    rows = []
    for n_o in values:
        sub_cfg = ScenarioConfig(
            network=cfg.network,
            strategy=cfg.strategy,
            n_o=int(n_o),
            svc_cap=cfg.svc_cap,
            delta_deg=cfg.delta_deg,
            gap_tol=cfg.gap_tol,
            time_limit=cfg.time_limit,
            node_limit=cfg.node_limit,
            out_dir=None,
            workers=cfg.workers,
        )
        report = run_scenario(sub_cfg)
        subsets = netmodel.even_partition(len(report.z_total), int(n_o))
        rows.append(
            {
                "n_o": int(n_o),
                "subsets": _subset_label(subsets),
                "objective": report.objective,
                "objective_exact": report.objective_exact,
                "gap": report.gap,
            }
        )
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(
            out / "sweep_no.csv",
            ["n_o", "subsets", "objective", "objective_exact", "gap"],
            [
                (r["n_o"], r["subsets"], r["objective"], r["objective_exact"], r["gap"])
                for r in rows
            ],
        )
    return rows


def sweep_svc(cfg: ScenarioConfig, capacities) -> list:
    """One scenario run per compensator rating, with marginal benefit."""
    rows = []
    prev_f = None
    period_rows = []
    for cap in capacities:
        sub_cfg = ScenarioConfig(
            network=cfg.network,
            strategy=cfg.strategy,
            n_o=cfg.n_o,
            svc_cap=float(cap),
            delta_deg=cfg.delta_deg,
            gap_tol=cfg.gap_tol,
            time_limit=cfg.time_limit,
            node_limit=cfg.node_limit,
            out_dir=None,
            workers=cfg.workers,
        )
        report = run_scenario(sub_cfg)
        f = report.objective
        rows.append(
            {
                "capacity": float(cap),
                "objective": f,
                "objective_exact": report.objective_exact,
                "delta_f": 0.0 if prev_f is None else f - prev_f,
                "gap": report.gap,
            }
        )
        for t in sorted(report.z_total):
            period_rows.append((float(cap), t, report.z_total[t]))
        prev_f = f
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(
            out / "sweep_svc.csv",
            ["capacity", "objective", "objective_exact", "delta_f", "gap"],
            [
                (r["capacity"], r["objective"], r["objective_exact"], r["delta_f"], r["gap"])
                for r in rows
            ],
        )
        _write_csv(
            out / "sweep_svc_periods.csv",
            ["capacity", "t", "z_total"],
            period_rows,
        )
    return rows


# ---------------------------------------------------------------------------
# report validation


def validate_report(network_source, report_path) -> dict:
    """Recompute the exact flow for a written report and grade it."""
    report_file = Path(report_path)
    if not report_file.exists():
        raise CliError(f"report file not found: {report_file}")
    payload = json.loads(report_file.read_text())
    doc = _load_document(network_source)
    try:
        net = netmodel.load_network(doc)
    except netmodel.NetworkError as exc:
        raise CliError(str(exc)) from exc

    svc_by_period = {}
    for key, (re_part, im_part) in payload.get("svc_dispatch", {}).items():
        pair, t_str = key.split(",")
        svc_by_period.setdefault(int(t_str), {})[pair] = complex(re_part, im_part)

    f_exact = 0.0
    worst_vm = 0.0
    for window in payload["windows"]:
        assignment = {int(cid): ph for cid, ph in window["assignment"].items()}
        for t in window["periods"]:
            svc_t = None
            if net.svc is not None:
                svc_t = {pair: svc_by_period.get(t, {}).get(pair, 0j) for pair in PAIRS}
            state = pforacle.solve_power_flow(net, assignment, svc_t, t)
            f_exact += state.objective
            for lo, hi in state.vm_slacks.values():
                worst_vm = max(worst_vm, -lo, -hi)
    f_model = float(payload["objective"])
    rel_err = abs(f_exact - f_model) / max(abs(f_exact), 1e-12)
    ok = rel_err <= 0.02 and worst_vm <= 1e-8
    return {
        "objective_model": f_model,
        "objective_exact": f_exact,
        "relative_error": rel_err,
        "max_vm_violation": worst_vm,
        "ok": ok,
    }


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from exc


def _int_list(text: str) -> list:
    try:
        return [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--network", required=True, help="network document (JSON file)")
    parser.add_argument(
        "--strategy",
        type=int,
        choices=(1, 2, 3, 4),
        default=4,
        help="1 none, 2 compensator only, 3 switching only, 4 both (default 4)",
    )
    parser.add_argument(
        "--no",
        type=int,
        default=None,
        metavar="K",
        help="adjustment count override (default: the document's horizon.n_o)",
    )
    parser.add_argument(
        "--svc-cap",
        type=float,
        default=None,
        metavar="S",
        help="compensator rating override in volt-amperes, both signs",
    )
    parser.add_argument(
        "--delta-deg",
        type=float,
        default=None,
        metavar="D",
        help="terminal-voltage angle half-width in degrees (default 3)",
    )
    parser.add_argument("--out", default=None, metavar="DIR", help="report directory")
    parser.add_argument(
        "--gap-tol", type=float, default=1e-4, help="relative optimality gap (default 1e-4)"
    )
    parser.add_argument(
        "--time-limit", type=float, default=None, metavar="SEC", help="wall-clock budget"
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="window solver processes (default: $PHASEBALANCE_WORKERS or 1)",
    )


def _config_from_args(args) -> ScenarioConfig:
    return ScenarioConfig(
        network=args.network,
        strategy=args.strategy,
        n_o=args.no,
        svc_cap=args.svc_cap,
        delta_deg=args.delta_deg,
        gap_tol=args.gap_tol,
        time_limit=args.time_limit,
        out_dir=args.out,
        workers=worker_count(args.workers),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasebalance",
        description="Optimal phase switching and reactive compensation dispatch",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one scenario and write reports")
    _add_common(p_run)

    p_no = sub.add_parser("sweep-no", help="objective versus adjustment count")
    _add_common(p_no)
    p_no.add_argument(
        "--values",
        type=_int_list,
        default=[1, 2, 3, 4, 5, 6],
        help="adjustment counts, comma or space separated (default 1..6)",
    )

    p_svc = sub.add_parser("sweep-svc", help="objective versus compensator rating")
    _add_common(p_svc)
    p_svc.add_argument(
        "--capacities",
        type=_float_list,
        required=True,
        help="ratings in volt-amperes, comma or space separated",
    )

    p_val = sub.add_parser("validate", help="recheck a written report against the exact flow")
    p_val.add_argument("--network", required=True, help="network document (JSON file)")
    p_val.add_argument("--report", required=True, help="report.json produced by run")
    return parser


def _print_run(report: RunReport):
    print(f"strategy   STR-{report.strategy}")
    print(f"windows    {report.n_o}")
    print(f"objective  {report.objective:.9f} (exact {report.objective_exact:.9f})")
    print(f"gap        {report.gap:.3e}  nodes {report.nodes_explored}")
    val = report.validation
    print(
        "validation "
        f"vm_violation={val.max_vm_violation:.3e} "
        f"nsv={val.max_nsv_ratio:.4f} zsv={val.max_zsv_ratio:.4f} "
        f"v_err={val.max_voltage_error:.3e}"
    )
    for w in report.windows:
        print(
            f"  window {w['window']} periods {w['periods'][0]}..{w['periods'][-1]} "
            f"objective {w['objective']:.9f} nodes {w['nodes']}"
        )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; keep 0 for --help
        return EXIT_OK if exc.code == 0 else EXIT_INPUT

    try:
        if args.command == "run":
            report = run_scenario(_config_from_args(args))
            _print_run(report)
        elif args.command == "sweep-no":
            rows = sweep_no(_config_from_args(args), args.values)
            for r in rows:
                print(
                    f"n_o={r['n_o']:>2} F={r['objective']:.9f} "
                    f"exact={r['objective_exact']:.9f} subsets {r['subsets']}"
                )
        elif args.command == "sweep-svc":
            rows = sweep_svc(_config_from_args(args), args.capacities)
            for r in rows:
                print(
                    f"capacity={r['capacity']:.1f} F={r['objective']:.9f} "
                    f"dF={r['delta_f']:+.9f}"
                )
        elif args.command == "validate":
            result = validate_report(args.network, args.report)
            for key in (
                "objective_model",
                "objective_exact",
                "relative_error",
                "max_vm_violation",
            ):
                print(f"{key} {result[key]:.9g}")
            if not result["ok"]:
                print("validate: report disagrees with the exact power flow", file=sys.stderr)
                return EXIT_INPUT
            print("ok")
        return EXIT_OK
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except TimeLimitError as exc:
        print(f"time limit: {exc}", file=sys.stderr)
        return EXIT_TIME_LIMIT
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except pforacle.PowerFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entrypoint():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
