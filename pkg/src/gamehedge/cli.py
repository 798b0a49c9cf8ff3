"""Command line interface.

Subcommands
    price      solve the configured side(s), write quote JSON, solution and
               region CSVs
    oracle     compare the solve against the brute-force stopped-game values
    replicate  forward-verify the quote (replication, break-even, probes)
    regions    export the stopping regions only
    sweep      reprice along one config axis, write a CSV of prices

Exit codes: 0 success (oracle: values match), 1 oracle mismatch, 2 config
error, 3 solver error, 4 enumeration size cap, 5 replication failure.

All numbers in files are printed with 17 significant digits and reruns are
byte-identical; wall-clock timing appears on stdout only.
"""

from __future__ import annotations

import argparse
import copy
import csv
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import (
    ModelBundle,
    apply_tol_overrides,
    build_bundle,
    load_config,
    set_axis_value,
)
from .dynkin import DEFAULT_PAIR_LIMIT, game_value_brute, saddle_check
from .errors import ConfigError, EngineError, TooLarge, TooManyPaths
from .lattice import read_node_process, write_node_process
from .pricing import acceptable_price, game_payoff, side_obstacles
from .replication import forward_wealth, solution_path, verify_replication
from .stopping import path_moves

__all__ = ["main"]


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def _json_text(obj, level: int = 0) -> str:
    pad = "  " * level
    inner = "  " * (level + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{inner}"{key}": {_json_text(obj[key], level + 1)}' for key in sorted(obj)
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(f"{inner}{_json_text(v, level + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: Path, obj) -> None:
    path.write_text(_json_text(obj) + "\n")


def _write_region_csv(path: Path, region) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "up_count"])
        for k, j in sorted(region):
            writer.writerow([k, j])


def _quote_obj(quote) -> dict:
    return {
        "side": quote.side,
        "price": quote.price,
        "y0": quote.y0,
        "residual_max": quote.solution.residual_max,
    }


def _write_side_solution(out: Path, quote) -> None:
    out.mkdir(parents=True, exist_ok=True)
    sol = quote.solution
    write_node_process(sol.Y, out / "Y.csv")
    write_node_process(sol.Z, out / "Z.csv")
    write_node_process(sol.dL, out / "dL.csv")
    write_node_process(sol.dU, out / "dU.csv")
    _write_json(
        out / "solution.json",
        {"y0": sol.Y.at(0, 0), "residual_max": sol.residual_max,
         "iterations_max": sol.iterations_max},
    )
    _write_side_regions(out, quote)


def _write_side_regions(out: Path, quote) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_region_csv(out / "region_sigma.csv", quote.region_sigma)
    _write_region_csv(out / "region_tau.csv", quote.region_tau)
    _write_region_csv(out / "region_bar_sigma.csv", quote.region_bar_sigma)
    _write_region_csv(out / "region_bar_tau.csv", quote.region_bar_tau)


def _quotes(bundle: ModelBundle):
    tol = bundle.tolerances["obstacle_eq"]
    return {
        side: acceptable_price(bundle.contract, bundle.views[side], bundle.gen, bundle.lat,
                               region_tol=tol)
        for side in bundle.sides
    }


def cmd_price(bundle: ModelBundle, out: Path) -> int:
    quotes = _quotes(bundle)
    out.mkdir(parents=True, exist_ok=True)
    if len(quotes) == 1:
        (side, quote), = quotes.items()
        _write_json(out / "quote.json", _quote_obj(quote))
        _write_side_solution(out, quote)
        print(f"{side} price = {_fmt(quote.price)}")
    else:
        obj = {"side": "both"}
        for side, quote in quotes.items():
            obj[side] = _quote_obj(quote)
            _write_side_solution(out / side, quote)
            print(f"{side} price = {_fmt(quote.price)}")
        spread = quotes["hedger"].price - quotes["counterparty"].price
        obj["spread"] = spread
        _write_json(out / "quote.json", obj)
        print(f"spread = {_fmt(spread)}")
    return 0


def cmd_regions(bundle: ModelBundle, out: Path) -> int:
    quotes = _quotes(bundle)
    out.mkdir(parents=True, exist_ok=True)
    for side, quote in quotes.items():
        target = out if len(quotes) == 1 else out / side
        _write_side_regions(target, quote)
        print(f"{side}: sigma region {len(quote.region_sigma)} nodes, "
              f"tau region {len(quote.region_tau)} nodes")
    return 0


def cmd_oracle(bundle: ModelBundle, out: Path, pair_limit: int) -> int:
    t0 = time.perf_counter()
    results = {}
    all_match = True
    for side in bundle.sides:
        view = bundle.views[side]
        inputs = side_obstacles(bundle.contract, view, bundle.gen, bundle.lat)
        quote = acceptable_price(bundle.contract, view, bundle.gen, bundle.lat,
                                 region_tol=bundle.tolerances["obstacle_eq"])
        payoff = game_payoff(bundle.contract, view, bundle.lat)
        report = game_value_brute(bundle.lat, bundle.gen, inputs.cashflow_increments,
                                  payoff, pair_limit=pair_limit)
        diag = saddle_check(report, quote.y0, tol=bundle.tolerances["oracle"])
        all_match &= diag.matches_upper
        results[side] = {
            "upper": report.upper_value,
            "lower": report.lower_value,
            "y0": quote.y0,
            "matches_upper": diag.matches_upper,
            "has_value": diag.has_value,
            "n_rules": report.rule_count,
        }
    file_obj = results[bundle.sides[0]] if len(bundle.sides) == 1 else dict(results)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "oracle.json", file_obj)
    stdout_obj = copy.deepcopy(file_obj)
    stdout_obj["runtime_ms"] = (time.perf_counter() - t0) * 1000.0
    print(_json_text(stdout_obj))
    return 0 if all_match else 1


def cmd_replicate(bundle: ModelBundle, out: Path, hedge_csv: str | None) -> int:
    quotes = _quotes(bundle)
    out.mkdir(parents=True, exist_ok=True)
    failure: str | None = None
    for side, quote in quotes.items():
        if hedge_csv is not None:
            hedge = read_node_process(hedge_csv)
            if hedge.n_steps != bundle.lat.n_steps:
                raise ConfigError(
                    f"hedge CSV has {hedge.n_steps} steps, lattice has {bundle.lat.n_steps}"
                )
            quote = replace(quote, solution=replace(quote.solution, Z=hedge))
        rep = verify_replication(
            quote, bundle.contract, bundle.views[side], bundle.gen, bundle.lat,
            gap_tol=bundle.tolerances["replication"],
            eq_tol=bundle.tolerances["obstacle_eq"],
        )
        target = out if len(quotes) == 1 else out / side
        target.mkdir(parents=True, exist_ok=True)
        _write_json(
            target / "replicate.json",
            {
                "replicates": rep.replicates,
                "max_gap": rep.max_gap,
                "be": rep.be,
                "ao_at_plus": rep.ao_at_plus,
                "sh_fails_at_minus": rep.sh_fails_at_minus,
                "n_paths": rep.n_paths,
                "first_failing_path": rep.first_failing_path,
            },
        )
        if bundle.lat.n_steps <= 12:
            _write_paths_csv(target / "paths.csv", bundle, quote)
        verdict = "ok" if rep.ok else "FAIL"
        print(f"{side}: replicates={rep.replicates} max_gap={_fmt(rep.max_gap)} "
              f"be={rep.be} ao_at_plus={rep.ao_at_plus} "
              f"sh_fails_at_minus={rep.sh_fails_at_minus} [{verdict}]")
        if not rep.ok and failure is None:
            what = (f"first failing path {rep.first_failing_path}"
                    if rep.first_failing_path is not None else "price probes failed")
            failure = f"{side}: {what}"
    if failure is not None:
        print(f"replication failed: {failure}", file=sys.stderr)
        return 5
    return 0


def _write_paths_csv(path: Path, bundle: ModelBundle, quote) -> None:
    n = bundle.lat.n_steps
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "step", "V", "Y", "L_cum", "U_cum"])
        for pid in range(1 << n):
            moves = path_moves(pid, n)
            wealth = forward_wealth(
                quote.y0, quote.solution.Z, bundle.gen,
                quote.inputs.cashflow_increments, bundle.lat, moves,
            )
            solved = solution_path(quote, moves)
            for k in range(n + 1):
                writer.writerow(
                    [pid, k, _fmt(wealth.values[k]), _fmt(solved.values[k]),
                     _fmt(solved.L_cum[k]), _fmt(solved.U_cum[k])]
                )


def _parse_sweep_values(text: str):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ConfigError("empty value in --values")
        try:
            out.append(int(item))
        except ValueError:
            try:
                out.append(float(item))
            except ValueError as exc:
                raise ConfigError(f"sweep value {item!r} is not a number") from exc
    if not out:
        raise ConfigError("--values must list at least one number")
    return out


def cmd_sweep(raw_cfg: dict, axis: str, values, workers: int, out: Path) -> int:
    set_axis_value(copy.deepcopy(raw_cfg), axis, values[0])  # validate axis early

    def task(value):
        cfg = copy.deepcopy(raw_cfg)
        set_axis_value(cfg, axis, value)
        bundle = build_bundle(cfg)
        tol = bundle.tolerances["obstacle_eq"]
        ph = acceptable_price(bundle.contract, bundle.views["hedger"], bundle.gen,
                              bundle.lat, region_tol=tol).price
        pc = acceptable_price(bundle.contract, bundle.views["counterparty"], bundle.gen,
                              bundle.lat, region_tol=tol).price
        return ph, pc

    results: list = [None] * len(values)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(task, v) for v in values]
            for i, fut in enumerate(futures):
                results[i] = fut.result()
    else:
        for i, v in enumerate(values):
            results[i] = task(v)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "price_hedger", "price_counterparty", "spread"])
        for value, (ph, pc) in zip(values, results):
            val_text = str(value) if isinstance(value, int) else _fmt(value)
            writer.writerow([val_text, _fmt(ph), _fmt(pc), _fmt(ph - pc)])
    print(f"wrote {out / 'sweep.csv'} ({len(values)} rows)")
    return 0


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="gamehedge",
        description="Price, verify and explore game contracts under nonlinear funding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_side=True):
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", help="output directory (default: config output.dir or ./out)")
        p.add_argument("--workers", type=int, default=1, help="parallel workers (sweep)")
        p.add_argument("--tol-override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a tolerance, repeatable")
        if with_side:
            p.add_argument("--side", choices=("hedger", "counterparty", "both"),
                           help="override party.side from the config")

    common(sub.add_parser("price", help="solve and write quotes"))
    p_or = sub.add_parser("oracle", help="brute-force game value check")
    common(p_or)
    p_or.add_argument("--pair-limit", type=int, default=DEFAULT_PAIR_LIMIT,
                      help="max rule pairs for joint enumeration")
    p_rep = sub.add_parser("replicate", help="forward replication check")
    common(p_rep)
    p_rep.add_argument("--hedge-csv", help="node CSV overriding the solved hedge")
    common(sub.add_parser("regions", help="export stopping regions"))
    p_sw = sub.add_parser("sweep", help="reprice along one config axis")
    common(p_sw, with_side=False)
    p_sw.add_argument("--axis", required=True, help="dotted config path, e.g. contract.penalty")
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = _parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)

    try:
        cfg = load_config(args.config)
        apply_tol_overrides(cfg, args.tol_override)
        if getattr(args, "side", None):
            cfg.setdefault("party", {})["side"] = args.side
        bundle = build_bundle(cfg)
        if args.command == "sweep":
            sweep_values = _parse_sweep_values(args.values)
            set_axis_value(copy.deepcopy(cfg), args.axis, sweep_values[0])
    except EngineError as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out or bundle.output_dir or "out")
    try:
        if args.command == "price":
            return cmd_price(bundle, out)
        if args.command == "regions":
            return cmd_regions(bundle, out)
        if args.command == "oracle":
            return cmd_oracle(bundle, out, args.pair_limit)
        if args.command == "replicate":
            return cmd_replicate(bundle, out, args.hedge_csv)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.axis, sweep_values, max(1, args.workers), out)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: ConfigError: {exc}", file=sys.stderr)
        return 2
    except (TooLarge, TooManyPaths) as exc:
        print(f"size cap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except EngineError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
