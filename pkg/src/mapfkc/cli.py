"""Command line: ``mapfkc solve | validate | bench | genmap``.

Exit codes: 0 success, 1 bad input, 2 planning failure (or, for
``validate``, a plan with violations).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import (DEFAULT_TIMEOUT, BenchmarkConfig, aggregate, aggregate_path, run_benchmark,
                    write_aggregates, write_csv)
from .estimator import PrioritizedSIPP
from .grid import (InstanceError, MapParseError, WAREHOUSE_PRESETS, generate_instance, load_map,
                   load_scenario, scenario_to_dict, serialize_map, warehouse_map)
from .planner import solution_from_dict, solution_to_json
from .validator import PlanStructureError, validate_solution

log = logging.getLogger("mapfkc")

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2

# solve settings: flag dest -> default.  A --config JSON may set any of them.
SOLVE_DEFAULTS = {
    "map": None, "scen": None, "vmax": 2.0, "acc": 1.0, "dec": 1.0, "step": 0.5, "heuristic": "h2",
    "rot_time": 1.0, "order_seed": None, "fixed_speed": None, "out": None, "force": False,
    "timeout": DEFAULT_TIMEOUT, "cell_size": 1.0, "dump_reservations": None,
}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not planning failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """Flags beat config, config beats defaults."""
    conf = _load_config(getattr(args, "config", None))
    unknown = set(conf) - set(defaults)
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    out = dict(defaults)
    out.update(conf)
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            out[k] = v
    return out


# ------------------------------------------------------------------ solve

def cmd_solve(args) -> int:
    o = _merge(args, SOLVE_DEFAULTS)
    if not o["map"] or not o["scen"]:
        raise InputError("solve needs --map and --scen")
    grid = _read_map(o["map"], o["cell_size"])
    inst = _read_scen(o["scen"], grid)
    try:
        est = PrioritizedSIPP(v_max=o["vmax"], a_acc=o["acc"], a_dec=o["dec"], speed_step=o["step"],
                              rot_time=o["rot_time"], heuristic=o["heuristic"], order_seed=o["order_seed"],
                              fixed_speed=o["fixed_speed"], timeout=o["timeout"], force=o["force"]).fit(grid)
        tables = {}
        hook = None
        if o["dump_reservations"]:
            def hook(agent_id, table):
                tables[str(agent_id)] = table.to_json()
        sol = est.predict(inst, table_hook=hook)
    except (ValueError, TypeError) as e:
        raise InputError(str(e)) from None
    text = solution_to_json(sol, inst)
    if o["out"]:
        Path(o["out"]).write_text(text)
    else:
        print(text)
    if o["dump_reservations"]:
        Path(o["dump_reservations"]).write_text(json.dumps(tables))
    if not sol.success:
        why = "timed out" if sol.timed_out else "no path"
        print(f"planning failed at agent {sol.failed_agent} ({why})", file=sys.stderr)
        return EXIT_FAIL
    log.info("solved %d agents: sum of costs %.4f, makespan %.4f, %.0f ms", len(sol.paths),
             sol.sum_of_costs, sol.makespan, sol.runtime_ms)
    return EXIT_OK


def _read_map(path, cell_size=1.0):
    try:
        return load_map(path, cell_size)
    except OSError as e:
        raise InputError(f"cannot read map {path}: {e.strerror}") from None
    except MapParseError as e:
        raise InputError(f"{path}: {e}") from None


def _read_scen(path, grid):
    try:
        return load_scenario(path, grid)
    except OSError as e:
        raise InputError(f"cannot read scenario {path}: {e.strerror}") from None
    except (InstanceError, json.JSONDecodeError) as e:
        raise InputError(f"{path}: {e}") from None


# --------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    grid = _read_map(args.map)
    inst = _read_scen(args.scen, grid)
    try:
        data = json.loads(Path(args.plan).read_text())
        sol = solution_from_dict(data)
    except OSError as e:
        raise InputError(f"cannot read plan {args.plan}: {e.strerror}") from None
    except (ValueError, KeyError, TypeError) as e:
        raise InputError(f"malformed plan {args.plan}: {e}") from None
    if sol.params is None:
        raise InputError("plan has no kinematic parameters")
    missing = [a.id for a in inst.agents if a.id not in sol.paths]
    try:
        viol = validate_solution(sol, inst)
    except PlanStructureError as e:
        raise InputError(str(e)) from None
    for v in viol:
        print(v, file=sys.stderr)
    if missing:
        print(f"no plan for agents {missing}", file=sys.stderr)
    if viol or missing:
        print(f"{len(viol)} violation(s)", file=sys.stderr)
        return EXIT_FAIL
    print(f"ok: {len(sol.paths)} agents, no violations")
    return EXIT_OK


# ------------------------------------------------------------------ bench

BENCH_KEYS = ("map", "agents", "seeds", "vmax", "acc", "dec", "steps", "heuristics", "fixed_speeds",
              "rot_time", "order_seed", "timeout", "validate")


def cmd_bench(args) -> int:
    conf = _load_config(args.config)
    for k in BENCH_KEYS:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            conf[k] = v
    try:
        cfg = BenchmarkConfig.from_dict(conf)
    except (TypeError, ValueError) as e:
        raise InputError(f"bad benchmark config: {e}") from None
    try:
        results = run_benchmark(cfg)
    except (OSError, MapParseError, InstanceError) as e:
        raise InputError(str(e)) from None
    rows = [r.row for r in results]
    out = Path(args.out)
    write_csv(rows, out)
    agg = aggregate(rows)
    write_aggregates(agg, aggregate_path(out))
    for a in agg:
        print(f"{a['heuristic']:>10} step={a['step']:<5g} ok={a['success_rate']:.2f} "
              f"soc={a['sum_of_costs']:.3f} t={a['runtime_ms']:.1f}ms exp={a['expansions']:.0f}")
    if cfg.validate:
        bad = sum(r.violations for r in results)
        if bad:
            print(f"{bad} validator violation(s)", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


def _seed_list(text: str) -> list[int]:
    """``"0-49"`` or ``"1,5,9"``."""
    out = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


# ----------------------------------------------------------------- genmap

def cmd_genmap(args) -> int:
    if args.preset not in WAREHOUSE_PRESETS:
        raise InputError(f"unknown preset {args.preset!r}")
    h, w, br, bc, bh, bw = WAREHOUSE_PRESETS[args.preset]
    try:
        grid = warehouse_map(h, w, br, bc, bh, bw, gap_x=args.gap_x, gap_y=args.gap_y,
                             margin_left=args.margin_left, margin_top=args.margin_top)
        inst = generate_instance(grid, args.agents, args.seed) if args.agents else None
    except (ValueError, InstanceError) as e:
        raise InputError(str(e)) from None
    Path(args.out_map).write_text(serialize_map(grid))
    if inst is not None:
        Path(args.out_scen).write_text(json.dumps(scenario_to_dict(inst.agents), indent=1))
    print(f"wrote {args.out_map} ({w}x{h}, {len(grid.blocked)} blocked cells)"
          + (f" and {args.out_scen} ({args.agents} agents)" if inst is not None else ""))
    return EXIT_OK


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mapfkc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="plan one instance")
    s.add_argument("--config", help="JSON file with any of the options below")
    s.add_argument("--map")
    s.add_argument("--scen")
    s.add_argument("--vmax", type=float)
    s.add_argument("--acc", type=float)
    s.add_argument("--dec", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--heuristic", choices=["h1", "h2", "h3"])
    s.add_argument("--rot-time", type=float, dest="rot_time", help="seconds per quarter turn")
    s.add_argument("--order-seed", type=int, dest="order_seed")
    s.add_argument("--fixed-speed", type=float, dest="fixed_speed",
                   help="constant-speed baseline with instant start/stop")
    s.add_argument("--timeout", type=float)
    s.add_argument("--cell-size", type=float, dest="cell_size")
    s.add_argument("--out")
    s.add_argument("--force", action="store_true", help="plan even if not well-formed")
    s.add_argument("--dump-reservations", dest="dump_reservations", metavar="PATH",
                   help="write every agent's reservation table as JSON")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check a plan against its instance")
    v.add_argument("plan")
    v.add_argument("map")
    v.add_argument("scen")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="run a seeded parameter sweep")
    b.add_argument("--config")
    b.add_argument("--map", help="preset name or map file")
    b.add_argument("--agents", type=int)
    b.add_argument("--seeds", type=_seed_list, help="e.g. 0-49 or 1,2,3")
    b.add_argument("--vmax", type=float)
    b.add_argument("--acc", type=float)
    b.add_argument("--dec", type=float)
    b.add_argument("--steps", type=_float_list)
    b.add_argument("--heuristics", type=lambda t: t.split(","))
    b.add_argument("--fixed-speeds", type=_float_list, dest="fixed_speeds")
    b.add_argument("--rot-time", type=float, dest="rot_time")
    b.add_argument("--order-seed", type=int, dest="order_seed")
    b.add_argument("--timeout", type=float)
    b.add_argument("--validate", action="store_true")
    b.add_argument("--out", default="metrics.csv")
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("genmap", help="write a warehouse map and a random scenario")
    g.add_argument("--preset", default="map1", choices=sorted(WAREHOUSE_PRESETS))
    g.add_argument("--gap-x", type=int, dest="gap_x")
    g.add_argument("--gap-y", type=int, dest="gap_y")
    g.add_argument("--margin-left", type=int, dest="margin_left")
    g.add_argument("--margin-top", type=int, dest="margin_top")
    g.add_argument("--agents", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-map", dest="out_map", default="map.map")
    g.add_argument("--out-scen", dest="out_scen", default="scen.json")
    g.set_defaults(func=cmd_genmap)
    for sp in (s, v, b, g):
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # return instead of exiting so main() is usable from Python
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
