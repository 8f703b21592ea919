"""Command-line front end: experiment configs, analytic solves, simulations,
and parameter sweeps with CSV/JSON output.

Configuration comes from a JSON file (see README for the schema) overlaid
with command-line flags; flags win. Rates are Gb/s at this interface and
bits/second internally (decimal giga).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .chassis import (
    GBPS,
    ChassisConfig,
    SleepPolicy,
    max_viable_mean_active,
)
from .fabric import SwitchFabric, reconfig_compliant
from .markov import (
    NonConvergenceError,
    analytic_saving,
    average_power,
    build_transition_matrix,
    solve_stationary,
)
from .simulator import BacklogOverflowError, simulate
from .traffic import (
    MIN_HURST_CYCLES,
    constant_trace,
    estimate_hurst,
    poisson_trace,
    self_similar_trace,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

ANALYTIC_COLUMNS = ("param", "value", "mean_active_cards", "avg_power_w", "energy_saving")
SIM_COLUMNS = ("param", "value", "energy_saving", "mean_delay_s", "mean_active_cards", "seed")

SWEEP_PARAMETERS = ("lambda", "M", "N", "load")
TRAFFIC_KINDS = ("poisson", "self-similar", "constant")


@dataclass(frozen=True)
class TrafficSpec:
    kind: str = "poisson"
    rate_gbps: float = 20.0
    hurst: float = 0.8
    cycles: int = 100_000
    seed: int = 1


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    chassis: ChassisConfig = field(default_factory=ChassisConfig)
    policy: SleepPolicy = field(default_factory=SleepPolicy)
    fabric: SwitchFabric = field(default_factory=SwitchFabric)
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    sweep: SweepSpec | None = None
    output: OutputSpec = field(default_factory=OutputSpec)

    def resolved_params(self) -> dict:
        """Full resolved parameter set, echoed into every output file."""
        c, p, f, t = self.chassis, self.policy, self.fabric, self.traffic
        params = {
            "chassis": {
                "line_cards": c.line_cards,
                "upstream_gbps": c.upstream_capacity / GBPS,
                "downstream_gbps": c.downstream_capacity / GBPS,
                "cycle_ms": c.cycle_length * 1e3,
                "onus_per_segment": list(c.onus_per_segment),
                "card_power_w": c.card_power,
                "switch_power_w": c.switch_power,
                "electrical_power_w": c.electrical_part_power,
                "packet_bits": c.packet_bits,
            },
            "policy": {"listen_down": p.listen_down, "listen_up": p.listen_up},
            "fabric": {
                "topology": f.topology,
                "ports": f.ports,
                "per_element_power_w": f.per_element_power,
                "reconfig_time_ms": f.reconfig_time * 1e3,
            },
            "traffic": {
                "kind": t.kind,
                "rate_gbps": t.rate_gbps,
                "hurst": t.hurst,
                "cycles": t.cycles,
                "seed": t.seed,
            },
        }
        if self.sweep is not None:
            params["sweep"] = {
                "parameter": self.sweep.parameter,
                "values": list(self.sweep.values),
            }
        return params


def _build_section(errors, section, builder):
    try:
        return builder()
    except (ValueError, TypeError) as exc:
        errors.append(f"{section}: {exc}")
        return None


def load_config(path=None, overrides=None):
    """Merge defaults, the JSON config file, and flag overrides.

    Returns (config_or_None, error_messages); field-level problems land in
    the message list instead of raising.
    """
    errors: list[str] = []
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            return None, [f"config: cannot read {path}: {exc}"]
        except json.JSONDecodeError as exc:
            return None, [f"config: {path} is not valid JSON: {exc}"]
        if not isinstance(raw, dict):
            return None, [f"config: {path} must hold a JSON object"]

    overrides = overrides or {}

    def section(name):
        value = raw.get(name, {})
        if not isinstance(value, dict):
            errors.append(f"{name}: must be a JSON object")
            return {}
        return dict(value)

    ch = section("chassis")
    po = section("policy")
    fa = section("fabric")
    tr = section("traffic")
    ou = section("output")
    sw = raw.get("sweep")

    for key in ("line_cards", "capacity_gbps", "cycle_ms"):
        if overrides.get(key) is not None:
            ch[key] = overrides[key]
    for key in ("listen_down", "listen_up"):
        if overrides.get(key) is not None:
            po[key] = overrides[key]
    if overrides.get("lambda_gbps") is not None:
        tr["rate_gbps"] = overrides["lambda_gbps"]
    for key in ("hurst", "cycles", "seed", "kind"):
        if overrides.get(key) is not None:
            tr[key] = overrides[key]
    if overrides.get("sweep") is not None:
        sw = overrides["sweep"]
    if overrides.get("output") is not None:
        ou["path"] = overrides["output"]
    if overrides.get("format") is not None:
        ou["format"] = overrides["format"]

    def build_chassis():
        capacity = float(ch.pop("capacity_gbps", 10.0)) * GBPS
        up = float(ch.pop("upstream_gbps", capacity / GBPS)) * GBPS
        down = float(ch.pop("downstream_gbps", capacity / GBPS)) * GBPS
        onus = ch.pop("onus_per_segment", None)
        line_cards = int(ch.pop("line_cards", 4))
        if isinstance(onus, int):
            onus = (onus,) * line_cards
        card_power = float(ch.pop("card_power_w", 5.0))
        kwargs = {
            "line_cards": line_cards,
            "upstream_capacity": up,
            "downstream_capacity": down,
            "cycle_length": float(ch.pop("cycle_ms", 2.0)) * 1e-3,
            "card_power": card_power,
            "switch_power": float(ch.pop("switch_power_w", 0.0)),
            # a whole card is electrical unless stated otherwise
            "electrical_part_power": float(ch.pop("electrical_power_w", card_power)),
            "packet_bits": float(ch.pop("packet_bits", 10_000.0)),
        }
        if onus is not None:
            kwargs["onus_per_segment"] = tuple(int(n) for n in onus)
        if ch:
            raise ValueError(f"unknown keys {sorted(ch)}")
        return ChassisConfig(**kwargs)

    def build_policy():
        kwargs = {
            "listen_down": int(po.pop("listen_down", 2)),
            "listen_up": int(po.pop("listen_up", 2)),
        }
        if po:
            raise ValueError(f"unknown keys {sorted(po)}")
        return SleepPolicy(**kwargs)

    def build_fabric():
        kwargs = {
            "topology": str(fa.pop("topology", "single-nxn")),
            "ports": int(fa.pop("ports", 4)),
            "per_element_power": float(fa.pop("per_element_power_w", 0.2)),
            "reconfig_time": float(fa.pop("reconfig_time_ms", 5.0)) * 1e-3,
        }
        if fa:
            raise ValueError(f"unknown keys {sorted(fa)}")
        return SwitchFabric(**kwargs)

    def build_traffic():
        kind = str(tr.pop("kind", "poisson"))
        if kind not in TRAFFIC_KINDS:
            raise ValueError(f"kind must be one of {TRAFFIC_KINDS}, got {kind!r}")
        spec = TrafficSpec(
            kind=kind,
            rate_gbps=float(tr.pop("rate_gbps", 20.0)),
            hurst=float(tr.pop("hurst", 0.8)),
            cycles=int(tr.pop("cycles", 100_000)),
            seed=int(tr.pop("seed", 1)),
        )
        if tr:
            raise ValueError(f"unknown keys {sorted(tr)}")
        if spec.rate_gbps < 0:
            raise ValueError("rate_gbps must be >= 0")
        if spec.cycles < 1:
            raise ValueError("cycles must be >= 1")
        return spec

    def build_sweep():
        if sw is None:
            return None
        if isinstance(sw, str):
            parameter, _, tail = sw.partition("=")
            values = tuple(float(v) for v in tail.split(",") if v.strip())
        elif isinstance(sw, dict):
            parameter = str(sw.get("parameter", ""))
            values = tuple(float(v) for v in sw.get("values", ()))
        else:
            raise ValueError("sweep must be an object or 'param=v1,v2,...'")
        if parameter not in SWEEP_PARAMETERS:
            raise ValueError(
                f"parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}"
            )
        if not values:
            raise ValueError("values must be non-empty")
        if parameter in ("M", "N"):
            for v in values:
                if v != int(v) or v < 1:
                    raise ValueError(f"{parameter} values must be positive integers")
        if parameter == "load":
            for v in values:
                if not 0.0 < v <= 1.0:
                    raise ValueError("load values must lie in (0, 1]")
        if parameter == "lambda":
            for v in values:
                if v < 0:
                    raise ValueError("lambda values must be >= 0")
        return SweepSpec(parameter, values)

    def build_output():
        fmt = str(ou.pop("format", "csv"))
        if fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {fmt!r}")
        path = ou.pop("path", None)
        if ou:
            raise ValueError(f"unknown keys {sorted(ou)}")
        return OutputSpec(fmt, path)

    known = {"chassis", "policy", "fabric", "traffic", "sweep", "output"}
    for key in raw:
        if key not in known:
            errors.append(f"config: unknown section {key!r}")

    chassis = _build_section(errors, "chassis", build_chassis)
    policy = _build_section(errors, "policy", build_policy)
    fabric = _build_section(errors, "fabric", build_fabric)
    traffic = _build_section(errors, "traffic", build_traffic)
    sweep = _build_section(errors, "sweep", build_sweep)
    output = _build_section(errors, "output", build_output)

    if errors:
        return None, errors
    return (
        ExperimentConfig(chassis, policy, fabric, traffic, sweep, output),
        [],
    )


def _sweep_points(config: ExperimentConfig):
    """(param, value) pairs, ordered by value; a single implicit point when
    no sweep is configured."""
    if config.sweep is None:
        return [("lambda", config.traffic.rate_gbps)]
    return [(config.sweep.parameter, v) for v in sorted(config.sweep.values)]


def _point_setup(config: ExperimentConfig, param: str, value: float):
    """Resolve one sweep point into (chassis, policy, offered bits/second)."""
    chassis, policy = config.chassis, config.policy
    rate_bits = config.traffic.rate_gbps * GBPS
    if param == "lambda":
        rate_bits = value * GBPS
    elif param == "load":
        rate_bits = value * chassis.line_cards * chassis.downstream_capacity
    elif param == "M":
        policy = replace(policy, listen_down=int(value))
    elif param == "N":
        policy = replace(policy, listen_up=int(value))
    else:
        raise ValueError(f"unknown sweep parameter {param!r}")
    return chassis, policy, rate_bits


def _analytic_point(args):
    config, param, value = args
    chassis, policy, rate_bits = _point_setup(config, param, value)
    lambda_a = rate_bits / chassis.packet_bits
    matrix = build_transition_matrix(chassis, policy, lambda_a)
    dist = solve_stationary(matrix)
    return {
        "param": param,
        "value": value,
        "mean_active_cards": dist.mean_active_cards,
        "avg_power_w": average_power(dist, chassis),
        "energy_saving": analytic_saving(dist, chassis),
    }


def _simulation_point(args):
    config, param, value = args
    chassis, policy, rate_bits = _point_setup(config, param, value)
    t = config.traffic
    if t.kind == "poisson":
        trace = poisson_trace(
            rate_bits / chassis.packet_bits,
            t.cycles,
            chassis.cycle_length,
            t.seed,
            packet_bits=chassis.packet_bits,
        )
    elif t.kind == "self-similar":
        trace = self_similar_trace(
            rate_bits, t.hurst, t.cycles, chassis.cycle_length, t.seed
        )
    else:
        trace = constant_trace(
            rate_bits, t.cycles, chassis.cycle_length, packet_bits=chassis.packet_bits
        )
    report = simulate(chassis, policy, trace)
    row = {
        "param": param,
        "value": value,
        "energy_saving": report.energy_saving,
        "mean_delay_s": report.mean_delay,
        "mean_active_cards": report.mean_active_cards,
        "seed": t.seed,
    }
    if t.kind == "self-similar" and t.cycles >= MIN_HURST_CYCLES:
        row["hurst_estimate"] = estimate_hurst(trace)
    return row


def _run_points(worker, config, jobs):
    points = _sweep_points(config)
    payloads = [(config, param, value) for param, value in points]
    if jobs <= 1 or len(payloads) == 1:
        rows = [worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(payloads))) as pool:
            rows = list(pool.map(worker, payloads))
    rows.sort(key=lambda r: r["value"])
    return rows


def run_analytic(config: ExperimentConfig, jobs: int = 1):
    """One analytic result row per sweep point."""
    return _run_points(_analytic_point, config, jobs)


def run_simulation(config: ExperimentConfig, jobs: int = 1):
    """One simulated result row per sweep point."""
    return _run_points(_simulation_point, config, jobs)


def validate(config: ExperimentConfig):
    """Human-readable diagnostics: (severity, message) pairs."""
    notes = []
    chassis, fabric, traffic = config.chassis, config.fabric, config.traffic
    if chassis.switch_power > 0:
        limit = max_viable_mean_active(chassis)
        if limit <= 1.0:
            notes.append(
                (
                    "warning",
                    "switch fabric can never pay for itself: break-even mean "
                    f"active cards {limit:.6g} is at or below the 1-card floor",
                )
            )
        else:
            notes.append(
                (
                    "note",
                    "switch power viable while mean active cards stay below "
                    f"{limit:.6g}",
                )
            )
    for pon in ("EPON", "GPON"):
        if reconfig_compliant(fabric, pon):
            notes.append(
                ("note", f"{pon}: reconfiguration time "
                 f"{fabric.reconfig_time * 1e3:.6g} ms is compliant")
            )
        else:
            notes.append(
                ("warning", f"{pon}: reconfiguration time "
                 f"{fabric.reconfig_time * 1e3:.6g} ms exceeds the allowed window")
            )
    if traffic.kind == "self-similar":
        if not 0.5 < traffic.hurst < 1.0:
            notes.append(
                ("error", "traffic: hurst must lie strictly between 0.5 and 1")
            )
        if traffic.cycles < MIN_HURST_CYCLES:
            notes.append(
                (
                    "warning",
                    f"traffic: {traffic.cycles} cycles is too short to validate "
                    "the Hurst exponent",
                )
            )
    return notes


def _render_csv(rows, columns, params) -> str:
    buf = io.StringIO()
    buf.write("# params: " + json.dumps(params, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row.get(col, "") for col in columns])
    return buf.getvalue()


def _render_json(rows, params) -> str:
    return json.dumps({"params": params, "rows": rows}, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _overrides_from_args(args) -> dict:
    return {
        "line_cards": args.line_cards,
        "capacity_gbps": args.capacity_gbps,
        "cycle_ms": args.cycle_ms,
        "listen_down": args.listen_down,
        "listen_up": args.listen_up,
        "lambda_gbps": args.lambda_gbps,
        "hurst": args.hurst,
        "cycles": args.cycles,
        "seed": args.seed,
        "kind": getattr(args, "kind", None),
        "sweep": args.sweep,
        "output": args.output,
        "format": args.format,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greenolt",
        description="Energy-adaptive OLT chassis: analytic solves, simulations, sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analytic", "solve the sleep chain and report power and saving"),
        ("simulate", "run the cycle simulator over a generated trace"),
        ("sweep", "sweep a parameter; dispatches by traffic kind"),
        ("validate", "check the configuration and report diagnostics"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON experiment config file")
        p.add_argument("--line-cards", type=int, dest="line_cards")
        p.add_argument("--capacity-gbps", type=float, dest="capacity_gbps")
        p.add_argument("--cycle-ms", type=float, dest="cycle_ms")
        p.add_argument("--listen-down", type=int, dest="listen_down")
        p.add_argument("--listen-up", type=int, dest="listen_up")
        p.add_argument("--lambda-gbps", type=float, dest="lambda_gbps")
        p.add_argument("--hurst", type=float)
        p.add_argument("--cycles", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--kind", choices=TRAFFIC_KINDS)
        p.add_argument("--sweep", help="parameter sweep, e.g. lambda=5,10,20,30,40")
        p.add_argument("--output", help="write results here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config, errors = load_config(args.config, _overrides_from_args(args))
    if errors:
        for message in errors:
            print(f"error: {message}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        notes = validate(config)
        for severity, message in notes:
            print(f"{severity}: {message}")
        if any(severity == "error" for severity, _ in notes):
            return EXIT_VALIDATION
        print("ok: configuration is valid")
        return EXIT_OK

    if args.command == "sweep" and config.sweep is None:
        print("error: sweep: no sweep configured", file=sys.stderr)
        return EXIT_VALIDATION
    if any(sev == "error" for sev, _ in validate(config)):
        for severity, message in validate(config):
            print(f"{severity}: {message}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "analytic":
        mode = "analytic"
    elif args.command == "simulate":
        mode = "simulate"
    else:  # sweep dispatches on the traffic kind
        mode = "analytic" if config.traffic.kind == "poisson" else "simulate"

    try:
        if mode == "analytic":
            rows = run_analytic(config, jobs=args.jobs)
            columns = ANALYTIC_COLUMNS
        else:
            rows = run_simulation(config, jobs=args.jobs)
            columns = SIM_COLUMNS
    except (BacklogOverflowError, NonConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    params = config.resolved_params()
    if config.output.format == "json":
        text = _render_json(rows, params)
    else:
        text = _render_csv(rows, columns, params)
    _emit(text, config.output.path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
