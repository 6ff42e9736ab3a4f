"""Command-line front end: configure a cluster, replay a workload,
report energy and service metrics.

One invocation runs either a single scheduling policy or the standard
nine-row comparison sweep (greedy spreading, two first-fit map
variants, and checked/unchecked consolidation at three low-utilization
thresholds).  Results can be emitted as an aligned table, CSV or JSON.

Defaults can also come from a JSON config file named by --config or the
LEASIM_CONFIG environment variable; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .domain import HostSpec, PowerModel, VmSpec
from .engine import SimConfig, SimReport, run
from .migration import MigrationMode, Thresholds
from .placement import HostOrder
from .units import MS_PER_S, parse_bandwidth
from .workload import (
    SECONDS_PER_DAY,
    WorkloadParams,
    generate_synthetic,
    parse_swf,
)

POWER_PRESETS = {
    "dl585": PowerModel(p_idle=299.0, p_max=521.0),
    "dl785": PowerModel(p_idle=444.0, p_max=799.0),
}

ALGO_LABELS = {
    HostOrder.NPA: "NPA-Greedy",
    HostOrder.H2L: "FF-MAP-H2L",
    HostOrder.L2H: "FF-MAP-L2H",
}

_ALGO_CHOICES = {"npa": HostOrder.NPA, "ff-h2l": HostOrder.H2L, "ff-l2h": HostOrder.L2H}
_MIGRATION_CHOICES = {
    "none": MigrationMode.NONE,
    "mig": MigrationMode.MIG,
    "pmig": MigrationMode.PMIG,
}

CSV_HEADER = "algorithm,energy_kwh,waiting_hours,makespan_hours,migrated_leases"

# the standard sweep: three placement rows, then checked and unchecked
# consolidation against the busiest-first heuristic at three thresholds
_SWEEP_THRESHOLDS = (0.5, 0.4, 0.3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leasim",
        description="Replay VM lease workloads against an energy-aware scheduler.",
    )
    source = parser.add_argument_group("workload")
    source.add_argument("--trace", metavar="PATH", help="workload trace file to replay")
    source.add_argument(
        "--trace-cutoff-days",
        type=int,
        metavar="DAYS",
        help="keep only jobs submitted within DAYS of the trace start",
    )
    source.add_argument(
        "--synthetic",
        nargs="?",
        type=int,
        const=5108,
        metavar="COUNT",
        help="generate COUNT synthetic leases instead of reading a trace",
    )
    source.add_argument(
        "--arrival-rate",
        type=float,
        metavar="PER_S",
        help="synthetic arrivals per second (default spreads COUNT over 30 days)",
    )
    source.add_argument(
        "--duration-range",
        default="600,28800",
        metavar="MIN,MAX",
        help="synthetic duration range in seconds (default 600,28800)",
    )
    source.add_argument(
        "--vm-count-range",
        default="1,16",
        metavar="MIN,MAX",
        help="synthetic VMs per lease range (default 1,16)",
    )
    source.add_argument("--seed", type=int, default=42, help="synthetic workload seed")

    vm = parser.add_argument_group("vm shape")
    vm.add_argument("--vm-cpu", type=int, default=100, metavar="PCT",
                    help="per-VM CPU demand in percent of one core (default 100)")
    vm.add_argument("--vm-mem", type=int, default=1024, metavar="MB",
                    help="per-VM memory demand (default 1024)")
    vm.add_argument("--vm-disk", type=int, default=4096, metavar="MB",
                    help="per-VM disk image size (default 4096)")
    vm.add_argument("--vm-bw", default="0", metavar="RATE",
                    help="per-VM bandwidth demand with unit, e.g. 1MBps (default 0)")

    host = parser.add_argument_group("cluster")
    host.add_argument("--hosts", type=int, default=1000, help="host count (default 1000)")
    host.add_argument("--cores", type=int, default=16, help="cores per host (default 16)")
    host.add_argument("--mem-mb", type=int, default=16384,
                      help="memory per host in MB (default 16384)")
    host.add_argument("--disk-mb", type=int, default=1_048_576,
                      help="disk per host in MB (default 1048576)")
    host.add_argument("--host-bw", default="100MBps", metavar="RATE",
                      help="network capacity per host with unit (default 100MBps)")
    host.add_argument("--power", choices=sorted(POWER_PRESETS), default="dl585",
                      help="host power preset (default dl585)")
    host.add_argument("--p-idle", type=float, metavar="W",
                      help="override idle draw in watts")
    host.add_argument("--p-max", type=float, metavar="W",
                      help="override full-load draw in watts")

    policy = parser.add_argument_group("policy")
    policy.add_argument("--algo", choices=sorted(_ALGO_CHOICES), default="ff-h2l",
                        help="placement heuristic (default ff-h2l)")
    policy.add_argument("--migration", choices=sorted(_MIGRATION_CHOICES),
                        default="none", help="consolidation mode (default none)")
    policy.add_argument("--low-threshold", type=float, metavar="FRAC",
                        help="utilization at or below which hosts are drained (default 0.4)")
    policy.add_argument("--high-threshold", type=float, metavar="FRAC",
                        help="upper utilization bound of migration targets (default 0.8)")
    policy.add_argument("--suspend-rate", default="32MBps", metavar="RATE",
                        help="memory suspend/resume rate with unit (default 32MBps)")
    policy.add_argument("--net-bandwidth", default="100MBps", metavar="RATE",
                        help="image transfer bandwidth with unit (default 100MBps)")
    policy.add_argument("--reschedule-interval", type=int, default=3600, metavar="S",
                        help="seconds between consolidation passes (default 3600)")
    policy.add_argument("--count-resume-in-delay", action="store_true",
                        help="include resume time in the requeue delay")
    policy.add_argument("--pmig-strict", action="store_true",
                        help="rehearse a per-host pack instead of the aggregate check")
    policy.add_argument("--sweep", choices=["standard"],
                        help="run the standard nine-row comparison instead of --algo")

    output = parser.add_argument_group("output")
    output.add_argument("--format", choices=["table", "csv", "json"], default="table")
    output.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    output.add_argument("--audit", action="store_true",
                        help="verify placement constraints at every event (slower)")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON file with defaults (also via LEASIM_CONFIG)")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Fold config-file values in as parser defaults, flags still win."""
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
    path = path or os.environ.get("LEASIM_CONFIG")
    if not path:
        return
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file {path}: {exc}")
    if not isinstance(raw, dict):
        parser.error(f"config file {path} must hold a JSON object")
    known = {action.dest for action in parser._actions}
    overrides = {}
    for key, value in raw.items():
        dest = key.replace("-", "_").lstrip("_")
        if dest not in known:
            parser.error(f"config file {path}: unknown option {key!r}")
        overrides[dest] = value
    parser.set_defaults(**overrides)


def _parse_range(text: str, flag: str, parser: argparse.ArgumentParser) -> tuple[int, int]:
    try:
        lo, hi = (int(part) for part in str(text).split(","))
    except ValueError:
        parser.error(f"{flag} expects MIN,MAX, got {text!r}")
    return lo, hi


def _bandwidth(text: str, flag: str, parser: argparse.ArgumentParser) -> int:
    try:
        return parse_bandwidth(str(text))
    except ValueError as exc:
        parser.error(f"{flag}: {exc}")


def make_host_spec(args, parser) -> HostSpec:
    preset = POWER_PRESETS[args.power]
    p_idle = preset.p_idle if args.p_idle is None else args.p_idle
    p_max = preset.p_max if args.p_max is None else args.p_max
    try:
        model = PowerModel(p_idle=p_idle, p_max=p_max)
        return HostSpec(
            cpu_capacity=args.cores * 100,
            memory_mb=args.mem_mb,
            disk_mb=args.disk_mb,
            bandwidth_cmbs=_bandwidth(args.host_bw, "--host-bw", parser),
            power=model,
        )
    except ValueError as exc:
        parser.error(str(exc))


def make_vm_spec(args, parser) -> VmSpec:
    try:
        return VmSpec(
            cpu_percent=args.vm_cpu,
            memory_mb=args.vm_mem,
            disk_mb=args.vm_disk,
            bandwidth_cmbs=_bandwidth(args.vm_bw, "--vm-bw", parser),
        )
    except ValueError as exc:
        parser.error(str(exc))


def _config_rows(args, parser, host_spec) -> list[tuple[str, SimConfig]]:
    """Expand the flags into labeled (label, SimConfig) sweep rows."""
    suspend = _bandwidth(args.suspend_rate, "--suspend-rate", parser)
    net = _bandwidth(args.net_bandwidth, "--net-bandwidth", parser)
    base = dict(
        host_count=args.hosts,
        host_spec=host_spec,
        suspend_rate_cmbs=suspend,
        net_bandwidth_cmbs=net,
        reschedule_interval_ms=args.reschedule_interval * MS_PER_S,
        include_resume_in_delay=args.count_resume_in_delay,
        pmig_strict=args.pmig_strict,
    )

    low = 0.4 if args.low_threshold is None else args.low_threshold
    high = 0.8 if args.high_threshold is None else args.high_threshold

    if args.sweep == "standard":
        if args.migration != "none" or args.low_threshold is not None:
            print("leasim: --sweep standard overrides --migration and thresholds",
                  file=sys.stderr)
        if not max(_SWEEP_THRESHOLDS) < high <= 1.0:
            parser.error(f"--high-threshold {high} must lie in (0.5, 1.0] for the sweep")
        rows = []
        for order in (HostOrder.NPA, HostOrder.H2L, HostOrder.L2H):
            rows.append((ALGO_LABELS[order], SimConfig(order=order, **base)))
        for mode in (MigrationMode.PMIG, MigrationMode.MIG):
            for sweep_low in _SWEEP_THRESHOLDS:
                label = (
                    f"{mode.value.upper()}-L{round(sweep_low * 100)}H{round(high * 100)}"
                    f"-{ALGO_LABELS[HostOrder.H2L]}"
                )
                rows.append(
                    (
                        label,
                        SimConfig(
                            order=HostOrder.H2L,
                            migration_mode=mode,
                            thresholds=Thresholds(low=sweep_low, high=high),
                            **base,
                        ),
                    )
                )
        return rows

    order = _ALGO_CHOICES[args.algo]
    mode = _MIGRATION_CHOICES[args.migration]
    if mode is MigrationMode.NONE:
        if args.low_threshold is not None or args.high_threshold is not None:
            print(
                "leasim: thresholds have no effect without --migration",
                file=sys.stderr,
            )
        return [(ALGO_LABELS[order], SimConfig(order=order, **base))]

    if not low < high:
        parser.error(f"--low-threshold {low} must be below --high-threshold {high}")
    try:
        thresholds = Thresholds(low=low, high=high)
    except ValueError as exc:
        parser.error(str(exc))
    label = (
        f"{mode.value.upper()}-L{round(low * 100)}H{round(high * 100)}"
        f"-{ALGO_LABELS[order]}"
    )
    return [
        (label, SimConfig(order=order, migration_mode=mode, thresholds=thresholds, **base))
    ]


def load_workload(args, parser, vm_spec) -> tuple[list, int]:
    if (args.trace is None) == (args.synthetic is None):
        parser.error("choose a workload: either --trace PATH or --synthetic [COUNT]")
    if args.trace is not None:
        try:
            with open(args.trace) as handle:
                parsed = parse_swf(handle, vm_spec, cutoff_days=args.trace_cutoff_days)
        except OSError as exc:
            parser.error(f"cannot read trace {args.trace}: {exc}")
        except ValueError as exc:
            parser.error(f"trace {args.trace}: {exc}")
        return parsed.leases, parsed.skipped_jobs
    count = args.synthetic
    rate = args.arrival_rate
    if rate is None:
        rate = max(count, 1) / (30 * SECONDS_PER_DAY)
    try:
        params = WorkloadParams(
            lease_count=count,
            duration_range_s=_parse_range(args.duration_range, "--duration-range", parser),
            vm_count_range=_parse_range(args.vm_count_range, "--vm-count-range", parser),
            arrival_rate_per_s=rate,
            seed=args.seed,
        )
    except ValueError as exc:
        parser.error(str(exc))
    return generate_synthetic(params, vm_spec), 0


@dataclass
class SweepRow:
    label: str
    report: SimReport | None = None
    error: str | None = None


def run_sweep(
    rows: list[tuple[str, SimConfig]],
    leases: list,
    *,
    skipped_jobs: int = 0,
    audit: bool = False,
) -> list[SweepRow]:
    """Run each configured row; one row failing does not stop the rest."""
    results = []
    for label, config in rows:
        try:
            report = run(config, leases, audit=audit, skipped_jobs=skipped_jobs)
            results.append(SweepRow(label=label, report=report))
        except Exception as exc:  # noqa: BLE001 - row isolation is the point
            results.append(SweepRow(label=label, error=f"{type(exc).__name__}: {exc}"))
    return results


def emit_report(rows: list[SweepRow], fmt: str) -> str:
    if fmt == "csv":
        lines = [CSV_HEADER]
        for row in rows:
            if row.report is None:
                lines.append(f"{row.label},error,error,error,error")
            else:
                r = row.report
                lines.append(
                    f"{row.label},{r.total_energy_kwh:.2f},{r.total_waiting_hours:.3f},"
                    f"{r.makespan_hours:.3f},{r.migrated_lease_count}"
                )
        return "\n".join(lines) + "\n"

    if fmt == "json":
        payload = []
        for row in rows:
            if row.report is None:
                payload.append({"algorithm": row.label, "error": row.error})
            else:
                payload.append({"algorithm": row.label, **row.report.to_dict()})
        return json.dumps(payload, indent=2) + "\n"

    width = max(len("algorithm"), max((len(row.label) for row in rows), default=0))
    header = (
        f"{'algorithm':<{width}}  {'energy_kwh':>12}  {'waiting_hours':>13}  "
        f"{'makespan_hours':>14}  {'migrated_leases':>15}"
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        if row.report is None:
            lines.append(f"{row.label:<{width}}  failed: {row.error}")
        else:
            r = row.report
            lines.append(
                f"{row.label:<{width}}  {r.total_energy_kwh:>12.2f}  "
                f"{r.total_waiting_hours:>13.3f}  {r.makespan_hours:>14.3f}  "
                f"{r.migrated_lease_count:>15}"
            )
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv and not os.environ.get("LEASIM_CONFIG"):
        parser.print_usage(sys.stderr)
        return 2
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)

    vm_spec = make_vm_spec(args, parser)
    host_spec = make_host_spec(args, parser)
    leases, skipped = load_workload(args, parser, vm_spec)
    rows = _config_rows(args, parser, host_spec)

    results = run_sweep(rows, leases, skipped_jobs=skipped, audit=args.audit)
    text = emit_report(results, args.format)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)

    for row in results:
        if row.error is not None:
            print(f"leasim: row {row.label} failed: {row.error}", file=sys.stderr)
    return 0 if all(row.error is None for row in results) else 1


if __name__ == "__main__":
    raise SystemExit(main())
