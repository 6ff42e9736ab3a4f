"""Discrete-event simulation of lease scheduling on a power-aware cluster.

The engine replays lease arrivals against a cluster of identical hosts,
invoking the placement heuristic on every arrival, completion and
victim-requeue event, and the consolidation planner on a fixed
rescheduling tick.  Time is integer milliseconds throughout.  Events at
the same timestamp fire in a fixed priority order (completions first,
then victim requeues, then arrivals, then the tick) so replays are
bit-for-bit reproducible.

Energy is integrated per host between consecutive event timestamps:
utilization is piecewise constant, a host draws idle power plus a
utilization-proportional span while it has VMs, and nothing at all
while asleep.  Hosts fall asleep the instant their last VM leaves.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .domain import (
    CPU,
    Cluster,
    HostSpec,
    HostState,
    Lease,
    LeaseKind,
    LeaseState,
    PowerState,
    VmSpec,
    power,
)
from .events import SimEvent, SimEventKind
from .migration import (
    MigrationMode,
    Thresholds,
    apply_plan,
    build_plan_mig,
    build_plan_pmig,
)
from .placement import HostOrder, place_lease, schedule_queue
from . import _hotpath
from .units import MS_PER_HOUR, WMS_PER_KWH


class AuditError(RuntimeError):
    """A per-event constraint audit found the cluster in an illegal state."""


@dataclass(frozen=True)
class SimConfig:
    """Cluster shape plus scheduling policy for one simulation run."""

    host_count: int
    host_spec: HostSpec
    order: HostOrder = HostOrder.H2L
    migration_mode: MigrationMode = MigrationMode.NONE
    thresholds: Thresholds | None = None
    suspend_rate_cmbs: int = 3200  # 32 MB/s
    net_bandwidth_cmbs: int = 10_000  # 100 MB/s
    reschedule_interval_ms: int = 3_600_000
    include_resume_in_delay: bool = False
    pmig_strict: bool = False

    def __post_init__(self):
        if self.host_count < 1:
            raise ValueError("host_count must be >= 1")
        if self.suspend_rate_cmbs <= 0 or self.net_bandwidth_cmbs <= 0:
            raise ValueError("transfer rates must be positive")
        if self.migration_mode is not MigrationMode.NONE:
            if self.thresholds is None:
                raise ValueError("migration modes need thresholds")
            if self.reschedule_interval_ms <= 0:
                raise ValueError("reschedule interval must be positive")


@dataclass
class LeaseOutcome:
    """What happened to one lease over the run."""

    lease_id: int
    arrival_ms: int
    start_ms: int | None
    end_ms: int | None
    waited_ms: int
    migrations: int
    rejected: str | None = None


def completion_time_ms(outcome: LeaseOutcome) -> int:
    """Absolute completion time of a finished lease."""
    if outcome.end_ms is None:
        raise ValueError(f"lease {outcome.lease_id} did not complete")
    return outcome.end_ms


@dataclass
class SimReport:
    total_energy_kwh: float
    total_waiting_hours: float
    makespan_hours: float
    migrated_lease_count: int
    per_host_energy_kwh: list[float]
    skipped_jobs: int = 0
    event_count: int = 0
    max_queue_depth: int = 0
    rejected: list = field(default_factory=list)
    backend: str = ""
    outcomes: list = field(default_factory=list, repr=False)
    events: list = field(default_factory=list, repr=False)
    intervals: list | None = field(default=None, repr=False)
    host_active_ms: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "total_energy_kwh": self.total_energy_kwh,
            "total_waiting_hours": self.total_waiting_hours,
            "makespan_hours": self.makespan_hours,
            "migrated_lease_count": self.migrated_lease_count,
            "per_host_energy_kwh": list(self.per_host_energy_kwh),
            "skipped_jobs": self.skipped_jobs,
            "event_count": self.event_count,
            "max_queue_depth": self.max_queue_depth,
            "rejected": [list(item) for item in self.rejected],
            "backend": self.backend,
        }


def integrate_energy(host: HostState, span_ms: tuple[int, int]) -> float:
    """Energy in kWh drawn by a host over an interval of constant load."""
    t0, t1 = span_ms
    if t1 < t0:
        raise ValueError(f"interval end {t1} before start {t0}")
    if host.power_state is PowerState.SLEEPING:
        return 0.0
    watts = power(host.spec.power, host.cpu_utilization)
    return watts * (t1 - t0) / WMS_PER_KWH


def accumulate_metrics(
    events: Sequence[SimEvent],
    outcomes: Sequence[LeaseOutcome],
    per_host_energy_kwh: Sequence[float],
    *,
    skipped_jobs: int = 0,
    max_queue_depth: int = 0,
    rejected: Sequence = (),
    backend: str = "",
) -> SimReport:
    """Fold per-lease outcomes and per-host energy into a report."""
    waited_ms = sum(o.waited_ms for o in outcomes)
    ends = [o.end_ms for o in outcomes if o.end_ms is not None]
    makespan_ms = max(ends) if ends else 0
    migrated = sum(1 for o in outcomes if o.migrations > 0)
    per_host = [float(e) for e in per_host_energy_kwh]
    return SimReport(
        total_energy_kwh=sum(per_host),
        total_waiting_hours=waited_ms / MS_PER_HOUR,
        makespan_hours=makespan_ms / MS_PER_HOUR,
        migrated_lease_count=migrated,
        per_host_energy_kwh=per_host,
        skipped_jobs=skipped_jobs,
        event_count=len(events),
        max_queue_depth=max_queue_depth,
        rejected=list(rejected),
        backend=backend,
        outcomes=list(outcomes),
        events=list(events),
    )


class _Meter:
    """Vectorized piecewise-constant energy integration over all hosts."""

    def __init__(self, cluster: Cluster, record_intervals: bool):
        self.cluster = cluster
        self.p_idle = np.array([s.power.p_idle for s in cluster.specs])
        self.span = np.array([s.power.p_max - s.power.p_idle for s in cluster.specs])
        self.acc_wms = np.zeros(cluster.host_count)
        self.active_ms = np.zeros(cluster.host_count, dtype=np.int64)
        self.last_ms = 0
        self.intervals: list | None = [] if record_intervals else None

    def advance(self, now_ms: int) -> None:
        dt = now_ms - self.last_ms
        if dt <= 0:
            return
        used = self.cluster.used_cpu()
        active = used > 0
        if active.any():
            util = used / self.cluster.caps[:, CPU]
            watts = self.p_idle + self.span * util
            self.acc_wms[active] += dt * watts[active]
            self.active_ms[active] += dt
            if self.intervals is not None:
                for h in np.flatnonzero(active):
                    self.intervals.append((int(h), self.last_ms, now_ms, int(used[h])))
        self.last_ms = now_ms


class _Run:
    """Engine-private runtime record for one lease."""

    __slots__ = (
        "lease",
        "remaining_ms",
        "eligible_ms",
        "waited_ms",
        "first_start_ms",
        "last_start_ms",
        "end_ms",
        "end_seq",
        "migrations",
        "rejected",
    )

    def __init__(self, lease: Lease):
        self.lease = lease
        self.remaining_ms = lease.duration_ms
        self.eligible_ms = lease.arrival_ms
        self.waited_ms = 0
        self.first_start_ms: int | None = None
        self.last_start_ms: int | None = None
        self.end_ms: int | None = None
        self.end_seq: int | None = None
        self.migrations = 0
        self.rejected: str | None = None


def _cluster_fit(cluster: Cluster, spec: VmSpec) -> int:
    """Upper bound on VMs of this shape the empty cluster can hold."""
    total = 0
    for host_spec in cluster.specs:
        per_host = None
        for capacity, amount in zip(host_spec.capacity(), spec.demand()):
            if amount > 0:
                fit = capacity // amount
                per_host = fit if per_host is None else min(per_host, fit)
        total += per_host or 0
    return total


def run(
    config: SimConfig,
    leases: Iterable[Lease],
    *,
    audit: bool = False,
    record_intervals: bool = False,
    skipped_jobs: int = 0,
) -> SimReport:
    """Replay a workload under one scheduling policy.

    Input leases must be pending; they are copied, never mutated, so the
    same workload list can be replayed under several configs.  Leases
    whose demand exceeds the whole cluster are rejected with a reason in
    the report and the run continues without them.
    """
    cluster = Cluster([config.host_spec] * config.host_count)
    meter = _Meter(cluster, record_intervals)

    runs: dict[int, _Run] = {}
    for lease in sorted(leases, key=lambda l: (l.arrival_ms, l.id)):
        if lease.id in runs:
            raise ValueError(f"duplicate lease id {lease.id}")
        if lease.state is not LeaseState.PENDING:
            raise ValueError(f"lease {lease.id} is {lease.state.value}, not pending")
        runs[lease.id] = _Run(replace(lease))

    heap: list = []
    seq = 0

    def push(time_ms: int, kind: SimEventKind, run_: _Run | None) -> int:
        nonlocal seq
        subject = run_.lease.id if run_ is not None else -1
        heapq.heappush(heap, (time_ms, int(kind), subject, seq, kind, run_))
        seq += 1
        return seq - 1

    future_arrivals = 0
    for run_ in runs.values():
        at = run_.lease.arrival_ms
        if run_.lease.kind is LeaseKind.ADVANCE_RESERVATION:
            at = max(at, run_.lease.requested_start_ms)
        run_.eligible_ms = at
        push(at, SimEventKind.LEASE_ARRIVAL, run_)
        future_arrivals += 1

    if config.migration_mode is not MigrationMode.NONE and runs:
        push(config.reschedule_interval_ms, SimEventKind.RESCHEDULE_TICK, None)

    ready: list[_Run] = []
    live: dict[int, _Run] = {}
    n_running = 0
    n_suspended = 0
    rejected: list[tuple[int, str]] = []
    event_log: list[SimEvent] = []
    max_queue_depth = 0
    clock = 0
    fit_cache: dict[VmSpec, int] = {}

    def start(run_: _Run, now: int) -> None:
        nonlocal n_running
        run_.lease.transition(LeaseState.RUNNING)
        run_.waited_ms += now - run_.eligible_ms
        if run_.first_start_ms is None:
            run_.first_start_ms = now
        run_.last_start_ms = now
        run_.end_seq = push(now + run_.remaining_ms, SimEventKind.LEASE_END, run_)
        n_running += 1
        event_log.append(SimEvent(now, SimEventKind.LEASE_START, run_.lease.id))

    def try_schedule(now: int) -> None:
        if not ready:
            return
        placed = schedule_queue(cluster, [r.lease for r in ready], config.order)
        if placed is None:
            return
        by_id = {r.lease.id: r for r in ready}
        started = [by_id[lease_id] for lease_id in placed]
        ready.clear()
        for run_ in started:
            start(run_, now)

    def drain(now: int) -> bool:
        """Break an all-or-nothing starvation by placing leases one at a
        time; runs only when nothing in flight could free capacity."""
        leftovers: list[_Run] = []
        placed_any = False
        for run_ in sorted(
            ready,
            key=lambda r: (-r.lease.duration_ms, r.lease.arrival_ms, r.lease.id),
        ):
            if place_lease(cluster, run_.lease, config.order) is None:
                leftovers.append(run_)
            else:
                start(run_, now)
                placed_any = True
        ready[:] = leftovers
        return placed_any

    while heap or ready:
        if not heap:
            if not drain(clock):
                stuck = [r.lease.id for r in ready]
                raise RuntimeError(f"scheduler stalled with queued leases {stuck}")
            continue

        time_ms, _prio, _subj, ev_seq, kind, run_ = heapq.heappop(heap)
        if kind is SimEventKind.LEASE_END and (
            run_.end_seq != ev_seq or run_.lease.state is not LeaseState.RUNNING
        ):
            continue  # cancelled by a migration; the lease will finish later
        meter.advance(time_ms)
        clock = time_ms
        event_log.append(
            SimEvent(clock, kind, run_.lease.id if run_ is not None else None)
        )

        if kind is SimEventKind.LEASE_ARRIVAL:
            future_arrivals -= 1
            lease = run_.lease
            if not lease.vm_spec.schedulable:
                reason = "vm spec has zero cpu demand"
            else:
                if lease.vm_spec not in fit_cache:
                    fit_cache[lease.vm_spec] = _cluster_fit(cluster, lease.vm_spec)
                most = fit_cache[lease.vm_spec]
                reason = (
                    None
                    if lease.vm_count <= most
                    else f"needs {lease.vm_count} VMs, cluster holds at most {most}"
                )
            if reason is not None:
                run_.rejected = reason
                rejected.append((lease.id, reason))
            else:
                lease.transition(LeaseState.READY)
                live[lease.id] = run_
                ready.append(run_)
                max_queue_depth = max(max_queue_depth, len(ready))
                try_schedule(clock)

        elif kind is SimEventKind.LEASE_END:
            lease = run_.lease
            cluster.remove(lease.id)
            lease.transition(LeaseState.COMPLETED)
            run_.end_ms = clock
            run_.end_seq = None
            n_running -= 1
            del live[lease.id]
            try_schedule(clock)

        elif kind is SimEventKind.VICTIM_READY:
            run_.lease.transition(LeaseState.READY)
            n_suspended -= 1
            ready.append(run_)
            max_queue_depth = max(max_queue_depth, len(ready))
            try_schedule(clock)

        elif kind is SimEventKind.RESCHEDULE_TICK:
            if n_running:
                leases_by_id = {
                    lease_id: r.lease
                    for lease_id, r in live.items()
                    if r.lease.state is LeaseState.RUNNING
                }
                if config.migration_mode is MigrationMode.MIG:
                    plan = build_plan_mig(
                        cluster,
                        leases_by_id,
                        config.thresholds,
                        config.suspend_rate_cmbs,
                        config.net_bandwidth_cmbs,
                        config.include_resume_in_delay,
                    )
                else:
                    plan = build_plan_pmig(
                        cluster,
                        leases_by_id,
                        config.thresholds,
                        config.suspend_rate_cmbs,
                        config.net_bandwidth_cmbs,
                        config.include_resume_in_delay,
                        strict_pack=config.pmig_strict,
                    )
                if plan is not None and plan.victims:
                    for event in apply_plan(plan, cluster, clock):
                        victim = runs[event.subject]
                        victim.remaining_ms -= clock - victim.last_start_ms
                        if victim.remaining_ms <= 0:
                            raise RuntimeError(
                                f"lease {event.subject} migrated past its end"
                            )
                        victim.end_seq = None
                        victim.eligible_ms = clock
                        victim.migrations += 1
                        n_running -= 1
                        n_suspended += 1
                        push(event.time_ms, SimEventKind.VICTIM_READY, victim)
            if live or future_arrivals:
                push(clock + config.reschedule_interval_ms, SimEventKind.RESCHEDULE_TICK, None)

        if ready and n_running == 0 and n_suspended == 0 and future_arrivals == 0:
            drain(clock)

        if audit:
            violations = cluster.audit([r.lease for r in live.values()])
            if violations:
                raise AuditError(
                    f"constraint audit failed at t={clock}ms: " + "; ".join(violations)
                )

    assert not live, "event loop drained with unfinished leases"

    per_host_kwh = [float(wms) / WMS_PER_KWH for wms in meter.acc_wms]
    outcomes = [
        LeaseOutcome(
            lease_id=r.lease.id,
            arrival_ms=r.lease.arrival_ms,
            start_ms=r.first_start_ms,
            end_ms=r.end_ms,
            waited_ms=r.waited_ms,
            migrations=r.migrations,
            rejected=r.rejected,
        )
        for r in runs.values()
    ]
    report = accumulate_metrics(
        event_log,
        outcomes,
        per_host_kwh,
        skipped_jobs=skipped_jobs,
        max_queue_depth=max_queue_depth,
        rejected=rejected,
        backend=_hotpath.BACKEND,
    )
    report.intervals = meter.intervals
    report.host_active_ms = [int(v) for v in meter.active_ms]
    return report
