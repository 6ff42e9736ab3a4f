"""Threshold-driven consolidation of under-utilized hosts.

At each rescheduling point, hosts split into a low band (utilization in
(0, low]), a medium band ((low, high]) and a high band (> high).  Every
lease holding a VM on a low host becomes a migration victim: it is
suspended, its VMs are released, and it re-enters the ready queue once
its suspend-and-transfer delay has elapsed.  Emptied hosts go to sleep.

The checked variant (PMIG) first verifies, in aggregate, that the
victims' total demand fits inside the medium band's residual capacity
and cancels the round otherwise.  The unchecked variant (MIG) migrates
unconditionally and lets victims take their chances in the queue.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domain import N_DIMS, Cluster, Lease, LeaseState
from .events import SimEvent, SimEventKind
from .units import div_to_ms


class MigrationMode(Enum):
    NONE = "none"
    MIG = "mig"
    PMIG = "pmig"


@dataclass(frozen=True)
class Thresholds:
    low: float
    high: float

    def __post_init__(self):
        if not (0.0 < self.low < self.high <= 1.0):
            raise ValueError(
                f"need 0 < low < high <= 1, got ({self.low}, {self.high})"
            )


@dataclass(frozen=True)
class MigrationOverhead:
    """Suspend, resume and image-transfer times for one migration.

    All VMs of a lease are handled serially, so each component scales
    with the VM count.  `delay_ms` is how long the lease stays
    unschedulable after suspension: suspend plus transfer by default,
    with resume added only when the engine is configured to count it.
    """

    t_sus_ms: int
    t_res_ms: int
    t_mig_ms: int
    delay_ms: int

    def __add__(self, other: "MigrationOverhead") -> "MigrationOverhead":
        return MigrationOverhead(
            self.t_sus_ms + other.t_sus_ms,
            self.t_res_ms + other.t_res_ms,
            self.t_mig_ms + other.t_mig_ms,
            self.delay_ms + other.delay_ms,
        )

    @property
    def t_sus_s(self) -> float:
        return self.t_sus_ms / 1000

    @property
    def t_res_s(self) -> float:
        return self.t_res_ms / 1000

    @property
    def t_mig_s(self) -> float:
        return self.t_mig_ms / 1000

    @property
    def delay_s(self) -> float:
        return self.delay_ms / 1000


ZERO_OVERHEAD = MigrationOverhead(0, 0, 0, 0)


def migration_overhead(
    lease: Lease,
    suspend_rate_cmbs: int,
    net_bandwidth_cmbs: int,
    include_resume_in_delay: bool = False,
) -> MigrationOverhead:
    """Transfer-time arithmetic for suspending and moving one lease.

    Suspend and resume each move the lease's memory at the suspend rate;
    the transfer moves its disk images over the network.  Amounts are
    MB, rates cmbs, hence the 100_000 scaling to land on milliseconds.
    """
    if suspend_rate_cmbs <= 0 or net_bandwidth_cmbs <= 0:
        raise ValueError("suspend rate and network bandwidth must be positive")
    mem_total = lease.vm_count * lease.vm_spec.memory_mb
    disk_total = lease.vm_count * lease.vm_spec.disk_mb
    t_sus = div_to_ms(mem_total * 100_000, suspend_rate_cmbs)
    t_mig = div_to_ms(disk_total * 100_000, net_bandwidth_cmbs)
    delay = t_sus + t_mig
    if include_resume_in_delay:
        delay += t_sus
    return MigrationOverhead(t_sus_ms=t_sus, t_res_ms=t_sus, t_mig_ms=t_mig, delay_ms=delay)


@dataclass(frozen=True)
class HostBuckets:
    """Utilization partition of the cluster at one instant."""

    low: tuple[int, ...]
    medium: tuple[int, ...]
    high: tuple[int, ...]
    sleeping: tuple[int, ...]


def classify_hosts(cluster: Cluster, thresholds: Thresholds) -> HostBuckets:
    low, medium, high, sleeping = [], [], [], []
    for host_id in range(cluster.host_count):
        if not cluster.is_active(host_id):
            sleeping.append(host_id)
            continue
        u = cluster.utilization(host_id)
        if u <= thresholds.low:
            low.append(host_id)
        elif u <= thresholds.high:
            medium.append(host_id)
        else:
            high.append(host_id)
    return HostBuckets(tuple(low), tuple(medium), tuple(high), tuple(sleeping))


@dataclass(frozen=True)
class PlanVictim:
    lease: Lease
    source_hosts: frozenset
    overhead: MigrationOverhead


@dataclass(frozen=True)
class MigrationPlan:
    victims: tuple[PlanVictim, ...]
    hosts_to_sleep: frozenset


def _collect_victims(
    cluster: Cluster,
    leases_by_id: dict[int, Lease],
    buckets: HostBuckets,
    suspend_rate_cmbs: int,
    net_bandwidth_cmbs: int,
    include_resume_in_delay: bool,
) -> tuple[PlanVictim, ...]:
    victim_ids: set[int] = set()
    for host_id in buckets.low:
        victim_ids.update(cluster.placements[host_id])
    victims = []
    for lease_id in sorted(victim_ids):
        lease = leases_by_id[lease_id]
        victims.append(
            PlanVictim(
                lease=lease,
                source_hosts=frozenset(cluster.hosts_of(lease_id)),
                overhead=migration_overhead(
                    lease, suspend_rate_cmbs, net_bandwidth_cmbs, include_resume_in_delay
                ),
            )
        )
    return tuple(victims)


def build_plan_mig(
    cluster: Cluster,
    leases_by_id: dict[int, Lease],
    thresholds: Thresholds,
    suspend_rate_cmbs: int,
    net_bandwidth_cmbs: int,
    include_resume_in_delay: bool = False,
) -> MigrationPlan:
    """Unchecked consolidation: every lease on a low host is a victim."""
    buckets = classify_hosts(cluster, thresholds)
    victims = _collect_victims(
        cluster, leases_by_id, buckets,
        suspend_rate_cmbs, net_bandwidth_cmbs, include_resume_in_delay,
    )
    return MigrationPlan(victims=victims, hosts_to_sleep=frozenset(buckets.low))


def build_plan_pmig(
    cluster: Cluster,
    leases_by_id: dict[int, Lease],
    thresholds: Thresholds,
    suspend_rate_cmbs: int,
    net_bandwidth_cmbs: int,
    include_resume_in_delay: bool = False,
    strict_pack: bool = False,
) -> MigrationPlan | None:
    """Checked consolidation: cancel the round when victims cannot fit.

    The default check compares the victims' aggregate demand against the
    medium band's aggregate residual capacity, dimension by dimension.
    `strict_pack` replaces it with a first-fit rehearsal of the victims
    into copies of the medium hosts' residuals, which is conservative
    but rules out fragmentation surprises.
    """
    buckets = classify_hosts(cluster, thresholds)
    victims = _collect_victims(
        cluster, leases_by_id, buckets,
        suspend_rate_cmbs, net_bandwidth_cmbs, include_resume_in_delay,
    )
    if not victims:
        return MigrationPlan(victims=(), hosts_to_sleep=frozenset(buckets.low))

    medium = list(buckets.medium)
    if strict_pack:
        trial = cluster.residual[medium].copy() if medium else np.empty((0, N_DIMS), np.int64)
        for victim in victims:
            demand = np.array(victim.lease.vm_spec.demand(), dtype=np.int64)
            remaining = victim.lease.vm_count
            for row in range(trial.shape[0]):
                while remaining > 0 and np.all(trial[row] >= demand):
                    trial[row] -= demand
                    remaining -= 1
            if remaining > 0:
                return None
    else:
        total_demand = np.zeros(N_DIMS, dtype=np.int64)
        for victim in victims:
            demand = np.array(victim.lease.vm_spec.demand(), dtype=np.int64)
            total_demand += demand * victim.lease.vm_count
        total_free = (
            cluster.residual[medium].sum(axis=0)
            if medium
            else np.zeros(N_DIMS, dtype=np.int64)
        )
        if np.any(total_demand > total_free):
            return None
    return MigrationPlan(victims=victims, hosts_to_sleep=frozenset(buckets.low))


def apply_plan(plan: MigrationPlan, cluster: Cluster, clock_ms: int) -> list[SimEvent]:
    """Suspend the plan's victims and release their VMs.

    Returns one victim-ready event per victim, timestamped at the end of
    its suspend-and-transfer delay.  The caller re-queues the lease when
    that event fires.  A victim that is no longer running means the plan
    is stale, which is an error.
    """
    requeue = []
    for victim in plan.victims:
        lease = victim.lease
        if lease.state is not LeaseState.RUNNING:
            raise ValueError(
                f"stale migration plan: lease {lease.id} is {lease.state.value}"
            )
        cluster.remove(lease.id)
        lease.transition(LeaseState.SUSPENDED)
        lease.overhead = (lease.overhead or ZERO_OVERHEAD) + victim.overhead
        requeue.append(
            SimEvent(
                time_ms=clock_ms + victim.overhead.delay_ms,
                kind=SimEventKind.VICTIM_READY,
                subject=lease.id,
            )
        )
    for host_id in plan.hosts_to_sleep:
        if cluster.is_active(host_id):
            raise RuntimeError(f"host {host_id} still holds VMs after consolidation")
    return requeue
