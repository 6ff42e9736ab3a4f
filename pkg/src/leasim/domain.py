"""Core data model: VM and host shapes, leases, cluster occupancy.

A lease asks for `vm_count` identical VMs, each with a four-dimensional
demand vector (CPU percent-points, memory MB, disk MB, bandwidth cmbs).
Hosts expose a capacity vector in the same units plus a linear power
model.  The `Cluster` tracks which VMs sit where and maintains exact
integer residual capacities; a host with no VMs is sleeping and draws
no power.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .migration import MigrationOverhead

N_DIMS = 4
CPU, MEM, DISK, BW = range(N_DIMS)

# Rank keys in the placement hot path scale utilization by 2**40, which
# stays an exact total order only while capacities fit in 20 bits.
MAX_CPU_CAPACITY = 1 << 20
MAX_HOSTS = 1 << 20


@dataclass(frozen=True)
class PowerModel:
    """Linear power curve: idle draw plus a utilization-proportional span."""

    p_idle: float
    p_max: float

    def __post_init__(self):
        if not (0.0 <= self.p_idle <= self.p_max):
            raise ValueError(
                f"need 0 <= p_idle <= p_max, got ({self.p_idle}, {self.p_max})"
            )

    def watts(self, utilization: float) -> float:
        return power(self, utilization)


def power(model: PowerModel, utilization: float) -> float:
    """Electric draw in watts of an active host at the given CPU utilization."""
    if not (0.0 <= utilization <= 1.0):
        raise ValueError(f"utilization {utilization} outside [0, 1]")
    return model.p_idle + (model.p_max - model.p_idle) * utilization


@dataclass(frozen=True)
class VmSpec:
    """Per-VM resource demand. All fields are exact integers."""

    cpu_percent: int
    memory_mb: int
    disk_mb: int
    bandwidth_cmbs: int = 0

    def __post_init__(self):
        for name in ("cpu_percent", "memory_mb", "disk_mb", "bandwidth_cmbs"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")

    def demand(self) -> tuple[int, int, int, int]:
        return (self.cpu_percent, self.memory_mb, self.disk_mb, self.bandwidth_cmbs)

    @property
    def schedulable(self) -> bool:
        return self.cpu_percent > 0


@dataclass(frozen=True)
class HostSpec:
    """Physical host capacities plus its power curve."""

    cpu_capacity: int
    memory_mb: int
    disk_mb: int
    bandwidth_cmbs: int
    power: PowerModel

    def __post_init__(self):
        for name in ("cpu_capacity", "memory_mb", "disk_mb", "bandwidth_cmbs"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.cpu_capacity > MAX_CPU_CAPACITY:
            raise ValueError(f"cpu_capacity {self.cpu_capacity} exceeds {MAX_CPU_CAPACITY}")

    def capacity(self) -> tuple[int, int, int, int]:
        return (self.cpu_capacity, self.memory_mb, self.disk_mb, self.bandwidth_cmbs)


class PowerState(Enum):
    ACTIVE = "active"
    SLEEPING = "sleeping"


class LeaseKind(Enum):
    BEST_EFFORT = "best_effort"
    ADVANCE_RESERVATION = "advance_reservation"
    IMMEDIATE = "immediate"


class LeaseState(Enum):
    PENDING = "pending"
    READY = "ready"
    RUNNING = "running"
    SUSPENDED = "suspended"
    COMPLETED = "completed"


_LEASE_TRANSITIONS = {
    LeaseState.PENDING: {LeaseState.READY},
    LeaseState.READY: {LeaseState.RUNNING},
    LeaseState.RUNNING: {LeaseState.SUSPENDED, LeaseState.COMPLETED},
    LeaseState.SUSPENDED: {LeaseState.READY},
    LeaseState.COMPLETED: set(),
}


@dataclass
class Lease:
    """A request for vm_count identical VMs for a fixed duration.

    State machine: pending -> ready -> running -> completed, with a
    running -> suspended -> ready loop for migrated leases.  `overhead`
    accumulates suspend/transfer/resume costs across migrations.
    """

    id: int
    vm_count: int
    vm_spec: VmSpec
    arrival_ms: int
    duration_ms: int
    kind: LeaseKind = LeaseKind.BEST_EFFORT
    requested_start_ms: int | None = None
    overhead: "MigrationOverhead | None" = None
    state: LeaseState = LeaseState.PENDING

    def __post_init__(self):
        if self.vm_count < 1:
            raise ValueError(f"lease {self.id}: vm_count must be >= 1")
        if self.duration_ms <= 0:
            raise ValueError(f"lease {self.id}: duration must be positive")
        if self.arrival_ms < 0:
            raise ValueError(f"lease {self.id}: arrival must be >= 0")
        has_start = self.requested_start_ms is not None
        if (self.kind is LeaseKind.ADVANCE_RESERVATION) != has_start:
            raise ValueError(
                f"lease {self.id}: requested_start_ms is required for advance "
                "reservations and forbidden otherwise"
            )

    def transition(self, new_state: LeaseState) -> None:
        if new_state not in _LEASE_TRANSITIONS[self.state]:
            raise ValueError(
                f"lease {self.id}: illegal transition {self.state.value} -> {new_state.value}"
            )
        self.state = new_state


@dataclass(frozen=True)
class HostState:
    """Read-only snapshot of one host, for auditing and inspection."""

    id: int
    spec: HostSpec
    placements: dict  # lease id -> tuple of vm indexes
    power_state: PowerState
    residual: tuple[int, int, int, int]

    @property
    def cpu_utilization(self) -> float:
        return (self.spec.cpu_capacity - self.residual[CPU]) / self.spec.cpu_capacity


def cpu_utilization(host: HostState) -> float:
    """Fraction of the host's CPU capacity claimed by placed VMs."""
    return host.cpu_utilization


def can_fit(host: HostState, vm: VmSpec) -> bool:
    """True when one more VM of this shape fits in the host's residuals."""
    return all(r >= d for r, d in zip(host.residual, vm.demand()))


@dataclass(frozen=True)
class Mapping:
    """A set of (lease id, vm index, host id) assignment triples."""

    assignments: frozenset

    @property
    def active_hosts(self) -> frozenset:
        return frozenset(host_id for _, _, host_id in self.assignments)


def validate_mapping(
    mapping: Mapping,
    hosts: Iterable[HostState],
    leases: Iterable[Lease],
) -> list[str]:
    """Check a mapping against capacity, uniqueness and sleep constraints.

    Returns a list of human-readable violations; an empty list means the
    mapping is consistent.  Running leases must have every VM assigned
    exactly once; leases in any other state must have no VMs placed.
    """
    host_by_id = {h.id: h for h in hosts}
    lease_by_id = {l.id: l for l in leases}
    violations: list[str] = []

    seen: dict[tuple[int, int], list[int]] = {}
    per_host: dict[int, list[int]] = {}
    for lease_id, vm_index, host_id in sorted(mapping.assignments):
        lease = lease_by_id.get(lease_id)
        if lease is None:
            violations.append(f"assignment references unknown lease {lease_id}")
            continue
        if host_id not in host_by_id:
            violations.append(f"assignment references unknown host {host_id}")
            continue
        if not (0 <= vm_index < lease.vm_count):
            violations.append(
                f"lease {lease_id} vm {vm_index} outside 0..{lease.vm_count - 1}"
            )
            continue
        seen.setdefault((lease_id, vm_index), []).append(host_id)
        sums = per_host.setdefault(host_id, [0] * N_DIMS)
        for d, amount in enumerate(lease.vm_spec.demand()):
            sums[d] += amount

    for (lease_id, vm_index), host_ids in seen.items():
        if len(host_ids) > 1:
            violations.append(
                f"lease {lease_id} vm {vm_index} assigned to {len(host_ids)} hosts: "
                f"{sorted(host_ids)}"
            )

    dim_names = ("cpu", "memory", "disk", "bandwidth")
    for host_id, sums in sorted(per_host.items()):
        host = host_by_id[host_id]
        for d, total in enumerate(sums):
            if total > host.spec.capacity()[d]:
                violations.append(
                    f"host {host_id} over {dim_names[d]} capacity: "
                    f"{total} > {host.spec.capacity()[d]}"
                )
        if host.power_state is PowerState.SLEEPING:
            violations.append(f"sleeping host {host_id} has VMs assigned")

    placed_per_lease: dict[int, int] = {}
    for lease_id, _vm_index in seen:
        placed_per_lease[lease_id] = placed_per_lease.get(lease_id, 0) + 1
    for lease in lease_by_id.values():
        placed = placed_per_lease.get(lease.id, 0)
        if lease.state is LeaseState.RUNNING and placed != lease.vm_count:
            violations.append(
                f"running lease {lease.id} has {placed}/{lease.vm_count} VMs placed"
            )
        elif lease.state is not LeaseState.RUNNING and placed > 0:
            violations.append(
                f"{lease.state.value} lease {lease.id} has {placed} VMs placed"
            )

    return violations


class Cluster:
    """Mutable occupancy state for a set of hosts.

    Residual capacities are int64 arrays, one row per host, so the
    placement hot path can scan them without object overhead.  Placement
    bookkeeping (which lease holds how many VMs on which host) lives in
    plain dicts beside the arrays.
    """

    def __init__(self, specs: Sequence[HostSpec]):
        if not specs:
            raise ValueError("cluster needs at least one host")
        if len(specs) > MAX_HOSTS:
            raise ValueError(f"at most {MAX_HOSTS} hosts supported")
        self.specs = list(specs)
        self.caps = np.array([s.capacity() for s in self.specs], dtype=np.int64)
        self.caps_cpu = np.ascontiguousarray(self.caps[:, CPU])
        self.residual = self.caps.copy()
        self.placements: list[dict[int, int]] = [dict() for _ in self.specs]
        self.segments: dict[int, list[tuple[int, int]]] = {}
        self._demands: dict[int, tuple[int, int, int, int]] = {}

    @property
    def host_count(self) -> int:
        return len(self.specs)

    def __len__(self) -> int:
        return len(self.specs)

    def used_cpu(self) -> np.ndarray:
        return self.caps_cpu - self.residual[:, CPU]

    def utilization(self, host_id: int) -> float:
        cap = self.caps[host_id, CPU]
        return float(cap - self.residual[host_id, CPU]) / float(cap)

    def is_active(self, host_id: int) -> bool:
        return bool(self.placements[host_id])

    def power_state(self, host_id: int) -> PowerState:
        return PowerState.ACTIVE if self.placements[host_id] else PowerState.SLEEPING

    def active_host_ids(self) -> list[int]:
        return [h for h in range(len(self.specs)) if self.placements[h]]

    def hosts_of(self, lease_id: int) -> list[int]:
        return [h for h, _ in self.segments.get(lease_id, [])]

    def place(self, lease: Lease, segments: list[tuple[int, int]]) -> None:
        """Commit a placement: segments are (host id, vm count) pairs."""
        if lease.id in self.segments:
            raise ValueError(f"lease {lease.id} is already placed")
        demand = np.array(lease.vm_spec.demand(), dtype=np.int64)
        total = 0
        for host_id, count in segments:
            if count <= 0:
                raise ValueError(f"lease {lease.id}: empty segment on host {host_id}")
            if np.any(self.residual[host_id] < demand * count):
                raise ValueError(
                    f"lease {lease.id}: segment of {count} VMs does not fit host {host_id}"
                )
            total += count
        if total != lease.vm_count:
            raise ValueError(
                f"lease {lease.id}: segments cover {total}/{lease.vm_count} VMs"
            )
        for host_id, count in segments:
            self.residual[host_id] -= demand * count
            self.placements[host_id][lease.id] = count
        self.segments[lease.id] = list(segments)
        self._demands[lease.id] = lease.vm_spec.demand()

    def remove(self, lease_id: int) -> list[int]:
        """Release a lease's VMs; returns the hosts that became empty."""
        if lease_id not in self.segments:
            raise KeyError(f"lease {lease_id} is not placed")
        demand = np.array(self._demands.pop(lease_id), dtype=np.int64)
        emptied = []
        for host_id, count in self.segments.pop(lease_id):
            self.residual[host_id] += demand * count
            del self.placements[host_id][lease_id]
            if not self.placements[host_id]:
                emptied.append(host_id)
        return emptied

    def _vm_slots(self, lease_id: int) -> dict[int, tuple[int, ...]]:
        """Per-host vm indexes for a lease, numbered in segment order."""
        slots: dict[int, tuple[int, ...]] = {}
        next_index = 0
        for host_id, count in self.segments[lease_id]:
            slots[host_id] = tuple(range(next_index, next_index + count))
            next_index += count
        return slots

    def host_view(self, host_id: int) -> HostState:
        placements = {
            lease_id: self._vm_slots(lease_id)[host_id]
            for lease_id in self.placements[host_id]
        }
        return HostState(
            id=host_id,
            spec=self.specs[host_id],
            placements=placements,
            power_state=self.power_state(host_id),
            residual=tuple(int(v) for v in self.residual[host_id]),
        )

    def host_views(self) -> list[HostState]:
        return [self.host_view(h) for h in range(len(self.specs))]

    def to_mapping(self) -> Mapping:
        triples = []
        for lease_id in self.segments:
            for host_id, slots in self._vm_slots(lease_id).items():
                for k in slots:
                    triples.append((lease_id, k, host_id))
        return Mapping(assignments=frozenset(triples))

    def audit(self, leases: Iterable[Lease]) -> list[str]:
        """Full consistency check of occupancy against the constraint set.

        Runs validate_mapping over every host that holds (or is claimed
        to hold) VMs; hosts without placements are checked vectorially
        for untouched residuals, which is the same sleeping-host
        constraint without materializing a thousand empty snapshots.
        """
        referenced = sorted(
            {h for segs in self.segments.values() for h, _ in segs}
            | set(self.active_host_ids())
        )
        views = [self.host_view(h) for h in referenced]
        violations = validate_mapping(self.to_mapping(), views, leases)

        idle_mask = np.ones(len(self.specs), dtype=bool)
        idle_mask[referenced] = False
        if not np.array_equal(self.residual[idle_mask], self.caps[idle_mask]):
            bad = np.flatnonzero(idle_mask)[
                np.any(self.residual[idle_mask] != self.caps[idle_mask], axis=1)
            ]
            violations.append(f"idle hosts with consumed residuals: {bad.tolist()}")

        expected = self.caps.copy()
        for lease_id, segs in self.segments.items():
            demand = np.array(self._demands[lease_id], dtype=np.int64)
            for host_id, count in segs:
                expected[host_id] -= demand * count
        if not np.array_equal(expected, self.residual):
            bad = np.flatnonzero(np.any(expected != self.residual, axis=1))
            violations.append(f"residual bookkeeping drift on hosts: {bad.tolist()}")
        if np.any(self.residual < 0) or np.any(self.residual > self.caps):
            violations.append("residuals outside [0, capacity]")
        return violations
