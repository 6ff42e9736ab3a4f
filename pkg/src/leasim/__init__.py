"""Trace-driven simulator for energy-aware scheduling of VM leases.

The package models a homogeneous cluster of physical hosts, replays a
lease workload against a pluggable placement policy, optionally
consolidates lightly loaded hosts by migrating their VMs away, and
reports energy drawn, lease waiting time, makespan and migration
counts.
"""

from ._hotpath import BACKEND, available_backends, use_backend
from .domain import (
    Cluster,
    HostSpec,
    HostState,
    Lease,
    LeaseKind,
    LeaseState,
    Mapping,
    PowerModel,
    PowerState,
    VmSpec,
    power,
    validate_mapping,
)
from .engine import AuditError, LeaseOutcome, SimConfig, SimReport, run
from .events import SimEvent, SimEventKind
from .migration import (
    MigrationMode,
    MigrationOverhead,
    Thresholds,
    migration_overhead,
)
from .placement import HostOrder, place_lease, rank_hosts, schedule_queue, sort_ready_queue
from .units import parse_bandwidth
from .workload import (
    ParsedTrace,
    WorkloadParams,
    generate_synthetic,
    parse_swf,
)

__version__ = "0.1.0"

__all__ = [
    "AuditError",
    "BACKEND",
    "Cluster",
    "HostOrder",
    "HostSpec",
    "HostState",
    "Lease",
    "LeaseKind",
    "LeaseOutcome",
    "LeaseState",
    "Mapping",
    "MigrationMode",
    "MigrationOverhead",
    "ParsedTrace",
    "PowerModel",
    "PowerState",
    "SimConfig",
    "SimEvent",
    "SimEventKind",
    "SimReport",
    "Thresholds",
    "VmSpec",
    "WorkloadParams",
    "available_backends",
    "generate_synthetic",
    "migration_overhead",
    "parse_bandwidth",
    "parse_swf",
    "place_lease",
    "power",
    "rank_hosts",
    "run",
    "schedule_queue",
    "sort_ready_queue",
    "use_backend",
    "validate_mapping",
]
