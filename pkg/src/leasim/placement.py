"""First-fit placement heuristics over ranked hosts.

Three host orderings are supported: H2L walks active hosts from busiest
to least busy (idle hosts last), L2H walks them least busy first (idle
hosts still last), and NPA ranks by descending free capacity so fresh
hosts absorb the load.  A lease's VMs are packed greedily: as many as
fit on the first ranked host, overflow onto the next, and so on.
"""

from __future__ import annotations

from enum import Enum

from . import _hotpath
from .domain import Cluster, Lease, LeaseState


class HostOrder(Enum):
    H2L = "h2l"
    L2H = "l2h"
    NPA = "npa"


_ORDER_MODES = {
    HostOrder.H2L: _hotpath.ORDER_H2L,
    HostOrder.L2H: _hotpath.ORDER_L2H,
    HostOrder.NPA: _hotpath.ORDER_NPA,
}


def sort_ready_queue(leases: list[Lease]) -> list[Lease]:
    """Longest requested duration first; ties by arrival, then id."""
    return sorted(leases, key=lambda l: (-l.duration_ms, l.arrival_ms, l.id))


def rank_hosts(cluster: Cluster, order: HostOrder) -> list[int]:
    """Host ids in first-fit scan order for the given heuristic."""
    ranked = _hotpath.rank_order(
        cluster.caps_cpu, cluster.used_cpu(), _ORDER_MODES[order]
    )
    return [int(h) for h in ranked]


def place_lease(
    cluster: Cluster, lease: Lease, order: HostOrder
) -> list[tuple[int, int]] | None:
    """Map one lease's VMs onto the cluster, or None if they do not fit.

    On success the cluster is updated and the committed (host id,
    vm count) segments are returned; on failure nothing changes.
    """
    if lease.state is not LeaseState.READY:
        raise ValueError(f"lease {lease.id} is {lease.state.value}, not ready")
    if not lease.vm_spec.schedulable:
        raise ValueError(f"lease {lease.id} has a zero-CPU vm spec")
    segments = _hotpath.pack(
        cluster.caps_cpu,
        cluster.residual,
        lease.vm_spec.demand(),
        lease.vm_count,
        _ORDER_MODES[order],
    )
    if segments is None:
        return None
    cluster.place(lease, segments)
    return segments


def schedule_queue(
    cluster: Cluster, queue: list[Lease], order: HostOrder
) -> dict[int, list[tuple[int, int]]] | None:
    """Place every queued lease or none of them.

    Leases are taken longest-duration first.  If any lease fails to fit,
    all placements made in this round are rolled back and None is
    returned; the caller keeps the queue for the next invocation.
    """
    placed: dict[int, list[tuple[int, int]]] = {}
    for lease in sort_ready_queue(queue):
        segments = place_lease(cluster, lease, order)
        if segments is None:
            for lease_id in placed:
                cluster.remove(lease_id)
            return None
        placed[lease.id] = segments
    return placed
