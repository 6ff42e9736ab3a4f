"""Small exact solvers used to cross-check the heuristics.

These are deliberately brute-force: they enumerate the full search
space on instances small enough to afford it, so their answers are
ground truth rather than another heuristic's opinion.
"""

from __future__ import annotations

import itertools
from math import prod
from typing import Iterable, Sequence

from .domain import HostSpec, Lease, Mapping, N_DIMS, VmSpec
from .units import WMS_PER_KWH

MAX_EXACT_VMS = 12


def min_servers_exact(
    vms: Sequence[VmSpec], host: HostSpec, max_hosts: int
) -> int | None:
    """Minimum number of identical hosts that can hold all VMs.

    Exhaustive set-partition search with symmetry breaking (a VM may
    open at most one new host), so only instances up to MAX_EXACT_VMS
    VMs are accepted.  Returns None when even max_hosts is not enough.
    """
    if len(vms) > MAX_EXACT_VMS:
        raise ValueError(f"exact search handles at most {MAX_EXACT_VMS} VMs")
    if max_hosts < 0:
        raise ValueError("max_hosts must be >= 0")
    if not vms:
        return 0

    capacity = host.capacity()
    demands = sorted((vm.demand() for vm in vms), reverse=True)
    if any(d > c for demand in demands for d, c in zip(demand, capacity)):
        return None

    best = max_hosts + 1
    bins: list[list[int]] = []

    def search(index: int) -> None:
        nonlocal best
        if len(bins) >= best:
            return
        if index == len(demands):
            best = len(bins)
            return
        demand = demands[index]
        for bin_residual in bins:
            if all(r >= d for r, d in zip(bin_residual, demand)):
                for d_i, amount in enumerate(demand):
                    bin_residual[d_i] -= amount
                search(index + 1)
                for d_i, amount in enumerate(demand):
                    bin_residual[d_i] += amount
        if len(bins) + 1 < best and len(bins) < max_hosts:
            bins.append([c - d for c, d in zip(capacity, demand)])
            search(index + 1)
            bins.pop()

    search(0)
    return best if best <= max_hosts else None


def special_case_objective(
    assignment: Mapping,
    working_time: dict[int, float],
    base_rate: float,
    per_lease_energy: Iterable[float],
) -> float:
    """Closed-form objective for single-VM leases.

    Sum of a base energy rate times each host's working time, plus each
    lease's own energy term.  Only meaningful when every lease has one
    VM, so a mapping with any VM index above zero is rejected.
    """
    for lease_id, vm_index, _host in assignment.assignments:
        if vm_index > 0:
            raise ValueError(
                f"lease {lease_id} has multiple VMs; the closed form only "
                "covers single-VM leases"
            )
    host_term = sum(base_rate * t for _host, t in sorted(working_time.items()))
    return host_term + sum(per_lease_energy)


def _compositions(total: int, bins: int) -> list[tuple[int, ...]]:
    if bins == 1:
        return [(total,)]
    result = []
    for first in range(total + 1):
        for rest in _compositions(total - first, bins - 1):
            result.append((first,) + rest)
    return result


def optimal_energy_small(
    leases: Sequence[Lease],
    host_specs: Sequence[HostSpec],
    budget: int = 200_000,
) -> float | None:
    """Minimum energy over every static placement of the leases.

    Each lease runs from its arrival for its full duration; the search
    enumerates all ways of splitting each lease's VMs across hosts,
    keeps the placements that respect all capacities at all times, and
    integrates the same linear power model the engine uses.  Returns
    None when no static placement is feasible; raises when the
    enumeration would exceed `budget` combinations.
    """
    if len(leases) > 5:
        raise ValueError("exact energy search handles at most 5 leases")
    if len(host_specs) > 3:
        raise ValueError("exact energy search handles at most 3 hosts")
    if not leases:
        return 0.0

    splits = [_compositions(lease.vm_count, len(host_specs)) for lease in leases]
    combos = prod(len(s) for s in splits)
    if combos > budget:
        raise ValueError(f"{combos} placements exceed the search budget {budget}")

    times = sorted(
        {l.arrival_ms for l in leases} | {l.arrival_ms + l.duration_ms for l in leases}
    )
    intervals = [
        (t0, t1, [i for i, l in enumerate(leases)
                  if l.arrival_ms <= t0 and t1 <= l.arrival_ms + l.duration_ms])
        for t0, t1 in zip(times, times[1:])
    ]
    capacities = [spec.capacity() for spec in host_specs]
    idle = [spec.power.p_idle for spec in host_specs]
    span = [spec.power.p_max - spec.power.p_idle for spec in host_specs]

    best: float | None = None
    for combo in itertools.product(*splits):
        energy_wms = 0.0
        feasible = True
        for t0, t1, active in intervals:
            if not active:
                continue
            dt = t1 - t0
            for host_index, capacity in enumerate(capacities):
                used = [0] * N_DIMS
                for lease_index in active:
                    count = combo[lease_index][host_index]
                    if count:
                        demand = leases[lease_index].vm_spec.demand()
                        for d in range(N_DIMS):
                            used[d] += demand[d] * count
                if any(u > c for u, c in zip(used, capacity)):
                    feasible = False
                    break
                if used[0] > 0:
                    watts = idle[host_index] + span[host_index] * (
                        used[0] / capacity[0]
                    )
                    energy_wms += dt * watts
            if not feasible:
                break
        if feasible and (best is None or energy_wms < best):
            best = energy_wms
    return None if best is None else best / WMS_PER_KWH
