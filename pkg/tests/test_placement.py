import pytest

from leasim.domain import CPU, Cluster, HostSpec, Lease, LeaseState, PowerModel, VmSpec
from leasim.placement import (
    HostOrder,
    place_lease,
    rank_hosts,
    schedule_queue,
    sort_ready_queue,
)

MODEL = PowerModel(p_idle=299.0, p_max=521.0)


def host_spec(cores=16, mem=16384):
    return HostSpec(cpu_capacity=cores * 100, memory_mb=mem, disk_mb=1_048_576,
                    bandwidth_cmbs=10_000, power=MODEL)


def ready_lease(lease_id, vm_count=1, duration_ms=1000, arrival_ms=0,
                cpu=100, mem=1024, disk=4096):
    lease = Lease(id=lease_id, vm_count=vm_count, vm_spec=VmSpec(cpu, mem, disk),
                  arrival_ms=arrival_ms, duration_ms=duration_ms)
    lease.transition(LeaseState.READY)
    return lease


def occupy(cluster, host_id, cores, lease_id):
    lease = ready_lease(lease_id, vm_count=cores)
    place = [(host_id, cores)]
    cluster.place(lease, place)
    lease.transition(LeaseState.RUNNING)
    return lease


def test_sort_ready_queue():
    a = ready_lease(3, duration_ms=100, arrival_ms=5)
    b = ready_lease(1, duration_ms=900, arrival_ms=9)
    c = ready_lease(2, duration_ms=100, arrival_ms=2)
    d = ready_lease(0, duration_ms=100, arrival_ms=2)
    assert [l.id for l in sort_ready_queue([a, b, c, d])] == [1, 0, 2, 3]


def test_rank_hosts_orders():
    cluster = Cluster([host_spec()] * 4)
    occupy(cluster, 1, 8, 100)  # util 0.5
    occupy(cluster, 3, 2, 101)  # util 0.125
    assert rank_hosts(cluster, HostOrder.H2L) == [1, 3, 0, 2]
    assert rank_hosts(cluster, HostOrder.L2H) == [3, 1, 0, 2]
    assert rank_hosts(cluster, HostOrder.NPA) == [0, 2, 3, 1]


def test_place_lease_h2l_prefers_busiest():
    cluster = Cluster([host_spec()] * 3)
    occupy(cluster, 2, 10, 100)
    lease = ready_lease(1, vm_count=2)
    assert place_lease(cluster, lease, HostOrder.H2L) == [(2, 2)]
    assert cluster.hosts_of(1) == [2]


def test_place_lease_npa_wakes_fresh_host():
    cluster = Cluster([host_spec()] * 3)
    occupy(cluster, 1, 2, 100)
    lease = ready_lease(1, vm_count=2)
    assert place_lease(cluster, lease, HostOrder.NPA) == [(0, 2)]


def test_place_lease_spills_across_hosts():
    cluster = Cluster([host_spec()] * 2)
    lease = ready_lease(1, vm_count=20)
    assert place_lease(cluster, lease, HostOrder.L2H) == [(0, 16), (1, 4)]


def test_place_lease_memory_bound():
    cluster = Cluster([host_spec(mem=2048)])
    lease = ready_lease(1, vm_count=3)  # 3 GB of VM memory on a 2 GB host
    assert place_lease(cluster, lease, HostOrder.H2L) is None
    assert (cluster.residual == cluster.caps).all()


def test_place_lease_requires_ready():
    cluster = Cluster([host_spec()])
    lease = Lease(id=1, vm_count=1, vm_spec=VmSpec(100, 1024, 4096),
                  arrival_ms=0, duration_ms=10)
    with pytest.raises(ValueError):
        place_lease(cluster, lease, HostOrder.H2L)


def test_schedule_queue_all_or_nothing():
    cluster = Cluster([host_spec()] * 2)
    fits = ready_lease(1, vm_count=30, duration_ms=500)
    too_big = ready_lease(2, vm_count=4, duration_ms=100)
    result = schedule_queue(cluster, [fits, too_big], HostOrder.H2L)
    assert result is None
    # the rollback must leave the cluster untouched
    assert (cluster.residual == cluster.caps).all()
    assert cluster.active_host_ids() == []


def test_schedule_queue_success_order():
    cluster = Cluster([host_spec()] * 2)
    short = ready_lease(1, vm_count=2, duration_ms=100)
    long = ready_lease(2, vm_count=2, duration_ms=900)
    result = schedule_queue(cluster, [short, long], HostOrder.NPA)
    assert result is not None
    # longest first: lease 2 wakes host 0, lease 1 then lands on host 1
    assert result[2] == [(0, 2)]
    assert result[1] == [(1, 2)]


def test_schedule_queue_empty():
    cluster = Cluster([host_spec()])
    assert schedule_queue(cluster, [], HostOrder.H2L) == {}
