"""Compare the compiled placement kernel against the pure-Python fallback.

Runs the ranking and packing primitives at several cluster sizes, then a
full simulation under each backend, and prints a speedup table.  Both
backends must agree on every result; this doubles as a coarse parity
check outside the test suite.

Usage: python benchmarks/bench_hotpath.py [--hosts 100,1000,10000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from leasim import _hotpath
from leasim._hotpath_py import ORDER_H2L, ORDER_NPA
from leasim.domain import HostSpec, PowerModel
from leasim.engine import SimConfig, run
from leasim.placement import HostOrder
from leasim.migration import MigrationMode, Thresholds
from leasim.workload import WorkloadParams, generate_synthetic


def timeit(fn, *, repeats=5, inner=1):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def synth_cluster(n_hosts, seed=0):
    rng = np.random.default_rng(seed)
    caps = np.full(n_hosts, 1600, dtype=np.int64)
    used = rng.integers(0, 1601, size=n_hosts, dtype=np.int64)
    used[rng.random(n_hosts) < 0.3] = 0  # a sleeping fraction
    residual = np.empty((n_hosts, 4), dtype=np.int64)
    residual[:, 0] = caps - used
    residual[:, 1] = rng.integers(0, 16_385, size=n_hosts)
    residual[:, 2] = rng.integers(0, 1_048_577, size=n_hosts)
    residual[:, 3] = rng.integers(0, 10_001, size=n_hosts)
    return caps, used, residual


def bench_kernels(host_counts):
    demand = (100, 1024, 4096, 0)
    print(f"{'kernel':<22} {'hosts':>7} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for n in host_counts:
        caps, used, residual = synth_cluster(n)
        inner = max(1, 200_000 // n)
        impls = {name: _hotpath._IMPLS[name] for name in _hotpath.available_backends()}
        if "compiled" not in impls:
            print(f"{'(extension missing)':<22} {n:>7}")
            continue
        for label, args in (
            ("rank_order h2l", (caps, used, ORDER_H2L)),
            ("rank_order npa", (caps, used, ORDER_NPA)),
        ):
            results = {}
            times = {}
            for name, impl in impls.items():
                times[name] = timeit(lambda: impl.rank_order(*args), inner=inner)
                results[name] = list(impl.rank_order(*args))
            assert results["python"] == results["compiled"], (label, n)
            print(f"{label:<22} {n:>7} {times['python'] * 1e6:>10.1f}us "
                  f"{times['compiled'] * 1e6:>10.1f}us "
                  f"{times['python'] / times['compiled']:>7.1f}x")
        results = {}
        times = {}
        for name, impl in impls.items():
            times[name] = timeit(lambda: impl.pack(caps, residual, demand, 16, ORDER_H2L),
                                 inner=inner)
            results[name] = impl.pack(caps, residual, demand, 16, ORDER_H2L)
        assert results["python"] == results["compiled"], ("pack", n)
        print(f"{'pack 16 vms h2l':<22} {n:>7} {times['python'] * 1e6:>10.1f}us "
              f"{times['compiled'] * 1e6:>10.1f}us "
              f"{times['python'] / times['compiled']:>7.1f}x")


def bench_end_to_end():
    spec = HostSpec(cpu_capacity=1600, memory_mb=16_384, disk_mb=1_048_576,
                    bandwidth_cmbs=10_000, power=PowerModel(299.0, 521.0))
    cfg = SimConfig(host_count=1000, host_spec=spec, order=HostOrder.H2L,
                    migration_mode=MigrationMode.PMIG, thresholds=Thresholds(0.4, 0.8))
    params = WorkloadParams(lease_count=5108, duration_range_s=(600, 28_800),
                            vm_count_range=(1, 16),
                            arrival_rate_per_s=5108 / (30 * 86_400), seed=42)
    leases = generate_synthetic(params)

    print()
    print("full 30-day replay, 1000 hosts, 5108 leases, pmig:")
    reports = {}
    for backend in _hotpath.available_backends():
        previous = _hotpath.use_backend(backend)
        try:
            t0 = time.perf_counter()
            reports[backend] = run(cfg, leases)
            elapsed = time.perf_counter() - t0
        finally:
            _hotpath.use_backend(previous)
        print(f"  {backend:<9} {elapsed:6.2f}s  "
              f"energy={reports[backend].total_energy_kwh:.2f} kWh")
    if len(reports) == 2:
        match = (reports["python"].total_energy_kwh
                 == reports["compiled"].total_energy_kwh)
        print(f"  backends agree exactly: {match}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--hosts", default="100,1000,10000",
                        help="comma list of cluster sizes for the kernel runs")
    args = parser.parse_args()
    host_counts = [int(part) for part in args.hosts.split(",")]
    print(f"backends: {_hotpath.available_backends()} (default {_hotpath.BACKEND})")
    bench_kernels(host_counts)
    bench_end_to_end()


if __name__ == "__main__":
    main()
