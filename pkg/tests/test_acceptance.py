"""End-to-end acceptance checks.

Each test covers one numbered criterion and prints a single PASS/FAIL
line (visible with -s or in failure output); the assertions carry the
same conditions, so the pytest -v status line per test mirrors the
criterion verdict.  Criterion 9's second half needs a real cleaned
trace; without one it reports the synthetic stand-in situation and
skips, which is the honest outcome rather than a fabricated pass.
"""

import glob
import io
import os
import random
import time

import pytest

from leasim import cli
from leasim.domain import HostSpec, Lease, PowerModel, VmSpec, power
from leasim.engine import SimConfig, run
from leasim.migration import MigrationMode, Thresholds, migration_overhead
from leasim.oracle import min_servers_exact, optimal_energy_small
from leasim.placement import HostOrder
from leasim.units import WMS_PER_KWH
from leasim.workload import WorkloadParams, generate_synthetic, parse_swf

DL585 = PowerModel(p_idle=299.0, p_max=521.0)
DL785 = PowerModel(p_idle=444.0, p_max=799.0)


def host_spec(cores=16, model=DL585):
    return HostSpec(cpu_capacity=cores * 100, memory_mb=16_384, disk_mb=1_048_576,
                    bandwidth_cmbs=10_000, power=model)


def standin_workload(count=5108, seed=42):
    """Synthetic 30-day stand-in used when no real trace is available."""
    params = WorkloadParams(
        lease_count=count,
        duration_range_s=(600, 28_800),
        vm_count_range=(1, 16),
        arrival_rate_per_s=count / (30 * 86_400),
        seed=seed,
    )
    return generate_synthetic(params)


def verdict(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def test_c1_migration_overhead_worked_example():
    lease = Lease(id=0, vm_count=2, vm_spec=VmSpec(100, 1024, 4096),
                  arrival_ms=0, duration_ms=600_000)
    oh = migration_overhead(lease, suspend_rate_cmbs=3_200, net_bandwidth_cmbs=10_000)
    ok = (oh.t_sus_ms, oh.t_res_ms, oh.t_mig_ms, oh.delay_ms) == (
        64_000, 64_000, 81_920, 145_920)
    ok = ok and (oh.t_sus_s, oh.t_res_s, oh.t_mig_s, oh.delay_s) == (
        64.0, 64.0, 81.92, 145.92)
    assert verdict(
        "criterion 1 overhead example",
        ok,
        f"t_sus={oh.t_sus_s} t_res={oh.t_res_s} t_mig={oh.t_mig_s} "
        f"delay={oh.delay_s} (expected 64.00/64.00/81.92/145.92 s)",
    )


def test_c2_power_model_endpoints():
    values = (
        power(DL585, 0.0), power(DL585, 1.0), power(DL785, 0.0), power(DL785, 1.0),
    )
    ok = values == (299.0, 521.0, 444.0, 799.0)
    assert verdict(
        "criterion 2 power endpoints",
        ok,
        f"dl585 {values[0]}/{values[1]} W, dl785 {values[2]}/{values[3]} W (exact)",
    )


def test_c3_energy_conservation_200_runs():
    host = host_spec()
    orders = [HostOrder.NPA, HostOrder.H2L, HostOrder.L2H]
    modes = [MigrationMode.NONE, MigrationMode.MIG, MigrationMode.PMIG]
    worst = 0.0
    started = time.time()
    for seed in range(200):
        rng = random.Random(seed)
        mode = rng.choice(modes)
        cfg = SimConfig(
            host_count=rng.randint(2, 6),
            host_spec=host,
            order=rng.choice(orders),
            migration_mode=mode,
            thresholds=(Thresholds(rng.uniform(0.2, 0.5), rng.uniform(0.6, 0.9))
                        if mode is not MigrationMode.NONE else None),
            reschedule_interval_ms=rng.choice([600_000, 1_800_000, 3_600_000]),
        )
        params = WorkloadParams(
            lease_count=rng.randint(20, 60), duration_range_s=(300, 7_200),
            vm_count_range=(1, 8), arrival_rate_per_s=rng.uniform(0.001, 0.02),
            seed=seed * 977 + 13,
        )
        report = run(cfg, generate_synthetic(params), record_intervals=True)

        per_host_wms = [0.0] * cfg.host_count
        active = [0] * cfg.host_count
        last_end = [0] * cfg.host_count
        for h, t0, t1, used in report.intervals:
            assert t0 >= last_end[h] and 0 < used <= host.cpu_capacity, seed
            last_end[h] = t1
            watts = host.power.p_idle + (
                (host.power.p_max - host.power.p_idle) * (used / host.cpu_capacity)
            )
            per_host_wms[h] += (t1 - t0) * watts
            active[h] += t1 - t0
        # interval lengths must reproduce active time exactly, energies
        # within 1e-9 relative
        assert active == list(report.host_active_ms), seed
        total = sum(per_host_wms) / WMS_PER_KWH
        rel = abs(total - report.total_energy_kwh) / max(report.total_energy_kwh, 1e-12)
        worst = max(worst, rel)
        assert rel <= 1e-9, (seed, rel)
    assert verdict(
        "criterion 3 energy conservation",
        worst <= 1e-9,
        f"200 runs, worst relative error {worst:.2e} (limit 1e-9), "
        f"interval/active-time accounting exact, {time.time() - started:.1f}s",
    )


def test_c4_oracle_dominance_100_instances():
    host = host_spec()
    orders = [HostOrder.NPA, HostOrder.H2L, HostOrder.L2H]
    started = time.time()
    checked = ties = 0
    for seed in range(100):
        rng = random.Random(seed * 31 + 7)
        n_hosts = rng.randint(2, 3)
        n_leases = rng.randint(2, 5)
        vm_budget = 12  # keeps the packing oracle in range
        leases = []
        for i in range(n_leases):
            vm_count = rng.randint(1, max(1, min(4, vm_budget - (n_leases - i - 1))))
            vm_budget -= vm_count
            leases.append(Lease(
                id=i, vm_count=vm_count,
                vm_spec=VmSpec(rng.choice([100, 200]), rng.choice([512, 1024]), 2048, 0),
                arrival_ms=0, duration_ms=rng.randint(60_000, 3_600_000)))
        optimal = optimal_energy_small(leases, [host] * n_hosts)
        assert optimal is not None, seed

        for order in orders:
            report = run(SimConfig(host_count=n_hosts, host_spec=host, order=order),
                         leases)
            # all leases coexist from t=0 and fit, so the engine schedule
            # is a static placement the oracle also enumerates
            assert report.total_waiting_hours == 0.0, (seed, order)
            assert report.total_energy_kwh >= optimal * (1 - 1e-9), (
                seed, order, report.total_energy_kwh, optimal)
            if order is HostOrder.H2L:
                active_hosts = sum(1 for e in report.per_host_energy_kwh if e > 0)
                vms = [l.vm_spec for l in leases for _ in range(l.vm_count)]
                floor = min_servers_exact(vms, host, n_hosts)
                assert floor is not None and active_hosts >= floor, (
                    seed, active_hosts, floor)
                if report.total_energy_kwh <= optimal * (1 + 1e-9):
                    ties += 1
        checked += 1
    assert verdict(
        "criterion 4 oracle dominance",
        checked == 100,
        f"{checked} instances x 3 heuristics >= exact optimum; h2l active hosts "
        f">= exact packing floor; h2l matched the optimum on {ties}; "
        f"{time.time() - started:.1f}s",
    )


def test_c5_constraint_audit_full_replay():
    cfg = SimConfig(
        host_count=1000, host_spec=host_spec(), order=HostOrder.H2L,
        migration_mode=MigrationMode.PMIG, thresholds=Thresholds(0.4, 0.8),
    )
    leases = standin_workload(count=5000, seed=17)
    started = time.time()
    audited = run(cfg, leases, audit=True)
    elapsed = time.time() - started
    plain = run(cfg, leases)
    ok = elapsed < 60.0 and audited.total_energy_kwh == plain.total_energy_kwh
    assert verdict(
        "criterion 5 per-event constraint audit",
        ok,
        f"5000-lease stand-in replay at 1000 hosts audited at every one of "
        f"{audited.event_count} events in {elapsed:.1f}s (limit 60s), "
        f"results unchanged by auditing",
    )


SWEEP_THRESHOLDS = (0.5, 0.4, 0.3)


@pytest.fixture(scope="module")
def table_sweep():
    host = host_spec()
    leases = standin_workload()
    results = {}
    for label, order, mode, thresholds in (
        [("npa", HostOrder.NPA, MigrationMode.NONE, None),
         ("h2l", HostOrder.H2L, MigrationMode.NONE, None),
         ("l2h", HostOrder.L2H, MigrationMode.NONE, None)]
        + [(f"{mode_label}{int(low * 100)}", HostOrder.H2L, mode, Thresholds(low, 0.8))
           for mode_label, mode in (("pmig", MigrationMode.PMIG),
                                    ("mig", MigrationMode.MIG))
           for low in SWEEP_THRESHOLDS]
    ):
        cfg = SimConfig(host_count=1000, host_spec=host, order=order,
                        migration_mode=mode, thresholds=thresholds)
        results[label] = run(cfg, leases)
    return results


def test_c6_comparison_table_ordering(table_sweep):
    r = table_sweep
    migration_rows = [r[k] for k in ("pmig50", "pmig40", "pmig30",
                                     "mig50", "mig40", "mig30")]
    a = (r["npa"].total_energy_kwh > r["h2l"].total_energy_kwh
         and r["npa"].total_energy_kwh > r["l2h"].total_energy_kwh)
    b = all(row.total_energy_kwh <= r["h2l"].total_energy_kwh
            for row in migration_rows)
    c = (r["npa"].total_waiting_hours == 0.0
         and r["h2l"].total_waiting_hours == 0.0
         and r["l2h"].total_waiting_hours == 0.0
         and r["npa"].makespan_hours == r["h2l"].makespan_hours == r["l2h"].makespan_hours)
    d = all(row.migrated_lease_count > 0 and row.total_waiting_hours > 0.0
            for row in migration_rows)
    # recorded, not gated: proximity to the published 30-day figures;
    # the synthetic stand-in carries a different load mix than the real
    # trace, so only the orderings above are binding
    published_npa, published_h2l = 3287.59, 2736.07
    npa_ratio = r["npa"].total_energy_kwh / published_npa
    h2l_ratio = r["h2l"].total_energy_kwh / published_h2l
    within = 0.85 <= npa_ratio <= 1.15 and 0.85 <= h2l_ratio <= 1.15
    ok = a and b and c and d
    assert verdict(
        "criterion 6 qualitative ordering",
        ok,
        f"(a) npa {r['npa'].total_energy_kwh:.2f} kWh above both mappings: {a}; "
        f"(b) all 6 consolidation rows <= h2l {r['h2l'].total_energy_kwh:.2f}: {b}; "
        f"(c) zero waiting + equal makespan rows 1-3: {c}; "
        f"(d) nonzero migrations and waiting on all 6: {d}; "
        f"recorded vs published energies: npa x{npa_ratio:.2f}, h2l x{h2l_ratio:.2f} "
        f"of 3287.59/2736.07 kWh ({'within' if within else 'outside'} 15%, not gated)",
    )


def test_c7_more_cores_save_more(table_sweep):
    small_npa = table_sweep["npa"].total_energy_kwh
    small_h2l = table_sweep["h2l"].total_energy_kwh
    leases = standin_workload()
    big = host_spec(cores=32, model=DL785)
    energies = {}
    for order in (HostOrder.NPA, HostOrder.H2L):
        cfg = SimConfig(host_count=1000, host_spec=big, order=order)
        energies[order] = run(cfg, leases).total_energy_kwh
    small_saving = (small_npa - small_h2l) / small_npa
    big_saving = (energies[HostOrder.NPA] - energies[HostOrder.H2L]) / energies[HostOrder.NPA]
    ok = big_saving > small_saving
    assert verdict(
        "criterion 7 scaling with core count",
        ok,
        f"relative saving h2l vs npa: {small_saving:.1%} on 16-core dl585, "
        f"{big_saving:.1%} on 32-core dl785 (strictly larger required)",
    )


def test_c8_byte_identical_csv(tmp_path):
    argv = ["--synthetic", "300", "--hosts", "50", "--seed", "5",
            "--sweep", "standard", "--format", "csv"]
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    assert cli.main(argv + ["--out", str(first)]) == 0
    assert cli.main(argv + ["--out", str(second)]) == 0
    ok = first.read_bytes() == second.read_bytes()
    assert verdict(
        "criterion 8 replay determinism",
        ok,
        f"two 9-row sweep replays wrote identical bytes "
        f"({len(first.read_bytes())} bytes of CSV)",
    )


HAND_TRACE = """\
; hand-built five-job trace
1     0    0  3600  4  -1 -1 -1 -1 -1  1 -1 -1 -1 -1 -1 -1 -1
2   120    5  1800  1  -1 -1 -1 -1 -1  1 -1 -1 -1 -1 -1 -1 -1
3   500   10     0  8  -1 -1 -1 -1 -1  0 -1 -1 -1 -1 -1 -1 -1
4   900    0   600  0  -1 -1 -1 -1 -1  5 -1 -1 -1 -1 -1 -1 -1
5 90000    0   100  2  -1 -1 -1 -1 -1  1 -1 -1 -1 -1 -1 -1 -1
"""


def _find_real_trace():
    candidates = []
    env = os.environ.get("LEASIM_TRACE")
    if env:
        candidates.append(env)
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    for pattern in ("data/*.swf", "traces/*.swf"):
        candidates.extend(sorted(glob.glob(os.path.join(here, pattern))))
    return next((c for c in candidates if os.path.isfile(c)), None)


def test_c9_swf_ingestion():
    parsed = parse_swf(io.StringIO(HAND_TRACE))
    hand = [(l.id, l.vm_count, l.arrival_ms, l.duration_ms) for l in parsed.leases]
    expected = [(0, 4, 0, 3_600_000), (1, 1, 120_000, 1_800_000),
                (2, 2, 90_000_000, 100_000)]
    hand_ok = hand == expected and parsed.skipped_jobs == 2 and parsed.total_jobs == 5
    assert hand_ok, hand

    trace_path = _find_real_trace()
    if trace_path is None:
        verdict(
            "criterion 9 trace ingestion",
            True,
            "hand-built 5-line file converts exactly (2 jobs skipped as "
            "unrunnable); no real cleaned trace in data/ or LEASIM_TRACE, "
            "so the 5108-lease check is skipped",
        )
        pytest.skip("real trace absent; hand-built conversion verified above")
    with open(trace_path) as handle:
        real = parse_swf(handle, cutoff_days=30)
    count = len(real.leases)
    ok = abs(count - 5108) <= round(0.02 * 5108)
    assert verdict(
        "criterion 9 trace ingestion",
        ok,
        f"hand-built file exact; {trace_path} with 30-day cutoff gave "
        f"{count} leases (target 5108 +-2%), {real.skipped_jobs} jobs skipped",
    )
