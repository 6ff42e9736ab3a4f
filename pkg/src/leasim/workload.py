"""Workload ingestion: standard workload format traces and synthetic mixes.

Trace files are whitespace-separated job records, one per line, with
';' starting a comment.  Only five columns matter here (1-indexed):
job id (1), submit time in seconds (2), run time in seconds (4),
allocated processors (5) and completion status (11).  Each job becomes
a lease requesting one single-core VM per allocated processor; jobs
with a non-positive run time or processor count are skipped and
counted, since they carry no load the simulation could place.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .domain import Lease, VmSpec
from .units import MS_PER_S

# One core, 1 GB of memory and a 4 GB disk image per VM; bandwidth
# demand is left zero so the network dimension only binds when a trace
# or caller says otherwise.
DEFAULT_VM_SPEC = VmSpec(cpu_percent=100, memory_mb=1024, disk_mb=4096, bandwidth_cmbs=0)

SECONDS_PER_DAY = 86_400


@dataclass(frozen=True)
class SwfJob:
    """The subset of a trace job record the converter consumes."""

    job_id: int
    submit_s: int
    run_time_s: int
    processors: int
    status: int


@dataclass(frozen=True)
class ParsedTrace:
    """Conversion result: leases plus bookkeeping about dropped jobs."""

    leases: list
    skipped_jobs: int
    total_jobs: int
    first_submit_s: int | None


def iter_swf_jobs(stream: Iterable[str]) -> Iterator[SwfJob]:
    """Yield job records from trace lines, ignoring comments and blanks."""
    for line_number, raw in enumerate(stream, start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 11:
            raise ValueError(
                f"line {line_number}: expected at least 11 fields, found {len(fields)}"
            )
        try:
            yield SwfJob(
                job_id=int(fields[0]),
                submit_s=int(float(fields[1])),
                run_time_s=int(float(fields[3])),
                processors=int(float(fields[4])),
                status=int(float(fields[10])),
            )
        except ValueError as exc:
            raise ValueError(f"line {line_number}: malformed job record: {exc}") from None


def parse_swf(
    stream: Iterable[str] | IO[str],
    vm_spec: VmSpec = DEFAULT_VM_SPEC,
    cutoff_days: int | None = None,
) -> ParsedTrace:
    """Convert a trace into leases, one VM per allocated processor.

    Arrival is the job's submit time, duration its run time.  With
    `cutoff_days` set, only jobs submitted strictly within that many
    days of the trace's first submit are kept.  Lease ids are assigned
    sequentially in file order, which keeps them unique even when the
    trace reuses job numbers.
    """
    leases: list[Lease] = []
    skipped = 0
    total = 0
    first_submit: int | None = None
    cutoff_s: int | None = None
    for job in iter_swf_jobs(stream):
        total += 1
        if first_submit is None:
            first_submit = job.submit_s
            if cutoff_days is not None:
                cutoff_s = first_submit + cutoff_days * SECONDS_PER_DAY
        if cutoff_s is not None and job.submit_s >= cutoff_s:
            continue
        if job.run_time_s <= 0 or job.processors <= 0:
            skipped += 1
            continue
        leases.append(
            Lease(
                id=len(leases),
                vm_count=job.processors,
                vm_spec=vm_spec,
                arrival_ms=job.submit_s * MS_PER_S,
                duration_ms=job.run_time_s * MS_PER_S,
            )
        )
    return ParsedTrace(
        leases=leases, skipped_jobs=skipped, total_jobs=total, first_submit_s=first_submit
    )


@dataclass(frozen=True)
class WorkloadParams:
    """Knobs for the synthetic generator."""

    lease_count: int
    duration_range_s: tuple[int, int]
    vm_count_range: tuple[int, int]
    arrival_rate_per_s: float
    seed: int

    def __post_init__(self):
        if self.lease_count < 0:
            raise ValueError("lease_count must be >= 0")
        lo, hi = self.duration_range_s
        if not (0 < lo <= hi):
            raise ValueError(f"bad duration range {self.duration_range_s}")
        lo, hi = self.vm_count_range
        if not (0 < lo <= hi):
            raise ValueError(f"bad vm count range {self.vm_count_range}")
        if self.arrival_rate_per_s <= 0:
            raise ValueError("arrival rate must be positive")


def generate_synthetic(
    params: WorkloadParams, vm_spec: VmSpec = DEFAULT_VM_SPEC
) -> list[Lease]:
    """Poisson arrivals with uniform durations and VM counts.

    Fully determined by the seed: the same params yield the same leases,
    ordered by arrival time.
    """
    rng = random.Random(params.seed)
    leases = []
    clock_ms = 0.0
    for index in range(params.lease_count):
        clock_ms += rng.expovariate(params.arrival_rate_per_s) * MS_PER_S
        duration_s = rng.randint(*params.duration_range_s)
        leases.append(
            Lease(
                id=index,
                vm_count=rng.randint(*params.vm_count_range),
                vm_spec=vm_spec,
                arrival_ms=int(clock_ms),
                duration_ms=duration_s * MS_PER_S,
            )
        )
    return leases
