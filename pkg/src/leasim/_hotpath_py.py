"""Pure-Python (numpy) implementation of the placement hot path.

Host ranking is encoded as one int64 sort key per host so that a plain
ascending sort yields the full deterministic order, ties broken by host
id.  Utilization enters the key as floor(used * 2**40 / capacity),
which is an exact total order on utilizations as long as capacities
stay below 2**20 (enforced by HostSpec).
"""

from __future__ import annotations

import numpy as np

UTIL_SCALE = 1 << 40
ID_BITS = 20

# order modes, shared with the compiled kernel
ORDER_H2L = 0
ORDER_L2H = 1
ORDER_NPA = 2


def rank_keys(caps_cpu: np.ndarray, used_cpu: np.ndarray, mode: int) -> np.ndarray:
    ukey = (used_cpu * UTIL_SCALE) // caps_cpu
    if mode == ORDER_H2L:
        base = np.where(used_cpu > 0, UTIL_SCALE - ukey, UTIL_SCALE + 1)
    elif mode == ORDER_L2H:
        base = np.where(used_cpu > 0, ukey, UTIL_SCALE + 1)
    elif mode == ORDER_NPA:
        base = ukey
    else:
        raise ValueError(f"unknown order mode {mode}")
    return (base << ID_BITS) | np.arange(len(caps_cpu), dtype=np.int64)


def rank_order(caps_cpu: np.ndarray, used_cpu: np.ndarray, mode: int) -> np.ndarray:
    """Host ids from most to least preferred under the given mode."""
    keys = rank_keys(caps_cpu, used_cpu, mode)
    return np.sort(keys) & ((1 << ID_BITS) - 1)


def pack(
    caps_cpu: np.ndarray,
    residual: np.ndarray,
    demand: tuple[int, int, int, int],
    count: int,
    mode: int,
) -> list[tuple[int, int]] | None:
    """Greedy first-fit of `count` identical VMs over ranked hosts.

    Returns (host id, vm count) segments in rank order, or None when the
    VMs do not all fit.  Residuals are not modified.
    """
    if all(amount <= 0 for amount in demand):
        raise ValueError("cannot pack VMs with an all-zero demand vector")
    used = caps_cpu - residual[:, 0]
    order = rank_order(caps_cpu, used, mode)

    fits = np.full(len(caps_cpu), np.iinfo(np.int64).max, dtype=np.int64)
    for d, amount in enumerate(demand):
        if amount > 0:
            np.minimum(fits, residual[:, d] // amount, out=fits)

    ranked_fits = fits[order]
    cumulative = np.cumsum(ranked_fits)
    if cumulative[-1] < count:
        return None
    last = int(np.searchsorted(cumulative, count, side="left"))

    segments: list[tuple[int, int]] = []
    remaining = count
    for i in range(last + 1):
        take = int(min(ranked_fits[i], remaining))
        if take > 0:
            segments.append((int(order[i]), take))
            remaining -= take
        if remaining == 0:
            break
    return segments
