"""Hot inner loop of the goods market, optionally compiled with numba.

The loop is written once; `goods_round_python` is the plain function and
`goods_round_jit` the compiled version of the very same code, so the two
can be compared bit for bit in tests and the plain one acts as a drop-in
fallback when numba is missing or disabled via CRISIS_ABM_NO_JIT=1.
"""

from __future__ import annotations

import os

import numpy as np


def _goods_round(order, samples, budget, price, inventory, spent, revenue):
    """Sequential shopping round.

    Buyers walk in `order`; buyer k looks at the firms in `samples[k]`,
    picks the cheapest one with stock on the shelf (ties to the lower
    id), and buys as much as budget and stock allow.  One purchase per
    buyer.  `inventory`, `spent` and `revenue` are updated in place.
    """
    n = order.shape[0]
    z = samples.shape[1]
    for k in range(n):
        h = order[k]
        b = budget[h]
        if b <= 0.0:
            continue
        best = -1
        best_price = 0.0
        for j in range(z):
            f = samples[k, j]
            if inventory[f] <= 1e-12:
                continue
            p = price[f]
            if best < 0 or p < best_price or (p == best_price and f < best):
                best = f
                best_price = p
        if best < 0:
            continue
        qty = b / best_price
        if qty > inventory[best]:
            qty = inventory[best]
        pay = qty * best_price
        inventory[best] -= qty
        spent[h] = pay
        revenue[best] += pay


goods_round_python = _goods_round

try:
    from numba import njit

    goods_round_jit = njit(cache=True)(_goods_round)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    goods_round_jit = _goods_round
    HAVE_NUMBA = False


def use_jit() -> bool:
    return HAVE_NUMBA and os.environ.get("CRISIS_ABM_NO_JIT", "") not in ("1", "true")


def goods_round(order, samples, budget, price, inventory, spent, revenue):
    fn = goods_round_jit if use_jit() else goods_round_python
    fn(order, samples, budget, price, inventory, spent, revenue)


def warmup() -> None:
    """Trigger JIT compilation outside of timed sections."""
    if not use_jit():
        return
    goods_round_jit(
        np.zeros(1, np.int64),
        np.zeros((1, 1), np.int64),
        np.zeros(1, np.float64),
        np.ones(1, np.float64),
        np.zeros(1, np.float64),
        np.zeros(1, np.float64),
        np.zeros(1, np.float64),
    )
