"""Synthetic multimodal wind scenarios for desk-scale experiments."""
from __future__ import annotations

import numpy as np


def multimodal_wind(n: int, farms: int = 2, periods: int = 4, capacity=100.0, seed: int = 0,
                    windy_fraction: float = 0.45) -> np.ndarray:
    """``n`` x ``farms * periods`` wind power (MW), columns farm-major.

    Each row is one day drawn from a two-regime mixture (calm / windy
    capacity factor), with a day-level shock shared by all farms, a
    per-farm offset and AR(1) noise over the periods. Capacity factors are
    clipped to [0, 1], so the marginals are bimodal with atoms at the
    bounds.
    """
    rng = np.random.default_rng(seed)
    cap = np.broadcast_to(np.asarray(capacity, dtype=float), (farms,))
    windy = rng.random(n) < windy_fraction
    level = np.where(windy, 0.68, 0.22)
    day = rng.normal(0.0, 0.07, n)
    farm = rng.normal(0.0, 0.05, (n, farms))
    shape = 0.04 * np.sin(np.linspace(0.0, np.pi, periods))
    ar = np.zeros((n, farms, periods))
    noise = rng.normal(0.0, 0.05, (n, farms, periods))
    ar[..., 0] = noise[..., 0]
    for t in range(1, periods):
        ar[..., t] = 0.7 * ar[..., t - 1] + noise[..., t]
    cf = level[:, None, None] + day[:, None, None] + farm[:, :, None] + shape + ar
    cf = np.clip(cf, 0.0, 1.0)
    return (cf * cap[None, :, None]).reshape(n, farms * periods)
