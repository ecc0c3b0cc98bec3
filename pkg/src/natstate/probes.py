"""Seeded probe inputs for norm estimation and property sweeps.

Operator norms here are suprema estimated from below by maximizing over a
finite probe set, so every inequality asserted between two estimates is
computed on *matched* probes.  The generator is deterministic for a given
seed and emits the standard mix: constants, indicators, ramps, sinusoids,
smoothed noise, and optionally their pairwise splices.
"""

from __future__ import annotations

import numpy as np

from .timegrid import Grid, TimeFunction, splice

__all__ = ["probe_set", "future_probes", "indicator"]


def indicator(grid: Grid, a: float, b: float, height: float = 1.0,
              dim: int = 1, component: int = 0) -> TimeFunction:
    """``height`` on the window ``(a, b]``, zero elsewhere, zero tail."""
    ia, ib = grid.index_of(a), grid.index_of(b)
    idx = np.arange(grid.i0 + 1, grid.i1 + 1)
    vals = np.zeros((grid.n, dim))
    vals[(idx > ia) & (idx <= ib), component] = height
    return TimeFunction(grid, vals, np.zeros(dim))


def _smooth_noise(rng, n: int, width: int = 9) -> np.ndarray:
    raw = rng.standard_normal(n + width)
    ker = np.hanning(width)
    ker /= ker.sum()
    return np.convolve(raw, ker, mode="same")[:n]


def probe_set(grid: Grid, seed: int, count: int = 20, dim: int = 1,
              amplitude: float = 1.0, tails: bool = True,
              with_splices: bool = False) -> list[TimeFunction]:
    """Deterministic list of probes on ``grid``.

    With ``tails`` the constant probes carry matching nonzero tails;
    otherwise every probe has zero tail (needed e.g. for inputs into
    time-varying operators).  ``with_splices`` appends pairwise splices at
    the window midpoint, the same functions the state machinery builds.
    """
    rng = np.random.default_rng(seed)
    n = grid.n
    t = grid.times()
    out: list[TimeFunction] = []

    def add(vals, tail=None):
        vals = np.asarray(vals, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None] * np.ones((1, dim))
        tail = np.zeros(dim) if tail is None else np.asarray(tail, dtype=float)
        out.append(TimeFunction(grid, amplitude * vals, amplitude * tail))

    add(np.zeros(n))
    add(np.ones(n), tail=np.ones(dim) if tails else None)
    span = grid.t_end - grid.t_start
    add((t - grid.t_start) / span)  # ramp up from the window start
    add(np.sin(2.0 * np.pi * (t - grid.t_start) / span))
    while len(out) < count:
        k = len(out)
        kind = k % 4
        if kind == 0:
            a = grid.t_start + (0.1 + 0.6 * rng.random()) * span
            b = a + (0.05 + 0.3 * rng.random()) * span
            b = min(b, grid.t_end)
            ia, ib = grid.index_of(grid.dt * round(a / grid.dt)), \
                grid.index_of(grid.dt * round(b / grid.dt))
            if ib <= ia:
                ib = ia + 1
            vals = np.zeros((n, dim))
            idx = np.arange(grid.i0 + 1, grid.i1 + 1)
            vals[(idx > ia) & (idx <= ib), int(rng.integers(dim))] = \
                2.0 * rng.random() - 1.0
            add(vals)
        elif kind == 1:
            vals = np.stack([_smooth_noise(rng, n) for _ in range(dim)], axis=1)
            add(vals)
        elif kind == 2:
            freq = 1.0 + 3.0 * rng.random()
            phase = 2.0 * np.pi * rng.random()
            add(np.cos(2.0 * np.pi * freq * (t - grid.t_start) / span + phase))
        else:
            level = 2.0 * rng.random() - 1.0
            vals = level * np.ones((n, dim))
            add(vals, tail=level * np.ones(dim) if tails else None)
    out = out[:count]
    if with_splices:
        mid = grid.dt * ((grid.i0 + grid.i1) // 2)
        extra = []
        for i in range(0, len(out) - 1, 2):
            extra.append(splice(out[i], out[i + 1], mid))
        out = out + extra
    return out


def future_probes(dt: float, horizon: float, seed: int, count: int = 20,
                  dim: int = 1, amplitude: float = 1.0) -> list[TimeFunction]:
    """Probes supported on ``(0, horizon]`` with zero tails: future inputs."""
    g = Grid(dt, 0, int(round(horizon / dt)))
    return probe_set(g, seed, count=count, dim=dim, amplitude=amplitude,
                     tails=False)


def random_timefunction(grid: Grid, rng, dim: int = 1, bound: float = 1.0,
                        tail: float = 0.0) -> TimeFunction:
    """One genuinely random probe: smoothed noise plus a random bump,
    rescaled to the pointwise ``bound`` and riding on a constant ``tail``.

    Unlike :func:`probe_set`, whose first entries are fixed canonical
    shapes, every draw here depends on the generator state.
    """
    rng = np.random.default_rng(rng)
    n = grid.n
    vals = np.stack([_smooth_noise(rng, n) for _ in range(dim)], axis=1)
    lo = int(rng.integers(0, max(n - 2, 1)))
    hi = int(rng.integers(lo + 1, n + 1))
    vals[lo:hi, int(rng.integers(dim))] += rng.uniform(-1.0, 1.0)
    m = float(np.max(np.abs(vals)))
    if m > 0:
        vals *= bound / m
    return TimeFunction(grid, vals + tail, np.full(dim, float(tail)))
