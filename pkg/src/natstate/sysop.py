"""Causal input-output operators and their windowed truncations.

Three concrete operators are shipped:

* :class:`LimsupConvolution` -- finite-support convolution plus a gain on the
  input's eventual level (the limit superior of ``u(t)`` as ``t -> -inf``,
  exact here because inputs carry constant tails);
* :class:`LTISystem` -- ``x' = Ax + Bu`` with full-state output, stepped by
  the exact matrix exponential of each cell (zero-order hold);
* :class:`PolyIntegralOperator` -- sums of multilinear convolution-type
  integral operators of degree up to three, with dense-grid or closed-form
  kernels, optionally time varying.

Operator sizes are measured in the weighted supremum norm
``sup |F(u)| / (1 + |u|^N)``; estimates are probe maximizations and therefore
lower bounds, monotone under probe-set growth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .kernel import PolyKernel
from .seminorm import FittedFamily
from .timegrid import Grid, TimeFunction, shift_left, shift_right

__all__ = [
    "SystemOp",
    "LimsupConvolution",
    "LTISystem",
    "PolyIntegralOperator",
    "TimeAdvance",
    "CenteredOp",
    "centered_truncation",
    "truncation",
    "check_causality",
    "NPowerEstimate",
    "estimate_npower",
    "npower_global",
    "npower_centered",
    "hypothesis_uniformity_check",
    "steer_to_state",
]


class SystemOp:
    """A causal mapping between input and output function spaces."""

    input_fam: FittedFamily
    output_fam: FittedFamily
    input_dim: int
    output_dim: int
    time_invariant: bool

    def apply(self, u: TimeFunction) -> TimeFunction:
        raise NotImplementedError

    def apply_at(self, u: TimeFunction, t_indices: np.ndarray) -> np.ndarray:
        """Output values at selected instants only (default: full apply)."""
        y = self.apply(u)
        return y.values_at_indices(np.asarray(t_indices, dtype=int))

    def __call__(self, u: TimeFunction) -> TimeFunction:
        return self.apply(u)


class LimsupConvolution(SystemOp):
    """``y(s) = int h(s - tau) u(tau) dtau + tail_gain * (eventual level of u)``.

    ``h`` is scalar with support ``(0, T]``; its total absolute mass must be
    nonzero.  The eventual-level term makes the operator depend on the
    arbitrarily distant past, which is the whole point of this system pair.
    """

    def __init__(self, h: TimeFunction, tail_gain: float,
                 input_fam: FittedFamily, output_fam: FittedFamily):
        if h.dim != 1:
            raise ValueError("impulse response must be scalar")
        if h.grid.i0 != 0:
            raise ValueError("impulse response support must start at 0")
        if np.any(h.tail_value):
            raise ValueError("impulse response must have zero tail")
        if float(np.sum(np.abs(h.samples))) * h.grid.dt == 0.0:
            raise ValueError("impulse response must have nonzero absolute mass")
        self.h = h
        self.tail_gain = float(tail_gain)
        self.input_fam = input_fam
        self.output_fam = output_fam
        self.input_dim = 1
        self.output_dim = 1
        self.time_invariant = True

    @property
    def l1_mass(self) -> float:
        return float(np.sum(np.abs(self.h.samples))) * self.h.grid.dt

    def apply(self, u: TimeFunction) -> TimeFunction:
        if u.dim != 1:
            raise ValueError("scalar input expected")
        if not u.grid.compatible(self.h.grid):
            raise ValueError("input grid step differs from impulse-response step")
        g = u.grid
        m = self.h.grid.n
        hv = self.h.samples[:, 0]
        upad = u.values_at_indices(np.arange(g.i0 + 1 - m, g.i1 + 1))[:, 0]
        conv = np.convolve(upad, hv)[m - 1: m - 1 + g.n] * g.dt
        ubar = float(u.tail_value[0])
        vals = conv + self.tail_gain * ubar
        tail = ubar * (float(np.sum(hv)) * g.dt + self.tail_gain)
        return TimeFunction(g, vals, np.array([tail]))


class LTISystem(SystemOp):
    """State equation ``x' = Ax + Bu`` with output ``y = x``.

    Stepping is by the exact exponential of each cell under a zero-order
    hold, so constant-input responses carry no integration drift.  The state
    at the left edge of the window comes from the constant input tail: zero
    tail gives zero state; a nonzero tail needs a Hurwitz ``A`` and starts at
    the corresponding equilibrium.
    """

    def __init__(self, A, B, input_fam: FittedFamily, output_fam: FittedFamily):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.A.shape[0] != self.A.shape[1]:
            raise ValueError("A must be square")
        if self.B.shape[0] != self.A.shape[0]:
            raise ValueError("B row count must match A")
        self.input_fam = input_fam
        self.output_fam = output_fam
        self.input_dim = self.B.shape[1]
        self.output_dim = self.A.shape[0]
        self.time_invariant = True
        self._step_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def _stepper(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        if dt not in self._step_cache:
            n, m = self.A.shape[0], self.B.shape[1]
            blk = np.zeros((n + m, n + m))
            blk[:n, :n] = self.A
            blk[:n, n:] = self.B
            M = scipy.linalg.expm(blk * dt)
            self._step_cache[dt] = (M[:n, :n], M[:n, n:])
        return self._step_cache[dt]

    def initial_state(self, u: TimeFunction) -> np.ndarray:
        ubar = u.tail_value
        if not np.any(ubar):
            return np.zeros(self.A.shape[0])
        eig = np.linalg.eigvals(self.A)
        if np.max(eig.real) >= 0.0:
            raise ValueError(
                "divergent tail: nonzero constant past input needs a Hurwitz A")
        return -np.linalg.solve(self.A, self.B @ ubar)

    def apply(self, u: TimeFunction) -> TimeFunction:
        if u.dim != self.input_dim:
            raise ValueError("input dimension mismatch")
        g = u.grid
        Ad, Bd = self._stepper(g.dt)
        x = self.initial_state(u)
        out = np.empty((g.n, self.output_dim))
        for k in range(g.n):
            x = Ad @ x + Bd @ u.samples[k]
            out[k] = x
        return TimeFunction(g, out, self.initial_state(u))


class PolyIntegralOperator(SystemOp):
    """Finite sum of multilinear convolution integrals plus a constant.

    ``y(t) = c0 + sum_n sum_{i_1..i_n} int k_n^{i...}(s_1..s_n)
    u_{i_1}(t-s_1) ... u_{i_n}(t-s_n) ds`` with kernels supported in
    ``[0, S]^n``.  Output is scalar (vector outputs are componentwise copies
    of this).  Time-varying kernels take the absolute output instant as
    their leading argument and require zero input tails, since then the
    pre-window output is the constant ``c0`` exactly.
    """

    MAX_DEGREE = 3

    def __init__(self, kernels: Sequence[PolyKernel], constant: float,
                 input_fam: FittedFamily, output_fam: FittedFamily,
                 input_dim: int = 1):
        degrees = [k.degree for k in kernels]
        if len(set(degrees)) != len(degrees):
            raise ValueError("one kernel per degree")
        if degrees and max(degrees) > self.MAX_DEGREE:
            raise ValueError(f"degree above {self.MAX_DEGREE} not supported")
        for k in kernels:
            if k.input_dim != input_dim:
                raise ValueError("kernel input dimension mismatch")
        self.kernels = {k.degree: k for k in kernels}
        self.constant = float(constant)
        self.input_fam = input_fam
        self.output_fam = output_fam
        self.input_dim = input_dim
        self.output_dim = 1
        self.time_invariant = not any(k.time_varying for k in kernels)

    def _past_matrix(self, u: TimeFunction, t_idx: np.ndarray, Q: int) -> np.ndarray:
        """``P[i, j, a] = u_a(t_i - j dt)`` for ``j = 1..Q``."""
        flat = (t_idx[:, None] - np.arange(1, Q + 1)[None, :]).ravel()
        vals = u.values_at_indices(flat)
        return vals.reshape(t_idx.shape[0], Q, u.dim)

    def apply_at(self, u: TimeFunction, t_indices) -> np.ndarray:
        if u.dim != self.input_dim:
            raise ValueError("input dimension mismatch")
        t_idx = np.asarray(t_indices, dtype=int)
        if not self.time_invariant and np.any(u.tail_value):
            raise ValueError("time-varying operator requires zero input tail")
        dt = u.grid.dt
        y = np.full(t_idx.shape[0], self.constant, dtype=float)
        for n, ker in sorted(self.kernels.items()):
            Q = ker.grid_size(dt)
            P = self._past_matrix(u, t_idx, Q)
            scale = dt ** n
            if not ker.time_varying:
                K = ker.grid_values(dt)
                if n == 1:
                    y += np.einsum("aj,ija->i", K, P) * scale
                elif n == 2:
                    y += np.einsum("abjk,ija,ikb->i", K, P, P) * scale
                else:
                    y += np.einsum("abcjkl,ija,ikb,ilc->i", K, P, P, P) * scale
            else:
                ts = t_idx * dt
                for i, t in enumerate(ts):
                    K = ker.grid_values(dt, at_time=float(t))
                    p = P[i]
                    if n == 1:
                        y[i] += np.einsum("aj,ja->", K, p) * scale
                    elif n == 2:
                        y[i] += np.einsum("abjk,ja,kb->", K, p, p) * scale
                    else:
                        y[i] += np.einsum("abcjkl,ja,kb,lc->", K, p, p, p) * scale
        return y[:, None]

    def _tail_output(self, u: TimeFunction) -> float:
        if not self.time_invariant:
            return self.constant  # zero tail enforced in apply_at
        dt = u.grid.dt
        y = self.constant
        tail = u.tail_value
        for n, ker in sorted(self.kernels.items()):
            Q = ker.grid_size(dt)
            K = ker.grid_values(dt)
            v = np.tile(tail[None, :], (Q, 1))
            if n == 1:
                y += float(np.einsum("aj,ja->", K, v)) * dt
            elif n == 2:
                y += float(np.einsum("abjk,ja,kb->", K, v, v)) * dt ** 2
            else:
                y += float(np.einsum("abcjkl,ja,kb,lc->", K, v, v, v)) * dt ** 3
        return y

    def apply(self, u: TimeFunction) -> TimeFunction:
        g = u.grid
        t_idx = np.arange(g.i0 + 1, g.i1 + 1)
        vals = self.apply_at(u, t_idx)
        return TimeFunction(g, vals, np.array([self._tail_output(u)]))


class TimeAdvance(SystemOp):
    """Deliberately anti-causal control operator: ``y(s) = u(s + k dt)``."""

    def __init__(self, k: int, input_fam: FittedFamily, output_fam: FittedFamily):
        if k <= 0:
            raise ValueError("advance must be positive")
        self.k = k
        self.input_fam = input_fam
        self.output_fam = output_fam
        self.input_dim = 1
        self.output_dim = 1
        self.time_invariant = True

    def apply(self, u: TimeFunction) -> TimeFunction:
        g = u.grid
        out = Grid(g.dt, g.i0 - self.k, g.i1 - self.k)
        return TimeFunction(out, u.samples, u.tail_value)


# -- truncations -------------------------------------------------------------


class CenteredOp:
    """The window-``t`` view of ``F`` recentred at zero.

    Maps a past input ending at 0 to the past output ending at 0 by shifting
    to ``t``, applying ``F``, truncating, and shifting back.
    """

    def __init__(self, system: SystemOp, t: float):
        self.system = system
        self.t = t

    def __call__(self, u0: TimeFunction) -> TimeFunction:
        t_idx = u0.grid.index_of(self.t)
        u = shift_right(u0, self.t)
        y = self.system.apply(u)
        y_past = y.with_window(y.grid.i0, t_idx + u0.grid.i1)
        return shift_left(y_past, self.t)


def centered_truncation(system: SystemOp, t: float) -> CenteredOp:
    """Window view at ``t`` recentred to zero; meaningful for causal systems
    (all shipped variants are, and :func:`check_causality` probes it)."""
    return CenteredOp(system, t)


def truncation(system: SystemOp, t: float):
    """Uncentred truncation: apply and re-window the output to ``(-inf, t]``."""

    def run(u: TimeFunction) -> TimeFunction:
        t_idx = u.grid.index_of(t)
        y = system.apply(u)
        return y.with_window(y.grid.i0, t_idx)

    return run


# -- causality ----------------------------------------------------------------


def check_causality(system: SystemOp, probes, ts, rng=None) -> dict:
    """Probe the defining causality property of the system.

    For each probe ``u`` and window end ``t``, edits ``u`` strictly after
    ``t`` and requires the outputs to agree up to ``t`` in the output norm,
    exactly.  Violations are returned with witnesses rather than raised.
    """
    rng = np.random.default_rng(rng)
    violations = []
    checks = 0
    for pi, u in enumerate(probes):
        g = u.grid
        y_u = system.apply(u)
        for t in ts:
            t_idx = g.index_of(t)
            if t_idx >= g.i1 or t_idx < g.i0:
                continue
            edited = np.array(u.samples)
            sel = np.arange(g.i0 + 1, g.i1 + 1) > t_idx
            edited[sel] += 1.0 + rng.random(size=(int(sel.sum()), u.dim))
            v = TimeFunction(g, edited, u.tail_value)
            y_v = system.apply(v)
            lo = min(y_u.grid.i0, y_v.grid.i0)
            d = y_u.with_window(lo, t_idx) - y_v.with_window(lo, t_idx)
            gap = system.output_fam.past_norm(d, t)
            checks += 1
            if gap != 0.0:
                violations.append({"probe": pi, "t": t, "gap": gap})
    return {"causal": not violations, "checks": checks, "violations": violations}


# -- weighted operator norms ---------------------------------------------------


@dataclass
class NPowerEstimate:
    """Probe-maximized lower bound for a weighted operator norm.

    ``probe_set_id`` names the probe set, so inequalities between two
    estimates can require matched sets explicitly.
    """

    value: float
    N: int
    probe_index: int
    probe_count: int
    probe_set_id: str = ""
    ratios: Optional[list] = None

    def to_dict(self) -> dict:
        return {"value": self.value, "N": self.N,
                "probe_index": self.probe_index,
                "probe_count": self.probe_count,
                "probe_set_id": self.probe_set_id}


def estimate_npower(phi: Callable[[TimeFunction], TimeFunction], probes,
                    N: int, in_norm: Callable[[TimeFunction], float],
                    out_norm: Callable[[TimeFunction], float],
                    keep_ratios: bool = False,
                    probe_set_id: str = "") -> NPowerEstimate:
    best, arg = -1.0, -1
    ratios = [] if keep_ratios else None
    for i, x in enumerate(probes):
        r = out_norm(phi(x)) / (1.0 + in_norm(x) ** N)
        if keep_ratios:
            ratios.append(r)
        if r > best:
            best, arg = r, i
    return NPowerEstimate(best, N, arg, len(probes), probe_set_id, ratios)


def npower_global(system: SystemOp, probes, N: int,
                  keep_ratios: bool = False) -> NPowerEstimate:
    return estimate_npower(system.apply, probes, N,
                           system.input_fam.bounding_norm,
                           system.output_fam.bounding_norm, keep_ratios)


def npower_centered(system: SystemOp, t: float, probes0, N: int,
                    keep_ratios: bool = False) -> NPowerEstimate:
    op = centered_truncation(system, t)
    return estimate_npower(op, probes0, N,
                           lambda u: system.input_fam.past_norm(u, 0.0),
                           lambda y: system.output_fam.past_norm(y, 0.0),
                           keep_ratios)


def hypothesis_uniformity_check(system: SystemOp, ts, probes0, N: int) -> dict:
    """Sampled uniformity of the windowed operators over a span of instants.

    Reports a common bound for the per-instant operator norms and a common
    continuity modulus over probe pairs; for a time-invariant system the
    per-instant estimates must agree exactly.
    """
    per_t = []
    moduli = []
    for t in ts:
        op = centered_truncation(system, t)
        est = estimate_npower(op, probes0, N,
                              lambda u: system.input_fam.past_norm(u, 0.0),
                              lambda y: system.output_fam.past_norm(y, 0.0))
        per_t.append(est.value)
        outs = [op(u) for u in probes0]
        for i in range(len(probes0)):
            for j in range(i + 1, len(probes0)):
                du = system.input_fam.past_norm(probes0[i] - probes0[j], 0.0)
                dy = system.output_fam.past_norm(outs[i] - outs[j], 0.0)
                if du > 0.0:
                    moduli.append(dy / du)
    spread = max(per_t) - min(per_t)
    return {
        "uniform_bound": max(per_t),
        "per_t": per_t,
        "modulus_bound": max(moduli) if moduli else 0.0,
        "time_invariant_consistent": (not system.time_invariant) or spread == 0.0,
    }


# -- controllability steering ---------------------------------------------------


def steer_to_state(system: LTISystem, x_target, t_end: float, duration: float,
                   grid: Grid) -> TimeFunction:
    """Past input reaching ``x_target`` at ``t_end``, supported on the last
    ``duration`` seconds, least-norm in the lifted discrete system.

    Exact at grid scale because the stepping and the lifted controllability
    map use the same zero-order hold.
    """
    dt = grid.dt
    Ad, Bd = system._stepper(dt)
    K = int(round(duration / dt))
    nx = system.A.shape[0]
    cols = []
    acc = np.eye(nx)
    for _ in range(K):
        cols.append(acc @ Bd)
        acc = acc @ Ad
    # x(t_end) = sum_{k} Ad^k Bd u_{K-k}; columns ordered latest-input-first.
    C = np.hstack(cols)
    useq = np.linalg.pinv(C) @ np.asarray(x_target, dtype=float)
    useq = useq.reshape(K, system.input_dim)[::-1]
    te = grid.index_of(t_end)
    idx = np.arange(grid.i0 + 1, grid.i1 + 1)
    vals = np.zeros((grid.n, system.input_dim))
    for k in range(K):
        i = te - K + 1 + k
        vals[idx == i] = useq[k]
    return TimeFunction(grid, vals, np.zeros(system.input_dim))
