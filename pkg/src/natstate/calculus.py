"""Derivatives: of operators, of states, and along state trajectories.

Every derivative here is analytic per operator variant (linear operators are
their own derivative; polynomial ones differentiate term by term), and every
claim is validated against an independent finite-difference oracle.  Limit
statements become decaying-ratio sweeps along geometric step sequences.

Shifts by amounts smaller than the grid step arise throughout (the step
sequences deliberately descend below ``dt``), so inputs whose shifts are
taken analytically are described by callables (:class:`SmoothInput`), and
sub-grid residuals are sampled on a fixed refinement of the base lattice.
The quadrature rule itself is unchanged: right-endpoint rectangle sums at
the finer spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .kernel import PolyKernel, symmetrize
from .seminorm import FittedFamily
from .states import NaturalState
from .sysop import LimsupConvolution, LTISystem, PolyIntegralOperator, SystemOp
from .timegrid import Grid, TimeFunction, shift_left, shift_right, splice

__all__ = [
    "SmoothInput",
    "ShiftDerivative",
    "shift_derivative",
    "FrechetPair",
    "frechet_of",
    "gateaux_fd",
    "remainder_decay",
    "fd_directional_order",
    "state_frechet",
    "input_to_state_frechet",
    "TrajectoryDerivative",
    "trajectory_derivative",
]

RESIDUAL_REFINE = 16  # sub-grid sampling factor for residual norms


class SmoothInput:
    """Scalar input described by callables, so shifts are exact for any step.

    ``u`` is the value, ``d`` its classical derivative with the right-limit
    convention at breakpoints.  ``has_jumps`` marks genuine discontinuities,
    whose shift derivatives would involve point masses and are refused.
    """

    def __init__(self, u: Callable, d: Callable, breakpoints=(),
                 has_jumps: bool = False, name: str = "smooth-input"):
        self.u = u
        self.d = d
        self.breakpoints = tuple(breakpoints)
        self.has_jumps = has_jumps
        self.name = name

    def sample(self, grid: Grid, shift: float = 0.0) -> TimeFunction:
        """Grid samples of ``t -> u(t + shift)``; tail from the window start."""
        t = grid.times() + shift
        vals = np.asarray(self.u(t), dtype=float)
        tail = float(np.asarray(self.u(np.array([grid.t_start + shift]))).ravel()[0])
        return TimeFunction(grid, vals, np.array([tail]))

    def derivative_sample(self, grid: Grid) -> TimeFunction:
        t = grid.times()
        vals = np.asarray(self.d(t), dtype=float)
        tail = float(np.asarray(self.d(np.array([grid.t_start]))).ravel()[0])
        return TimeFunction(grid, vals, np.array([tail]))

    @staticmethod
    def trapezoid(rise=(-1.0, 0.0), fall=(10.0, 11.0), level: float = 1.0,
                  name: str = "trapezoid") -> "SmoothInput":
        """Ramp up over ``rise``, hold ``level``, ramp down over ``fall``."""
        r0, r1 = rise
        f0, f1 = fall
        slope_up = level / (r1 - r0)
        slope_dn = level / (f1 - f0)

        def u(t):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            out = np.where((t > r0) & (t <= r1), (t - r0) * slope_up, out)
            out = np.where((t > r1) & (t <= f0), level, out)
            out = np.where((t > f0) & (t <= f1), (f1 - t) * slope_dn, out)
            return out

        def d(t):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            out = np.where((t > r0) & (t <= r1), slope_up, out)
            out = np.where((t > f0) & (t <= f1), -slope_dn, out)
            return out

        return SmoothInput(u, d, breakpoints=(r0, r1, f0, f1), name=name)

    @staticmethod
    def ramp(start: float = 0.0, name: str = "ramp") -> "SmoothInput":
        """``max(t - start, 0)``: zero past, unit slope after ``start``."""
        return SmoothInput(
            lambda t: np.maximum(np.asarray(t, dtype=float) - start, 0.0),
            lambda t: np.where(np.asarray(t, dtype=float) > start, 1.0, 0.0),
            breakpoints=(start,), name=name)

    @staticmethod
    def sine(freq: float = 1.0, amp: float = 1.0, name: str = "sine") -> "SmoothInput":
        w = 2.0 * math.pi * freq
        return SmoothInput(lambda t: amp * np.sin(w * np.asarray(t, dtype=float)),
                           lambda t: amp * w * np.cos(w * np.asarray(t, dtype=float)),
                           name=name)

    @staticmethod
    def constant(level: float, name: str = "constant") -> "SmoothInput":
        return SmoothInput(
            lambda t: np.full_like(np.asarray(t, dtype=float), level),
            lambda t: np.zeros_like(np.asarray(t, dtype=float)), name=name)

    @staticmethod
    def boxcar(a: float = 0.0, b: float = 10.0, name: str = "boxcar") -> "SmoothInput":
        """Discontinuous step; kept only to exercise the refusal path."""
        return SmoothInput(
            lambda t: np.where((np.asarray(t) > a) & (np.asarray(t) <= b), 1.0, 0.0),
            lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            breakpoints=(a, b), has_jumps=True, name=name)


@dataclass
class ShiftDerivative:
    """Shift derivative ``d`` with its residual evaluator.

    ``residual_norm(h, t)`` returns the norm over ``(-inf, t]`` of
    ``u(. + h) - u - h d``; the defining property is that this over ``h``
    vanishes in the limit.
    """

    source: SmoothInput
    grid: Grid
    fam: FittedFamily
    d: TimeFunction

    def residual(self, h: float, refine: int = RESIDUAL_REFINE) -> TimeFunction:
        g = self.grid
        fine = Grid(g.dt / refine, g.i0 * refine, g.i1 * refine)
        t = fine.times()
        e = (np.asarray(self.source.u(t + h)) - np.asarray(self.source.u(t))
             - h * np.asarray(self.source.d(t)))
        return TimeFunction(fine, e, np.zeros(1))

    def residual_norm(self, h: float, t: Optional[float] = None) -> float:
        e = self.residual(h)
        if t is None:
            return self.fam.bounding_norm(e)
        return self.fam.past_norm(e, t)

    def ratio_sweep(self, h0: float, steps: int = 8, t: Optional[float] = None) -> list:
        rows = []
        for k in range(steps):
            h = h0 * 0.5 ** k
            rows.append({"h": h, "ratio": self.residual_norm(h, t) / h})
        return rows

    def uniform_ratio(self, h: float, ts) -> float:
        """``max_{s in ts}`` of the residual ratio: the uniform-in-s variant."""
        e = self.residual(h)
        return max(self.fam.past_norm(e, s) for s in ts) / h


def shift_derivative(source: SmoothInput, grid: Grid,
                     fam: FittedFamily) -> ShiftDerivative:
    """Classical-derivative samples plus the residual checker.

    Refuses inputs with jump discontinuities: their shift derivatives are
    point masses, outside this toolkit's function spaces.
    """
    if source.has_jumps:
        raise ValueError(
            "jump_discontinuity: shift derivative would need point masses")
    return ShiftDerivative(source, grid, fam, source.derivative_sample(grid))


# -- operator derivatives ----------------------------------------------------


@dataclass
class FrechetPair:
    """First-order expansion ``F(u + v) = F(u) + L(u, v) + W(u, v)``."""

    L: Callable[[TimeFunction, TimeFunction], TimeFunction]
    W: Callable[[TimeFunction, TimeFunction], TimeFunction]
    source: str


def _poly_term(op: PolyIntegralOperator, ker: PolyKernel,
               slots: Sequence[TimeFunction]) -> TimeFunction:
    """Multilinear term with one input per slot (symmetric kernel)."""
    n = ker.degree
    g = slots[0].grid
    dt = g.dt
    Q = ker.grid_size(dt)
    t_idx = np.arange(g.i0 + 1, g.i1 + 1)
    mats = [op._past_matrix(s, t_idx, Q)[:, :, 0] for s in slots]
    scale = dt ** n
    if not ker.time_varying:
        K = ker.grid_values(dt)[(0,) * n]
        if n == 1:
            vals = np.einsum("j,ij->i", K, mats[0])
        elif n == 2:
            vals = np.einsum("jk,ij,ik->i", K, mats[0], mats[1])
        else:
            vals = np.einsum("jkl,ij,ik,il->i", K, mats[0], mats[1], mats[2])
        tails = [float(s.tail_value[0]) for s in slots]
        ones = np.ones(Q)
        if n == 1:
            tail = float(np.einsum("j,j->", K, ones)) * tails[0]
        elif n == 2:
            tail = float(np.einsum("jk,j,k->", K, ones, ones)) * tails[0] * tails[1]
        else:
            tail = float(np.einsum("jkl,j,k,l->", K, ones, ones, ones)) \
                * tails[0] * tails[1] * tails[2]
        return TimeFunction(g, vals * scale, np.array([tail * scale]))
    if any(np.any(s.tail_value) for s in slots):
        raise ValueError("time-varying operator requires zero input tails")
    if n > 2:
        raise ValueError("time-varying mixed terms support degree <= 2")
    vals = np.empty(t_idx.shape[0])
    for i, ti in enumerate(t_idx):
        K = ker.grid_values(dt, at_time=float(ti * dt))[(0,) * n]
        if n == 1:
            vals[i] = np.einsum("j,j->", K, mats[0][i])
        else:
            vals[i] = np.einsum("jk,j,k->", K, mats[0][i], mats[1][i])
    return TimeFunction(g, vals * scale, np.zeros(1))


def frechet_of(system: SystemOp) -> FrechetPair:
    """Analytic derivative pair for the shipped operator variants.

    Linear operators are their own differential with zero remainder; for
    polynomial integral operators the binomial expansion of each symmetric
    multilinear term puts the single-direction terms into ``L`` and
    everything of higher order in the direction into ``W``.
    """
    if isinstance(system, (LimsupConvolution, LTISystem)):
        def L(u, v):
            return system.apply(v)

        def W(u, v):
            return 0.0 * system.apply(v)

        return FrechetPair(L, W, source="linear")
    if isinstance(system, PolyIntegralOperator):
        if system.input_dim != 1:
            raise ValueError("analytic derivative implemented for scalar inputs")
        # Symmetrizing is idempotent and never changes the operator, and the
        # term-by-term expansion below needs interchangeable slots.
        kers = {n: symmetrize(k) for n, k in system.kernels.items()}

        def L(u, v):
            out = None
            for n, ker in sorted(kers.items()):
                term = _poly_term(system, ker, [u] * (n - 1) + [v]) * float(n)
                out = term if out is None else out + term
            return out

        def W(u, v):
            out = 0.0 * v
            for n, ker in sorted(kers.items()):
                for k in range(2, n + 1):
                    term = _poly_term(system, ker, [u] * (n - k) + [v] * k)
                    out = out + term * float(math.comb(n, k))
            return out

        return FrechetPair(L, W, source=f"polynomial-degree-{max(kers)}")
    raise ValueError(f"no analytic derivative for {type(system).__name__}")


def gateaux_fd(system: SystemOp, u: TimeFunction, v: TimeFunction,
               h: float = 1e-4) -> TimeFunction:
    """Central-difference directional derivative.  Non-certifying: a numeric
    fallback for exploration, never used to assert a bound."""
    return (system.apply(u + h * v) - system.apply(u - h * v)) * (0.5 / h)


def remainder_decay(W: Callable, u: TimeFunction, v: TimeFunction,
                    out_norm: Callable[[TimeFunction], float],
                    in_norm: Callable[[TimeFunction], float],
                    steps: int = 8, factor: float = 0.5) -> list:
    """Ratios ``|W(u, c v)| / |c v|`` along a geometric direction sequence."""
    rows = []
    for k in range(steps):
        c = factor ** k
        w = W(u, c * v)
        rows.append({"scale": c, "ratio": out_norm(w) / in_norm(c * v)})
    return rows


def fd_directional_order(system: SystemOp, fp: FrechetPair, u: TimeFunction,
                         v: TimeFunction, out_norm: Callable,
                         hs: Sequence[float]) -> dict:
    """Log-log slope of ``|(F(u+hv) - F(u))/h - L(u,v)|`` against ``h``."""
    base = system.apply(u)
    Lv = fp.L(u, v)
    errs = []
    for h in hs:
        fd = (system.apply(u + h * v) - base) * (1.0 / h)
        errs.append(out_norm(fd - Lv))
    hs = np.asarray(hs, dtype=float)
    errs_a = np.asarray(errs)
    ok = errs_a > 0
    if ok.sum() >= 2:
        slope = float(np.polyfit(np.log(hs[ok]), np.log(errs_a[ok]), 1)[0])
    else:
        slope = float("nan")  # exact differential: errors at rounding level
    return {"h": hs.tolist(), "error": errs, "order": slope,
            "exact": bool(ok.sum() < 2)}


# -- state-level derivatives -----------------------------------------------------


def _recenter_future(y: TimeFunction, t: float) -> TimeFunction:
    t_idx = y.grid.index_of(t)
    future = TimeFunction(Grid(y.grid.dt, t_idx, y.grid.i1),
                          y.samples[t_idx - y.grid.i0:], y.tail_value)
    return shift_left(future, t)


def state_frechet(state: NaturalState, fp: FrechetPair) -> FrechetPair:
    """Derivative of the state operator at a future input, from the system's.

    The expansion point is the spliced full input; directions are futures
    spliced onto a zero past.  The derived operator norm can never exceed
    the system differential's on matched directions, since recentering only
    shrinks the norm window.
    """
    t = state.t
    zero_past = 0.0 * state.past

    def L1(v, w):
        a = state.spliced_input(v)
        b = splice(zero_past, shift_right(w, t), t)
        return _recenter_future(fp.L(a, b), t)

    def W1(v, w):
        a = state.spliced_input(v)
        b = splice(zero_past, shift_right(w, t), t)
        return _recenter_future(fp.W(a, b), t)

    return FrechetPair(L1, W1, source=f"state({fp.source})")


def input_to_state_frechet(system: SystemOp, t: float, fp: FrechetPair) -> dict:
    """Derivative of the past-input-to-state map, with its two evaluators.

    Requires a uniform-weight input family (window-comparison constant 1 at
    unbounded span); otherwise small truncated-past changes do not control
    the global norm of their zero-extended splice and the construction is
    refused with a machine-readable reason.
    """
    if system.input_fam.alpha != float("inf"):
        return {"refused": True, "reason_code": "alpha_not_infinite",
                "detail": "input family must have unbounded comparison span"}

    def Lam(u, v, w):
        a = splice(u, shift_right(w, t), t)
        b = splice(v, 0.0 * shift_right(w, t), t)
        return _recenter_future(fp.L(a, b), t)

    def Om(u, v, w):
        a = splice(u, shift_right(w, t), t)
        b = splice(v, 0.0 * shift_right(w, t), t)
        return _recenter_future(fp.W(a, b), t)

    return {"refused": False, "Lambda": Lam, "Omega": Om}


# -- trajectory derivative ----------------------------------------------------------


@dataclass
class TrajectoryDerivative:
    """Evaluator for the time derivative of ``t -> state at t``.

    For the shipped route the system is time invariant, so the
    trajectory-shift term vanishes and the derivative is the system
    differential at the spliced input, in the direction of the past's shift
    derivative spliced with a zero future.
    """

    system: SystemOp
    source: SmoothInput
    t: float
    grid: Grid
    fp: FrechetPair

    def __call__(self, v: TimeFunction) -> TimeFunction:
        past = self.source.sample(self.grid)
        state = NaturalState(self.system, past, self.t)
        a = state.spliced_input(v)
        dpast = self.source.derivative_sample(self.grid)
        zero_future = 0.0 * shift_right(v, self.t)
        b = splice(dpast, zero_future, self.t)
        return _recenter_future(self.fp.L(a, b), self.t)

    def fd_check(self, v: TimeFunction, h0: float, k_range=range(3, 11)) -> dict:
        """Compare against the trajectory finite difference.

        Steps run over ``h0 * 2^-k`` for ``k`` in ``k_range`` (skipping the
        largest shifts, which sit outside the first-order regime).  Time
        invariance turns the state at ``t + h`` into the state at ``t`` with
        the analytically shifted past, so sub-grid ``h`` is exact.
        """
        past = self.source.sample(self.grid)
        state = NaturalState(self.system, past, self.t)
        base = state.evaluate(v)
        analytic = self(v)
        out_fam = self.system.output_fam
        rows = []
        for k in k_range:
            h = h0 * 0.5 ** k
            shifted = NaturalState(
                self.system, self.source.sample(self.grid, shift=h), self.t)
            fd = (shifted.evaluate(v) - base) * (1.0 / h)
            err = out_fam.future_norm(fd - analytic, 0.0)
            prev = rows[-1]["error"] if rows else None
            rows.append({"h": h, "error": err,
                         "ratio": err / prev if prev else float("nan")})
        hs = np.array([r["h"] for r in rows])
        es = np.array([r["error"] for r in rows])
        ok = es > 0
        order = float(np.polyfit(np.log(hs[ok]), np.log(es[ok]), 1)[0]) \
            if ok.sum() >= 2 else float("nan")
        return {"rows": rows, "order": order, "exact": bool(ok.sum() < 2)}


def trajectory_derivative(system: SystemOp, source: SmoothInput, t: float,
                          grid: Grid, fp: Optional[FrechetPair] = None):
    """Build the trajectory-derivative evaluator, or refuse.

    Time-varying systems would need the trajectory-shift generator term,
    which no shipped system supplies.
    """
    if not system.time_invariant:
        return {"refused": True, "reason_code": "time_varying_needs_trajectory_generator",
                "detail": "only time-invariant trajectories ship a derivative"}
    if source.has_jumps:
        return {"refused": True, "reason_code": "jump_discontinuity",
                "detail": "past input is not shift differentiable"}
    fp = fp or frechet_of(system)
    return TrajectoryDerivative(system, source, t, grid, fp)
