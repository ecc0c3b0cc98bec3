"""Natural states: the future input to future output operators of a system.

The state of a causal system at time ``t`` induced by a past input ``u`` is
the operator that takes a centered future input ``v`` (supported on
``(0, H]``), splices it onto the past ``u`` at ``t``, applies the system,
and recenters the output future.  States are lazy: a state is just the
triple (system, past representative, instant); all comparisons are probe
maximizations of a weighted operator distance on shared, seeded probe sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .seminorm import FittedFamily, classify, taper_delta
from .sysop import SystemOp
from .timegrid import Grid, TimeFunction, shift_left, shift_right, splice

__all__ = [
    "NaturalState",
    "StateDistance",
    "state_distance",
    "trajectory",
    "drive",
    "representative_independence",
    "reachability_experiment",
    "state_matching_ladder",
    "state_bound_check",
]


class NaturalState:
    """Operator view of the system's memory at instant ``t``.

    ``past`` must be defined up to ``t``; only its values at or before ``t``
    (and its tail) ever matter, which is exactly the representative
    independence property checked in the tests.
    """

    def __init__(self, system: SystemOp, past: TimeFunction, t: float):
        if past.grid.index_of(t) > past.grid.i1:
            raise ValueError("past representative not defined up to t")
        self.system = system
        self.past = past
        self.t = float(t)

    def spliced_input(self, v: TimeFunction) -> TimeFunction:
        """The full input ``past up to t, then v shifted out to start at t``."""
        return splice(self.past, shift_right(v, self.t), self.t)

    def evaluate(self, v: TimeFunction) -> TimeFunction:
        """Centered future output on ``(0, H]`` for future input ``v`` on ``(0, H]``."""
        full = self.spliced_input(v)
        y = self.system.apply(full)
        t_idx = full.grid.index_of(self.t)
        future = TimeFunction(
            Grid(y.grid.dt, t_idx, y.grid.i1),
            y.samples[t_idx - y.grid.i0:],
            y.tail_value,
        )
        return shift_left(future, self.t)

    def evaluate_at(self, v: TimeFunction, sigma_indices) -> np.ndarray:
        """Values of the centered future output at selected instants."""
        full = self.spliced_input(v)
        t_idx = full.grid.index_of(self.t)
        idx = t_idx + np.asarray(sigma_indices, dtype=int)
        return self.system.apply_at(full, idx)

    def __repr__(self) -> str:
        return f"NaturalState(t={self.t}, past={self.past!r})"


@dataclass
class StateDistance:
    """Probe-maximized lower bound of the weighted distance between states."""

    value: float
    N: int
    probe_index: int
    probe_count: int
    probe_set_id: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "N": self.N,
                "probe_index": self.probe_index,
                "probe_count": self.probe_count,
                "probe_set_id": self.probe_set_id}


def state_distance(xi: NaturalState, eta: NaturalState, N: int,
                   futures: Sequence[TimeFunction],
                   probe_set_id: str = "") -> StateDistance:
    """``max_v |xi(v) - eta(v)|_{0,inf} / (1 + |v|_{0,inf}^N)`` over probes.

    Both states must share the input/output families of their systems; the
    zero future should be in the probe set whenever a tail-separation bound
    is being certified.
    """
    out_fam = xi.system.output_fam
    in_fam = xi.system.input_fam
    best, arg = -1.0, -1
    for i, v in enumerate(futures):
        d = xi.evaluate(v) - eta.evaluate(v)
        num = out_fam.future_norm(d, 0.0)
        den = 1.0 + in_fam.future_norm(v, 0.0) ** N
        r = num / den
        if r > best:
            best, arg = r, i
    return StateDistance(best, N, arg, len(futures), probe_set_id)


def trajectory(system: SystemOp, u: TimeFunction, times) -> list[NaturalState]:
    """The state trajectory ``t -> state at t`` along grid-aligned times."""
    ts = list(times)
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("times must be strictly ascending")
    return [NaturalState(system, u, t) for t in ts]


def drive(state: NaturalState, v: TimeFunction, s: float) -> NaturalState:
    """Feed ``v`` (centered future input) from ``t`` to ``s``; state at ``s``.

    Realizes the transition property: the new state's past is the old past
    spliced with the drive segment.
    """
    if s <= state.t:
        raise ValueError("drive must move forward in time")
    new_past = splice(state.past, shift_right(v, state.t), state.t)
    if new_past.grid.index_of(s) > new_past.grid.i1:
        raise ValueError("drive segment too short to reach s")
    return NaturalState(state.system, new_past, s)


def representative_independence(state: NaturalState, futures, rng=None) -> float:
    """Max evaluation change after editing the past strictly after ``t``.

    Must be zero: the spliced input never reads those samples.
    """
    rng = np.random.default_rng(rng)
    g = state.past.grid
    t_idx = g.index_of(state.t)
    edited = np.array(state.past.samples)
    sel = np.arange(g.i0 + 1, g.i1 + 1) > t_idx
    if sel.any():
        edited[sel] += 1.0 + rng.random(size=(int(sel.sum()), state.past.dim))
    other = NaturalState(state.system,
                         TimeFunction(g, edited, state.past.tail_value), state.t)
    worst = 0.0
    for v in futures:
        d = state.evaluate(v) - other.evaluate(v)
        worst = max(worst, float(np.max(np.abs(d.samples))))
    return worst


# -- reachability ---------------------------------------------------------------


def reachability_experiment(system: SystemOp, source: TimeFunction,
                            target: TimeFunction, fam: FittedFamily,
                            futures, N: int = 2, eps: float = 0.05,
                            c: float = 1.0) -> dict:
    """Drive the state from the source past toward the target state.

    Both pasts are taken at time 0.  With a finite-memory input family the
    drive replays the target's last ``M`` seconds and the reached state must
    match exactly; with a tapered family the drive length comes from the
    closed-form taper window for ``(eps, c)`` and the remaining distance
    must be at most ``eps``.  A family that is neither is refused: no drive
    can shake off the distant past.
    """
    cls = classify(fam)
    if cls["class"] == "neither":
        return {"refused": True, "reason_code": "family_not_tapered",
                "detail": "no finite window bounds the distant-past "
                          "contribution of this family"}
    if cls["class"] == "finite_memory":
        back = cls["memory"]
    else:
        delta = taper_delta(fam, eps, c)
        dtt = source.grid.dt
        back = math.ceil(delta / dtt) * dtt
    t_drive = -back
    driven_past = splice(shift_left(source, back), target, t_drive)
    reached = NaturalState(system, driven_past, 0.0)
    goal = NaturalState(system, target, 0.0)
    dist = state_distance(reached, goal, N, futures)
    out = {
        "refused": False,
        "memory_class": cls["class"],
        "drive_seconds": back,
        "distance": dist.value,
        "N": N,
    }
    if cls["class"] == "finite_memory":
        out["exact"] = dist.value == 0.0
    else:
        out["eps"] = eps
        out["achieved"] = dist.value <= eps
    return out


# -- identity from the state set --------------------------------------------------


def state_matching_ladder(sys1: SystemOp, sys2: SystemOp, u: TimeFunction,
                          T: float, steps: int,
                          match_state: Callable[[TimeFunction, float], TimeFunction],
                          futures, N: int = 2,
                          match_tol: float = 1e-9) -> dict:
    """Constructive agreement ladder for two systems sharing a state set.

    For descending instants ``tau_i = T + 1 - i``, ``match_state(u, tau)``
    supplies an input whose ``sys1``-state at ``tau`` equals the
    ``sys2``-state of ``u`` there.  Splicing the match's past with ``u``'s
    future yields inputs whose ``sys1``-outputs agree with ``sys2(u)`` from
    ``tau_i`` on; whether ``|v_i - u|_T`` dies out is exactly the taper
    question, and the final output gap at ``T`` is the verdict.
    """
    fam_in, fam_out = sys1.input_fam, sys1.output_fam
    y2 = sys2.apply(u)
    rows = []
    for i in range(1, steps + 1):
        tau = T + 1.0 - i
        w = match_state(u, tau)
        state1 = NaturalState(sys1, w, tau)
        state2 = NaturalState(sys2, u, tau)
        match_gap = state_distance(state1, state2, N, futures).value
        v_i = splice(w, u, tau)
        y1 = sys1.apply(v_i)
        d = y1 - y2
        out_gap = fam_out.future_norm(d, tau)
        vu = (v_i.with_window(u.grid.i0, u.grid.i1) - u)
        rows.append({
            "i": i,
            "tau": tau,
            "state_match_gap": match_gap,
            "output_gap_from_tau": out_gap,
            "input_gap_at_T": fam_in.past_norm(vu, T),
            "match_ok": match_gap <= match_tol,
        })
    final = fam_out.past_norm(sys1.apply(u) - y2, T)
    cls = classify(fam_in)
    return {
        "rows": rows,
        "final_output_gap_at_T": final,
        "input_family_class": cls["class"],
        "taper_hypothesis_met": cls["class"] in ("finite_memory", "tapered"),
        "input_gaps_vanish": rows[-1]["input_gap_at_T"] <= 10 * match_tol
        if rows else None,
    }


# -- inherited bounds ---------------------------------------------------------------


def state_bound_check(state: NaturalState, N: int, futures) -> dict:
    """Per-probe boundedness chain inherited from the system estimate.

    The system's weighted norm is estimated on exactly the spliced inputs
    the state evaluations build (one application each, reused for both
    sides), so each state ratio is bounded by
    ``est * (1 + sum_k C(N,k) P^k)`` with ``P`` the running sup of the
    past's left norms, and any violation is an arithmetic defect.  Pairs of
    futures also certify the continuity transfer: the centered evaluation
    gap never exceeds the global output gap of the spliced inputs.
    """
    in_fam = state.system.input_fam
    out_fam = state.system.output_fam
    g = state.past.grid
    t_idx = g.index_of(state.t)
    all_past = in_fam.past_norms_all_t(state.past)
    P = float(np.max(all_past[: t_idx - g.i0 + 1]))
    bound_factor = 1.0 + sum(math.comb(N, k) * P ** k for k in range(N + 1))

    fulls, evals, ratios = [], [], []
    est = 0.0
    for v in futures:
        z = state.spliced_input(v)
        y = state.system.apply(z)
        fulls.append(y)
        est = max(est, out_fam.bounding_norm(y)
                  / (1.0 + in_fam.bounding_norm(z) ** N))
        y_fut = TimeFunction(Grid(y.grid.dt, t_idx, y.grid.i1),
                             y.samples[t_idx - y.grid.i0:], y.tail_value)
        y_fut = shift_left(y_fut, state.t)
        evals.append(y_fut)
        ratios.append(out_fam.future_norm(y_fut, 0.0)
                      / (1.0 + in_fam.future_norm(v, 0.0) ** N))
    bound = est * bound_factor
    violations = [{"probe": i, "ratio": r, "bound": bound}
                  for i, r in enumerate(ratios) if r > bound * (1.0 + 1e-12)]
    continuity_rows = []
    for i in range(min(len(futures), 6)):
        for j in range(i + 1, min(len(futures), 6)):
            dy = out_fam.future_norm(evals[i] - evals[j], 0.0)
            dfull = out_fam.bounding_norm(fulls[i] - fulls[j])
            continuity_rows.append({
                "pair": [i, j], "centered_gap": dy, "global_gap": dfull,
                "ok": dy <= dfull * (1.0 + 1e-12) + 1e-300,
            })
    return {
        "estimate": est,
        "bound": bound,
        "bound_factor": bound_factor,
        "max_ratio": max(ratios) if ratios else 0.0,
        "violations": violations,
        "passed": not violations and all(r["ok"] for r in continuity_rows),
        "continuity": continuity_rows,
    }
