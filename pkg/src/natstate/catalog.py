"""Named systems and norm families shipped with the toolkit.

Each system bundle fixes the grids, families, and parameters its experiments
use, and states the claim it demonstrates.  Closed-form evaluators for the
shipped systems live here too: they are the independent oracles the
splice-apply-shift machinery is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernel import PolyKernel
from .seminorm import FittedFamily, Weight
from .sysop import LimsupConvolution, LTISystem, PolyIntegralOperator, SystemOp
from .timegrid import Grid, TimeFunction

__all__ = [
    "SystemBundle",
    "family",
    "system",
    "FAMILIES",
    "SYSTEMS",
    "averager_pair",
    "hilbert_schmidt_bound",
    "quadratic_state_closed_form",
    "quadratic_state_derivative_closed_form",
    "integrator_state_closed_form",
]


# -- families -----------------------------------------------------------------


def _families() -> dict:
    return {
        "sup-linf": lambda: FittedFamily.unweighted_sup(name="sup-linf"),
        "uniform-l2": lambda: FittedFamily.weighted_lp(
            2.0, Weight.uniform(), name="uniform-l2"),
        "exp-l2": lambda: FittedFamily.weighted_lp(
            2.0, Weight.exponential(1.0), name="exp-l2"),
        "box-l2": lambda: FittedFamily.weighted_lp(
            2.0, Weight.box(1.5), name="box-l2"),
        "esssup": lambda: FittedFamily.output_window(float("inf"), name="esssup"),
        "esssup-window-2": lambda: FittedFamily.output_window(
            2.0, name="esssup-window-2"),
    }


FAMILIES = _families()


def family(name: str) -> FittedFamily:
    try:
        return FAMILIES[name]()
    except KeyError:
        raise KeyError(f"unknown family {name!r}; known: {sorted(FAMILIES)}") from None


# -- systems ------------------------------------------------------------------


@dataclass
class SystemBundle:
    """A shipped system with its working grids and printable parameters."""

    name: str
    system: SystemOp
    claim: str
    past_window: float  # seconds of represented past
    horizon: float      # seconds of represented future
    params: dict = field(default_factory=dict)

    def grid(self, dt: float) -> Grid:
        return Grid(dt, -int(round(self.past_window / dt)),
                    int(round(self.horizon / dt)))


def _box_response(dt: float, T: float = 1.0) -> TimeFunction:
    g = Grid(dt, 0, int(round(T / dt)))
    return TimeFunction(g, np.ones((g.n, 1)), np.zeros(1))


def _decay_response(dt: float, T: float) -> TimeFunction:
    g = Grid(dt, 0, int(round(T / dt)))
    return TimeFunction(g, np.exp(-g.times()), np.zeros(1))


def averager_pair(dt: float) -> tuple[SystemBundle, SystemBundle]:
    """Two systems with the same state set but different eventual-level gains.

    Both average the last second of input; one adds the input's eventual
    level once, the other twice.  Their natural-state sets coincide (match
    the recent past and halve the level), yet the systems differ, so the
    state set cannot identify the system here: the input norm keeps the
    whole past in view and is not tapered.
    """
    h = _box_response(dt)
    fin = family("sup-linf")
    fout = family("esssup-window-2")
    one = SystemBundle(
        "averager-1x", LimsupConvolution(h, 1.0, fin, fout),
        claim="moving average of the last second plus the eventual level",
        past_window=4.0, horizon=4.0,
        params={"response_support": 1.0, "tail_gain": 1.0,
                "response_l1": 1.0, "input_family": "sup-linf",
                "output_family": "esssup-window-2"})
    two = SystemBundle(
        "averager-2x", LimsupConvolution(h, 2.0, fin, fout),
        claim="same moving average with twice the eventual level",
        past_window=4.0, horizon=4.0,
        params={"response_support": 1.0, "tail_gain": 2.0,
                "response_l1": 1.0, "input_family": "sup-linf",
                "output_family": "esssup-window-2"})
    return one, two


def _quadratic_kernel_func(support: float):
    def f(s1, s2):
        s1 = np.asarray(s1, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        mask = (s1 > 0) & (s1 <= support) & (s2 > 0) & (s2 <= support)
        return np.where(mask, np.exp(-(s1 + s2)), 0.0)
    return f


def _quadratic_kernel_func_tv(support: float):
    base = _quadratic_kernel_func(support)

    def f(t, s1, s2):
        return (1.0 + 0.5 * math.sin(t)) * base(s1, s2)
    return f


def _systems() -> dict:
    reg: dict = {}

    def define(fn):
        reg[fn.__name__.replace("_", "-")] = fn
        return fn

    @define
    def averager_1x(dt):
        return averager_pair(dt)[0]

    @define
    def averager_2x(dt):
        return averager_pair(dt)[1]

    @define
    def integrator(dt):
        sys_ = LTISystem([[0.0]], [[1.0]], family("uniform-l2"), family("esssup"))
        return SystemBundle(
            "integrator", sys_,
            claim="pure integrator: the state is the accumulated past input",
            past_window=4.0, horizon=4.0,
            params={"A": [[0.0]], "B": [[1.0]]})

    @define
    def leaky_integrator(dt):
        sys_ = LTISystem([[-0.5]], [[1.0]], family("uniform-l2"), family("esssup"))
        return SystemBundle(
            "leaky-integrator", sys_,
            claim="first-order lag: distinct dynamics, distinct state set",
            past_window=4.0, horizon=4.0,
            params={"A": [[-0.5]], "B": [[1.0]]})

    @define
    def oscillator(dt):
        A = [[0.0, 1.0], [-1.0, -0.6]]
        B = [[0.0], [1.0]]
        sys_ = LTISystem(A, B, family("uniform-l2"), family("esssup"))
        return SystemBundle(
            "oscillator", sys_,
            claim="controllable two-state system; vector states match "
                  "natural states one for one",
            past_window=6.0, horizon=4.0, params={"A": A, "B": B})

    @define
    def oscillator_alt(dt):
        A = [[0.0, 1.0], [-2.0, -1.0]]
        B = [[0.0], [1.0]]
        sys_ = LTISystem(A, B, family("uniform-l2"), family("esssup"))
        return SystemBundle(
            "oscillator-alt", sys_,
            claim="second controllable pair; same reachable vectors, "
                  "different natural states",
            past_window=6.0, horizon=4.0, params={"A": A, "B": B})

    @define
    def quadratic_volterra(dt):
        S = 2.0
        ker = PolyKernel(2, S, func=_quadratic_kernel_func(S))
        sys_ = PolyIntegralOperator([ker], 0.0, family("uniform-l2"),
                                    family("esssup"))
        return SystemBundle(
            "quadratic-volterra", sys_,
            claim="second-degree integral operator with a square-integrable "
                  "kernel; bounded and differentiable",
            past_window=4.0, horizon=2.0,
            params={"kernel": "exp(-(s1+s2)) on (0,2]^2", "degree": 2,
                    "support": S, "constant_term": 0.0})

    @define
    def quadratic_volterra_tv(dt):
        S = 2.0
        ker = PolyKernel(2, S, func=_quadratic_kernel_func_tv(S),
                         time_varying=True)
        sys_ = PolyIntegralOperator([ker], 0.0, family("uniform-l2"),
                                    family("esssup"))
        return SystemBundle(
            "quadratic-volterra-tv", sys_,
            claim="time-varying second-degree operator; windowed views "
                  "depend on the window instant",
            past_window=3.0, horizon=2.0,
            params={"kernel": "(1+0.5 sin t) exp(-(s1+s2)) on (0,2]^2",
                    "degree": 2, "support": S})

    @define
    def cubic_volterra(dt):
        S = 0.4
        k1 = PolyKernel(1, S, func=lambda s: np.exp(-np.asarray(s)))
        k2 = PolyKernel(2, S, func=_quadratic_kernel_func(S))
        k3 = PolyKernel(3, S, func=lambda a, b, c: np.exp(-(np.asarray(a)
                                                            + np.asarray(b)
                                                            + np.asarray(c))))
        sys_ = PolyIntegralOperator([k1, k2, k3], 0.1, family("uniform-l2"),
                                    family("esssup"))
        return SystemBundle(
            "cubic-volterra", sys_,
            claim="degrees 0..3 in one operator; exercises the full "
                  "term-by-term derivative expansion",
            past_window=2.0, horizon=1.0,
            params={"degrees": [0, 1, 2, 3], "support": S,
                    "constant_term": 0.1})

    @define
    def reachable_conv(dt):
        sys_ = LimsupConvolution(_box_response(dt, 1.0), 0.0,
                                 FittedFamily.weighted_lp(
                                     2.0, Weight.box(1.5), name="box-l2"),
                                 family("esssup"))
        return SystemBundle(
            "reachable-conv", sys_,
            claim="one-second convolution under a finite-memory input norm: "
                  "any state is reached exactly by replaying its window",
            past_window=4.0, horizon=3.0,
            params={"response_support": 1.0, "input_family": "box-l2 (M=1.5)"})

    @define
    def fading_conv(dt):
        sys_ = LimsupConvolution(_decay_response(dt, 10.0), 0.0,
                                 family("exp-l2"), family("esssup"))
        return SystemBundle(
            "fading-conv", sys_,
            claim="decaying convolution under a tapered input norm: states "
                  "are reached to any tolerance with a closed-form drive time",
            past_window=12.0, horizon=3.0,
            params={"response": "exp(-s) on (0,10]", "input_family": "exp-l2"})

    return reg


SYSTEMS = _systems()


def system(name: str, dt: float) -> SystemBundle:
    try:
        return SYSTEMS[name](dt)
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {sorted(SYSTEMS)}") from None


# -- config-defined families and systems -----------------------------------------


def family_from_spec(name: str, spec: dict) -> FittedFamily:
    """Build a norm family from flat config keys.

    Recognized keys: ``kind`` (weighted_lp, sup, unweighted_sup,
    output_window), ``p``, ``form`` (uniform, exp, box), ``rate``,
    ``memory``, ``alpha``, ``window_b``, ``vector_norm``.
    """
    kind = spec.get("kind", "weighted_lp")
    if kind == "unweighted_sup":
        return FittedFamily.unweighted_sup(name=name)
    if kind == "output_window":
        return FittedFamily.output_window(float(spec["window_b"]), name=name)
    form = spec.get("form", "uniform")
    if form == "uniform":
        w = Weight.uniform()
    elif form == "exp":
        w = Weight.exponential(float(spec["rate"]),
                               alpha=float(spec.get("alpha", 1.0)))
    elif form == "box":
        w = Weight.box(float(spec["memory"]))
    else:
        raise ValueError(f"unknown weight form {form!r}")
    base = FittedFamily.weighted_lp(float(spec.get("p", 2.0)), w,
                                    vector_norm=spec.get("vector_norm",
                                                         "euclidean"),
                                    name=name)
    if kind == "sup":
        return FittedFamily.sup_family(base, name=name)
    if kind == "weighted_lp":
        return base
    raise ValueError(f"unknown family kind {kind!r}")


def _resolve_family(name_or_spec, customs: dict) -> FittedFamily:
    if name_or_spec in customs:
        return customs[name_or_spec]
    return family(name_or_spec)


def system_from_spec(name: str, spec: dict, dt: float,
                     custom_families: Optional[dict] = None) -> SystemBundle:
    """Build a system from flat config keys.

    ``variant`` picks the operator: ``conv`` (response_form box or exp with
    ``support``/``rate``/``tail_gain``), ``lti`` (row-major ``A``, ``B``,
    ``n_states``), or ``poly`` (``degree``, ``kernel_form`` exp or box with
    ``rates``/``level``, ``support``, ``constant``; or ``kernel_csv``).
    ``input_family``/``output_family`` name built-ins or config families.
    """
    customs = custom_families or {}
    fin = _resolve_family(spec.get("input_family", "uniform-l2"), customs)
    fout = _resolve_family(spec.get("output_family", "esssup"), customs)
    pw = float(spec.get("past_window", 4.0))
    hz = float(spec.get("horizon", 2.0))
    variant = spec["variant"]
    if variant == "conv":
        S = float(spec.get("support", 1.0))
        g = Grid(dt, 0, int(round(S / dt)))
        if spec.get("response_form", "box") == "box":
            h = TimeFunction(g, np.ones((g.n, 1)), np.zeros(1))
        else:
            h = TimeFunction(g, np.exp(-float(spec.get("rate", 1.0))
                                       * g.times()), np.zeros(1))
        op = LimsupConvolution(h, float(spec.get("tail_gain", 0.0)), fin, fout)
        return SystemBundle(name, op, "config-defined convolution",
                            pw, hz, params=dict(spec))
    if variant == "lti":
        n = int(spec["n_states"])
        A = np.asarray(spec["A"], dtype=float).reshape(n, n)
        B = np.asarray(spec["B"], dtype=float).reshape(n, -1)
        op = LTISystem(A, B, fin, fout)
        return SystemBundle(name, op, "config-defined state equation",
                            pw, hz, params=dict(spec))
    if variant == "poly":
        if "kernel_csv" in spec:
            from .kernel import read_kernel_csv
            ker = read_kernel_csv(spec["kernel_csv"])
        else:
            n = int(spec.get("degree", 2))
            S = float(spec.get("support", 1.0))
            form = spec.get("kernel_form", "exp")
            if form == "exp":
                rates = [float(r) for r in
                         spec.get("rates", [1.0] * n)]

                def f(*sig):
                    acc = np.zeros_like(np.asarray(sig[0], dtype=float))
                    for r, s in zip(rates, sig):
                        acc = acc + r * np.asarray(s, dtype=float)
                    return np.exp(-acc)
            elif form == "box":
                level = float(spec.get("level", 1.0))

                def f(*sig):
                    return np.full_like(np.asarray(sig[0], dtype=float), level)
            else:
                raise ValueError(f"unknown kernel form {form!r}")
            ker = PolyKernel(n, S, func=f)
        op = PolyIntegralOperator([ker], float(spec.get("constant", 0.0)),
                                  fin, fout)
        return SystemBundle(name, op, "config-defined integral operator",
                            pw, hz, params=dict(spec))
    raise ValueError(f"unknown system variant {variant!r}")


# -- independent closed-form evaluators -----------------------------------------


def hilbert_schmidt_bound(op: PolyIntegralOperator, dt: float,
                          ts=(0.0,)) -> float:
    """Grid Hilbert-Schmidt size of the degree-2 kernel, ``sup_t`` sampled.

    This is the constant in the Cauchy-Schwarz chain bounding every windowed
    operator estimate at power two.
    """
    ker = op.kernels[2]
    best = 0.0
    for t in (ts if not op.time_invariant else (0.0,)):
        K = ker.grid_values(dt, at_time=None if op.time_invariant else t)
        best = max(best, float(np.sqrt(np.sum(K ** 2) * dt ** 2)))
    return best


def quadratic_state_closed_form(ker: PolyKernel, time_varying: bool,
                                past: TimeFunction, v: TimeFunction,
                                t: float, sigma_indices) -> np.ndarray:
    """Three-term evaluation of the degree-2 state, directly from the kernel.

    Splitting the lag sum at the splice instant gives a past-past block, a
    doubled cross block (symmetric kernel), and a future-future block.  Lag
    cells at exactly the splice instant belong to the past, matching the
    half-open window convention of the sampling grid.
    """
    dt = past.grid.dt
    Q = ker.grid_size(dt)
    t_idx = past.grid.index_of(t)
    out = np.empty(len(sigma_indices))
    u_at = past.values_at_indices(
        np.arange(t_idx - Q, t_idx + 1))[:, 0]  # u(t - q dt), q = Q..0

    def kval(ti, a1, a2):
        if time_varying:
            return np.asarray(ker.func(ti, a1, a2), dtype=float)
        return np.asarray(ker.func(a1, a2), dtype=float)

    for row, m in enumerate(sigma_indices):
        sigma = m * dt
        ti = t + sigma
        # Past-past: lags sigma + mu, mu = 0..(Q - m) dt.
        mu = np.arange(0, max(Q - m, 0) + 1) * dt
        uvals = u_at[Q - np.arange(0, max(Q - m, 0) + 1)]
        acc = 0.0
        if mu.size:
            Kpp = kval(ti, sigma + mu[:, None], sigma + mu[None, :])
            acc += float(np.einsum("jk,j,k->", Kpp, uvals, uvals)) * dt * dt
        # Future-future: lags dt..(m-1) dt on both axes.
        if m >= 2:
            tau = np.arange(1, m) * dt
            vvals = v.values_at_indices(m - np.arange(1, m))[:, 0]
            Kff = kval(ti, tau[:, None], tau[None, :])
            acc += float(np.einsum("jk,j,k->", Kff, vvals, vvals)) * dt * dt
            if mu.size:
                Kx = kval(ti, (sigma + mu)[:, None], tau[None, :])
                acc += 2.0 * float(np.einsum("jk,j,k->", Kx, uvals, vvals)) \
                    * dt * dt
        out[row] = acc
    return out


def quadratic_state_derivative_closed_form(ker: PolyKernel, past: TimeFunction,
                                           dpast: TimeFunction, v: TimeFunction,
                                           t: float, sigma_indices) -> np.ndarray:
    """Direct double sum for the state-trajectory derivative of the
    time-invariant degree-2 operator: twice the kernel against the spliced
    input and the spliced shift derivative of the past."""
    dt = past.grid.dt
    Q = ker.grid_size(dt)
    t_idx = past.grid.index_of(t)
    lags = np.arange(1, Q + 1)
    out = np.empty(len(sigma_indices))
    for row, m in enumerate(sigma_indices):
        base = t_idx + m
        args = base - lags  # absolute instants t + sigma - lag
        z = np.where(args <= t_idx,
                     past.values_at_indices(np.minimum(args, t_idx))[:, 0],
                     v.values_at_indices(np.maximum(args - t_idx, 0))[:, 0])
        b = np.where(args <= t_idx,
                     dpast.values_at_indices(np.minimum(args, t_idx))[:, 0],
                     0.0)
        K = np.asarray(ker.func(lags[:, None] * dt, lags[None, :] * dt))
        out[row] = 2.0 * float(np.einsum("jk,j,k->", K, z, b)) * dt * dt
    return out


def integrator_state_closed_form(past: TimeFunction, v: TimeFunction,
                                 t: float) -> np.ndarray:
    """``x(t) + running integral of v``: the textbook integrator state."""
    g = past.grid
    t_idx = g.index_of(t)
    if np.any(past.tail_value):
        raise ValueError("integrator pasts must have zero tails")
    upto = past.samples[: t_idx - g.i0, 0]
    x_t = float(np.sum(upto)) * g.dt
    return x_t + np.cumsum(v.samples[:, 0]) * v.grid.dt
