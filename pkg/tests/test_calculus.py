import math

import numpy as np
import pytest

from natstate import (Grid, NaturalState, PolyIntegralOperator, TimeFunction,
                      fd_directional_order, frechet_of, gateaux_fd,
                      input_to_state_frechet, remainder_decay,
                      shift_derivative, state_frechet, trajectory_derivative)
from natstate import catalog
from natstate.calculus import SmoothInput
from natstate.probes import future_probes

DT = 0.02


def _past(grid, seed, scale=0.5):
    rng = np.random.default_rng(seed)
    return TimeFunction(grid, rng.standard_normal((grid.n, 1)) * scale,
                        np.zeros(1))


@pytest.fixture
def quad():
    return catalog.system("quadratic-volterra", DT)


# -- shift derivatives -----------------------------------------------------


def test_constant_has_zero_residual():
    g = Grid(1e-3, -1000, 1000)
    sd = shift_derivative(SmoothInput.constant(2.5), g,
                          catalog.family("uniform-l2"))
    assert np.all(sd.d.samples == 0.0)
    assert sd.residual_norm(0.05) == 0.0


def test_trapezoid_residual_numbers():
    g = Grid(1e-3, -2000, 12000)
    sd = shift_derivative(SmoothInput.trapezoid(), g,
                          catalog.family("uniform-l2"))
    # Derivative samples are the two indicator ramps.
    assert sd.d.value(-0.5) == 1.0
    assert sd.d.value(5.0) == 0.0
    assert sd.d.value(10.5) == -1.0
    for h in (0.25, 0.125, 0.0625):
        assert sd.residual_norm(h) ** 2 == pytest.approx(
            4.0 * h ** 3 / 3.0, rel=0.02)
    ratio = sd.residual_norm(0.01) / 0.01
    assert ratio == pytest.approx(2.0 / math.sqrt(3.0) * 0.1, rel=0.05)


def test_sine_residual_taylor_bound():
    g = Grid(1e-3, 0, 2000)
    freq = 0.5
    sd = shift_derivative(SmoothInput.sine(freq=freq), g,
                          catalog.family("uniform-l2"))
    w = 2.0 * math.pi * freq
    span = g.t_end - g.t_start
    for h in (0.04, 0.02, 0.01):
        assert sd.residual_norm(h, t=g.t_end) / h <= \
            0.5 * h * w ** 2 * math.sqrt(span) * (1.0 + 1e-9)


def test_residual_ratio_sweep_decays():
    g = Grid(1e-3, -2000, 12000)
    sd = shift_derivative(SmoothInput.trapezoid(), g,
                          catalog.family("uniform-l2"))
    rows = sd.ratio_sweep(0.25, steps=8)
    r = [row["ratio"] for row in rows]
    assert all(b <= a for a, b in zip(r[1:], r[2:]))
    assert r[-1] <= 0.1 * r[0]


def test_uniform_in_s_ratio():
    g = Grid(1e-3, -2000, 12000)
    sd = shift_derivative(SmoothInput.trapezoid(), g,
                          catalog.family("uniform-l2"))
    ts = [-1.0, 0.0, 5.0, 11.5]
    ratios = [sd.uniform_ratio(h, ts) for h in (0.2, 0.05, 0.0125)]
    assert ratios[2] < ratios[0]


def test_jump_refused():
    g = Grid(1e-3, -100, 11000)
    with pytest.raises(ValueError, match="jump_discontinuity"):
        shift_derivative(SmoothInput.boxcar(), g, catalog.family("uniform-l2"))


# -- operator differentials ---------------------------------------------------


def test_linear_operator_differential():
    for name in ("integrator", "averager-1x"):
        b = catalog.system(name, DT)
        g = b.grid(DT)
        u, v = _past(g, 1), _past(g, 2)
        fp = frechet_of(b.system)
        assert np.all(fp.W(u, v).samples == 0.0)
        assert np.array_equal(fp.L(u, v).samples, b.system.apply(v).samples)


def test_quadratic_expansion_exact(quad):
    # Degree-2 quadrature is a bilinear form: the three-term expansion is
    # exact up to float regrouping.
    g = quad.grid(DT)
    u, v = _past(g, 3), _past(g, 4)
    fp = frechet_of(quad.system)
    lhs = quad.system.apply(u + v)
    rhs = quad.system.apply(u) + fp.L(u, v) + fp.W(u, v)
    assert np.max(np.abs(lhs.samples - rhs.samples)) <= 1e-12


def test_cubic_expansion():
    b = catalog.system("cubic-volterra", 0.04)
    g = b.grid(0.04)
    u, v = _past(g, 5, 0.3), _past(g, 6, 0.3)
    fp = frechet_of(b.system)
    lhs = b.system.apply(u + v)
    rhs = b.system.apply(u) + fp.L(u, v) + fp.W(u, v)
    assert np.max(np.abs(lhs.samples - rhs.samples)) <= 1e-10
    rows = remainder_decay(fp.W, u, v, b.system.output_fam.bounding_norm,
                           b.system.input_fam.bounding_norm, steps=8)
    r = [row["ratio"] for row in rows]
    assert all(bb <= aa for aa, bb in zip(r[1:], r[2:]))
    assert r[-1] <= 0.1 * r[0]


def test_L_slot_linear(quad):
    g = quad.grid(DT)
    u, v, w = _past(g, 7), _past(g, 8), _past(g, 9)
    fp = frechet_of(quad.system)
    add = fp.L(u, v + w) - fp.L(u, v) - fp.L(u, w)
    hom = fp.L(u, -1.7 * v) - (-1.7) * fp.L(u, v)
    assert np.max(np.abs(add.samples)) <= 1e-10
    assert np.max(np.abs(hom.samples)) <= 1e-10


def test_remainder_bound_and_decay(quad):
    g = quad.grid(DT)
    u, v = _past(g, 10), _past(g, 11)
    fp = frechet_of(quad.system)
    out_n = quad.system.output_fam.bounding_norm
    in_n = quad.system.input_fam.bounding_norm
    M = catalog.hilbert_schmidt_bound(quad.system, DT)
    assert out_n(fp.W(u, v)) <= M * in_n(v) ** 2 * (1.0 + 1e-9)
    rows = remainder_decay(fp.W, u, v, out_n, in_n, steps=8)
    r = [row["ratio"] for row in rows]
    assert all(b <= a for a, b in zip(r[1:], r[2:]))
    assert r[-1] <= 0.1 * r[0]


def test_directional_fd_order(quad):
    g = quad.grid(DT)
    u, v = _past(g, 12), _past(g, 13)
    fp = frechet_of(quad.system)
    rep = fd_directional_order(quad.system, fp, u, v,
                               quad.system.output_fam.bounding_norm,
                               [0.5 ** k for k in range(2, 8)])
    assert rep["exact"] or rep["order"] >= 0.9


def test_gateaux_fallback_close(quad):
    g = quad.grid(DT)
    u, v = _past(g, 14), _past(g, 15)
    fp = frechet_of(quad.system)
    fd = gateaux_fd(quad.system, u, v, h=1e-5)
    assert np.max(np.abs(fd.samples - fp.L(u, v).samples)) <= 1e-4


# -- state differentials ---------------------------------------------------------


def test_state_frechet_linear_system():
    b = catalog.system("integrator", DT)
    g = b.grid(DT)
    st = NaturalState(b.system, _past(g, 16), 0.0)
    sf = state_frechet(st, frechet_of(b.system))
    futs = future_probes(DT, 2.0, 17, count=3)
    v, w = futs[1], futs[2]
    got = sf.L(v, w)
    zero_state = NaturalState(b.system, 0.0 * st.past, 0.0)
    want = zero_state.evaluate(w)
    assert np.max(np.abs(got.samples - want.samples)) <= 1e-12
    assert np.all(sf.W(v, w).samples == 0.0)


def test_state_frechet_fd_and_norm(quad):
    g = quad.grid(DT)
    st = NaturalState(quad.system, _past(g, 18), 0.0)
    fp = frechet_of(quad.system)
    sf = state_frechet(st, fp)
    futs = future_probes(DT, quad.horizon, 19, count=6)
    v, w = futs[1], futs[2]
    h = 1e-4
    fd = (st.evaluate(v + h * w) - st.evaluate(v)) * (1.0 / h)
    gap = quad.system.output_fam.future_norm(fd - sf.L(v, w), 0.0)
    assert gap <= 10.0 * h
    # Matched-probe norm domination.
    out_fam, in_fam = quad.system.output_fam, quad.system.input_fam
    est_state, est_sys = 0.0, 0.0
    zero_past = 0.0 * st.past
    from natstate import splice, shift_right
    for wd in futs[2:]:
        a = st.spliced_input(v)
        bdir = splice(zero_past, shift_right(wd, 0.0), 0.0)
        est_state = max(est_state, out_fam.future_norm(sf.L(v, wd), 0.0)
                        / in_fam.future_norm(wd, 0.0))
        est_sys = max(est_sys, out_fam.bounding_norm(fp.L(a, bdir))
                      / in_fam.bounding_norm(bdir))
    assert est_state <= est_sys * (1.0 + 1e-9)


def test_state_frechet_nerode(quad):
    g = quad.grid(DT)
    past = _past(g, 20)
    edited = np.array(past.samples)
    edited[np.arange(g.i0 + 1, g.i1 + 1) > 0] += 3.0
    fp = frechet_of(quad.system)
    futs = future_probes(DT, quad.horizon, 21, count=3)
    a = state_frechet(NaturalState(quad.system, past, 0.0), fp)
    b = state_frechet(NaturalState(
        quad.system, TimeFunction(g, edited, past.tail_value), 0.0), fp)
    assert np.array_equal(a.L(futs[1], futs[2]).samples,
                          b.L(futs[1], futs[2]).samples)


def test_input_to_state_requires_uniform_weight(quad):
    fp = frechet_of(quad.system)
    clone = PolyIntegralOperator(list(quad.system.kernels.values()), 0.0,
                                 catalog.family("exp-l2"),
                                 quad.system.output_fam)
    rep = input_to_state_frechet(clone, 0.0, fp)
    assert rep["refused"] and rep["reason_code"] == "alpha_not_infinite"
    ok = input_to_state_frechet(quad.system, 0.0, fp)
    assert not ok["refused"]


def test_input_to_state_linear_system_zero_remainder():
    b = catalog.system("integrator", DT)
    rep = input_to_state_frechet(b.system, 0.0, frechet_of(b.system))
    g = b.grid(DT)
    futs = future_probes(DT, 2.0, 22, count=3)
    om = rep["Omega"](_past(g, 23), _past(g, 24), futs[1])
    assert np.all(om.samples == 0.0)


def test_input_to_state_fd_oracle(quad):
    # Finite difference of the state in its past against the derivative:
    # the gap is second order in the past perturbation.
    g = quad.grid(DT)
    fp = frechet_of(quad.system)
    rep = input_to_state_frechet(quad.system, 0.0, fp)
    Lam = rep["Lambda"]
    u, v = _past(g, 33), _past(g, 34, scale=0.3)
    w = future_probes(DT, quad.horizon, 35, count=2)[1]
    out_fam = quad.system.output_fam

    def gap(scale):
        st_a = NaturalState(quad.system, u + scale * v, 0.0)
        st_b = NaturalState(quad.system, u, 0.0)
        fd = st_a.evaluate(w) - st_b.evaluate(w)
        return out_fam.future_norm(fd - Lam(u, scale * v, w), 0.0)

    g1, g2 = gap(0.1), gap(0.05)
    assert g1 > 0.0
    assert g2 <= 0.3 * g1  # quadratic scaling: a quarter, with slack


def test_power_factor_bound(quad):
    # The past-to-state norm stays within (2^N + 1) of the system norm
    # estimated on exactly the spliced probes.
    N = 2
    g = quad.grid(DT)
    futs = future_probes(DT, quad.horizon, 25, count=5)
    out_n = quad.system.output_fam
    in_n = quad.system.input_fam
    est_S, est_F = 0.0, 0.0
    for seed in (26, 27, 28):
        pu = _past(g, seed)
        st = NaturalState(quad.system, pu, 0.0)
        xi_norm = max(out_n.future_norm(st.evaluate(f), 0.0)
                      / (1.0 + in_n.future_norm(f, 0.0) ** N) for f in futs)
        est_S = max(est_S, xi_norm / (1.0 + in_n.past_norm(pu, 0.0) ** N))
        for f in futs:
            z = st.spliced_input(f)
            est_F = max(est_F, out_n.bounding_norm(quad.system.apply(z))
                        / (1.0 + in_n.bounding_norm(z) ** N))
    assert est_S <= (2 ** N + 1) * est_F * (1.0 + 1e-9)


# -- trajectory derivative --------------------------------------------------------


def test_trajectory_derivative_constant_frozen(quad):
    g = quad.grid(DT)
    td = trajectory_derivative(quad.system, SmoothInput.constant(0.3), 0.0, g)
    v = future_probes(DT, quad.horizon, 29, count=1)[0]
    assert np.all(td(v).samples == 0.0)


def test_trajectory_fd_order(quad):
    g = quad.grid(DT)
    td = trajectory_derivative(quad.system, SmoothInput.sine(freq=0.25,
                                                             amp=0.8), 0.0, g)
    v = future_probes(DT, quad.horizon, 30, count=1)[0]
    rep = td.fd_check(v, h0=32 * DT)
    assert 0.8 <= rep["order"] <= 1.2


def test_trajectory_derivative_closed_form(quad):
    g = quad.grid(DT)
    src = SmoothInput.sine(freq=0.25, amp=0.8)
    td = trajectory_derivative(quad.system, src, 0.0, g)
    v = future_probes(DT, quad.horizon, 31, count=1)[0]
    sig = np.arange(1, v.grid.i1 + 1, 5)
    got = td(v).values_at_indices(sig)[:, 0]
    want = catalog.quadratic_state_derivative_closed_form(
        quad.system.kernels[2], src.sample(g), src.derivative_sample(g),
        v, 0.0, sig)
    assert np.max(np.abs(got - want)) <= 1e-12


def test_trajectory_derivative_integrator_ramp():
    b = catalog.system("integrator", DT)
    g = b.grid(DT)
    t_eval = 1.5
    td = trajectory_derivative(b.system, SmoothInput.ramp(0.0), t_eval, g)
    v = future_probes(DT, 2.0, 32, count=1)[0]
    vals = td(v).samples[:, 0]
    # d/dt of (accumulated input + future integral) is the input level t.
    assert np.max(np.abs(vals - t_eval)) <= 1e-9


def test_trajectory_refusals(quad):
    tv = catalog.system("quadratic-volterra-tv", DT)
    rep = trajectory_derivative(tv.system, SmoothInput.sine(), 0.0,
                                tv.grid(DT))
    assert rep["refused"]
    assert rep["reason_code"] == "time_varying_needs_trajectory_generator"
    rep2 = trajectory_derivative(quad.system, SmoothInput.boxcar(), 0.0,
                                 quad.grid(DT))
    assert rep2["refused"] and rep2["reason_code"] == "jump_discontinuity"
