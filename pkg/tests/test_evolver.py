import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interface_lab import curve as cv
from interface_lab.errors import CFLError, ContractError, EnergyBoundExceeded
from interface_lab.evolver import (
    RunConfig,
    SheetState,
    cfl_limit,
    dealias,
    equalize,
    euler_residual,
    evolve,
    initial_state,
    rhs,
    run,
    step,
)


def _state(eps=0.05, n=64, rp=1.0, rm=2.0):
    c = cv.perturbed_circle(1.0, eps, 3, n).reparametrize_by_arclength()
    return SheetState.from_gamma(c, 0.3 * np.cos(2 * c.alpha), rp, rm)


@pytest.mark.parametrize("gamma0", [0.0, 0.7])
def test_uniform_sheet_on_circle_is_steady(gamma0):
    c = cv.circle(1.0, 64)
    s = SheetState.from_gamma(c, np.full(64, gamma0), 1.0, 2.0)
    zt, pt = rhs(s)
    assert np.max(np.abs(zt)) < 1e-12
    assert np.max(np.abs(pt - pt.mean())) < 1e-12
    dt = 0.9 * cfl_limit(c, 1.0, 2.0)
    for _ in range(100):
        s = step(s, dt)
    assert np.max(np.abs(s.curve.nodes - c.nodes)) < 1e-11
    assert np.max(np.abs(s.gamma - gamma0)) < 1e-10


def test_gamma_round_trip():
    c = cv.ellipse(1.3, 1.0, 64)
    g = 0.2 + 0.5 * np.sin(2 * c.alpha)
    s = SheetState.from_gamma(c, g, 1.0, 3.0)
    assert np.max(np.abs(s.gamma - g)) < 1e-10
    assert s.circulation == pytest.approx(c.integrate(g), rel=1e-12)


def test_equal_density_gamma():
    c = cv.ellipse(1.3, 1.0, 64)
    g = 0.5 * np.cos(3 * c.alpha)
    s = SheetState.from_gamma(c, g, 1.5, 1.5)
    assert np.max(np.abs(s.gamma - g)) < 1e-10


def test_step_rejects_large_dt():
    s = _state()
    lim = cfl_limit(s.curve, s.rho_plus, s.rho_minus)
    with pytest.raises(CFLError) as err:
        step(s, 1.01 * lim)
    assert err.value.suggested_dt == pytest.approx(lim)
    step(s, -0.9 * lim)  # backward steps obey the same bound


def test_conservation_short_run():
    s = _state()
    e0 = s.energy0()
    dt = 0.9 * cfl_limit(s.curve, s.rho_plus, s.rho_minus)
    s = evolve(s, dt, 40 * dt)
    assert abs(s.energy0() - e0) < 1e-8 * e0
    assert abs(s.area_drift()) < 1e-9


def test_euler_residual_converges():
    s = _state()
    probes = {+1: np.array([0.1 + 0.2j, -0.3j]), -1: np.array([2.0 + 0.5j, -1.5 - 1.0j])}
    for side, p in probes.items():
        r = [np.max(np.abs(euler_residual(s, dt, p, side))) for dt in (0.008, 0.004)]
        assert r[1] < 1e-9
        assert r[0] / r[1] > 2**3


def test_equalize_keeps_shape_and_sheet():
    c = cv.ellipse(1.5, 1.0, 64)
    s = SheetState.from_gamma(c, 0.3 + np.cos(c.alpha), 1.0, 2.0)
    e = equalize(s)
    sp = np.abs(e.curve.dz)
    assert np.max(sp) - np.min(sp) < 1e-6 * np.mean(sp)
    assert e.curve.length == pytest.approx(c.length, rel=1e-12)
    assert e.circulation == pytest.approx(s.circulation)
    p = np.array([0.2 + 0.1j, 2.5 + 0j])
    for side, q in ((+1, p[:1]), (-1, p[1:])):
        assert np.max(np.abs(e.velocity().value(q, side) - s.velocity().value(q, side))) < 1e-8


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.sampled_from([16, 32, 64]))
def test_dealias_is_a_projection(seed, n):
    f = np.random.default_rng(seed).normal(size=n)
    g = dealias(f)
    assert np.allclose(dealias(g), g, atol=1e-13)
    assert np.mean(g) == pytest.approx(np.mean(f), abs=1e-13)


def test_initial_state_presets():
    s = initial_state(RunConfig(initial_curve="ellipse:1.5,1.0", initial_gamma="uniform:0.4"))
    assert s.curve.length == pytest.approx(cv.ellipse(1.5, 1.0, 256).length, rel=1e-10)
    with pytest.raises(ContractError):
        initial_state(RunConfig(initial_gamma="bogus:1"))


def test_run_reports_and_bound():
    cfg = RunConfig(rho_plus=1.0, rho_minus=1.0, n_nodes=32, dt=0.01, t_end=0.1,
                    amplitude=0.02, mode=3, initial_gamma="mode:2,0.2", report_every=5)
    recs, final = run(cfg)
    assert [r.time for r in recs] == pytest.approx([0.0, 0.05, 0.1])
    assert final.time == pytest.approx(0.1)
    assert abs(recs[-1].E0 - recs[0].E0) < 1e-8


def test_run_stops_on_kelvin_helmholtz_growth():
    # dU = 4 on the unit circle with equal densities: mode 4 is the only growing mode
    cfg = RunConfig(rho_plus=1.0, rho_minus=1.0, n_nodes=64, dt=0.01, t_end=20.0,
                    amplitude=1e-3, mode=4, initial_gamma="uniform:4", report_every=10,
                    energy_cal=1.0)
    with pytest.raises(EnergyBoundExceeded):
        run(cfg)
