import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interface_lab import curve as cv
from interface_lab.errors import ContractError
from interface_lab.linearized import (
    A_form,
    LinearizedSymbol,
    R0_form,
    apply_A,
    apply_R0,
    dispersion,
    evolver_eigenvalues,
    growth_rate,
    threshold_mode,
)
from interface_lab.tangent import volume_inner
from interface_lab.velocity import HarmonicVelocity


def _tangent(curve, seed, k=4):
    rng = np.random.default_rng(seed)
    return HarmonicVelocity.from_normal_trace(
        curve, curve.project_mean_zero(cv.random_smooth_field(curve, rng, k)))


@pytest.mark.parametrize("R,m", [(1.0, 2), (2.0, 3), (0.5, 5)])
def test_A_form_on_circle_mode(R, m):
    c = cv.circle(R, 64)
    w = HarmonicVelocity.from_normal_trace(c, np.cos(m * c.alpha))
    assert A_form(c, w) == pytest.approx(np.pi * m * m / R, rel=1e-12)


def test_A_pairing_matches_form():
    c = cv.ellipse(1.3, 1.0, 64)
    w = _tangent(c, 1)
    got = volume_inner(c, apply_A(c, w, 1.0, 2.0).as_velocity(), w, 1.0, 2.0)
    assert got == pytest.approx(A_form(c, w), rel=1e-6)


def test_R0_pairing_matches_form_and_is_nonnegative():
    c = cv.perturbed_circle(1.0, 0.1, 3, 64)
    v = HarmonicVelocity.from_sheet(c, 0.7 + 0.2 * np.cos(c.alpha))
    w = _tangent(c, 2)
    form = R0_form(c, v, w, 1.0, 1.5)
    got = -volume_inner(c, apply_R0(c, v, w, 1.0, 1.5).as_velocity(), w, 1.0, 1.5)
    assert form >= 0
    assert got == pytest.approx(form, rel=1e-6)


def test_R0_vanishes_without_shear():
    c = cv.circle(1.0, 64)
    assert R0_form(c, HarmonicVelocity.zero(c), _tangent(c, 3), 1.0, 1.0) == 0.0


def test_symbol_orders():
    s = LinearizedSymbol(1.0, 2.0, 1.5)
    m = np.arange(1, 30)
    assert np.allclose(s.a(2 * m) / s.a(m), 8.0)
    assert np.allclose(s.r(2 * m) / s.r(m), 4.0)
    assert s.shear_strength == pytest.approx(2 * 1.5**2 / 3)
    with pytest.raises(ContractError):
        LinearizedSymbol(0.0, 1.0, 1.0)


@pytest.mark.parametrize("R,m", [(1.0, 2), (1.5, 4), (5.0, 7)])
def test_still_circle_is_neutral(R, m):
    rp, rm = 1.0, 2.0
    lam = dispersion(rp, rm, 0.0, m, radius=R)
    w2 = m * (m * m - 1) / (R**3 * (rp + rm))
    assert all(abs(l.real) < 1e-14 for l in lam)
    assert sorted(abs(l.imag) for l in lam) == pytest.approx([np.sqrt(w2)] * 2, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(rp=st.floats(0.1, 10), rm=st.floats(0.1, 10), dU=st.floats(0, 5), m=st.integers(1, 40))
def test_flat_growth_squared_is_symbol_gap(rp, rm, dU, m):
    s = LinearizedSymbol(rp, rm, dU, geometry="flat")
    g = growth_rate(rp, rm, dU, m, geometry="flat")
    assert g**2 == pytest.approx(max(0.0, s.r(m) - s.a(m)), rel=1e-8, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(rp=st.floats(0.2, 5), rm=st.floats(0.2, 5), dU=st.floats(0.5, 4), R=st.floats(0.5, 3))
def test_threshold_separates_growing_modes(rp, rm, dU, R):
    mstar = threshold_mode(rp, rm, dU, radius=R)
    for m in range(1, 60):
        g = growth_rate(rp, rm, dU, m, radius=R)
        if m > mstar + 1e-9:
            assert g < 1e-9 * (1 + abs(dU) / R)


def test_kelvin_helmholtz_unstable_band():
    assert growth_rate(1.0, 1.0, 4.0, 4, radius=1.0) > 0
    assert growth_rate(1.0, 1.0, 4.0, 12, radius=1.0) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("dU,m", [(0.0, 3), (1.0, 2), (2.0, 5)])
def test_evolver_linearization_agrees(dU, m):
    rp, rm, R = 1.0, 1.5, 2.0
    ev = evolver_eigenvalues(rp, rm, dU, m, radius=R, n=64)
    lam = dispersion(rp, rm, dU, m, radius=R)
    expect = list(lam) + [np.conj(l) for l in lam]
    for e in expect:
        assert np.min(np.abs(ev - e)) < 1e-5 * max(1.0, abs(e))
