import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from interface_lab import curve as cv
from interface_lab.energy import (
    Calibration,
    EnergyReport,
    boundary_form,
    check_energy_bound,
    curl_evolution_residual,
    energy_E,
    energy_E0,
    write_reports,
)
from interface_lab.errors import ContractError, EnergyBoundExceeded
from interface_lab.velocity import HarmonicVelocity

X, Y, T = sp.symbols("x y t")


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_E0_of_still_circle_is_perimeter(R):
    c = cv.circle(R, 64)
    assert energy_E0(c, HarmonicVelocity.zero(c), 1.0, 1.0) == pytest.approx(2 * np.pi * R, rel=1e-13)


def test_E0_of_still_ellipse():
    a, b = 2.0, 1.0
    c = cv.ellipse(a, b, 128)
    L = quad(lambda t: np.hypot(a * np.sin(t), b * np.cos(t)), 0, 2 * np.pi,
             epsabs=0, epsrel=1e-13, limit=200)[0]
    assert energy_E0(c, HarmonicVelocity.zero(c), 1.0, 3.0) == pytest.approx(L, rel=1e-12)


@pytest.mark.parametrize("m", [1, 2, 4])
def test_E0_circle_mode_closed_form(m):
    # normal trace cos(m a) on radius R: each side stores pi R^2 / m
    R, rp, rm = 1.3, 1.0, 2.5
    c = cv.circle(R, 64)
    v = HarmonicVelocity.from_normal_trace(c, np.cos(m * c.alpha))
    expect = 0.5 * (rp + rm) * np.pi * R**2 / m + 2 * np.pi * R
    assert energy_E0(c, v, rp, rm) == pytest.approx(expect, rel=1e-10)


@pytest.mark.parametrize("k", [2, 3])
def test_E_A_circle_mode_closed_form(k):
    # on a circle Nbar acts on mode m as (m/R)/(rho+ + rho-) and -Lap_S as (m/R)^2
    R, m, rp, rm = 1.5, 3, 1.0, 2.0
    c = cv.circle(R, 64)
    f = np.cos(m * c.alpha)
    q = m / R
    expect = q**2 * (q**3 / (rp + rm)) ** (k - 1) * np.pi * R
    assert boundary_form(c, f, f, rp, rm, k, "A") == pytest.approx(expect, rel=1e-10)


def test_E_kappa_vanishes_on_circle():
    c = cv.circle(1.0, 64)
    rep = energy_E(c, HarmonicVelocity.zero(c), 1.0, 1.0)
    assert abs(rep.E_kappa_term) < 1e-12
    assert rep.E == pytest.approx(rep.E_A_term + rep.E_kappa_term + rep.E_omega_term)


@pytest.mark.parametrize("kind", ["A", "kappa"])
def test_boundary_forms_symmetric(kind):
    c = cv.ellipse(1.3, 1.0, 96)
    rng = np.random.default_rng(4)
    f, g = (c.project_mean_zero(cv.random_smooth_field(c, rng, 5)) for _ in range(2))
    a = boundary_form(c, f, g, 1.0, 2.0, 2, kind)
    b = boundary_form(c, g, f, 1.0, 2.0, 2, kind)
    assert a == pytest.approx(b, rel=1e-8)
    assert boundary_form(c, f, f, 1.0, 2.0, 2, kind) > 0


def test_boundary_form_rejects_bad_order():
    c = cv.circle(1.0, 32)
    with pytest.raises(ContractError):
        boundary_form(c, c.alpha, c.alpha, 1.0, 1.0, 1)


def test_energy_is_parametrization_invariant():
    c1 = cv.perturbed_circle(1.0, 0.15, 3, 128)
    c2 = c1.reparametrize_by_arclength()
    reps = []
    for c in (c1, c2):
        # rigid translation inside: normal trace N.e1
        v = HarmonicVelocity.from_normal_trace(c, c.project_mean_zero(c.normal.real))
        reps.append(energy_E(c, v, 1.0, 2.0))
    assert reps[1].E_A_term == pytest.approx(reps[0].E_A_term, rel=1e-7)
    assert reps[1].E_kappa_term == pytest.approx(reps[0].E_kappa_term, rel=1e-7)
    assert reps[1].E0 == pytest.approx(reps[0].E0, rel=1e-9)


def test_energy_scales_with_velocity():
    c = cv.ellipse(1.2, 1.0, 96)
    g = c.project_mean_zero(np.cos(2 * c.alpha))
    e1 = energy_E(c, HarmonicVelocity.from_normal_trace(c, g), 1.0, 1.0)
    e2 = energy_E(c, HarmonicVelocity.from_normal_trace(c, 2 * g), 1.0, 1.0)
    assert e2.E_A_term == pytest.approx(4 * e1.E_A_term, rel=1e-10)
    assert e2.E_kappa_term == pytest.approx(e1.E_kappa_term, rel=1e-12)


def test_write_reports_round_trip(tmp_path):
    r = EnergyReport(0.5, 6.2, 1.0, 2.0, 0.0, 2, 0.1, 0.2)
    write_reports(tmp_path / "e.csv", [r, r])
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0].split(",") == EnergyReport.header()
    assert float(lines[1].split(",")[-1]) == r.E


def test_calibration_fit_and_persist(tmp_path):
    cal = Calibration("demo").fit([1.0, 2.0, 3.0], [1.0, 1.0, 2.0])
    assert cal.C == pytest.approx(1.5 * 2.0)
    assert cal.holds([2.9], [1.0]).all()
    cal.save(tmp_path / "c.json")
    assert Calibration.load(tmp_path / "c.json") == cal
    with pytest.raises(ContractError):
        Calibration("empty").holds([1.0], [1.0])


def test_check_energy_bound():
    check_energy_bound(2.0, 1.0, 0.1)
    with pytest.raises(EnergyBoundExceeded):
        check_energy_bound(2.2, 1.0, 0.1)


def test_curl_evolution_identity():
    probes = [(0.3, -0.2, 0.0), (1.1, 0.4, 0.7)]
    rot = (-Y, X)
    assert curl_evolution_residual(rot, (X, Y, T), probes) < 1e-12
    # steady cellular flow advected with a constant drift
    U = sp.Rational(1, 2)
    xs = X - U * T
    cell = (U + sp.sin(xs) * sp.cos(Y), -sp.cos(xs) * sp.sin(Y))
    assert curl_evolution_residual(cell, (X, Y, T), probes) < 1e-12
    # time-dependent shear that is not a solution
    bad = (Y * (1 + T), X**2)
    assert curl_evolution_residual(bad, (X, Y, T), probes) > 1e-3
