import numpy as np
import pytest

from interface_lab import curve as cv
from interface_lab.tangent import (
    curvature_form,
    duality_pairing,
    representing_potential,
    project_to_tangent,
    second_fundamental_pressure,
    sprime_pressure,
    volume_inner,
)
from interface_lab.velocity import HarmonicVelocity

IN = np.array([0.2 + 0.1j, -0.4j, 0.5 - 0.2j])
OUT = np.array([2.0 + 1.0j, -3.0 + 0.5j, 1.7j])


def _harmonic_tangent(curve, seed, k=4):
    rng = np.random.default_rng(seed)
    g = curve.project_mean_zero(cv.random_smooth_field(curve, rng, k))
    return HarmonicVelocity.from_normal_trace(curve, g)


def test_projection_of_manufactured_field(make_field):
    c = cv.ellipse(1.3, 1.0, 64)
    X = make_field(c, 0)
    w, psi = project_to_tangent(c, X, 1.0, 2.5)
    assert np.max(np.abs(w.divergence(IN, +1))) < 1e-8
    assert np.max(np.abs(w.divergence(OUT, -1))) < 1e-8
    assert np.max(np.abs(w.normal_trace(+1) + w.normal_trace(-1))) < 1e-8
    assert np.max(np.abs(1.0 * psi.boundary_trace(+1) - 2.5 * psi.boundary_trace(-1))) < 1e-8
    g = psi.as_velocity()
    cross = volume_inner(c, g, w, 1.0, 2.5)
    assert abs(cross) < 1e-6 * np.sqrt(volume_inner(c, g, g, 1.0, 2.5) * volume_inner(c, w, w, 1.0, 2.5))


def test_projection_keeps_tangent_fields():
    c = cv.perturbed_circle(1.0, 0.1, 3, 96)
    v = _harmonic_tangent(c, 1)
    w, psi = project_to_tangent(c, v, 1.0, 1.0)
    assert c.l2_norm(psi.surface) < 1e-8 * c.l2_norm(v.normal_trace(+1))
    assert np.max(np.abs(w.trace(+1) - v.trace(+1))) < 1e-8


def test_projection_removes_normal_fields():
    # X = grad phi with rho+ phi+ = rho- phi- on S is orthogonal to every tangent field
    c = cv.ellipse(1.2, 1.0, 96)
    rp, rm = 2.0, 0.5
    f = np.cos(2 * c.alpha) + 0.3 * np.sin(c.alpha)
    X = HarmonicVelocity.from_potentials(c, f / rp, f / rm)
    w, _ = project_to_tangent(c, X, rp, rm)
    assert np.max(np.abs(w.trace(+1))) < 1e-8
    assert np.max(np.abs(w.trace(-1))) < 1e-8


def test_second_fundamental_pressure_symmetric_and_linear():
    c = cv.ellipse(1.3, 1.0, 64)
    v, w = _harmonic_tangent(c, 2), _harmonic_tangent(c, 3)
    a = second_fundamental_pressure(c, v, w, 1.0, 3.0).surface
    b = second_fundamental_pressure(c, w, v, 1.0, 3.0).surface
    assert c.l2_norm(a - b) < 1e-6 * c.l2_norm(a)
    z = second_fundamental_pressure(c, v, HarmonicVelocity.zero(c), 1.0, 3.0).surface
    assert np.max(np.abs(z)) < 1e-14


def test_pressure_duality_two_ways():
    c = cv.perturbed_circle(1.0, 0.1, 2, 64)
    v, w = _harmonic_tangent(c, 4), _harmonic_tangent(c, 5)
    rng = np.random.default_rng(9)
    g = c.project_mean_zero(cv.random_smooth_field(c, rng, 5))
    p = second_fundamental_pressure(c, v, w, 1.5, 1.0)
    lhs = c.integrate(g * p.surface)
    rhs = duality_pairing(c, v, w, g, 1.5, 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_sprime_duality_circle_mode():
    R, m = 1.2, 3
    c = cv.circle(R, 64)
    w = HarmonicVelocity.from_normal_trace(c, np.cos(m * c.alpha))
    # kappa is constant on a circle, so the pairing with a mean-zero trace vanishes
    got = volume_inner(c, sprime_pressure(c, 1.0, 2.0).as_velocity(), w, 1.0, 2.0)
    assert abs(got) < 1e-10


def test_sprime_duality_perturbed():
    c = cv.perturbed_circle(1.0, 0.12, 3, 96)
    w = _harmonic_tangent(c, 6)
    got = volume_inner(c, sprime_pressure(c, 1.0, 2.0).as_velocity(), w, 1.0, 2.0)
    assert got == pytest.approx(c.integrate(c.curvature * w.normal_trace(+1)), rel=1e-6)


def test_representing_potential_represents_functional():
    c = cv.ellipse(1.4, 1.0, 64)
    f0 = np.sin(2 * c.alpha) + 0.2
    w = _harmonic_tangent(c, 7)
    got = volume_inner(c, representing_potential(c, f0, 1.0, 0.7).as_velocity(), w, 1.0, 0.7)
    assert got == pytest.approx(c.integrate(f0 * w.normal_trace(+1)), rel=1e-6)


@pytest.mark.slow
def test_curvature_form_vanishes_on_diagonal():
    c = cv.ellipse(1.2, 1.0, 48)
    v = _harmonic_tangent(c, 8, k=3)
    assert abs(curvature_form(c, v, v, 1.0, 1.0, n_radial=24, n_angular=64)) < 1e-8
