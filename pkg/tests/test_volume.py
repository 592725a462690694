import numpy as np
import pytest

from interface_lab import curve as cv
from interface_lab.errors import TruncationError
from interface_lab.volume import DiskChart, PoissonSolver, quadrature


@pytest.mark.parametrize("side", [+1, -1])
def test_chart_maps_boundary_onto_curve(side):
    c = cv.ellipse(1.5, 1.0, 64)
    ch = DiskChart(c, side)
    xi = np.exp(1j * np.linspace(0, 2 * np.pi, 50, endpoint=False))
    x = ch.physical(ch.w(xi))
    assert np.max(np.abs(x.real**2 / 1.5**2 + x.imag**2 - 1)) < 1e-10


@pytest.mark.parametrize("side", [+1, -1])
def test_chart_round_trip(side):
    c = cv.perturbed_circle(1.0, 0.1, 3, 64)
    ch = DiskChart(c, side)
    xi = 0.6 * np.exp(1j * np.array([0.3, 2.0, 4.1]))
    assert np.max(np.abs(ch.to_disk(ch.physical(ch.w(xi))) - xi)) < 1e-10


def test_interior_area_quadrature():
    c = cv.ellipse(2.0, 1.0, 64)
    Q = quadrature(c, +1)
    assert Q.integrate(np.ones(Q.points.shape)) == pytest.approx(2 * np.pi, rel=1e-12)
    # second moment of the ellipse: pi a^3 b / 4
    assert Q.integrate(Q.points.real**2) == pytest.approx(np.pi * 8 / 4, rel=1e-11)


def test_exterior_quadrature_of_decaying_integrand():
    R = 1.3
    c = cv.circle(R, 64)
    Q = quadrature(c, -1)
    f = lambda z: 1 / np.abs(z) ** 4
    # int_{|x|>R} r^-4 dx = 2 pi / (2 R^2)
    assert Q.integrate(f(Q.points)) == pytest.approx(np.pi / R**2, rel=1e-12)


def test_interior_poisson_manufactured():
    c = cv.ellipse(1.4, 0.9, 64)
    a, b = 1.4, 0.9
    # u = 1 - x^2/a^2 - y^2/b^2 vanishes on the ellipse
    u = lambda z: 1 - z.real**2 / a**2 - z.imag**2 / b**2
    g = lambda z: (2 / a**2 + 2 / b**2) * np.ones(np.shape(z))
    sol = PoissonSolver.for_curve(c, +1).solve(g)
    p = np.array([0.2 + 0.1j, -0.7 + 0.3j, 0.5j])
    assert np.max(np.abs(sol.value(p) - u(p))) < 1e-10
    gr = sol.gradient(p)
    assert np.max(np.abs(gr[..., 0] + 2 * p.real / a**2)) < 1e-9


def test_exterior_poisson_circle():
    R = 1.0
    c = cv.circle(R, 64)
    # u = r^-2 - r^-4 vanishes on r = 1 and Lap u = 4 r^-4 - 16 r^-6
    u = lambda z: 1 / np.abs(z) ** 2 - 1 / np.abs(z) ** 4
    g = lambda z: -(4 / np.abs(z) ** 4 - 16 / np.abs(z) ** 6)
    sol = PoissonSolver.for_curve(c, -1).solve(g)
    p = np.array([1.5 + 0j, -2.0 + 1.0j, 4j])
    assert np.max(np.abs(sol.value(p) - u(p))) < 1e-10
    assert abs(sol.value_at_infinity) < 1e-10


def test_exterior_poisson_rejects_slow_decay():
    c = cv.circle(1.0, 32)
    with pytest.raises(TruncationError):
        PoissonSolver.for_curve(c, -1).solve(lambda z: 1 / np.abs(z) ** 2)
