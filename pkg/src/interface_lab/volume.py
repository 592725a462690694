"""Volume grids, quadrature and a spectral Poisson solver on either side of a curve.

Both sides are pulled back to the unit disk.  The interior is charted by the
harmonic extension ``F`` of the boundary parametrization,

    F(xi) = sum_{m >= 0} c_m xi^m + sum_{m < 0} c_m conj(xi)^{|m|},

which equals ``z(theta)`` on ``|xi| = 1`` and is a diffeomorphism whenever its
Jacobian ``|F_xi|^2 - |F_xibar|^2`` stays positive (checked on construction).
The exterior is first inverted, ``w = 1/(x - c)``, which maps the exterior to
the bounded interior of the curve ``1/(z(-theta) - c)``; that curve is charted
the same way.  The centre ``c`` is chosen so that infinity lands exactly on
``xi = 0``, where the polar grid represents angular dependence exactly.

The Poisson solve uses a Chebyshev (double-covered diameters) x Fourier grid
in polar coordinates on the disk.  In the exterior the inverted problem is
``-Lap_w u = g / |w|^4``, so sources must decay like ``|x|^-4`` or faster.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .curve import ClosedCurve, trig_interpolate
from .errors import ContractError, GeometryError, TruncationError
from .layers import as_complex_points, side_sign


def cheb(N):
    """Chebyshev points ``cos(pi j/N)`` and the differentiation matrix."""
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    c = np.where((j == 0) | (j == N), 2.0, 1.0) * (-1.0) ** j
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (X + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def _inversion_centre(curve):
    """Point ``c`` inside the curve with ``mean_alpha 1/(z - c) = 0``.

    The mean is analytic in ``c`` and vanishes identically for a circle, so
    Newton's method is stopped as soon as the residual is at round-off.
    """
    z = curve.nodes
    c = curve.centroid
    scale = np.mean(1 / np.abs(z - c))
    for _ in range(60):
        G = np.mean(1 / (z - c))
        if abs(G) < 1e-14 * scale:
            return c
        step = G / np.mean(1 / (z - c) ** 2)
        # damp steps that would leave a neighbourhood of the centroid
        limit = 0.25 * np.min(np.abs(z - c))
        if abs(step) > limit:
            step *= limit / abs(step)
        c = c - step
    if abs(np.mean(1 / (z - c))) > 1e-10 * scale:
        raise GeometryError("could not place the inversion centre")
    return c


class DiskChart:
    """Map from the unit disk onto one side of ``curve``.

    ``physical(xi)`` returns points ``x`` (complex).  For the exterior the
    chart goes through the computational plane ``w`` with ``x = c + 1/w``.
    """

    def __init__(self, curve: ClosedCurve, side, n_modes=None):
        self.curve = curve
        self.side = side_sign(side)
        if self.side > 0:
            self.centre = 0j
            boundary = curve.nodes
        else:
            # the inverted curve has slower spectral decay, so sample it finely
            fine = curve if curve.n >= 512 else curve.with_nodes(max(4 * curve.n, 512))
            self.centre = _inversion_centre(fine)
            # w(theta) = 1/(z(-theta) - c): counter-clockwise again after the flip
            flipped = np.roll(fine.nodes[::-1], 1)
            boundary = 1.0 / (flipped - self.centre)
        n = boundary.size
        c = np.fft.fft(boundary) / n
        k = np.fft.fftfreq(n, 1.0 / n).astype(int)
        if n % 2 == 0:
            c[n // 2] = 0.0
        floor = 1e-17 * np.max(np.abs(c))
        # coefficient arrays indexed by |m|, trimmed where the spectrum has decayed
        self._a = self._trim(np.array([c[m] for m in range(n // 2)]), floor)
        self._b = self._trim(np.array([0j] + [c[-m] for m in range(1, n // 2)]), floor)
        self._check_jacobian()

    @staticmethod
    def _trim(coef, floor):
        big = np.nonzero(np.abs(coef) > floor)[0]
        return coef[: big[-1] + 1] if big.size else coef[:1] * 0

    @staticmethod
    def _horner(coef, x):
        out = np.zeros_like(x)
        for cm in coef[::-1]:
            out = out * x + cm
        return out

    # the harmonic map and its complex derivatives -----------------------

    def w(self, xi):
        xi = np.asarray(xi, dtype=complex)
        return self._horner(self._a, xi) + self._horner(self._b, np.conj(xi))

    def w_xi(self, xi):
        xi = np.asarray(xi, dtype=complex)
        m = np.arange(self._a.size)
        return self._horner((m * self._a)[1:], xi)

    def w_xibar(self, xi):
        xi = np.asarray(xi, dtype=complex)
        m = np.arange(self._b.size)
        return self._horner((m * self._b)[1:], np.conj(xi))

    def jacobian_det(self, xi):
        """Determinant of ``d w / d xi`` (computational plane)."""
        return np.abs(self.w_xi(xi)) ** 2 - np.abs(self.w_xibar(xi)) ** 2

    def _check_jacobian(self):
        r = np.linspace(0, 1, 41)
        t = np.linspace(0, 2 * np.pi, 257)[:-1]
        xi = np.outer(r, np.exp(1j * t))
        det = self.jacobian_det(xi)
        if np.min(det) <= 1e-10 * np.max(np.abs(det)):
            raise GeometryError("harmonic disk chart is not injective for this curve")

    # computational plane -> physical plane -----------------------------

    def physical(self, w):
        if self.side > 0:
            return w
        return self.centre + 1.0 / w

    def computational(self, x):
        x = np.asarray(x, dtype=complex)
        if self.side > 0:
            return x
        return 1.0 / (x - self.centre)

    def dX(self, w):
        """Complex derivative of the conformal map ``w -> x``."""
        return np.ones_like(w) if self.side > 0 else -1.0 / w**2

    def ddX(self, w):
        return np.zeros_like(w) if self.side > 0 else 2.0 / w**3

    def to_disk(self, x, tol=1e-13, maxit=50):
        """Invert the chart by Newton's method (returns ``xi``)."""
        wt = self.computational(as_complex_points(x)).ravel()
        # start from the nearest point of a coarse polar lattice
        r = np.linspace(0.05, 0.95, 10)
        t = np.linspace(0, 2 * np.pi, 49)[:-1]
        lat = np.outer(r, np.exp(1j * t)).ravel()
        wl = self.w(lat)
        xi = lat[np.argmin(np.abs(wt[:, None] - wl[None, :]), axis=1)]
        for _ in range(maxit):
            res = self.w(xi) - wt
            a, b = self.w_xi(xi), self.w_xibar(xi)
            # solve a d + b conj(d) = -res for complex d
            det = np.abs(a) ** 2 - np.abs(b) ** 2
            d = (-res * np.conj(a) + np.conj(res) * b) / det
            xi = xi + d
            big = np.abs(xi) > 1
            xi[big] = xi[big] / np.abs(xi[big])
            if np.max(np.abs(d)) < tol:
                break
        return xi.reshape(np.shape(as_complex_points(x)))


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class VolumeQuadrature:
    """Gauss-Legendre (radius) x trapezoid (angle) rule on one side of a curve."""

    chart: DiskChart
    n_radial: int = 40
    n_angular: int = 128

    @cached_property
    def _grid(self):
        g, wg = np.polynomial.legendre.leggauss(self.n_radial)
        r = 0.5 * (g + 1)
        wr = 0.5 * wg
        t = 2 * np.pi * np.arange(self.n_angular) / self.n_angular
        xi = np.outer(r, np.exp(1j * t))
        det = self.chart.jacobian_det(xi)
        w = self.chart.w(xi)
        scale = np.abs(self.chart.dX(w)) ** 2
        weights = np.outer(r * wr, np.full(t.size, 2 * np.pi / t.size)) * det * scale
        return self.chart.physical(w), weights

    @property
    def points(self):
        return self._grid[0]

    @property
    def weights(self):
        return self._grid[1]

    def integrate(self, values):
        return float(np.sum(np.asarray(values) * self.weights))


def quadrature(curve, side, n_radial=40, n_angular=128):
    return VolumeQuadrature(DiskChart(curve, side), n_radial, n_angular)


# ---------------------------------------------------------------------------
# Poisson solver


class PoissonSolver:
    """Dense spectral solver for ``-Lap u = g`` in one side, ``u = 0`` on the curve."""

    _instances: dict = {}

    def __init__(self, chart: DiskChart, n_cheb=47, n_theta=64):
        if n_cheb % 2 == 0 or n_theta % 2:
            raise ContractError("n_cheb must be odd and n_theta even")
        self.chart = chart
        self.N, self.M = n_cheb, n_theta
        x, D = cheb(n_cheb)
        half = (n_cheb + 1) // 2  # rings r = x_0 .. x_{half-1}, all positive
        self.r = x[:half]
        self.theta = 2 * np.pi * np.arange(n_theta) / n_theta
        self._cheb_x = x
        M = n_theta
        # fold the full-diameter differentiation onto (r > 0, theta) unknowns
        shift = np.roll(np.eye(M), M // 2, axis=1)  # u(theta + pi)
        Dpos = D[:half, :half]
        Dneg = D[:half, half:][:, ::-1]  # columns for -r_i, ordered like r
        k = np.fft.fftfreq(M, 1.0 / M)
        k[M // 2] = 0
        Dt = np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(M), axis=0), axis=0))
        I = np.eye(M)
        Dr = np.kron(Dpos, I) + np.kron(Dneg, shift)
        Dth = np.kron(np.eye(half), Dt)
        R = np.repeat(self.r, M)
        T = np.tile(self.theta, half)
        c, s = np.cos(T), np.sin(T)
        D1 = c[:, None] * Dr - (s / R)[:, None] * Dth
        D2 = s[:, None] * Dr + (c / R)[:, None] * Dth
        xi = R * np.exp(1j * T)
        self.xi = xi
        self.w = chart.w(xi)
        a, b = chart.w_xi(xi), chart.w_xibar(xi)
        # rows of the real Jacobian dw/dxi: columns are dw/dxi1, dw/dxi2
        J11, J21 = (a + b).real, (a + b).imag
        J12, J22 = (1j * (a - b)).real, (1j * (a - b)).imag
        det = J11 * J22 - J12 * J21
        # grad_w = J^{-T} grad_xi
        self.Dw1 = (J22 / det)[:, None] * D1 - (J21 / det)[:, None] * D2
        self.Dw2 = (-J12 / det)[:, None] * D1 + (J11 / det)[:, None] * D2
        L = self.Dw1 @ self.Dw1 + self.Dw2 @ self.Dw2
        self.boundary = np.arange(M)  # ring r = 1
        A = -L
        # squaring first-derivative matrices leaves the angular Nyquist mode
        # unpenalized; give it its true -d^2/dtheta^2 / r^2 weight
        p = (-1.0) ** np.arange(M)
        A += np.kron(np.eye(half), np.outer(p, p) / M) * ((M // 2) ** 2 / R**2)[:, None]
        A[self.boundary] = 0.0
        A[self.boundary, self.boundary] = 1.0
        scale = 1.0 / np.max(np.abs(A), axis=1)
        self._row_scale = scale
        self._lu = sla.lu_factor(scale[:, None] * A, check_finite=False)
        self.shape = (half, M)

    @classmethod
    def for_curve(cls, curve, side, n_cheb=47, n_theta=64):
        key = (curve.key, side_sign(side), n_cheb, n_theta)
        inst = cls._instances.get(key)
        if inst is None:
            if len(cls._instances) > 8:
                cls._instances.clear()
            inst = cls(DiskChart(curve, side), n_cheb, n_theta)
            cls._instances[key] = inst
        return inst

    @property
    def points(self):
        """Physical grid points (flattened, ring-major)."""
        return self.chart.physical(self.w)

    def solve(self, source):
        """``source`` is a callable of complex points or samples on :attr:`points`."""
        x = self.points
        g = source(x) if callable(source) else np.asarray(source, dtype=float)
        g = np.asarray(g, dtype=float).ravel()
        gw = g * np.abs(self.chart.dX(self.w)) ** 2
        if self.chart.side < 0:
            self._check_decay(gw)
        rhs = gw.copy()
        rhs[self.boundary] = 0.0
        u = sla.lu_solve(self._lu, self._row_scale * rhs, check_finite=False)
        return PoissonSolution(self, u, g)

    def _check_decay(self, gw):
        ring = np.abs(gw.reshape(self.shape))
        inner, nxt = ring[-1].max(), ring[-2].max()
        peak = ring.max()
        if peak > 0 and inner > 1e-8 * peak and inner > 1.5 * nxt:
            raise TruncationError(
                "exterior source decays too slowly (needs |x|^-4); "
                f"inverted source grows toward infinity ({inner:.3e} vs {nxt:.3e})"
            )


class PoissonSolution:
    """Solution of ``-Lap u = g``, ``u = 0`` on the curve, with derivative evaluators."""

    def __init__(self, solver: PoissonSolver, u, source):
        self.solver = solver
        self.u = u
        self.source = source
        self.side = solver.chart.side

    @cached_property
    def _grid_fields(self):
        s, ch = self.solver, self.solver.chart
        u = self.u
        uw1, uw2 = s.Dw1 @ u, s.Dw2 @ u
        u11, u12, u22 = s.Dw1 @ uw1, s.Dw1 @ uw2, s.Dw2 @ uw2
        dw = uw1 - 1j * uw2  # 2 d_w u
        ddw = u11 - u22 - 2j * u12  # 4 d_w d_w u
        lap_w = u11 + u22
        Xp, Xpp = ch.dX(s.w), ch.ddX(s.w)
        dx = dw / Xp  # 2 d_x u
        ddx = (ddw / Xp - dw * Xpp / Xp**2) / Xp  # 4 d_x d_x u
        lap_x = lap_w / np.abs(Xp) ** 2
        gx = np.conj(dx)
        hxx = 0.5 * ddx.real + 0.5 * lap_x
        hyy = -0.5 * ddx.real + 0.5 * lap_x
        hxy = -0.5 * ddx.imag
        return {"u": u, "gx": gx.real, "gy": gx.imag, "hxx": hxx, "hxy": hxy, "hyy": hyy}

    def grid_field(self, name):
        return self._grid_fields[name]

    @property
    def value_at_infinity(self):
        """Limit of ``u`` at infinity (exterior) obtained by interpolation to ``xi = 0``."""
        if self.side > 0:
            raise ContractError("only the exterior solution has a value at infinity")
        return float(self._interp_disk(self.u, np.array([0j]))[0])

    def normal_derivative(self):
        """``du/dN_side`` at the curve nodes."""
        s, curve = self.solver, self.solver.chart.curve
        gx = self._grid_fields["gx"][s.boundary] + 1j * self._grid_fields["gy"][s.boundary]
        if self.side > 0:
            alpha = curve.alpha
        else:
            alpha = (-curve.alpha) % (2 * np.pi)
        gb = trig_interpolate(gx.real, alpha) + 1j * trig_interpolate(gx.imag, alpha)
        nrm = curve.normal * self.side
        return (np.conj(nrm) * gb).real

    def _interp_disk(self, field, xi):
        s = self.solver
        half, M = s.shape
        F = np.asarray(field, dtype=float).reshape(half, M)
        xi = np.asarray(xi, dtype=complex).ravel()
        r, th = np.abs(xi), np.angle(xi)
        c = np.fft.fft(F, axis=1) / M
        k = np.fft.fftfreq(M, 1.0 / M)
        c[:, M // 2] *= 0.5
        kk = np.concatenate([k, [M // 2]])
        cc = np.concatenate([c, c[:, M // 2 : M // 2 + 1]], axis=1)
        E = np.exp(1j * np.outer(th, kk))  # (P, M+1)
        along = (E @ cc.T).real  # values at angle th on each ring (P, half)
        sign = (-1.0) ** kk
        opposite = ((E * sign) @ cc.T).real  # at th + pi
        # full diameter values ordered like the Chebyshev points x_0..x_N
        vals = np.concatenate([along, opposite[:, ::-1]], axis=1)
        x = s._cheb_x
        N = x.size - 1
        bw = (-1.0) ** np.arange(N + 1)
        bw[0] *= 0.5
        bw[-1] *= 0.5
        diff = r[:, None] - x[None, :]
        exact = np.abs(diff) < 1e-15
        diff[exact] = 1.0
        q = bw[None, :] / diff
        out = np.sum(q * vals, axis=1) / np.sum(q, axis=1)
        rows = exact.any(axis=1)
        if rows.any():
            out[rows] = vals[rows, np.argmax(exact[rows], axis=1)]
        return out

    def _eval(self, name, points):
        x = as_complex_points(points)
        xi = self.solver.chart.to_disk(x)
        return self._interp_disk(self._grid_fields[name], xi.ravel()).reshape(x.shape)

    def value(self, points):
        return self._eval("u", points)

    def gradient(self, points):
        return np.stack([self._eval("gx", points), self._eval("gy", points)], axis=-1)

    def hessian(self, points):
        hxx, hxy, hyy = (self._eval(k, points) for k in ("hxx", "hxy", "hyy"))
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    def laplacian(self, points):
        return self._eval("hxx", points) + self._eval("hyy", points)
