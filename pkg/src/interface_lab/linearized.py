"""Leading-order linearized operators: surface tension ``A`` and shear ``R0``.

Both operators are represented by two-sided potentials built with
:func:`representing_potential`, whose gradient is the tangent vector representing
``w -> int f0 w_+^perp dS``:

* ``A w``       with ``f0 = -Lap_S w_+^perp``;
* ``R0(v) w``   with ``f0 = slip d/ds N^{-1} d/ds (w_+^perp slip)``, where
  ``slip = v_+.tau - v_-.tau``.

So ``<A w, w> = int |d/ds w_+^perp|^2`` and
``<-R0 w, w> = int |N^{-1/2} d/ds(w_+^perp slip)|^2``.

Mode analysis (interior at rest, exterior potential vortex, circle of
radius ``R``, ``Omega = dU / R``, ``lambda = -i omega``):

    (rho+ + rho-) w^2 - 2 rho- m Omega w + rho- m^2 Omega^2
        - m (m^2 - 1) / R^3 - m rho- Omega^2 = 0.

Flat interface, fluid below at rest, fluid above moving with ``dU``:

    (rho+ + rho-) w^2 - 2 rho- k dU w + rho- k^2 dU^2 - k^3 = 0.

Both were checked against finite-difference linearizations of the evolver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import ClosedCurve, circle, surface_laplacian
from .errors import ContractError
from .layers import dtn_inverse, dtn_inverse_sqrt
from .tangent import representing_potential


def apply_A(curve: ClosedCurve, w, rho_plus, rho_minus):
    return representing_potential(curve, -surface_laplacian(curve, w.normal_trace(+1)), rho_plus, rho_minus)


def A_form(curve: ClosedCurve, w):
    """``int |d/ds w_+^perp|^2 dS``."""
    d = curve.d_ds(w.normal_trace(+1))
    return curve.integrate(d * d)


def _shear_derivative(curve, v, w):
    return curve.d_ds(w.normal_trace(+1) * v.slip())


def apply_R0(curve: ClosedCurve, v, w, rho_plus, rho_minus):
    slip = v.slip()
    Q = _shear_derivative(curve, v, w)
    f0 = slip * curve.d_ds(dtn_inverse(curve, curve.project_mean_zero(Q), rho_plus, rho_minus))
    return representing_potential(curve, f0, rho_plus, rho_minus)


def R0_form(curve: ClosedCurve, v, w, rho_plus, rho_minus):
    """``int |N^{-1/2} d/ds(w_+^perp slip)|^2 dS``, i.e. ``<-R0 w, w>``."""
    Q = curve.project_mean_zero(_shear_derivative(curve, v, w))
    h = dtn_inverse_sqrt(curve, Q, rho_plus, rho_minus)
    return curve.integrate(h * h)


# ---------------------------------------------------------------------------
# symbols and dispersion


@dataclass(frozen=True)
class LinearizedSymbol:
    rho_plus: float
    rho_minus: float
    slip: float
    geometry: str = "circle"
    radius: float = 1.0

    def __post_init__(self):
        if not (self.rho_plus > 0 and self.rho_minus > 0):
            raise ContractError("densities must be positive")
        if self.geometry not in ("circle", "flat"):
            raise ContractError(f"unknown geometry {self.geometry!r}")

    @property
    def rho_sum(self):
        return self.rho_plus + self.rho_minus

    @property
    def shear_strength(self):
        """``rho+ rho- dU^2 / (rho+ + rho-)``."""
        return self.rho_plus * self.rho_minus * self.slip**2 / self.rho_sum

    def a(self, m):
        """Rayleigh quotient of ``A`` on mode ``m`` (kinetic metric)."""
        k = np.asarray(m, dtype=float) / self.radius
        return k**3 / self.rho_sum

    def r(self, m):
        """Rayleigh quotient of ``-R0`` on mode ``m``."""
        k = np.asarray(m, dtype=float) / self.radius
        return self.shear_strength * k**2 / self.rho_sum

    def leading_threshold(self):
        """Wavenumber where ``a`` overtakes ``r``."""
        return self.shear_strength


def _roots(a, b, c):
    disc = np.sqrt(complex(b * b - 4 * a * c))
    return (-b + disc) / (2 * a), (-b - disc) / (2 * a)


def dispersion(rho_plus, rho_minus, slip, m, geometry="circle", radius=1.0):
    """The two eigenvalues ``lambda = -i omega`` of mode ``m``, largest growth first."""
    if m < 1:
        raise ContractError("mode must be >= 1")
    if not (rho_plus > 0 and rho_minus > 0):
        raise ContractError("densities must be positive")
    rs = rho_plus + rho_minus
    if geometry == "circle":
        W = slip / radius
        b = -2 * rho_minus * m * W
        c = rho_minus * m * m * W * W - m * (m * m - 1) / radius**3 - m * rho_minus * W * W
    elif geometry == "flat":
        k = m / radius
        b = -2 * rho_minus * k * slip
        c = rho_minus * k * k * slip**2 - k**3
    else:
        raise ContractError(f"unknown geometry {geometry!r}")
    lam = sorted((-1j * w for w in _roots(rs, b, c)), key=lambda z: -z.real)
    return lam[0], lam[1]


def growth_rate(*args, **kw):
    return max(l.real for l in dispersion(*args, **kw))


def threshold_mode(rho_plus, rho_minus, slip, geometry="circle", radius=1.0):
    """Continuous mode number above which every mode is oscillatory."""
    rs = rho_plus + rho_minus
    X = rho_plus * rho_minus * slip**2 / rs
    if geometry == "flat":
        return X * radius
    # discriminant zero: m^2 - X R m - 1 + rho- dU^2 R = 0
    B, C = X * radius, rho_minus * slip**2 * radius - 1.0
    d = B * B - 4 * C
    if d < 0:
        return 1.0
    return max(1.0, 0.5 * (B + np.sqrt(d)))


# ---------------------------------------------------------------------------
# oracle: finite-difference linearization of the nonlinear evolver


def evolver_eigenvalues(rho_plus, rho_minus, slip, m, radius=1.0, n=64, eps=1e-6):
    """Eigenvalues of the evolver linearized about a uniform sheet on a circle.

    The mode-``m`` subspace is spanned by normal displacement, ``psi`` and the
    reparametrization (gauge) directions; the gauge is quotiented out and the
    remaining 4x4 block is diagonalized.
    """
    from .evolver import SheetState, rhs

    c0 = circle(radius, n)
    base = SheetState.from_gamma(c0, np.full(n, slip), rho_plus, rho_minus)
    a = c0.alpha
    N, tau = c0.normal, c0.tangent
    psi_a = base.psi_alpha
    zero = np.zeros(n)
    basis = []
    for f in (np.cos(m * a), np.sin(m * a)):
        basis.append((f * N, zero))
    for f in (np.cos(m * a), np.sin(m * a)):
        basis.append((zero.astype(complex), f))
    for f in (np.cos(m * a), np.sin(m * a)):
        basis.append((f * c0.dz, f * psi_a))

    def flat(z, p):
        return np.concatenate([z.real, z.imag, p])

    Bm = np.stack([flat(*b) for b in basis], axis=1)

    def F(z, p):
        s = SheetState(ClosedCurve(z), p, base.circulation, rho_plus, rho_minus)
        return flat(*rhs(s))

    cols = []
    for dz, dp in basis[:4]:
        up = F(c0.nodes + eps * dz, base.psi + eps * dp)
        dn = F(c0.nodes - eps * dz, base.psi - eps * dp)
        cols.append((up - dn) / (2 * eps))
    J = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(Bm, J, rcond=None)
    return np.linalg.eigvals(coef[:4, :4])
