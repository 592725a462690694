"""Tangent-space calculus for divergence-free two-phase fields.

Admissible variations are two-sided fields ``w`` with ``div w = 0`` and
matching normal traces ``w_plus^perp + w_minus^perp = 0``.  Their orthogonal
complement in ``L^2(rho dx)`` consists of gradients ``-grad psi`` with
``rho_plus psi_plus = rho_minus psi_minus`` on the curve.

Scalar potentials are split as ``psi_pm = H_pm(data_pm) + c_pm q_pm`` where
``q_pm`` solves a zero-Dirichlet Poisson problem; they are wrapped in
:class:`TwoSidedPotential`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curve import ClosedCurve
from .errors import ContractError
from .layers import as_complex_points, dtn, dtn_inverse, harmonic_extend, side_sign
from .velocity import (
    HarmonicQuadraticPotential,
    HarmonicVelocity,
    NumericQuadraticPotential,
    TwoPhaseVelocity,
    _vec,
    quadratic_potential,
)
from .volume import quadrature


@dataclass(eq=False)
class TwoSidedPotential:
    """Scalar field ``H_pm(data_pm) + q_scale_pm * q_pm + const_pm`` on each side."""

    curve: ClosedCurve
    data: dict
    q: dict = field(default_factory=dict)
    q_scale: dict = field(default_factory=lambda: {+1: 1.0, -1: 1.0})
    const: dict = field(default_factory=lambda: {+1: 0.0, -1: 0.0})
    surface: np.ndarray | None = None

    def __post_init__(self):
        self._ext = {s: harmonic_extend(self.curve, self.data[s], s) for s in (+1, -1)}

    def extension(self, side):
        return self._ext[side_sign(side)]

    def _q(self, side):
        return self.q.get(side_sign(side))

    def value(self, points, side):
        s = side_sign(side)
        out = self._ext[s].value(points) + self.const[s]
        if self._q(s) is not None:
            out = out + self.q_scale[s] * self._q(s).value(points)
        return out

    def gradient(self, points, side):
        s = side_sign(side)
        out = self._ext[s].gradient(points)
        if self._q(s) is not None:
            out = out + self.q_scale[s] * self._q(s).gradient(points)
        return out

    def hessian(self, points, side):
        s = side_sign(side)
        out = self._ext[s].hessian(points)
        q = self._q(s)
        if q is not None:
            if not isinstance(q, NumericQuadraticPotential):
                raise ContractError("Hessian of the closed-form quadratic potential is not provided")
            out = out + self.q_scale[s] * q.sol.hessian(points)
        return out

    def boundary_trace(self, side):
        s = side_sign(side)
        return np.asarray(self.data[s]) + self.const[s]

    def boundary_gradient(self, side):
        s = side_sign(side)
        out = self._ext[s].boundary_gradient()
        q = self._q(s)
        if q is not None:
            out = out + self.q_scale[s] * q.normal_derivative()[:, None] * _vec(s * self.curve.normal)
        return out

    def normal_derivative(self, side):
        """``d/dN_side`` of the field at the nodes."""
        s = side_sign(side)
        out = dtn(self.curve, self.data[s], s)
        q = self._q(s)
        if q is not None:
            out = out + self.q_scale[s] * q.normal_derivative()
        return out

    def as_velocity(self):
        return GradientVelocity(self)


@dataclass(frozen=True, eq=False)
class GradientVelocity(TwoPhaseVelocity):
    """The two-sided vector field ``grad f`` of a :class:`TwoSidedPotential`."""

    potential: TwoSidedPotential
    tag = "gradient"

    @property
    def curve(self):
        return self.potential.curve

    @property
    def irrotational(self):
        return True

    def value(self, points, side):
        return self.potential.gradient(points, side)

    def jacobian(self, points, side):
        return self.potential.hessian(points, side)

    def trace(self, side):
        return self.potential.boundary_gradient(side)

    def boundary_jacobian(self, side):
        raise ContractError("boundary Hessian not available for gradient fields")


@dataclass(frozen=True, eq=False)
class CombinedVelocity(TwoPhaseVelocity):
    """``a + coef * b`` for two fields on the same curve."""

    a: TwoPhaseVelocity
    b: TwoPhaseVelocity
    coef: float = 1.0
    tag = "combined"

    @property
    def curve(self):
        return self.a.curve

    @property
    def irrotational(self):
        return self.a.irrotational and self.b.irrotational

    def value(self, points, side):
        return self.a.value(points, side) + self.coef * self.b.value(points, side)

    def jacobian(self, points, side):
        return self.a.jacobian(points, side) + self.coef * self.b.jacobian(points, side)

    def trace(self, side):
        return self.a.trace(side) + self.coef * self.b.trace(side)

    def boundary_jacobian(self, side):
        return self.a.boundary_jacobian(side) + self.coef * self.b.boundary_jacobian(side)


# ---------------------------------------------------------------------------
# volume pairings


def volume_inner(curve, u, v, rho_plus, rho_minus, n_radial=40, n_angular=128):
    """``sum_pm rho_pm int_{Omega_pm} u . v dx`` for two-sided vector fields."""
    total = 0.0
    for s, rho in ((+1, rho_plus), (-1, rho_minus)):
        Q = quadrature(curve, s, n_radial, n_angular)
        x = Q.points
        total += rho * Q.integrate(np.einsum("...i,...i->...", u.value(x, s), v.value(x, s)))
    return total


def volume_norm_sq(curve, u, rho_plus, rho_minus, **kw):
    return volume_inner(curve, u, u, rho_plus, rho_minus, **kw)


# ---------------------------------------------------------------------------
# orthogonal projection onto the tangent space


def _normal_dot(curve, vectors, side):
    return side * np.einsum("ij,ij->i", vectors, _vec(curve.normal))


def _check_rho(rho_plus, rho_minus):
    if not (rho_plus > 0 and rho_minus > 0):
        raise ContractError("densities must be positive")


def project_to_tangent(curve, X: TwoPhaseVelocity, rho_plus, rho_minus, **poisson_kw):
    """Split ``X = w - grad psi`` with ``w`` tangent and ``rho_plus psi_plus = rho_minus psi_minus``.

    ``psi`` solves ``-Lap psi = div X`` with surface value
    ``psi^S = -N^{-1}(X_+^perp + X_-^perp + dq_+/dN_+ + dq_-/dN_-)`` where
    ``-Lap q = div X``, ``q = 0`` on the curve.  Returns ``(w, psi)``.
    """
    _check_rho(rho_plus, rho_minus)
    q = {}
    arg = X.normal_trace(+1) + X.normal_trace(-1)
    if not X_is_solenoidal(X):
        for s in (+1, -1):
            q[s] = NumericQuadraticPotential(curve, lambda x, s=s: X.divergence(x, s), s, **poisson_kw)
            arg = arg + q[s].normal_derivative()
    defect = curve.mean(arg)
    psi_s = -dtn_inverse(curve, curve.project_mean_zero(arg), rho_plus, rho_minus)
    psi = TwoSidedPotential(curve, {+1: psi_s / rho_plus, -1: psi_s / rho_minus}, q, surface=psi_s)
    psi.mean_defect = defect
    grad = psi.as_velocity()
    if isinstance(X, HarmonicVelocity) and not q:
        w = X + HarmonicVelocity(curve, *(_gradient_trace(psi, s) for s in (+1, -1)))
    else:
        w = CombinedVelocity(X, grad, 1.0)
    return w, psi


def X_is_solenoidal(X):
    return isinstance(X, HarmonicVelocity)


def _gradient_trace(psi, side):
    """Complex velocity ``F`` of ``grad H(data)`` as an analytic trace."""
    return psi.extension(side).phi.derivative()


# ---------------------------------------------------------------------------
# second fundamental form pressures


def directional_normal(curve, v, w, side):
    """``(grad_{w} v) . N_side`` at the nodes, from one-sided traces."""
    s = side_sign(side)
    Dv = v.boundary_jacobian(s)
    ww = w.trace(s)
    return _normal_dot(curve, np.einsum("nij,nj->ni", Dv, ww), s)


def second_fundamental_pressure(curve, v, w, rho_plus, rho_minus, **poisson_kw):
    """``p_{w,v}`` with ``-Lap p = tr(Dv Dw)`` and boundary value ``p^S / rho_pm``.

    ``p^S = -N^{-1}{ (grad_{w+} v+).N+ + (grad_{w-} v-).N- + d/ds(w+^perp slip_v)
                     + dq+/dN+ + dq-/dN- }``  with ``-Lap q = tr(Dv Dw)``.
    """
    _check_rho(rho_plus, rho_minus)
    q = {s: quadratic_potential(v, w, s, **poisson_kw) for s in (+1, -1)}
    brace = (directional_normal(curve, v, w, +1) + directional_normal(curve, v, w, -1)
             + curve.d_ds(w.normal_trace(+1) * v.slip())
             + q[+1].normal_derivative() + q[-1].normal_derivative())
    p_s = -dtn_inverse(curve, curve.project_mean_zero(brace), rho_plus, rho_minus)
    pot = TwoSidedPotential(curve, {+1: p_s / rho_plus, -1: p_s / rho_minus}, q, surface=p_s)
    pot.mean_defect = curve.mean(brace)
    return pot


def duality_pairing(curve, v, w, g, rho_plus, rho_minus, n_radial=40, n_angular=128):
    """Right side of the pairing identity for ``int g p^S_{w,v} dS``.

    ``-int w+^perp v+^perp (N+ + N-) N^{-1} g dS
      + sum_pm int D^2 H_pm(N^{-1} g)(v, w) dx``.
    """
    g = curve.project_mean_zero(g)
    f = dtn_inverse(curve, g, rho_plus, rho_minus)
    bdry = -curve.integrate(w.normal_trace(+1) * v.normal_trace(+1) * (dtn(curve, f, +1) + dtn(curve, f, -1)))
    vol = 0.0
    for s in (+1, -1):
        H = harmonic_extend(curve, f, s)
        Q = quadrature(curve, s, n_radial, n_angular)
        x = Q.points
        vol += Q.integrate(np.einsum("...ij,...i,...j->...", H.hessian(x), v.value(x, s), w.value(x, s)))
    return bdry + vol


def representing_potential(curve, f0, rho_plus, rho_minus):
    """``f_pm = +-(1/(rho+ rho-)) H_pm N^{-1} N_mp f0``; ``grad f`` is tangent and represents ``int f0 w+^perp``."""
    _check_rho(rho_plus, rho_minus)
    f0 = np.asarray(f0, dtype=float)
    c = 1.0 / (rho_plus * rho_minus)
    fp = c * dtn_inverse(curve, curve.project_mean_zero(dtn(curve, f0, -1)), rho_plus, rho_minus)
    fm = -c * dtn_inverse(curve, curve.project_mean_zero(dtn(curve, f0, +1)), rho_plus, rho_minus)
    return TwoSidedPotential(curve, {+1: fp, -1: fm})


def sprime_pressure(curve, rho_plus, rho_minus, check=False):
    """``p_kappa``; its gradient represents the first variation of length."""
    pot = representing_potential(curve, curve.curvature, rho_plus, rho_minus)
    if check:
        rng = np.random.default_rng(0)
        from .curve import random_smooth_field

        g = curve.project_mean_zero(random_smooth_field(curve, rng, 4))
        w = HarmonicVelocity.from_normal_trace(curve, g)
        lhs = volume_inner(curve, pot.as_velocity(), w, rho_plus, rho_minus)
        rhs = curve.integrate(curve.curvature * g)
        if abs(lhs - rhs) > 1e-6 * max(abs(rhs), curve.l2_norm(g)):
            raise ContractError(f"surface-tension duality check failed: {lhs} vs {rhs}")
    return pot


def curvature_form(curve, v, w, rho_plus, rho_minus, n_radial=40, n_angular=128):
    """``int rho grad p_vv . grad p_ww - rho |grad p_vw|^2 dx``."""
    pvv = second_fundamental_pressure(curve, v, v, rho_plus, rho_minus).as_velocity()
    pww = second_fundamental_pressure(curve, w, w, rho_plus, rho_minus).as_velocity()
    pvw = second_fundamental_pressure(curve, v, w, rho_plus, rho_minus).as_velocity()
    kw = dict(n_radial=n_radial, n_angular=n_angular)
    return (volume_inner(curve, pvv, pww, rho_plus, rho_minus, **kw)
            - volume_inner(curve, pvw, pvw, rho_plus, rho_minus, **kw))
