"""Two-sided velocity fields and the quadratic Poisson potentials they generate.

Vectors are ``(..., 2)`` real arrays; points may be complex or ``(..., 2)``.
Velocity gradients follow ``(Dv)_ij = d v_i / d x_j``.

Irrotational fields are stored through the complex velocity ``F = v1 - i v2``,
analytic on each side, with boundary values at the curve nodes
(:class:`~interface_lab.layers.AnalyticTrace`).  With this representation
``Dv = [[Re F', -Im F'], [-Im F', -Re F']]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .curve import ClosedCurve, periodic_derivative
from .errors import ContractError
from .layers import AnalyticTrace, HarmonicExtension, as_complex_points, harmonic_extend, operators, side_sign


def _vec(c):
    c = np.asarray(c)
    return np.stack([c.real, c.imag], axis=-1)


def _cplx(v):
    v = np.asarray(v)
    return v[..., 0] + 1j * v[..., 1]


def _jac_from_dF(dF):
    a, b = dF.real, dF.imag
    return np.stack([np.stack([a, -b], -1), np.stack([-b, -a], -1)], -2)


def pseudo_inverse_dtn(curve, g, side):
    """Mean-zero ``phi`` with ``N_side phi = g`` (``g`` must have zero mean)."""
    n = curve.n
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = operators(curve).dtn_matrix(side)
    A[:n, n] = 1.0
    A[n, :n] = curve.weights
    sol = np.linalg.solve(A, np.concatenate([np.asarray(g, dtype=float), [0.0]]))
    return sol[:n]


class TwoPhaseVelocity:
    """Common interface of the two-sided velocity representations."""

    curve: ClosedCurve
    irrotational: bool = False

    # subclasses provide value, jacobian, trace, boundary_jacobian

    def divergence(self, points, side):
        return np.trace(self.jacobian(points, side), axis1=-2, axis2=-1)

    def curl(self, points, side):
        J = self.jacobian(points, side)
        return J[..., 1, 0] - J[..., 0, 1]

    def normal_trace(self, side):
        """``v_side . N_side`` at the nodes."""
        s = side_sign(side)
        return s * np.einsum("ij,ij->i", self.trace(s), _vec(self.curve.normal))

    def tangential_trace(self, side):
        return np.einsum("ij,ij->i", self.trace(side), _vec(self.curve.tangent))

    def slip(self):
        """Tangential jump ``(v_plus - v_minus) . tau``."""
        return self.tangential_trace(+1) - self.tangential_trace(-1)

    def matching_defect(self):
        """``max |v_plus^perp + v_minus^perp|`` on the curve."""
        return float(np.max(np.abs(self.normal_trace(+1) + self.normal_trace(-1))))


@dataclass(frozen=True, eq=False)
class HarmonicVelocity(TwoPhaseVelocity):
    """Potential flow on both sides (gradient of harmonic functions)."""

    curve: ClosedCurve
    F_plus: AnalyticTrace
    F_minus: AnalyticTrace
    potential_plus: np.ndarray | None = None
    potential_minus: np.ndarray | None = None
    irrotational = True
    tag = "harmonic-gradient"

    @classmethod
    def from_potentials(cls, curve, phi_plus, phi_minus):
        Hp = harmonic_extend(curve, phi_plus, +1)
        Hm = harmonic_extend(curve, phi_minus, -1)
        return cls(curve, Hp.phi.derivative(), Hm.phi.derivative(),
                   np.asarray(phi_plus, float), np.asarray(phi_minus, float))

    @classmethod
    def from_normal_trace(cls, curve, g):
        """Potential flow with ``v_plus^perp = g = -v_minus^perp``; ``g`` must have zero mean."""
        g = np.asarray(g, dtype=float)
        if abs(curve.integrate(g)) > 1e-10 * max(curve.l2_norm(g), 1e-300) * np.sqrt(curve.length):
            raise ContractError("normal trace must have zero mean")
        return cls.from_potentials(curve, pseudo_inverse_dtn(curve, g, +1), -pseudo_inverse_dtn(curve, g, -1))

    @classmethod
    def from_sheet(cls, curve, gamma):
        """Velocity induced by a vortex sheet of strength ``gamma`` (jump ``v_minus - v_plus = gamma tau``)."""
        W = birkhoff_rott(curve, gamma)
        half = 0.5 * np.asarray(gamma) * curve.tangent
        Fp = AnalyticTrace(curve, np.conj(W - half), +1)
        Fm = AnalyticTrace(curve, np.conj(W + half), -1, 0j)
        return cls(curve, Fp, Fm)

    @classmethod
    def zero(cls, curve):
        z = np.zeros(curve.n, dtype=complex)
        return cls(curve, AnalyticTrace(curve, z, +1), AnalyticTrace(curve, z, -1), np.zeros(curve.n), np.zeros(curve.n))

    def _F(self, side):
        return self.F_plus if side_sign(side) > 0 else self.F_minus

    @cached_property
    def _dF(self):
        return {+1: self.F_plus.derivative(), -1: self.F_minus.derivative()}

    def complex_velocity(self, side):
        return self._F(side)

    def value(self, points, side):
        return _vec(np.conj(self._F(side)(points)))

    def jacobian(self, points, side):
        return _jac_from_dF(self._dF[side_sign(side)](points))

    def trace(self, side):
        return _vec(np.conj(self._F(side).values))

    def boundary_jacobian(self, side):
        return _jac_from_dF(self._dF[side_sign(side)].values)

    def divergence(self, points, side):
        return np.zeros(np.shape(as_complex_points(points)))

    def curl(self, points, side):
        return np.zeros(np.shape(as_complex_points(points)))

    def scaled(self, a):
        sc = lambda t: AnalyticTrace(t.curve, a * t.values, t.side, a * t.at_infinity)
        pp = None if self.potential_plus is None else a * self.potential_plus
        pm = None if self.potential_minus is None else a * self.potential_minus
        return HarmonicVelocity(self.curve, sc(self.F_plus), sc(self.F_minus), pp, pm)

    def __add__(self, other):
        if not isinstance(other, HarmonicVelocity):
            return NotImplemented
        ad = lambda s, t: AnalyticTrace(s.curve, s.values + t.values, s.side, s.at_infinity + t.at_infinity)
        both = lambda a, b: None if a is None or b is None else a + b
        return HarmonicVelocity(self.curve, ad(self.F_plus, other.F_plus), ad(self.F_minus, other.F_minus),
                                both(self.potential_plus, other.potential_plus),
                                both(self.potential_minus, other.potential_minus))

    def potentials(self):
        """Boundary values of ``phi_plus``, ``phi_minus`` (recovered from the traces if needed)."""
        if self.potential_plus is not None and self.potential_minus is not None:
            return self.potential_plus, self.potential_minus
        out = []
        for s in (+1, -1):
            vt = self.tangential_trace(s)
            out.append(_antiderivative(self.curve, vt))
        return tuple(out)


def _antiderivative(curve, f):
    """Periodic ``phi`` with ``d phi / ds = f`` (requires zero circulation)."""
    g = f * curve.speed
    if abs(np.mean(g)) > 1e-10 * (1 + np.max(np.abs(g))):
        raise ContractError("tangential trace carries circulation; no single-valued potential")
    k = np.fft.fftfreq(curve.n, 1.0 / curve.n)
    c = np.fft.fft(g)
    c[0] = 0.0
    if curve.n % 2 == 0:
        c[curve.n // 2] = 0.0
    k[0] = 1.0
    return np.fft.ifft(c / (1j * k)).real


def birkhoff_rott(curve, gamma):
    """Principal-value (average) velocity ``W`` of the sheet, as complex numbers."""
    z, dz, ddz, h = curve.nodes, curve.dz, curve.ddz, curve.h
    gt = np.asarray(gamma, dtype=float) * curve.speed  # circulation per unit alpha
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    K = h / diff
    np.fill_diagonal(K, 0.0)
    total = K @ gt
    dgt = periodic_derivative(gt)
    total += h * (dgt / dz - gt * ddz / (2 * dz**2))
    return np.conj(-total / (2j * np.pi))


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ManufacturedVelocity(TwoPhaseVelocity):
    """Closed-form two-sided field given by callables of ``(x, y)``.

    ``funcs[side]`` returns ``(v1, v2)`` and ``jacs[side]`` returns the
    2x2 nested list ``[[dv1/dx, dv1/dy], [dv2/dx, dv2/dy]]``.
    """

    curve: ClosedCurve
    funcs: dict
    jacs: dict
    irrotational: bool = False
    hessians: dict = field(default_factory=dict)
    tag = "manufactured"

    @classmethod
    def from_sympy(cls, curve, plus, minus, symbols=None, irrotational=None):
        """Build from sympy expressions ``plus = (v1, v2)`` and ``minus`` in symbols ``x, y``."""
        import sympy as sp

        if symbols is None:
            named = {str(a): a for e in (*plus, *minus) for a in sp.sympify(e).free_symbols}
            symbols = (named.get("x", sp.Symbol("x")), named.get("y", sp.Symbol("y")))
        x, y = symbols
        funcs, jacs, hess = {}, {}, {}
        rot = True
        for s, expr in ((+1, plus), (-1, minus)):
            expr = [sp.sympify(e) for e in expr]
            J = [[sp.diff(e, v) for v in (x, y)] for e in expr]
            H = [[[sp.diff(e, a, b) for b in (x, y)] for a in (x, y)] for e in expr]
            funcs[s] = sp.lambdify((x, y), expr, "numpy")
            jacs[s] = sp.lambdify((x, y), J, "numpy")
            hess[s] = sp.lambdify((x, y), H, "numpy")
            rot = rot and sp.simplify(J[1][0] - J[0][1]) == 0
        return cls(curve, funcs, jacs, rot if irrotational is None else irrotational, hess)

    def value(self, points, side):
        z = as_complex_points(points)
        v1, v2 = self.funcs[side_sign(side)](z.real, z.imag)
        return np.stack([np.broadcast_to(v1, z.shape), np.broadcast_to(v2, z.shape)], -1).astype(float)

    def jacobian(self, points, side):
        z = as_complex_points(points)
        J = self.jacs[side_sign(side)](z.real, z.imag)
        return np.stack([np.stack([np.broadcast_to(J[i][j], z.shape) for j in range(2)], -1)
                         for i in range(2)], -2).astype(float)

    def second_derivatives(self, points, side):
        """``(..., 2, 2, 2)`` array of ``d^2 v_i / dx_j dx_k``."""
        z = as_complex_points(points)
        H = self.hessians[side_sign(side)](z.real, z.imag)
        arr = np.array([[[np.broadcast_to(H[i][j][k], z.shape) for k in range(2)] for j in range(2)]
                        for i in range(2)], dtype=float)
        return np.moveaxis(arr, (0, 1, 2), (-3, -2, -1))

    def trace(self, side):
        return self.value(self.curve.nodes, side)

    def boundary_jacobian(self, side):
        return self.jacobian(self.curve.nodes, side)


# ---------------------------------------------------------------------------
# quadratic Poisson potentials  -Lap q = tr(Dv Dw),  q = 0 on S


class QuadraticPotential:
    """``q`` solving ``-Lap q = tr(Dv Dw)`` on one side with zero boundary values."""

    side: int

    def value(self, points): ...

    def gradient(self, points): ...

    def normal_derivative(self): ...

    @property
    def value_at_infinity(self): ...


class HarmonicQuadraticPotential(QuadraticPotential):
    """Closed form for potential flows: ``q = -(v.w)/2 + H((v.w)/2 on S)``.

    For ``v = grad phi`` and ``w = grad chi`` one has
    ``Lap (v.w) = 2 tr(Dv Dw)``, and ``v.w = Re(F_v conj F_w)``.
    """

    def __init__(self, v: HarmonicVelocity, w: HarmonicVelocity, side):
        self.side = s = side_sign(side)
        self.curve = v.curve
        self.Fv, self.Fw = v.complex_velocity(s), w.complex_velocity(s)
        self.dFv, self.dFw = v._dF[s], w._dF[s]
        b = 0.5 * np.real(self.Fv.values * np.conj(self.Fw.values))
        self.ext: HarmonicExtension = harmonic_extend(self.curve, b, s)
        self._b = b

    def _dot(self, points):
        return np.real(self.Fv(points) * np.conj(self.Fw(points)))

    def _grad_dot(self, points):
        g = np.conj(self.dFv(points)) * self.Fw(points) + self.Fv(points) * np.conj(self.dFw(points))
        return _vec(g)

    def value(self, points):
        return -0.5 * self._dot(points) + self.ext.value(points)

    def gradient(self, points):
        return -0.5 * self._grad_dot(points) + self.ext.gradient(points)

    def boundary_gradient(self):
        c = self.curve
        Fv, Fw, dFv, dFw = self.Fv.values, self.Fw.values, self.dFv.values, self.dFw.values
        g = _vec(np.conj(dFv) * Fw + Fv * np.conj(dFw))
        return -0.5 * g + self.ext.boundary_gradient()

    def normal_derivative(self):
        nrm = _vec(self.side * self.curve.normal)
        return np.einsum("ij,ij->i", self.boundary_gradient(), nrm)

    @property
    def value_at_infinity(self):
        if self.side > 0:
            raise ContractError("interior potential has no value at infinity")
        # the velocities decay, so only the harmonic part survives
        return self.ext.far_field_constant


class NumericQuadraticPotential(QuadraticPotential):
    """Spectral Poisson solve for general (e.g. rotational) fields."""

    def __init__(self, curve, source, side, **kw):
        from .volume import PoissonSolver

        self.side = side_sign(side)
        self.curve = curve
        self.sol = PoissonSolver.for_curve(curve, self.side, **kw).solve(source)

    def value(self, points):
        return self.sol.value(points)

    def gradient(self, points):
        return self.sol.gradient(points)

    def normal_derivative(self):
        return self.sol.normal_derivative()

    @property
    def value_at_infinity(self):
        return self.sol.value_at_infinity


def trace_DvDw(v, w, points, side):
    Jv, Jw = v.jacobian(points, side), w.jacobian(points, side)
    return np.einsum("...ij,...ji->...", Jv, Jw)


def quadratic_potential(v, w, side, **kw) -> QuadraticPotential:
    if isinstance(v, HarmonicVelocity) and isinstance(w, HarmonicVelocity):
        return HarmonicQuadraticPotential(v, w, side)
    return NumericQuadraticPotential(v.curve, lambda x: trace_DvDw(v, w, x, side), side, **kw)
