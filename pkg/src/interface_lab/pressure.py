"""Pressure reconstruction for the two-fluid interface with surface tension.

On each side the pressure solves ``-Lap p = rho tr(Dv)^2`` and is written as
``p_pm = H_pm(p_pm|_S) + rho_pm q_pm`` with ``-Lap q_pm = tr(Dv_pm)^2``,
``q_pm = 0`` on the curve.  The jump condition ``p_plus - p_minus = kappa_plus``
and the requirement that the normal velocities stay matched give

    N P = B - (1/rho_-) N_- kappa_- - dq_+/dN_+ - dq_-/dN_-,
    B   = kappa_+ (v_+ . tau)^2 + kappa_- (v_- . tau)^2 - 2 slip d(v_+^perp)/ds,

for ``P = p_plus|_S`` up to a constant; ``slip = (v_plus - v_minus) . tau``.
``B`` comes from differentiating ``v_plus^perp + v_minus^perp = 0`` along the
moving interface: ``(D_t v_+).N_+ + (D_t v_-).N_- = -B``.  The constant is
fixed by ``p_minus -> 0`` at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .curve import ClosedCurve
from .errors import ContractError
from .layers import HarmonicExtension, dtn, dtn_inverse, harmonic_extend, side_sign
from .velocity import QuadraticPotential, TwoPhaseVelocity, quadratic_potential

MEAN_DEFECT_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class PressureTrace:
    plus: np.ndarray
    minus: np.ndarray
    mean_defect: float
    q: dict

    def __iter__(self):
        return iter((self.plus, self.minus))


def _transport_term(curve, vel):
    k = curve.curvature
    tp, tm = vel.tangential_trace(+1), vel.tangential_trace(-1)
    return k * tp**2 - k * tm**2 - 2 * (tp - tm) * curve.d_ds(vel.normal_trace(+1))


def pressure_trace(curve: ClosedCurve, vel: TwoPhaseVelocity, rho_plus, rho_minus,
                   strict=True, **poisson_kw) -> PressureTrace:
    """Boundary values ``(p_plus|_S, p_minus|_S)``.

    The surface mean of the argument handed to ``N^{-1}`` is reported (relative
    to the size of the individual terms) before it is projected away.
    """
    if not (rho_plus > 0 and rho_minus > 0):
        raise ContractError("densities must be positive")
    kappa = curve.curvature
    q = {s: quadratic_potential(vel, vel, s, **poisson_kw) for s in (+1, -1)}
    terms = [
        dtn(curve, kappa, -1) / rho_minus,  # -(1/rho-) N- kappa_-  with kappa_- = -kappa_+
        -q[+1].normal_derivative(),
        -q[-1].normal_derivative(),
        _transport_term(curve, vel),
    ]
    arg = sum(terms)
    scale = curve.l2_norm(kappa) + sum(curve.l2_norm(t) for t in terms)
    defect = abs(curve.integrate(arg)) / (np.sqrt(curve.length) * scale) if scale > 0 else 0.0
    if strict and defect > MEAN_DEFECT_LIMIT:
        raise ContractError(
            f"pressure compatibility defect {defect:.2e}: velocity is not divergence free "
            "or its normal traces do not match"
        )
    P = dtn_inverse(curve, curve.project_mean_zero(arg), rho_plus, rho_minus)
    far = harmonic_extend(curve, P - kappa, -1).far_field_constant + rho_minus * q[-1].value_at_infinity
    c = -far
    return PressureTrace(P + c, P + c - kappa, defect, q)


class PressureField:
    """Pressure on both sides with evaluators and the splitting diagnostics."""

    def __init__(self, curve, vel, rho_plus, rho_minus, strict=True, **poisson_kw):
        self.curve, self.vel = curve, vel
        self.rho = {+1: rho_plus, -1: rho_minus}
        self.trace = pressure_trace(curve, vel, rho_plus, rho_minus, strict=strict, **poisson_kw)
        self.q: dict = self.trace.q
        self._ext: dict = {+1: harmonic_extend(curve, self.trace.plus, +1),
                           -1: harmonic_extend(curve, self.trace.minus, -1)}

    @property
    def mean_defect(self):
        return self.trace.mean_defect

    def boundary(self, side):
        return self.trace.plus if side_sign(side) > 0 else self.trace.minus

    def value(self, points, side):
        s = side_sign(side)
        return self._ext[s].value(points) + self.rho[s] * self.q[s].value(points)

    def gradient(self, points, side):
        s = side_sign(side)
        return self._ext[s].gradient(points) + self.rho[s] * self.q[s].gradient(points)

    def jump_residual(self):
        return self.trace.plus - self.trace.minus - self.curve.curvature

    @cached_property
    def p_kappa(self):
        from .tangent import sprime_pressure

        return sprime_pressure(self.curve, self.rho[+1], self.rho[-1])

    @cached_property
    def p_vv(self):
        from .tangent import second_fundamental_pressure

        return second_fundamental_pressure(self.curve, self.vel, self.vel, self.rho[+1], self.rho[-1])

    def splitting_defect(self):
        """Relative ``L^2(S)`` mismatch of ``rho (p_vv + p_kappa)`` and ``p`` on each side.

        Both ``p_vv`` and ``p_kappa`` are only defined up to an additive
        constant per side, so the comparison is made after removing means.
        """
        out = 0.0
        for s in (+1, -1):
            split = self.rho[s] * (self.p_vv.boundary_trace(s) + self.p_kappa.boundary_trace(s))
            d = self.curve.project_mean_zero(split - self.boundary(s))
            ref = self.curve.l2_norm(self.curve.project_mean_zero(self.boundary(s)))
            ref = max(ref, self.curve.l2_norm(self.curve.curvature) * 1e-12)
            out = max(out, self.curve.l2_norm(d) / ref)
        return out


def pressure_field(curve, vel, rho_plus, rho_minus, **kw) -> PressureField:
    return PressureField(curve, vel, rho_plus, rho_minus, **kw)
