"""Energies of the interface problem: ``E0`` and the higher order energy ``E``.

``E`` is evaluated through boundary identities only:

    E_A     = int v+^perp (-Lap_S Nbar)^{k-1} (-Lap_S) v+^perp dS
    E_kappa = int kappa+ Nbar (-Lap_S Nbar)^{k-1} kappa+ dS
    E_omega = ||omega||^2_{H^{3k/2-1}}   (zero for irrotational fields)

with ``Nbar = (1/rho+) N+ N^{-1} (1/rho-) N-``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .curve import ClosedCurve, sobolev_norm, surface_laplacian
from .errors import ContractError, EnergyBoundExceeded
from .layers import dtn_bar
from .volume import DiskChart, cheb, quadrature


def energy_E0(curve: ClosedCurve, vel, rho_plus, rho_minus, n_radial=40, n_angular=128):
    """Kinetic energy (volume quadrature on both sides) plus perimeter."""
    kin = 0.0
    for s, rho in ((+1, rho_plus), (-1, rho_minus)):
        Q = quadrature(curve, s, n_radial, n_angular)
        v = vel.value(Q.points, s)
        kin += 0.5 * rho * Q.integrate(np.sum(v * v, axis=-1))
    return kin + curve.length


def _neg_lap(curve, f):
    return -surface_laplacian(curve, f)


def boundary_form(curve, f, g, rho_plus, rho_minus, k, kind="A"):
    """``int f S g dS`` for the operator strings of ``E_A`` (``kind='A'``) or ``E_kappa``."""
    if k < 2 or int(k) != k:
        raise ContractError("k must be an integer >= 2")
    nb = lambda u: dtn_bar(curve, u, rho_plus, rho_minus)
    u = np.asarray(g, dtype=float)
    if kind == "A":
        u = _neg_lap(curve, u)
    for _ in range(k - 1):
        u = _neg_lap(curve, nb(u))
    if kind != "A":
        u = nb(u)
    return curve.integrate(np.asarray(f, dtype=float) * u)


def vorticity_norm_sq(curve, vel, s, n_r=24, n_theta=64):
    """Norm-equivalent ``H^s`` size of the vorticity on both sides.

    The vorticity is sampled on the interface-fitted disk charts (Chebyshev in
    radius, Fourier in angle) and weighted by ``(1 + l^2 + m^2)^s``.
    """
    total = 0.0
    x_r = (cheb(n_r)[0] + 1) / 2  # radius in [0, 1]
    t = 2 * np.pi * np.arange(n_theta) / n_theta
    for side in (+1, -1):
        chart = DiskChart(curve, side)
        xi = np.outer(x_r, np.exp(1j * t))
        with np.errstate(all="ignore"):
            x = chart.physical(chart.w(xi))
        far = ~np.isfinite(x)
        om = vel.curl(np.where(far, 0.0, x), side)
        om = np.where(far, 0.0, om)  # vorticity must vanish at infinity
        c = np.fft.fft(om, axis=1) / n_theta
        # Chebyshev coefficients in r via the cosine transform
        v = np.concatenate([c, c[-2:0:-1]], axis=0)
        a = np.real(np.fft.fft(v.real, axis=0)) + 1j * np.real(np.fft.fft(v.imag, axis=0))
        a = a[: n_r + 1] / n_r
        a[0] /= 2
        a[-1] /= 2
        l = np.arange(n_r + 1)[:, None]
        m = np.fft.fftfreq(n_theta, 1.0 / n_theta)[None, :]
        total += abs(curve.signed_area) * float(np.sum((1 + l**2 + m**2) ** s * np.abs(a) ** 2))
    return total


@dataclass(frozen=True)
class EnergyReport:
    time: float
    E0: float
    E_A_term: float
    E_kappa_term: float
    E_omega_term: float
    k: int
    kappa_norm: float
    normal_velocity_norm: float

    @property
    def E(self):
        return self.E_A_term + self.E_kappa_term + self.E_omega_term

    @classmethod
    def header(cls):
        return [f.name for f in fields(cls)] + ["E"]

    def row(self):
        return [repr(getattr(self, n)) for n in self.header()]


def energy_E(curve, vel, rho_plus, rho_minus, k=2, time=0.0, E0=None) -> EnergyReport:
    vp = vel.normal_trace(+1)
    kap = curve.curvature
    EA = boundary_form(curve, vp, vp, rho_plus, rho_minus, k, "A")
    Ek = boundary_form(curve, kap, kap, rho_plus, rho_minus, k, "kappa")
    Ew = 0.0 if getattr(vel, "irrotational", True) else vorticity_norm_sq(curve, vel, 1.5 * k - 1)
    if E0 is None:
        E0 = energy_E0(curve, vel, rho_plus, rho_minus)
    return EnergyReport(
        float(time), float(E0), float(EA), float(Ek), float(Ew), int(k),
        float(sobolev_norm(curve, curve.project_mean_zero(kap), 1.5 * k - 1)),
        float(sobolev_norm(curve, vp, 1.5 * k - 0.5)),
    )


def write_reports(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EnergyReport.header())
        for r in reports:
            w.writerow(r.row())


# ---------------------------------------------------------------------------
# calibrate once, assert later


@dataclass
class Calibration:
    """A constant ``C`` with ``lhs <= C rhs`` fitted on one family and frozen."""

    name: str
    C: float = float("nan")
    margin: float = 1.5
    n_fit: int = 0

    def fit(self, lhs, rhs):
        ratios = np.asarray(lhs, float) / np.asarray(rhs, float)
        self.C = float(self.margin * np.max(ratios))
        self.n_fit = ratios.size
        return self

    def holds(self, lhs, rhs):
        if not np.isfinite(self.C):
            raise ContractError(f"calibration {self.name!r} has not been fitted")
        return np.asarray(lhs, float) <= self.C * np.asarray(rhs, float)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls(**json.load(fh))


def check_energy_bound(E_t, E_0, C_cal):
    if E_t > 2 * E_0 + C_cal:
        raise EnergyBoundExceeded(f"E={E_t:.6g} exceeds 2E(0)+C={2 * E_0 + C_cal:.6g}")


# ---------------------------------------------------------------------------
# vorticity transport identity


def curl_evolution_residual(v, symbols, probes):
    """Max residual of ``D_t omega + (Dv)^T omega + omega Dv`` at probe points.

    ``v`` is a pair of sympy expressions in ``symbols = (x, y, t)``;
    ``omega = Dv - Dv^T`` with ``(Dv)_ij = d_j v_i``.  The identity holds for
    Euler flows, so a nonzero residual flags a non-Euler field.
    """
    import sympy as sp

    x, y, t = symbols
    V = sp.Matrix(v)
    Dv = V.jacobian([x, y])
    om = Dv - Dv.T
    Dt = om.diff(t) + V[0] * om.diff(x) + V[1] * om.diff(y)
    res = sp.simplify(Dt + Dv.T * om + om * Dv)
    f = sp.lambdify((x, y, t), res, "numpy")
    out = 0.0
    for p in probes:
        out = max(out, float(np.max(np.abs(np.array(f(*p), dtype=float)))))
    return out
