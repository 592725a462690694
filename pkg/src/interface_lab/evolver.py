"""Time evolution of an irrotational two-density vortex sheet with surface tension.

State variables
---------------
* the curve ``z(alpha)`` (counter-clockwise, kept equispaced in arclength);
* ``psi = rho_+ phi_+ - rho_- phi_-`` on the curve, stored as a periodic part
  plus the fixed multivalued part ``-rho_- Gamma alpha / (2 pi)`` where
  ``Gamma`` is the (conserved) circulation of the sheet.

Velocities come from the sheet strength ``gamma`` (jump
``v_- - v_+ = gamma tau``) through the Birkhoff-Rott integral ``W``:
``v_pm = W -+ gamma tau / 2``.  Since ``d psi / ds = rho_+ v_+.tau - rho_- v_-.tau``,

    psi_alpha / s_alpha = (rho_+ - rho_-) W.tau - (rho_+ + rho_-) gamma / 2,

which is a second-kind equation for ``gamma``.

Kinematics: ``z_t = U N_+ + T tau`` with ``U = W . N_+``.  The tangential
speed ``T`` is chosen so that ``s_alpha`` stays independent of ``alpha``:
``T_alpha = <kappa s_alpha U> - kappa s_alpha U``.

Dynamics: Bernoulli on each side, followed along the moving node, with the
jump ``p_+ - p_- = kappa_+``.  Writing ``T' = T - W.tau``,

    psi_t = (rho_+ - rho_-)(|W|^2/2 + T' W.tau - gamma^2/8)
            - (rho_+ + rho_-) T' gamma / 2 - kappa_+ + C(t),

with ``C`` chosen to keep the mean of ``psi_t`` zero (it only shifts the
potentials by constants).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .curve import ClosedCurve, differentiation_matrix, periodic_derivative, wavenumbers
from .errors import CFLError, ContractError, EnergyBoundExceeded, GeometryError
from .velocity import HarmonicVelocity

log = logging.getLogger(__name__)


def sheet_matrix(curve):
    """Complex matrix ``B`` with ``conj(W) = B gamma`` (principal value)."""
    z, dz, ddz, h, n = curve.nodes, curve.dz, curve.ddz, curve.h, curve.n
    sp = curve.speed
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    K = h / diff
    np.fill_diagonal(K, 0.0)
    D = differentiation_matrix(n)
    B = K * sp[None, :] + h * ((D * sp[None, :]) / dz[:, None] - np.diag(sp * ddz / (2 * dz**2)))
    return -B / (2j * np.pi)


def dealias(f, fraction=2.0 / 3.0):
    """Zero Fourier modes with ``|k| > fraction * n / 2``."""
    n = f.shape[-1]
    c = np.fft.fft(f)
    k = np.abs(np.fft.fftfreq(n, 1.0 / n))
    c[k > fraction * n / 2] = 0.0
    out = np.fft.ifft(c)
    return out if np.iscomplexobj(f) else out.real


@dataclass(frozen=True, eq=False)
class SheetState:
    curve: ClosedCurve
    psi: np.ndarray  # periodic part of rho_+ phi_+ - rho_- phi_-
    circulation: float
    rho_plus: float
    rho_minus: float
    time: float = 0.0
    area0: float | None = None

    def __post_init__(self):
        if not (self.rho_plus > 0 and self.rho_minus > 0):
            raise ContractError("densities must be positive")
        if self.area0 is None:
            object.__setattr__(self, "area0", self.curve.signed_area)

    @classmethod
    def from_gamma(cls, curve, gamma, rho_plus, rho_minus, time=0.0):
        """State whose sheet strength is ``gamma``."""
        gamma = np.asarray(gamma, dtype=float)
        Gamma = float(curve.integrate(gamma))
        W = np.conj(sheet_matrix(curve) @ gamma)
        wt = np.real(W * np.conj(curve.tangent))
        dpsi = ((rho_plus - rho_minus) * wt - (rho_plus + rho_minus) * gamma / 2) * curve.speed
        dpsi += rho_minus * Gamma / (2 * np.pi)  # strip the multivalued part
        k = wavenumbers(curve.n)
        c = np.fft.fft(dpsi)
        c[0] = 0.0
        safe = np.where(k == 0, 1.0, k)
        psi = np.fft.ifft(np.where(k == 0, 0.0, c / (1j * safe))).real
        return cls(curve, psi, Gamma, rho_plus, rho_minus, time)

    @property
    def n(self):
        return self.curve.n

    @cached_property
    def psi_alpha(self):
        return periodic_derivative(self.psi) - self.rho_minus * self.circulation / (2 * np.pi)

    @cached_property
    def _B(self):
        return sheet_matrix(self.curve)

    @cached_property
    def gamma(self):
        c = self.curve
        rp, rm = self.rho_plus, self.rho_minus
        rhs = self.psi_alpha / c.speed
        if rp == rm:
            return -rhs / rp
        M = np.real(c.tangent[:, None] * self._B)  # W.tau = Re(conj(W) tau)
        A = (rp - rm) * M - 0.5 * (rp + rm) * np.eye(c.n)
        return np.linalg.solve(A, rhs)

    @cached_property
    def W(self):
        return np.conj(self._B @ self.gamma)

    def velocity(self):
        return HarmonicVelocity.from_sheet(self.curve, self.gamma)

    def traces(self):
        """``(W, v_plus, v_minus)`` on the curve as complex numbers."""
        half = 0.5 * self.gamma * self.curve.tangent
        return self.W, self.W - half, self.W + half

    def kinetic_energy(self):
        """``int rho |v|^2 / 2`` via ``(1/2) int psi U dS``; infinite when ``Gamma != 0``."""
        if abs(self.circulation) > 1e-12 * (1 + np.max(np.abs(self.gamma))) * self.curve.length:
            return float("inf")
        U = np.real(self.W * np.conj(self.curve.normal))
        return 0.5 * self.curve.integrate(self.psi * U)

    def energy0(self):
        return self.kinetic_energy() + self.curve.length

    def area_drift(self):
        return abs(self.curve.signed_area - self.area0) / abs(self.area0)


def rhs(state: SheetState):
    """Time derivatives ``(z_t, psi_t)``."""
    c = state.curve
    rp, rm = state.rho_plus, state.rho_minus
    W, gamma = state.W, state.gamma
    tau, N = c.tangent, c.normal
    U = np.real(W * np.conj(N))
    wt = np.real(W * np.conj(tau))
    kappa, sp = c.curvature, c.speed
    ksu = kappa * sp * U
    dT = np.mean(ksu) - ksu
    k = wavenumbers(c.n)
    safe = np.where(k == 0, 1.0, k)
    T = np.fft.ifft(np.where(k == 0, 0.0, np.fft.fft(dT) / (1j * safe))).real
    z_t = U * N + T * tau
    Tx = T - wt
    psi_t = (rp - rm) * (0.5 * np.abs(W) ** 2 + Tx * wt - gamma**2 / 8) - (rp + rm) * Tx * gamma / 2 - kappa
    psi_t -= np.mean(psi_t)
    return z_t, psi_t


def _advance(state, z, psi, t):
    return SheetState(ClosedCurve(z), psi, state.circulation, state.rho_plus, state.rho_minus, t, state.area0)


def cfl_limit(curve, rho_plus, rho_minus, c_cfl=0.5):
    """Largest stable step for the capillary stiffness, ``c * sqrt(rho_+ + rho_-) * ds^{3/2}``."""
    ds = float(np.min(curve.weights))
    return c_cfl * np.sqrt(rho_plus + rho_minus) * ds**1.5


def step(state: SheetState, dt, c_cfl=0.5, filter_fraction=2.0 / 3.0):
    """One classical RK4 step with dealiasing of every stage."""
    lim = cfl_limit(state.curve, state.rho_plus, state.rho_minus, c_cfl)
    if abs(dt) > lim:
        raise CFLError(f"dt={dt:.3e} exceeds the capillary limit {lim:.3e}", lim)
    f = (lambda a: dealias(a, filter_fraction)) if filter_fraction else (lambda a: a)
    z0, p0, t0 = state.curve.nodes, state.psi, state.time
    k1 = rhs(state)
    s2 = _advance(state, f(z0 + 0.5 * dt * k1[0]), f(p0 + 0.5 * dt * k1[1]), t0 + dt / 2)
    k2 = rhs(s2)
    s3 = _advance(state, f(z0 + 0.5 * dt * k2[0]), f(p0 + 0.5 * dt * k2[1]), t0 + dt / 2)
    k3 = rhs(s3)
    s4 = _advance(state, f(z0 + dt * k3[0]), f(p0 + dt * k3[1]), t0 + dt)
    k4 = rhs(s4)
    z = f(z0 + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]))
    p = f(p0 + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))
    new = _advance(state, z, p, t0 + dt)
    if not new.curve.is_simple():
        raise GeometryError(f"interface self-intersects at t={new.time:.6g}")
    return new


def equalize(state: SheetState):
    """Reparametrize to equal arclength, carrying ``psi`` along."""
    from .curve import trig_interpolate

    c = state.curve
    a = c.arclength_alphas()
    z = trig_interpolate(c.nodes, a)
    lin = -state.rho_minus * state.circulation / (2 * np.pi)
    # total psi = periodic + lin * alpha; evaluate at the new parameter values,
    # then subtract the linear part in the new parameter
    psi_total = trig_interpolate(state.psi, a) + lin * a
    psi = psi_total - lin * c.alpha
    return SheetState(ClosedCurve(z), psi - psi.mean(), state.circulation,
                      state.rho_plus, state.rho_minus, state.time, state.area0)


def evolve(state, dt, t_end, **kw):
    """Step to ``t_end`` with a fixed step (the last step is shortened)."""
    while state.time < t_end - 1e-14 * max(1.0, t_end):
        h = min(dt, t_end - state.time)
        state = step(state, h, **kw)
    return state


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunConfig:
    rho_plus: float = 1.0
    rho_minus: float = 1.0
    n_nodes: int = 64
    k_energy: int = 2
    dt: float = 1e-3
    t_end: float = 1.0
    cfl_safety: float = 0.5
    initial_curve: str = "circle"
    initial_gamma: str = "zero"
    report_every: int = 10
    output_dir: str = "out"
    radius: float = 1.0
    amplitude: float = 0.0
    mode: int = 2
    energy_cal: float = float("inf")
    seed: int = 0
    extra: dict = field(default_factory=dict)


def initial_curve(cfg: RunConfig):
    from . import curve as cv

    name = cfg.initial_curve
    n = cfg.n_nodes
    if name == "circle":
        if cfg.amplitude:
            return cv.perturbed_circle(cfg.radius, cfg.amplitude, cfg.mode, n)
        return cv.circle(cfg.radius, n)
    if name.startswith("ellipse"):
        parts = name.split(":")
        a, b = (float(x) for x in parts[1].split(",")) if len(parts) > 1 else (2.0, 1.0)
        return cv.ellipse(a, b, n)
    if name.startswith("perturbed"):
        # perturbed:eps,mode
        eps, m = name.split(":")[1].split(",")
        return cv.perturbed_circle(cfg.radius, float(eps), int(m), n)
    return cv.ClosedCurve.load(name, n)


def initial_gamma(cfg: RunConfig, curve):
    text = cfg.initial_gamma
    if text == "zero":
        return np.zeros(curve.n)
    kind, _, arg = text.partition(":")
    if kind == "uniform":
        return np.full(curve.n, float(arg))
    if kind == "mode":
        m, amp = arg.split(",")
        return float(amp) * np.cos(int(m) * curve.alpha)
    raise ContractError(f"unknown initial_gamma {text!r}")


def initial_state(cfg: RunConfig):
    c = initial_curve(cfg).check()
    c = c.reparametrize_by_arclength()
    return SheetState.from_gamma(c, initial_gamma(cfg, c), cfg.rho_plus, cfg.rho_minus)


@dataclass
class RunRecord:
    time: float
    E0: float
    E: float
    E_A: float
    E_kappa: float
    area_drift: float
    length: float
    resolved: bool


def run(cfg: RunConfig, on_report=None, on_state=None):
    """Integrate to ``t_end`` and emit energy reports at the configured cadence.

    Raises :class:`EnergyBoundExceeded` when ``E(t) > 2 E(0) + energy_cal``.
    Returns the list of :class:`RunRecord` and the final state.
    """
    from .energy import energy_E

    state = initial_state(cfg)
    lim = cfl_limit(state.curve, cfg.rho_plus, cfg.rho_minus, cfg.cfl_safety)
    if cfg.dt > lim:
        raise CFLError(f"dt={cfg.dt:.3e} exceeds the capillary limit {lim:.3e}", lim)
    records = []

    def report(s):
        rep = energy_E(s.curve, s.velocity(), s.rho_plus, s.rho_minus, cfg.k_energy, time=s.time,
                       E0=s.energy0())
        rec = RunRecord(s.time, s.energy0(), rep.E, rep.E_A_term, rep.E_kappa_term,
                        s.area_drift(), s.curve.length, s.curve.resolved)
        records.append(rec)
        if on_report:
            on_report(rec)
        if on_state:
            on_state(s)
        return rec

    first = report(state)
    bound = 2 * first.E + cfg.energy_cal
    i = 0
    n_steps = int(np.ceil(cfg.t_end / cfg.dt - 1e-9))
    for i in range(1, n_steps + 1):
        h = min(cfg.dt, cfg.t_end - state.time)
        state = step(state, h, c_cfl=cfg.cfl_safety)
        if i % cfg.report_every == 0 or i == n_steps:
            rec = report(state)
            if rec.E > bound:
                raise EnergyBoundExceeded(
                    f"E={rec.E:.6g} exceeds 2E(0)+C_cal={bound:.6g} at t={rec.time:.6g}"
                )
    return records, state


def euler_residual(state: SheetState, dt, probes, side):
    """``rho D_t v + grad p`` at fixed probe points.

    ``d_t v`` uses the fourth order central stencil on states stepped by
    ``+-dt, +-2dt``, so the residual converges like the RK4 error.
    """
    from .pressure import pressure_field

    rho = state.rho_plus if side > 0 else state.rho_minus
    vals = {}
    for j in (-2, -1, 1, 2):
        s = state
        for _ in range(abs(j)):
            s = step(s, np.sign(j) * dt)
        vals[j] = s.velocity().value(probes, side)
    dvdt = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * dt)
    vel = state.velocity()
    v = vel.value(probes, side)
    adv = np.einsum("...ij,...j->...i", vel.jacobian(probes, side), v)
    gp = pressure_field(state.curve, vel, state.rho_plus, state.rho_minus).gradient(probes, side)
    return rho * (dvdt + adv) + gp
