"""Harmonic extensions and Dirichlet-to-Neumann maps on both sides of a curve.

Dirichlet problems are solved with a Cauchy-integral (double layer) Nyström
method.  For a real density ``mu`` the Cauchy integral

    Phi(z) = 1/(2 pi i) int_S mu(zeta) / (zeta - z) dzeta

is analytic off ``S`` and its real part is the double layer potential.  With
the singularity subtracted the boundary limits are

    Phi_int = mu + C mu,     Phi_ext = C mu,

    (C mu)_i = 1/(2 pi i) [ sum_{j != i} (mu_j - mu_i) zeta'_j h / (zeta_j - zeta_i)
                            + h mu'_i ],

which is spectrally accurate for smooth data.  The interior problem is
``(I + Re C) mu = f``.  In the exterior ``Re C`` annihilates constants, so a
constant ``c`` (the value at infinity) is added and ``mu`` is pinned to have
zero ``dS`` mean.  This yields the unique bounded exterior solution.

Because ``u = Re Phi`` and the conjugate ``v = Im Phi`` satisfy
``du/dN_plus = dv/ds``, the DtN maps are

    N_plus f  =  d/ds Im Phi_int,      N_minus f = -d/ds Im Phi_ext.
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, cg

from .curve import ClosedCurve, differentiation_matrix, periodic_derivative
from .errors import ConditioningError, ContractError

INTERIOR = "interior"
EXTERIOR = "exterior"
_SIDES = {INTERIOR: +1, EXTERIOR: -1, "+": +1, "-": -1, +1: +1, -1: -1, "plus": +1, "minus": -1}

MEAN_ZERO_TOL = 1e-10
CG_TOL = 1e-10
_CACHE_SIZE = 16
_cache: OrderedDict = OrderedDict()


def side_sign(side):
    """Map any accepted side label to ``+1`` (interior) or ``-1`` (exterior)."""
    try:
        return _SIDES[side]
    except (KeyError, TypeError):
        raise ContractError(f"unknown side {side!r}") from None


def as_complex_points(points):
    p = np.asarray(points)
    if np.iscomplexobj(p):
        return p
    if p.ndim >= 1 and p.shape[-1] == 2:
        return p[..., 0] + 1j * p[..., 1]
    return p.astype(complex)


def cauchy_matrix(curve):
    """Singularity-subtracted Cauchy boundary operator ``C``."""
    z, dz, h = curve.nodes, curve.dz, curve.h
    n = curve.n
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    K = dz[None, :] * h / diff
    np.fill_diagonal(K, 0.0)
    K -= np.diag(K.sum(axis=1))
    K += h * differentiation_matrix(n)
    return K / (2j * np.pi)


class BoundaryOperators:
    """Assembled, factorized Nyström operators for one curve (immutable)."""

    def __init__(self, curve: ClosedCurve):
        self.curve = curve
        self._D = differentiation_matrix(curve.n)

    @cached_property
    def cauchy(self):
        return cauchy_matrix(self.curve)

    @cached_property
    def _interior_lu(self):
        A = np.eye(self.curve.n) + self.cauchy.real
        return sla.lu_factor(A, check_finite=False)

    @cached_property
    def _exterior_lu(self):
        n = self.curve.n
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = self.cauchy.real
        A[:n, n] = 1.0
        A[n, :n] = self.curve.weights
        return sla.lu_factor(A, check_finite=False)

    def solve_density(self, f, side):
        """Return ``(mu, far_field_constant)`` for Dirichlet data ``f``."""
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.curve.n:
            raise ContractError("boundary data length must equal the number of nodes")
        if side_sign(side) > 0:
            mu = sla.lu_solve(self._interior_lu, f, check_finite=False)
            res = mu + self.cauchy.real @ mu - f
            const = 0.0 if f.ndim == 1 else np.zeros(f.shape[1:])
        else:
            pad = np.zeros((1,) + f.shape[1:])
            sol = sla.lu_solve(self._exterior_lu, np.concatenate([f, pad]), check_finite=False)
            mu, const = sol[:-1], sol[-1]
            res = self.cauchy.real @ mu + const - f
        scale = max(1.0, float(np.max(np.abs(f))) if f.size else 1.0)
        if not np.all(np.isfinite(mu)) or np.max(np.abs(res)) > 1e-8 * scale:
            raise ConditioningError("Nyström Dirichlet solve failed", residual=float(np.max(np.abs(res))))
        return mu, const

    def analytic_trace(self, f, side):
        """Boundary values of the analytic ``Phi`` with ``Re Phi = f`` on the chosen side."""
        mu, const = self.solve_density(f, side)
        imag = (self.cauchy @ mu).imag
        return f + 1j * imag, mu, const

    @cached_property
    def dtn_plus(self):
        return self._dtn_matrix(+1)

    @cached_property
    def dtn_minus(self):
        return self._dtn_matrix(-1)

    def _dtn_matrix(self, sign):
        n = self.curve.n
        if sign > 0:
            mu = sla.lu_solve(self._interior_lu, np.eye(n), check_finite=False)
        else:
            rhs = np.vstack([np.eye(n), np.zeros((1, n))])
            mu = sla.lu_solve(self._exterior_lu, rhs, check_finite=False)[:-1]
        imag = (self.cauchy @ mu).imag
        return sign * (self._D @ imag) / self.curve.speed[:, None]

    def dtn_matrix(self, side):
        return self.dtn_plus if side_sign(side) > 0 else self.dtn_minus

    def combined_matrix(self, rho_plus, rho_minus):
        return self.dtn_plus / rho_plus + self.dtn_minus / rho_minus

    def save_matrix(self, path, side):
        """Write the side's DtN matrix to the binary cache format."""
        M = np.ascontiguousarray(self.dtn_matrix(side), dtype="<f8")
        key = self.curve.key.encode()
        header = struct.pack("<40sqq", key, self.curve.n, side_sign(side))
        Path(path).write_bytes(header + M.tobytes())


def load_matrix(path, curve, side):
    """Read a cached DtN matrix; returns ``None`` when it belongs to another curve."""
    raw = Path(path).read_bytes()
    size = struct.calcsize("<40sqq")
    key, n, sign = struct.unpack("<40sqq", raw[:size])
    if key.decode() != curve.key or n != curve.n or sign != side_sign(side):
        return None
    return np.frombuffer(raw[size:], dtype="<f8").reshape(n, n).copy()


def operators(curve: ClosedCurve) -> BoundaryOperators:
    """Per-curve operator bundle, cached on the node hash."""
    ops = _cache.get(curve.key)
    if ops is None:
        ops = BoundaryOperators(curve)
        _cache[curve.key] = ops
        if len(_cache) > _CACHE_SIZE:
            _cache.popitem(last=False)
    else:
        _cache.move_to_end(curve.key)
    return ops


# ---------------------------------------------------------------------------
# analytic functions from boundary traces


@dataclass(frozen=True, eq=False)
class AnalyticTrace:
    """Boundary values of a function analytic on one side of ``curve``.

    Evaluation off the curve uses the barycentric form of the Cauchy formula,
    which stays accurate close to the boundary.  For the exterior the value
    at infinity must be supplied.
    """

    curve: ClosedCurve
    values: np.ndarray
    side: int
    at_infinity: complex = 0j

    def __call__(self, points):
        z = as_complex_points(points)
        shape = z.shape
        z = z.ravel()
        nodes, dz, h = self.curve.nodes, self.curve.dz, self.curve.h
        out = np.empty(z.shape, dtype=complex)
        diff = nodes[None, :] - z[:, None]
        hit = np.abs(diff) < 1e-14 * (1 + np.abs(nodes[None, :]))
        rows = hit.any(axis=1)
        diff[hit] = 1.0
        c = dz[None, :] * h / diff
        tau = self.values
        if self.side > 0:
            out = (c @ tau) / c.sum(axis=1)
        else:
            a = self.at_infinity
            out = a + (c @ (tau - a)) / (c.sum(axis=1) - 2j * np.pi)
        if rows.any():
            out[rows] = tau[np.argmax(hit[rows], axis=1)]
        return out.reshape(shape)

    def derivative(self):
        d = periodic_derivative(self.values) / self.curve.dz
        return AnalyticTrace(self.curve, d, self.side, 0j)


@dataclass(frozen=True, eq=False)
class HarmonicExtension:
    """Bounded harmonic function on one side with prescribed boundary values."""

    curve: ClosedCurve
    side: int
    density: np.ndarray
    boundary_trace: np.ndarray
    far_field_constant: float
    phi: AnalyticTrace

    @cached_property
    def _dphi(self):
        return self.phi.derivative()

    @cached_property
    def _ddphi(self):
        return self._dphi.derivative()

    def value(self, points):
        return self.phi(points).real

    def gradient(self, points):
        g = np.conj(self._dphi(points))
        return np.stack([g.real, g.imag], axis=-1)

    def hessian(self, points):
        d2 = self._ddphi(points)
        hxx, hxy = d2.real, -d2.imag
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, -hxx], -1)], -2)

    def normal_derivative(self):
        """``du/dN_side`` on the curve."""
        return dtn(self.curve, self.boundary_trace, self.side)

    def boundary_gradient(self):
        g = np.conj(self._dphi.values)
        return np.stack([g.real, g.imag], axis=-1)


def harmonic_extend(curve: ClosedCurve, f, side) -> HarmonicExtension:
    curve.warn_if_unresolved()
    s = side_sign(side)
    f = np.asarray(f, dtype=float)
    trace, mu, const = operators(curve).analytic_trace(f, s)
    a_inf = complex(const) if s < 0 else 0j
    phi = AnalyticTrace(curve, trace, s, a_inf)
    return HarmonicExtension(curve, s, mu, f.copy(), float(const) if s < 0 else float("nan"), phi)


def dtn(curve: ClosedCurve, f, side):
    """``N_side f``: outward normal derivative of the harmonic extension."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != curve.n:
        raise ContractError("boundary data length must equal the number of nodes")
    return operators(curve).dtn_matrix(side) @ f


def dtn_combined(curve, f, rho_plus, rho_minus):
    _check_densities(rho_plus, rho_minus)
    return operators(curve).combined_matrix(rho_plus, rho_minus) @ np.asarray(f, dtype=float)


def dtn_bar(curve, f, rho_plus, rho_minus):
    """``(1/rho+) N+ N^{-1} (1/rho-) N- f``."""
    _check_densities(rho_plus, rho_minus)
    g = dtn(curve, f, -1) / rho_minus
    g = curve.project_mean_zero(g)
    return dtn(curve, dtn_inverse(curve, g, rho_plus, rho_minus), +1) / rho_plus


def dtn_inverse(curve, g, rho_plus, rho_minus, tol=CG_TOL):
    """Mean-zero solution ``h`` of ``N h = g`` by conjugate gradients.

    The system is posed in the ``dS`` inner product, ``W N h = W g``, with the
    rank-one term ``w w^T / L`` added so that the operator is definite and the
    solution is forced to have zero mean.
    """
    _check_densities(rho_plus, rho_minus)
    g = np.asarray(g, dtype=float)
    norm = curve.l2_norm(g)
    if norm == 0.0:
        return np.zeros(curve.n)
    if abs(curve.integrate(g)) > MEAN_ZERO_TOL * max(norm, 1e-300) * np.sqrt(curve.length):
        raise ContractError("dtn_inverse requires mean-zero data")
    g = range_projection(curve, g)
    w = curve.weights
    A = w[:, None] * operators(curve).combined_matrix(rho_plus, rho_minus)
    # kernel of the discrete DtN maps: constants and the alternating grid mode
    p = (-1.0) ** np.arange(curve.n)
    A = 0.5 * (A + A.T) + np.outer(w, w) / curve.length + np.outer(p, p) * (np.mean(np.diag(A)) / curve.n)
    b = w * g
    # Jacobi scaling keeps CG iteration counts insensitive to the node spacing
    d = 1.0 / np.sqrt(np.diag(A))
    As = d[:, None] * A * d[None, :]
    op = LinearOperator(As.shape, matvec=lambda x: As @ x, dtype=float)
    maxiter = 10 * curve.n
    # solve for unit data: scipy's breakdown guard is absolute, not relative
    bn = np.linalg.norm(b)
    y, _ = cg(op, d * b / bn, rtol=tol, atol=0.0, maxiter=maxiter)
    h = d * y
    res = np.linalg.norm(A @ h - b / bn)
    h *= bn
    if res > 10 * tol:
        raise ConditioningError("conjugate gradients stagnated in dtn_inverse", residual=float(res))
    return curve.project_mean_zero(h)


def range_projection(curve, g):
    """Project ``g`` onto the range of the discrete DtN maps.

    That range is ``{f : speed * f has no mean and no Nyquist mode}``; for
    mean-zero smooth data the change is at the level of the Nyquist
    coefficient.
    """
    u = np.fft.fft(np.asarray(g, dtype=float) * curve.speed)
    u[0] = 0.0
    if curve.n % 2 == 0:
        u[curve.n // 2] = 0.0
    return np.fft.ifft(u).real / curve.speed


def dtn_inverse_sqrt(curve, g, rho_plus, rho_minus):
    """``N^{-1/2} g`` for mean-zero ``g`` via a symmetric eigendecomposition."""
    evals, evecs = _weighted_eigs(curve, rho_plus, rho_minus)
    w = np.sqrt(curve.weights)
    coef = evecs.T @ (w * np.asarray(g, dtype=float))
    return curve.project_mean_zero(evecs @ (coef / np.sqrt(evals)) / w)


def _weighted_eigs(curve, rho_plus, rho_minus):
    """Eigenpairs of ``W^{1/2} N W^{-1/2}`` on the mean-zero subspace."""
    w = np.sqrt(curve.weights)
    A = w[:, None] * operators(curve).combined_matrix(rho_plus, rho_minus) / w[None, :]
    A = 0.5 * (A + A.T)
    evals, evecs = np.linalg.eigh(A)
    # drop the two kernel directions: constants and the alternating grid mode
    keep = np.argsort(np.abs(evals))[2:] if curve.n % 2 == 0 else np.argsort(np.abs(evals))[1:]
    keep = np.sort(keep)
    return evals[keep], evecs[:, keep]


def _check_densities(rho_plus, rho_minus):
    if not (rho_plus > 0 and rho_minus > 0):
        raise ContractError("densities must be positive")


def poisson(curve, source, side, **kwargs):
    """Solve ``-Lap u = source`` with ``u = 0`` on ``curve``; see :mod:`volume`."""
    from .volume import PoissonSolver

    return PoissonSolver.for_curve(curve, side, **kwargs).solve(source)


def sqrt_laplacian_defect_norm(curve, side, band=None):
    """Operator norm of ``(-Lap_S)^{1/2} - N_side`` on band-limited data.

    The defect is smoothing, so it is measured on trigonometric polynomials
    of degree ``<= band`` (default ``n // 4``) in the ``L^2(S)`` norm; the
    discrete top modes carry the kernel of the Nystrom DtN maps and are excluded.
    """
    from .curve import laplacian_matrix

    n = curve.n
    band = n // 4 if band is None else band
    w = np.sqrt(curve.weights)
    L = -w[:, None] * laplacian_matrix(curve) / w[None, :]
    L = 0.5 * (L + L.T)
    ev, V = np.linalg.eigh(L)
    ev = np.where(ev < 1e-9 * ev.max(), 0.0, ev)  # constants: sqrt would amplify round-off
    root = (V * np.sqrt(ev)) @ V.T
    Dn = w[:, None] * operators(curve).dtn_matrix(side) / w[None, :]
    a = curve.alpha
    cols = [np.ones(n)] + [f(k * a) for k in range(1, band + 1) for f in (np.cos, np.sin)]
    Q, _ = np.linalg.qr(w[:, None] * np.stack(cols, axis=1))
    return float(np.linalg.norm((root - Dn) @ Q, 2))
