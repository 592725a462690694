"""Spectral representation of a closed planar interface.

The interface is a counter-clockwise curve ``z(alpha)`` sampled at ``n``
equispaced parameter values ``alpha_j = 2*pi*j/n``.  Points are stored as
complex numbers ``x + iy``.  Every intrinsic quantity is computed with FFT
differentiation in ``alpha`` and converted to arclength with the chain rule.

Conventions
-----------
* ``tangent`` is ``z'/|z'|``; the outward normal of the bounded interior
  region is ``-i * tangent`` (``N_plus``).  ``N_minus = -N_plus``.
* ``curvature`` is ``kappa_plus``: ``+1/R`` on a circle of radius ``R``, so
  that the first variation of length under the normal displacement
  ``eps * f * N_plus`` is ``int kappa_plus f dS``.
* Boundary fields are plain real arrays of length ``n`` holding the values at
  the collocation nodes; quadrature against ``dS`` uses :attr:`ClosedCurve.weights`.
* Sobolev norms use the flat weight ``(1 + m**2)**s`` on the Fourier
  coefficients of the field re-expanded in the arclength parameter
  ``theta = 2*pi*s/L``.  With ``f = sum_m c_m exp(i m theta)`` the norm is
  ``sqrt(L * sum_m (1 + m**2)**s |c_m|**2)``; at ``s = 0`` this is exactly the
  ``L^2(dS)`` norm.  On the unit circle ``|cos theta|_{H^1} = sqrt(2*pi)``.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ContractError, GeometryError, ResolutionWarning

RESOLUTION_TOL = 1e-10
SIMPLICITY_FRACTION = 0.5


def wavenumbers(n):
    """Integer FFT wavenumbers with the Nyquist mode zeroed."""
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return k


def periodic_derivative(f, order=1):
    """Spectral derivative in ``alpha`` of periodic samples (real or complex)."""
    f = np.asarray(f)
    ik = 1j * wavenumbers(f.shape[-1])
    out = np.fft.ifft(ik**order * np.fft.fft(f, axis=-1), axis=-1)
    return out.real if np.isrealobj(f) else out


def differentiation_matrix(n):
    """Dense first-derivative matrix on ``n`` equispaced periodic nodes.

    Built from the FFT rule with the Nyquist mode dropped, so it is exactly
    antisymmetric for every ``n``.
    """
    return periodic_derivative(np.eye(n)).T


def trig_interpolate(f, alpha):
    """Evaluate the trigonometric interpolant of samples ``f`` at ``alpha``."""
    f = np.asarray(f)
    n = f.shape[-1]
    c = np.fft.fft(f) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        # split the Nyquist coefficient symmetrically so real data stays real
        c = np.concatenate([c, [c[n // 2] / 2]])
        c[n // 2] /= 2
        k = np.concatenate([k, [n // 2]])
    vals = np.exp(1j * np.outer(np.atleast_1d(alpha), k)) @ c
    return vals.real if np.isrealobj(f) else vals


def resample_periodic(f, m):
    """Band-limited resampling of periodic samples onto ``m`` equispaced nodes."""
    f = np.asarray(f)
    n = f.shape[-1]
    if m == n:
        return f.copy()
    return trig_interpolate(f, 2 * np.pi * np.arange(m) / m)


def _polygon_self_crosses(z):
    """True when two non-adjacent edges of the closed polygon ``z`` intersect."""
    a, b = z, np.roll(z, -1)

    def orient(p, q, r):
        return np.sign(np.imag(np.conj(q - p) * (r - p)))

    o1 = orient(a[:, None], b[:, None], a[None, :])
    o2 = orient(a[:, None], b[:, None], b[None, :])
    o3 = orient(a[None, :], b[None, :], a[:, None])
    o4 = orient(a[None, :], b[None, :], b[:, None])
    n = z.size
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    sep = np.minimum(sep, n - sep)
    cross = (o1 * o2 < 0) & (o3 * o4 < 0) & (sep >= 2)
    return bool(cross.any())


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Closed, counter-clockwise, regular planar curve given by its nodes."""

    nodes: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.nodes, dtype=complex).copy()
        z.setflags(write=False)
        object.__setattr__(self, "nodes", z)
        if z.ndim != 1 or z.size < 8:
            raise GeometryError("a curve needs at least 8 nodes")
        if np.min(np.abs(self.dz)) < 1e-12 * max(1.0, np.max(np.abs(z))):
            raise GeometryError("degenerate parametrization: |z'| vanishes at a node")
        if self.signed_area <= 0:
            raise GeometryError("curve must be oriented counter-clockwise")

    # construction -----------------------------------------------------

    @classmethod
    def from_function(cls, func, n):
        alpha = 2 * np.pi * np.arange(n) / n
        return cls(np.asarray(func(alpha), dtype=complex))

    @classmethod
    def from_spectrum(cls, coefficients, n_nodes=None):
        """Build from coefficients ``c_m``, ``m = -M..M`` of ``z = sum c_m e^{i m alpha}``."""
        c = np.asarray(coefficients, dtype=complex)
        M = (c.size - 1) // 2
        if n_nodes is None:
            n_nodes = 2 * M + 2
        if n_nodes < 2 * M + 2:
            raise ContractError("n_nodes must be at least 2M+2")
        modes = np.arange(-M, M + 1)
        return cls.from_function(lambda a: np.exp(1j * np.outer(a, modes)) @ c, n_nodes)

    # basic data -------------------------------------------------------

    @property
    def n(self):
        return self.nodes.size

    @property
    def alpha(self):
        return 2 * np.pi * np.arange(self.n) / self.n

    @property
    def h(self):
        return 2 * np.pi / self.n

    @cached_property
    def dz(self):
        return periodic_derivative(self.nodes)

    @cached_property
    def ddz(self):
        return periodic_derivative(self.dz)

    @cached_property
    def speed(self):
        """``|z'(alpha)|``, i.e. ``ds/dalpha``."""
        return np.abs(self.dz)

    @cached_property
    def weights(self):
        """Trapezoidal ``dS`` quadrature weights."""
        return self.speed * self.h

    @cached_property
    def length(self):
        return float(np.sum(self.weights))

    @cached_property
    def signed_area(self):
        return float(0.5 * np.sum(np.imag(np.conj(self.nodes) * self.dz)) * self.h)

    @cached_property
    def centroid(self):
        z, dz = self.nodes, self.dz
        # area centroid via Green's theorem
        cx = np.sum(z.real**2 * dz.imag) * self.h / 2
        cy = -np.sum(z.imag**2 * dz.real) * self.h / 2
        return complex(cx, cy) / self.signed_area

    @cached_property
    def tangent(self):
        return self.dz / self.speed

    @cached_property
    def normal(self):
        """Outward normal ``N_plus`` of the bounded region, as complex numbers."""
        return -1j * self.tangent

    @cached_property
    def curvature(self):
        """``kappa_plus``: positive on convex parts of a counter-clockwise curve."""
        return np.imag(np.conj(self.dz) * self.ddz) / self.speed**3

    @cached_property
    def spectrum(self):
        """Fourier coefficients of ``z``, ordered ``m = -n/2+1 .. n/2-1``."""
        c = np.fft.fftshift(np.fft.fft(self.nodes) / self.n)
        return c[1:] if self.n % 2 == 0 else c

    @cached_property
    def spectral_tail(self):
        """Energy fraction carried by the trailing third of the spectrum."""
        c = np.fft.fft(self.nodes) / self.n
        k = np.abs(np.fft.fftfreq(self.n, 1.0 / self.n))
        energy = np.abs(c) ** 2
        return float(energy[k > self.n / 3].sum() / energy.sum())

    @property
    def resolved(self):
        return self.spectral_tail < RESOLUTION_TOL

    @cached_property
    def key(self):
        """Stable hash of the node data, used to cache assembled operators."""
        return hashlib.sha1(self.nodes.tobytes()).hexdigest()

    def warn_if_unresolved(self):
        if not self.resolved:
            warnings.warn(
                f"curve spectrum tail {self.spectral_tail:.2e} exceeds {RESOLUTION_TOL:.0e}",
                ResolutionWarning,
                stacklevel=3,
            )

    def is_simple(self, fraction=SIMPLICITY_FRACTION):
        """Pairwise node-distance test for self-intersection."""
        z = self.nodes
        d = np.abs(z[:, None] - z[None, :])
        idx = np.arange(self.n)
        sep = np.abs(idx[:, None] - idx[None, :])
        sep = np.minimum(sep, self.n - sep)
        mesh = np.maximum(self.weights[:, None], self.weights[None, :])
        mask = sep >= 2
        if not np.all(d[mask] > fraction * mesh[mask]):
            return False
        return not _polygon_self_crosses(z)

    def check(self):
        if not self.is_simple():
            raise GeometryError("curve is not simple (nodes approach each other)")
        return self

    # transformations --------------------------------------------------

    def with_nodes(self, n):
        """Spectrally resample to ``n`` nodes."""
        return ClosedCurve(resample_periodic(self.nodes, n))

    def arclength(self):
        """Arclength ``s(alpha_j)`` measured from node 0."""
        sp = self.speed
        mean = sp.mean()
        fluct = np.fft.fft(sp - mean)
        k = wavenumbers(self.n)
        k[0] = 1.0
        integ = np.fft.ifft(np.where(wavenumbers(self.n) == 0, 0, fluct / (1j * k))).real
        return mean * self.alpha + integ - integ[0]

    def arclength_alphas(self, m=None):
        """Parameter values at which arclength is equispaced (``m`` points)."""
        m = self.n if m is None else m
        sp = self.speed
        mean = sp.mean()
        c = np.fft.fft(sp - mean) / self.n
        k = wavenumbers(self.n)
        safe = np.where(k == 0, 1.0, k)
        # s(a) = mean*a + sum_k c_k (e^{ika}-1)/(ik)
        def s_of(a):
            e = np.exp(1j * np.outer(a, k))
            return mean * a + ((e - 1) / (1j * safe) * (k != 0)) @ c

        def ds_of(a):
            return mean + (np.exp(1j * np.outer(a, k)) * (k != 0)) @ c

        target = self.length * np.arange(m) / m
        a = 2 * np.pi * np.arange(m) / m
        for _ in range(50):
            step = (s_of(a).real - target) / ds_of(a).real
            a = a - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return a

    def reparametrize_by_arclength(self, m=None):
        """Same geometric curve, with nodes equispaced in arclength."""
        return ClosedCurve(trig_interpolate(self.nodes, self.arclength_alphas(m)))

    def to_arclength_samples(self, f):
        """Values of the field ``f`` at arclength-equispaced points."""
        return trig_interpolate(np.asarray(f), self.arclength_alphas())

    def integrate(self, f):
        """``int_S f dS`` by the trapezoidal rule."""
        return np.sum(np.asarray(f) * self.weights, axis=-1)

    def inner(self, f, g):
        return float(np.sum(np.asarray(f) * np.asarray(g) * self.weights))

    def l2_norm(self, f):
        return float(np.sqrt(self.inner(f, f)))

    def mean(self, f):
        return float(self.integrate(f) / self.length)

    def project_mean_zero(self, f):
        return np.asarray(f, dtype=float) - self.mean(f)

    def d_ds(self, f):
        """Arclength derivative of a periodic scalar field."""
        return periodic_derivative(f) / self.speed

    # serialization ----------------------------------------------------

    def to_text(self):
        M = (self.n - 1) // 2 if self.n % 2 else self.n // 2 - 1
        c = np.fft.fft(self.nodes) / self.n
        modes = np.arange(-M, M + 1)
        lines = ["curve-spec v1", str(M)]
        for m in modes:
            v = c[m % self.n]
            lines.append(repr(float(v.real)))
            lines.append(repr(float(v.imag)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, n_nodes=None):
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or lines[0] != "curve-spec v1":
            raise ContractError("missing 'curve-spec v1' header")
        M = int(lines[1])
        vals = np.array([float(v) for v in lines[2:]])
        if vals.size != 2 * (2 * M + 1):
            raise ContractError(f"expected {2 * (2 * M + 1)} coefficients, got {vals.size}")
        return cls.from_spectrum(vals[0::2] + 1j * vals[1::2], n_nodes)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path, n_nodes=None):
        return cls.from_text(Path(path).read_text(), n_nodes)


# presets ------------------------------------------------------------------


def circle(radius=1.0, n=64, center=0j):
    return ClosedCurve.from_function(lambda a: center + radius * np.exp(1j * a), n)


def ellipse(a=2.0, b=1.0, n=64, center=0j):
    return ClosedCurve.from_function(lambda t: center + a * np.cos(t) + 1j * b * np.sin(t), n)


def perturbed_circle(radius=1.0, eps=0.1, mode=3, n=64, phase=0.0):
    """``R (1 + eps cos(mode*alpha + phase)) e^{i alpha}``."""
    return ClosedCurve.from_function(
        lambda a: radius * (1 + eps * np.cos(mode * a + phase)) * np.exp(1j * a), n
    )


def random_smooth_field(curve, rng, n_modes=6, decay=1.0):
    """Random band-limited real field on the curve (in the ``alpha`` parameter)."""
    a = curve.alpha
    f = np.zeros(curve.n)
    for m in range(0, n_modes + 1):
        amp = np.exp(-decay * m / 3)
        f += amp * (rng.standard_normal() * np.cos(m * a) + rng.standard_normal() * np.sin(m * a))
    return f


# intrinsic calculus ----------------------------------------------------------


def frame(curve):
    """Unit tangent and outward normal ``N_plus`` as ``(n, 2)`` real arrays."""
    t = curve.tangent
    nrm = curve.normal
    return np.column_stack([t.real, t.imag]), np.column_stack([nrm.real, nrm.imag])


def curvature(curve):
    curve.warn_if_unresolved()
    return curve.curvature.copy()


def surface_laplacian(curve, f):
    """Laplace-Beltrami operator ``d^2 f / ds^2`` on the closed curve.

    Written as ``(1/s') D (1/s') D`` with the antisymmetric FFT derivative
    ``D``, which makes it exactly symmetric and negative semidefinite in the
    discrete ``dS`` inner product.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (curve.n,):
        raise ContractError("field length must equal the number of nodes")
    sp = curve.speed
    return periodic_derivative(periodic_derivative(f) / sp) / sp


def laplacian_matrix(curve):
    sp = curve.speed
    D = differentiation_matrix(curve.n)
    return (D / sp[:, None]) @ (D / sp[:, None])


def surface_divergence(curve, w_top):
    """Surface divergence of a tangent field.

    ``w_top`` is either the scalar ``g`` of ``g * tangent`` or an ``(n, 2)``
    array of vectors, which must then be tangent.
    """
    w = np.asarray(w_top, dtype=float)
    if w.ndim == 2:
        tan, nrm = frame(curve)
        normal_part = np.einsum("ij,ij->i", w, nrm)
        scale = max(1.0, float(np.max(np.abs(w))))
        if np.max(np.abs(normal_part)) > 1e-8 * scale:
            raise ContractError("surface_divergence expects a tangent vector field")
        w = np.einsum("ij,ij->i", w, tan)
    return curve.d_ds(w)


def sobolev_norm(curve, f, s):
    """Flat-weight ``H^s(S)`` norm in the arclength Fourier basis."""
    if not -2.0 <= s <= 4.0:
        raise ContractError("Sobolev order must lie in [-2, 4]")
    g = curve.to_arclength_samples(np.asarray(f, dtype=float))
    c = np.fft.fft(g) / g.size
    m = np.fft.fftfreq(g.size, 1.0 / g.size)
    return float(np.sqrt(curve.length * np.sum((1 + m**2) ** s * np.abs(c) ** 2)))


def normal_component(curve, vectors, side=+1):
    """``v . N_side`` for an ``(n, 2)`` array of vectors."""
    _, nrm = frame(curve)
    return side * np.einsum("ij,ij->i", np.asarray(vectors), nrm)


def tangential_component(curve, vectors):
    tan, _ = frame(curve)
    return np.einsum("ij,ij->i", np.asarray(vectors), tan)


def simons_residual(curve):
    """Residual of ``-Lap_S Pi + D^2 kappa - (|Pi|^2 I - kappa Pi) Pi`` on a curve.

    For curves ``Pi = kappa tau (x) tau`` and ``|Pi|^2 = kappa^2``, so each term
    is a multiple of ``tau (x) tau`` and the residual collapses to a scalar.
    The second covariant derivative of ``kappa`` along ``tau`` equals
    ``Lap_S kappa``; the cubic term is ``(kappa^2 - kappa^2) kappa``.
    """
    k = curve.curvature
    lap_pi = surface_laplacian(curve, k)
    hess_k = curve.d_ds(curve.d_ds(k))
    cubic = (k**2 - k * k) * k
    return -lap_pi + hess_k - cubic
