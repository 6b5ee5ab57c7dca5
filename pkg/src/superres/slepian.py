"""Construction of the maximally time-concentrated band-limited kernel.

The kernel is the top discrete prolate spheroidal wave function: among unit
energy signals band-limited to [-f_C : f_C], it maximizes the energy inside
the short time window of half-width sigma around the origin. Its Fourier
coefficients are the top Slepian sequence, computed from the symmetric
tridiagonal matrix that commutes with the time-concentration operator
(numerically far better conditioned than the sinc Gram matrix itself).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, toeplitz

from .spectral import Spectrum, ells, eval_grid


@dataclass(frozen=True)
class SlepianKernel:
    """Top concentrated kernel: unit energy, even coefficients, peak at 0."""

    f_c: int
    c: float
    ghat: np.ndarray  # real Fourier coefficients, index l = -f_C .. f_C
    concentration: float  # fraction of energy inside wrap_dist(t, 0) <= sigma

    def __post_init__(self):
        ghat = np.asarray(self.ghat, dtype=float).copy()
        ghat.setflags(write=False)
        object.__setattr__(self, "ghat", ghat)

    @property
    def n(self) -> int:
        return 2 * self.f_c + 1

    @property
    def sigma(self) -> float:
        return self.c / self.n

    def spectrum(self) -> Spectrum:
        return Spectrum(self.f_c, self.ghat.astype(complex), real_signal=True)

    def peak(self) -> float:
        """Kernel value at the origin."""
        return float(self.ghat.sum())


def concentration_gram(f_c: int, sigma: float) -> np.ndarray:
    """Sinc Gram matrix A[l,m] = sin(2 pi sigma (l-m)) / (pi (l-m)), A[l,l] = 2 sigma."""
    n = 2 * f_c + 1
    k = np.arange(n, dtype=float)
    col = np.empty(n)
    col[0] = 2.0 * sigma
    col[1:] = np.sin(2.0 * np.pi * sigma * k[1:]) / (np.pi * k[1:])
    return toeplitz(col)


def build_kernel(f_c: int, c: float) -> SlepianKernel:
    """Build the top concentrated kernel for half-width sigma = c / (2 f_C + 1)."""
    if f_c < 1:
        raise ValueError("f_c must be >= 1")
    n = 2 * f_c + 1
    sigma = c / n
    if not 0.0 < sigma < 0.5:
        raise ValueError("sigma out of range")

    k = np.arange(n, dtype=float)
    diag = ((n - 1) / 2.0 - k) ** 2 * np.cos(2.0 * np.pi * sigma)
    off = k[1:] * (n - k[1:]) / 2.0
    _, vecs = eigh_tridiagonal(diag, off)

    # The commuting matrix's eigenvalue order need not match concentration
    # order, so pick the eigenvector with the largest Gram Rayleigh quotient.
    gram = concentration_gram(f_c, sigma)
    quotients = np.einsum("ij,ij->j", vecs, gram @ vecs)
    top = int(np.argmax(quotients))
    ghat = vecs[:, top]

    ghat = 0.5 * (ghat + ghat[::-1])  # make evenness exact
    ghat /= np.linalg.norm(ghat)
    if ghat.sum() < 0.0:
        ghat = -ghat
    concentration = float(ghat @ gram @ ghat)
    return SlepianKernel(f_c=f_c, c=c, ghat=ghat, concentration=concentration)


def kernel_derivative_coeffs(kernel: SlepianKernel) -> np.ndarray:
    """Fourier coefficients of the kernel derivative: (i 2 pi l) ghat[l]."""
    return 2j * np.pi * ells(kernel.f_c) * kernel.ghat


def corr_gg(kernel: SlepianKernel, delta) -> np.ndarray:
    """<g(. - rho1), g(. - rho2)> as a function of delta = rho1 - rho2."""
    delta = np.asarray(delta, dtype=float)
    ls = ells(kernel.f_c)
    return np.cos(2.0 * np.pi * np.multiply.outer(delta, ls)) @ kernel.ghat**2


def corr_gdg(kernel: SlepianKernel, delta) -> np.ndarray:
    """<g(. - rho1), g'(. - rho2)> as a function of delta = rho1 - rho2."""
    delta = np.asarray(delta, dtype=float)
    ls = ells(kernel.f_c)
    return -np.sin(2.0 * np.pi * np.multiply.outer(delta, ls)) @ (2.0 * np.pi * ls * kernel.ghat**2)


def corr_dgdg(kernel: SlepianKernel, delta) -> np.ndarray:
    """<g'(. - rho1), g'(. - rho2)> as a function of delta = rho1 - rho2."""
    delta = np.asarray(delta, dtype=float)
    ls = ells(kernel.f_c)
    return np.cos(2.0 * np.pi * np.multiply.outer(delta, ls)) @ ((2.0 * np.pi * ls) ** 2 * kernel.ghat**2)


@dataclass(frozen=True)
class CriteriaReport:
    """Empirically measured kernel constants at fixed N.

    The underlying bounds are asymptotic, so this reports constants rather
    than asserting pass/fail.
    """

    f_c: int
    c: float
    peak: float
    concentration: float
    decay_envelope_max: float  # max |g(t)| sin(pi t) sqrt(N) over t in [sigma, 1/2]
    far_corr_gg: float  # max |<g, g shifted>| N sin(pi d) over d >= 2 sigma
    far_corr_gdg: float  # max |<g, g' shifted>| sin(pi d) over d >= 2 sigma
    far_corr_dgdg: float  # max |<g', g' shifted>| sin(pi d) / N over d >= 2 sigma
    deriv_energy: float  # ||g'||_L2^2
    near_autocorr_curvature: float  # max (1 - <g, g shifted>) / d^2 for small d
    near_deriv_slope: float  # min |<g, g' shifted>| / (N^2 d) for small d
    sign_convention_holds: bool  # sign <g(.-r1), g'(.-r2)> == sign(r1 - r2 wrapped)


def check_criteria(kernel: SlepianKernel, sink=None, oversample: int = 32) -> CriteriaReport:
    """Measure decay, far-shift correlation, and near-origin flatness constants."""
    n = kernel.n
    sigma = kernel.sigma
    m = oversample * n
    g = eval_grid(kernel.spectrum(), m)
    t = np.arange(m) / m

    tail = (t >= sigma) & (t <= 0.5)
    decay_env = np.abs(g[tail]) * np.sin(np.pi * t[tail]) * np.sqrt(n)

    far = np.linspace(2.0 * sigma, 0.5, 512)
    sin_far = np.sin(np.pi * far)
    far_gg = np.abs(corr_gg(kernel, far)) * n * sin_far
    far_gdg = np.abs(corr_gdg(kernel, far)) * sin_far
    far_dgdg = np.abs(corr_dgdg(kernel, far)) * sin_far / n

    near = np.linspace(sigma / 256.0, sigma / 4.0, 64)
    near_curv = (1.0 - corr_gg(kernel, near)) / near**2
    near_slope = np.abs(corr_gdg(kernel, near)) / (n**2 * near)

    # Moving rho1 past rho2 flips the correlation sign; wrapped negative
    # offsets (rho1 - rho2 mod 1 close to 1) carry the opposite sign.
    sign_ok = bool(
        np.all(np.sign(corr_gdg(kernel, near)) == -1.0)
        and np.all(np.sign(corr_gdg(kernel, -near)) == 1.0)
    )

    report = CriteriaReport(
        f_c=kernel.f_c,
        c=kernel.c,
        peak=kernel.peak(),
        concentration=kernel.concentration,
        decay_envelope_max=float(decay_env.max()),
        far_corr_gg=float(far_gg.max()),
        far_corr_gdg=float(far_gdg.max()),
        far_corr_dgdg=float(far_dgdg.max()),
        deriv_energy=float(np.sum((2.0 * np.pi * ells(kernel.f_c)) ** 2 * kernel.ghat**2)),
        near_autocorr_curvature=float(near_curv.max()),
        near_deriv_slope=float(near_slope.min()),
        sign_convention_holds=sign_ok,
    )
    if sink is not None:
        out = sink if hasattr(sink, "write") else sys.stdout
        for name, value in report.__dict__.items():
            out.write(f"{name}: {value}\n")
    return report
