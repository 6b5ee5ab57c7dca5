"""Local refinement: box-constrained projected Newton on candidate positions.

The objective F(rho) = ||(I - P_rho) zhat||^2 measures how much of the
filtered measurement cannot be explained by kernels placed at rho, with
amplitudes eliminated by least squares. Its analytic gradient and Hessian
are evaluated in the frequency domain; quantities that are mathematically
real are computed in complex arithmetic and checked for imaginary residue
so that symmetry bugs fail loudly instead of silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve

from .circle import wrap, wrap_dist, wrap_signed
from .slepian import SlepianKernel
from .spectral import Spectrum, ells

GRAM_IMAG_RTOL = 1e-10
BETA_IMAG_RTOL = 1e-9
GRAD_IMAG_RTOL = 1e-8
FEAS_TOL = 1e-12

STATUS_CONVERGED = "converged"
STATUS_MAX_ITER = "max_iter"
STATUS_HESSIAN_NOT_PD = "hessian_not_pd"


class DegenerateDictionaryError(ValueError):
    """Candidate positions too close for a well-posed least-squares system."""


def _checked_real(z: np.ndarray, scale: float, rtol: float, what: str) -> np.ndarray:
    scale = max(scale, 1e-300)
    if np.abs(np.imag(z)).max() > rtol * scale:
        raise ValueError(f"non-real {what}: imaginary residue exceeds tolerance")
    return np.real(z)


@dataclass(frozen=True)
class DictionaryMatrix:
    """Kernel coefficients modulated to candidate positions, with Gram factor."""

    rho: np.ndarray
    G: np.ndarray  # N x K complex
    gram: np.ndarray  # K x K real SPD, G* G
    gram_chol: np.ndarray  # lower-triangular Cholesky factor of gram


@dataclass(frozen=True)
class BoxConstraint:
    """Per-coordinate interval of radius `radius` around each center position."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = wrap(np.atleast_1d(np.asarray(self.center, dtype=float)))
        object.__setattr__(self, "center", center)
        if not 0.0 < self.radius < 0.25:
            raise ValueError("radius must lie in (0, 1/4)")
        if center.size > 1:
            d = wrap_dist(center[:, None], center[None, :])
            iu = np.triu_indices(center.size, k=1)
            if np.any(d[iu] <= 2.0 * self.radius):
                raise ValueError("box centers must be separated by more than twice the radius")


@dataclass(frozen=True)
class NewtonConfig:
    eta_stop: Optional[float] = None  # default 1e-12 * sqrt(K)
    eps0: Optional[float] = None  # default radius / 2
    max_iter: int = 100
    armijo_const: float = 1e-4
    max_backtracks: int = 40

    def __post_init__(self):
        if not 0.0 < self.armijo_const < 0.5:
            raise ValueError("armijo_const must lie in (0, 1/2)")


@dataclass(frozen=True)
class SolveReport:
    tau_tilde: np.ndarray
    beta: np.ndarray
    f_trace: np.ndarray
    grad_norm_final: float
    status: str
    iterations: int
    active_set_final: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))


def build_G(rho, kernel: SlepianKernel) -> DictionaryMatrix:
    """Modulated dictionary G[l, i] = ghat[l] e^{-i 2 pi l rho[i]} and its Gram factor."""
    rho = wrap(np.atleast_1d(np.asarray(rho, dtype=float)))
    if rho.size > 1:
        d = wrap_dist(rho[:, None], rho[None, :])
        iu = np.triu_indices(rho.size, k=1)
        if np.any(d[iu] == 0.0):
            raise DegenerateDictionaryError("degenerate dictionary")
    G = kernel.ghat[:, None] * np.exp(-2j * np.pi * np.outer(ells(kernel.f_c), rho))
    gram = _checked_real(G.conj().T @ G, 1.0, GRAM_IMAG_RTOL, "Gram matrix")
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDictionaryError("degenerate dictionary") from exc
    # Near-duplicate positions leave the Gram numerically PD but useless.
    if np.diag(chol).min() < 1e-3:
        raise DegenerateDictionaryError("degenerate dictionary")
    return DictionaryMatrix(rho=rho, G=G, gram=gram, gram_chol=chol)


def least_squares_beta(d: DictionaryMatrix, zhat: Spectrum) -> np.ndarray:
    """Amplitudes minimizing ||G beta - zhat||^2, via the Gram Cholesky factor."""
    z = zhat.coeffs
    rhs = _checked_real(d.G.conj().T @ z, float(np.linalg.norm(z)), BETA_IMAG_RTOL,
                        "normal equations")
    return cho_solve((d.gram_chol, True), rhs)


def objective_F(rho, kernel: SlepianKernel, zhat: Spectrum) -> float:
    """Residual energy after least-squares elimination of the amplitudes."""
    d = build_G(rho, kernel)
    beta = least_squares_beta(d, zhat)
    r = zhat.coeffs - d.G @ beta
    return float(np.vdot(r, r).real)


def gradient_F(rho, kernel: SlepianKernel, zhat: Spectrum) -> np.ndarray:
    d = build_G(rho, kernel)
    return _gradient(d, kernel, zhat)


def _gradient(d: DictionaryMatrix, kernel: SlepianKernel, zhat: Spectrum) -> np.ndarray:
    beta = least_squares_beta(d, zhat)
    r = zhat.coeffs - d.G @ beta
    lr = (2j * np.pi * ells(kernel.f_c)) * r
    w = _checked_real(d.G.conj().T @ lr, float(np.linalg.norm(lr)), GRAD_IMAG_RTOL,
                      "gradient")
    return -2.0 * beta * w


def hessian_F(rho, kernel: SlepianKernel, zhat: Spectrum) -> np.ndarray:
    """Four-term analytic Hessian of the reduced objective, symmetrized."""
    d = build_G(rho, kernel)
    ls = 2j * np.pi * ells(kernel.f_c)
    beta = least_squares_beta(d, zhat)
    r = zhat.coeffs - d.G @ beta
    lr = ls * r
    l2r = ls * lr

    scale_g = max(float(np.abs(d.G.conj().T @ (np.abs(ls)[:, None] * np.abs(d.G))).max()), 1.0)
    glg = _checked_real(d.G.conj().T @ (ls[:, None] * d.G), scale_g, GRAD_IMAG_RTOL,
                        "first-derivative Gram")
    gl2g = _checked_real(d.G.conj().T @ (ls[:, None] ** 2 * d.G), scale_g * scale_g,
                         GRAD_IMAG_RTOL, "second-derivative Gram")
    w1 = _checked_real(d.G.conj().T @ lr, float(np.linalg.norm(lr)), GRAD_IMAG_RTOL,
                       "gradient")
    w2 = _checked_real(d.G.conj().T @ l2r, float(np.linalg.norm(l2r)), GRAD_IMAG_RTOL,
                       "curvature residual")

    db = np.diag(beta)
    term1 = -2.0 * db @ gl2g @ db
    term2 = -2.0 * db @ np.diag(w2)
    bracket = db @ glg - np.diag(w1)
    term3 = -2.0 * bracket @ cho_solve((d.gram_chol, True), bracket.T)
    h = term1 + term2 + term3

    asym = np.abs(h - h.T).max()
    scale = max(np.abs(h).max(), 1e-300)
    if asym > GRAD_IMAG_RTOL * scale:
        raise ValueError("Hessian asymmetry residue exceeds tolerance")
    return 0.5 * (h + h.T)


def eps_active_set(rho, box: BoxConstraint, eps: float) -> np.ndarray:
    """Indices within eps of the box boundary (eps = 0: exactly active)."""
    rho = wrap(np.atleast_1d(np.asarray(rho, dtype=float)))
    d = wrap_dist(rho, box.center)
    if np.any(d > box.radius + FEAS_TOL):
        raise ValueError("infeasible point")
    return np.flatnonzero(d >= box.radius - eps)


def reduced_hessian(h: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Replace active rows and columns with identity rows and columns."""
    r = h.copy()
    active = np.asarray(active, dtype=int)
    r[active, :] = 0.0
    r[:, active] = 0.0
    r[active, active] = 1.0
    return r


def project_box(rho, box: BoxConstraint) -> np.ndarray:
    """Clamp each coordinate to the box, along the shorter arc; antipodal
    points tie-break toward center + radius."""
    u = wrap_signed(rho, box.center)
    return wrap(box.center + np.clip(u, -box.radius, box.radius))


def _displacement_norm(a, b) -> float:
    return float(np.linalg.norm(wrap_signed(a, b)))


def run_newton(tau0, kernel: SlepianKernel, zhat: Spectrum, box: BoxConstraint,
               cfg: NewtonConfig = NewtonConfig()) -> SolveReport:
    """Projected Newton refinement of tau0 within the box.

    zhat must already be filtered by the kernel used to build the dictionary.
    """
    tau = wrap(np.atleast_1d(np.asarray(tau0, dtype=float)))
    k = tau.size
    eta_stop = cfg.eta_stop if cfg.eta_stop is not None else 1e-12 * np.sqrt(k)
    eps = cfg.eps0 if cfg.eps0 is not None else box.radius / 2.0

    f_trace = [objective_F(tau, kernel, zhat)]
    status = STATUS_MAX_ITER
    iterations = 0
    for _ in range(cfg.max_iter):
        iterations += 1
        d = build_G(tau, kernel)
        grad = _gradient(d, kernel, zhat)
        hess = hessian_F(tau, kernel, zhat)
        active = eps_active_set(tau, box, eps)
        reduced = reduced_hessian(hess, active)
        try:
            rchol = np.linalg.cholesky(reduced)
        except np.linalg.LinAlgError:
            status = STATUS_HESSIAN_NOT_PD
            break
        v = cho_solve((rchol, True), grad)

        tau_full = project_box(wrap(tau - v), box)
        step_norm = _displacement_norm(tau_full, tau)
        if step_norm <= eta_stop:
            status = STATUS_CONVERGED
            break
        eps = min(step_norm, box.radius)

        accepted = None
        f_cur = f_trace[-1]
        for m in range(cfg.max_backtracks + 1):
            lam = 2.0**-m
            cand = tau_full if m == 0 else project_box(wrap(tau - lam * v), box)
            disp2 = float(np.sum(wrap_signed(cand, tau) ** 2))
            f_new = objective_F(cand, kernel, zhat)
            if f_new - f_cur <= -cfg.armijo_const / lam * disp2:
                accepted = (cand, f_new)
                break
        if accepted is None:
            break  # no acceptable step: stalled at numerical floor
        tau, f_new = accepted
        f_trace.append(f_new)

    d = build_G(tau, kernel)
    beta = least_squares_beta(d, zhat)
    return SolveReport(
        tau_tilde=tau,
        beta=beta,
        f_trace=np.asarray(f_trace),
        grad_norm_final=float(np.linalg.norm(_gradient(d, kernel, zhat))),
        status=status,
        iterations=iterations,
        active_set_final=eps_active_set(tau, box, 0.0),
    )


def run_gradient_projection(tau0, kernel: SlepianKernel, zhat: Spectrum,
                            box: BoxConstraint, step_init: float = 1.0,
                            max_iter: int = 5000,
                            eta_stop: Optional[float] = None,
                            armijo_const: float = 1e-4,
                            max_backtracks: int = 60) -> SolveReport:
    """First-order alternative: projected gradient steps with Armijo backtracking."""
    tau = wrap(np.atleast_1d(np.asarray(tau0, dtype=float)))
    if eta_stop is None:
        eta_stop = 1e-12 * np.sqrt(tau.size)

    f_trace = [objective_F(tau, kernel, zhat)]
    status = STATUS_MAX_ITER
    iterations = 0
    step = step_init
    for _ in range(max_iter):
        iterations += 1
        grad = gradient_F(tau, kernel, zhat)
        trial = project_box(wrap(tau - step * grad), box)
        if _displacement_norm(trial, tau) <= eta_stop:
            status = STATUS_CONVERGED
            break

        accepted = None
        f_cur = f_trace[-1]
        delta = step
        for _ in range(max_backtracks + 1):
            cand = project_box(wrap(tau - delta * grad), box)
            disp2 = float(np.sum(wrap_signed(cand, tau) ** 2))
            f_new = objective_F(cand, kernel, zhat)
            if disp2 > 0 and f_new - f_cur <= -armijo_const / max(delta / step, 1e-300) * disp2:
                accepted = (cand, f_new, delta)
                break
            delta *= 0.5
        if accepted is None:
            break
        tau, f_new, used = accepted
        f_trace.append(f_new)
        step = 2.0 * used  # let the step grow back after cautious iterations

    d = build_G(tau, kernel)
    beta = least_squares_beta(d, zhat)
    return SolveReport(
        tau_tilde=tau,
        beta=beta,
        f_trace=np.asarray(f_trace),
        grad_norm_final=float(np.linalg.norm(gradient_F(tau, kernel, zhat))),
        status=status,
        iterations=iterations,
        active_set_final=eps_active_set(tau, box, 0.0),
    )


def stationarity_residual(rho, kernel: SlepianKernel, zhat: Spectrum,
                          box: BoxConstraint) -> float:
    """Norm of the gradient components that still point into the feasible box.

    Inactive coordinates contribute their full gradient entry; coordinates on
    the boundary contribute only if the descent direction points inward.
    """
    rho = wrap(np.atleast_1d(np.asarray(rho, dtype=float)))
    grad = gradient_F(rho, kernel, zhat)
    u = wrap_signed(rho, box.center)
    if np.any(np.abs(u) > box.radius + FEAS_TOL):
        raise ValueError("infeasible point")
    res = grad.copy()
    upper = u >= box.radius - FEAS_TOL
    lower = u <= -box.radius + FEAS_TOL
    res[upper] = np.maximum(grad[upper], 0.0)
    res[lower] = np.minimum(grad[lower], 0.0)
    return float(np.linalg.norm(res))
