"""Periodic roll solutions of the rescaled stationary Swift-Hohenberg equation.

Rolls are even, 2*pi-periodic in the stretched variable xi and contain only
odd cosine harmonics, so we solve the Galerkin system on the basis
cos(xi), cos(3*xi), ... by Newton iteration.  The low-order amplitude series
(`roll_series_reference`) serves as an independent oracle for small eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSolution, NoConvergence

DEFAULT_EPS0 = 0.5
DEFAULT_TOL = 1e-10
MAX_NEWTON_ITER = 50


@dataclass(frozen=True)
class Params:
    """Amplitude parameter eps and wavenumber offset kappa = k^2 - 1."""

    eps: float
    kappa: float = 0.0
    eps0: float = DEFAULT_EPS0

    def __post_init__(self):
        if not 0.0 < self.eps <= self.eps0:
            raise ValueError(f"eps={self.eps} outside (0, {self.eps0}]")
        if abs(self.kappa) > self.eps:
            raise ValueError(
                f"kappa={self.kappa} outside existence window (-eps, eps)"
            )

    @property
    def a_tilde(self) -> float:
        """Leading roll amplitude sqrt(4 (eps^2 - kappa^2) / 3)."""
        return math.sqrt(max(4.0 * (self.eps**2 - self.kappa**2) / 3.0, 0.0))

    @property
    def wavenumber(self) -> float:
        return math.sqrt(1.0 + self.kappa)


def roll_series_reference(params: Params) -> tuple[float, float, float]:
    """Truncated amplitude series (a_tilde, a1, a3) of the roll.

    a1 = a_tilde + a_tilde^3/512 and a3 = -a_tilde^3/256, both up to the
    next order in a_tilde.
    """
    at = params.a_tilde
    return at, at + at**3 / 512.0, -(at**3) / 256.0


def _linear_symbol(harmonics: np.ndarray, params: Params) -> np.ndarray:
    # -(1 + (1+kappa) d_xi^2)^2 + eps^2 acting on cos(n xi)
    return -((1.0 - (1.0 + params.kappa) * harmonics.astype(float) ** 2) ** 2) \
        + params.eps**2


@dataclass(frozen=True)
class RollSolution:
    """Converged odd-harmonic cosine-Galerkin roll."""

    params: Params
    harmonics: np.ndarray = field(repr=False)  # 1, 3, 5, ...
    cosine_coeffs: np.ndarray = field(repr=False)
    residual_inf: float = np.nan
    a_tilde: float = np.nan

    @property
    def a1(self) -> float:
        return float(self.cosine_coeffs[0])

    @property
    def a3(self) -> float:
        return float(self.cosine_coeffs[1]) if len(self.cosine_coeffs) > 1 else 0.0

    @property
    def n_modes(self) -> int:
        """Highest retained cosine harmonic."""
        return int(self.harmonics[-1]) + 1

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        """u_p on arbitrary xi points."""
        xi = np.asarray(xi, dtype=float)
        return np.cos(np.multiply.outer(xi, self.harmonics)) @ self.cosine_coeffs

    def evaluate_derivative(self, xi: np.ndarray) -> np.ndarray:
        """u_p' = d u_p / d xi."""
        xi = np.asarray(xi, dtype=float)
        return -np.sin(np.multiply.outer(xi, self.harmonics)) @ (
            self.harmonics * self.cosine_coeffs
        )

    def exp_coeffs(self, j_max: int) -> np.ndarray:
        """Complex-exponential Fourier coefficients of u_p for |j| <= j_max.

        u_p = sum_j c_j exp(i j xi); c_{+-n} = a_n / 2 for odd harmonics n.
        """
        c = np.zeros(2 * j_max + 1)
        for n, a in zip(self.harmonics, self.cosine_coeffs):
            if n <= j_max:
                c[j_max + n] = a / 2.0
                c[j_max - n] = a / 2.0
        return c

    def derivative_exp_coeffs(self, j_max: int) -> np.ndarray:
        """Fourier coefficients of u_p' (purely imaginary)."""
        j = np.arange(-j_max, j_max + 1)
        return 1j * j * self.exp_coeffs(j_max)

    def squared_exp_coeffs(self, m_max: int) -> np.ndarray:
        """Fourier coefficients of u_p^2 for |m| <= m_max (real, even in m)."""
        n_grid = _quad_grid_size(self.n_modes, 4)
        xi = 2.0 * np.pi * np.arange(n_grid) / n_grid
        usq = self.evaluate(xi) ** 2
        spec = np.fft.fft(usq) / n_grid
        m = np.arange(-m_max, m_max + 1)
        out = spec[np.mod(m, n_grid)]
        return np.real(out)


def _quad_grid_size(n_modes: int, factor: int) -> int:
    n = factor * n_modes
    # round up to a power of two for clean FFTs
    return 1 << max(6, (n - 1).bit_length())


def _residual_field(
    coeffs: np.ndarray, harmonics: np.ndarray, params: Params, n_grid: int
) -> np.ndarray:
    lin = _linear_symbol(harmonics, params)
    xi = 2.0 * np.pi * np.arange(n_grid) / n_grid
    basis = np.cos(np.outer(xi, harmonics.astype(float)))
    u = basis @ coeffs
    return basis @ (lin * coeffs) - u**3


def residual(roll: RollSolution, n_quad: int) -> float:
    """Sup-norm collocation residual of the stationary equation.

    Recomputed independently of the solver at the requested quadrature size.
    """
    if n_quad < 4 * roll.n_modes:
        raise ValueError("n_quad must be at least 4x the retained mode count")
    r = _residual_field(roll.cosine_coeffs, roll.harmonics, roll.params, n_quad)
    return float(np.max(np.abs(r)))


def _newton(
    params: Params,
    harmonics: np.ndarray,
    coeffs: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, float]:
    lin = _linear_symbol(harmonics, params)
    n_grid = _quad_grid_size(int(harmonics[-1]) + 1, 4)
    xi = 2.0 * np.pi * np.arange(n_grid) / n_grid
    basis = np.cos(np.outer(xi, harmonics.astype(float)))  # (n_grid, m)
    proj = (2.0 / n_grid) * basis.T  # cosine projection weights

    res_inf = np.inf
    for _ in range(max_iter):
        u = basis @ coeffs
        cubic = proj @ (u**3)
        f = lin * coeffs - cubic
        res_inf = float(np.max(np.abs(basis @ f)))
        if res_inf <= tol:
            # one polishing step: Newton converges quadratically, so this
            # lands near machine precision
            jac = np.diag(lin) - proj @ (3.0 * u[:, None] ** 2 * basis)
            coeffs = coeffs - np.linalg.solve(jac, f)
            u = basis @ coeffs
            f = lin * coeffs - proj @ (u**3)
            res_inf = float(np.max(np.abs(basis @ f)))
            return coeffs, res_inf
        jac = np.diag(lin) - proj @ (3.0 * u[:, None] ** 2 * basis)
        coeffs = coeffs - np.linalg.solve(jac, f)
    raise NoConvergence(
        f"Newton did not reach residual {tol} in {max_iter} iterations "
        f"(eps={params.eps}, kappa={params.kappa}); last residual {res_inf:.3e}"
    )


def solve_roll(
    params: Params,
    n_modes: int = 32,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_NEWTON_ITER,
) -> RollSolution:
    """Newton-Galerkin roll solve on the odd cosine harmonics up to n_modes.

    The initial guess is a_tilde * cos(xi); if plain Newton fails, the
    solver continues in eps from a smaller amplitude.
    """
    if n_modes < 4:
        raise ValueError("n_modes must be >= 4")
    at = params.a_tilde
    if at <= 1e-12:
        raise DegenerateSolution(
            f"a_tilde = {at:.3e}: only the zero state exists at "
            f"(eps={params.eps}, kappa={params.kappa})"
        )

    harmonics = np.arange(1, n_modes, 2)
    coeffs = np.zeros(len(harmonics))
    coeffs[0] = at
    try:
        coeffs, res_inf = _newton(params, harmonics, coeffs, tol, max_iter)
    except NoConvergence:
        # continuation in eps from half amplitude
        coeffs = np.zeros(len(harmonics))
        coeffs[0] = Params(params.eps / 2.0, params.kappa, params.eps0).a_tilde
        for frac in (0.5, 0.75, 0.9, 1.0):
            step = Params(frac * params.eps, params.kappa, params.eps0)
            if abs(step.kappa) >= step.eps:
                continue
            coeffs, res_inf = _newton(step, harmonics, coeffs, tol, max_iter)

    if np.max(np.abs(coeffs)) < 0.1 * at:
        raise DegenerateSolution(
            "Newton collapsed to the zero state while a_tilde > tolerance"
        )
    if coeffs[0] < 0.0:
        coeffs = -coeffs  # sign convention: positive leading coefficient

    # independent residual check at finer quadrature
    res_fine = _residual_field(
        coeffs, harmonics, params, _quad_grid_size(n_modes, 8)
    )
    return RollSolution(
        params=params,
        harmonics=harmonics,
        cosine_coeffs=coeffs,
        residual_inf=float(np.max(np.abs(res_fine))),
        a_tilde=at,
    )
