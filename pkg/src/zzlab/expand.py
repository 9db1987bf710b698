"""Closed-form dispersion machinery and the zigzag boundary.

Sign conventions.  Near sigma = 0 the critical eigenvalue is written

    lambda = -c1 sigma1^2 - c2 sigma2^2 - c3 sigma2^4 + h.o.t.

so stability means nonnegative coefficients; `fit_dispersion` returns
coefficients in this convention.  `c2_closed` evaluates the printed
closed-form quotient, which carries the opposite sign: for kappa above the
zigzag boundary c2_closed < 0 while the fitted c2 > 0, and the two are
compared through `fitted ~= -c2_closed`.  The zigzag boundary is the root
of either in kappa.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bloch import EigenBranch, SigmaPoint, critical_branch, make_axis_grid, mu_symbol
from .errors import IllConditionedFit, NearResonance, NoRoot
from .roll import Params, solve_roll

RESONANCE_TOL = 1e-8
CROSS_FORM_TOL = 1e-12


def mu(j: int, kappa: float, sigma: SigmaPoint) -> float:
    """mu_j(kappa, sigma) = -(1 - (1+kappa)(j+sigma1)^2 - sigma2^2)^2."""
    return float(mu_symbol(j, kappa, sigma))


def mu_even(m: int, kappa: float, sigma: SigmaPoint) -> float:
    """Part of mu_m with even order in sigma: (mu_m + mu_{-m}) / 2."""
    return 0.5 * (mu(m, kappa, sigma) + mu(-m, kappa, sigma))


def mu_delta(m: int, kappa: float, sigma: SigmaPoint) -> float:
    """Part of mu_m with odd order in sigma: (mu_m - mu_{-m}) / 2."""
    return 0.5 * (mu(m, kappa, sigma) - mu(-m, kappa, sigma))


@dataclass(frozen=True)
class EtaTerms:
    eta_plus0: float
    eta_minus0: float
    eta_plus1: float
    eta_minus1: float


def eta_terms(kappa: float, sigma: SigmaPoint, check: bool = True) -> EtaTerms:
    """The four eta quantities entering the reduced 2x2 determinant.

    Computed from the direct reciprocals of (mu_{+-3} + kappa^2); with
    check=True the even/odd-split closed forms are evaluated as well and
    must agree to 1e-12 (the mu-identities cross-check).
    """
    d3 = mu(3, kappa, sigma) + kappa**2
    dm3 = mu(-3, kappa, sigma) + kappa**2
    if min(abs(d3), abs(dm3)) < RESONANCE_TOL:
        raise NearResonance(
            f"|mu_(+-3) + kappa^2| = {min(abs(d3), abs(dm3)):.3e} too small"
        )
    direct = EtaTerms(
        eta_plus0=1.0 / d3 + 1.0 / dm3,
        eta_minus0=1.0 / d3 - 1.0 / dm3,
        eta_plus1=1.0 / d3**2 + 1.0 / dm3**2,
        eta_minus1=1.0 / d3**2 - 1.0 / dm3**2,
    )
    if check:
        me = mu_even(3, kappa, sigma) + kappa**2
        md = mu_delta(3, kappa, sigma)
        den = me**2 - md**2
        split = EtaTerms(
            eta_plus0=2.0 * me / den,
            eta_minus0=-2.0 * md / den,
            eta_plus1=(2.0 * md**2 + 2.0 * me**2) / den**2,
            eta_minus1=-4.0 * md * me / den**2,
        )
        for name in ("eta_plus0", "eta_minus0", "eta_plus1", "eta_minus1"):
            a, b = getattr(direct, name), getattr(split, name)
            scale = max(abs(a), abs(b), 1.0)
            if abs(a - b) > CROSS_FORM_TOL * scale:
                raise ArithmeticError(
                    f"{name}: direct {a!r} vs split {b!r} disagree"
                )
    return direct


def c2_closed(eps: float, kappa: float, a1: float) -> float:
    """Printed closed-form transverse quadratic coefficient.

    Appendix-sign value: negative for kappa above the zigzag boundary
    (the fitted main-text coefficient is its negative).
    """
    if kappa <= -0.8:
        raise ValueError("kappa must exceed -4/5")
    a14 = (9.0 / 32.0) * a1**4
    den_geo = (1.0 + kappa) ** 2 * (5.0 * kappa + 4.0) ** 2
    num = 2.0 * kappa + a14 * (9.0 * kappa + 8.0) / (64.0 * den_geo)
    den = 1.0 + a14 / (128.0 * den_geo)
    return -num / den


@dataclass(frozen=True)
class DispersionFit:
    c1: float
    c2: float
    c3: float
    fit_residual: float
    fit_radius: float


def _poly_fit_over_x(x: np.ndarray, y: np.ndarray, degree: int, scale: float):
    """LSQ fit of y on [1, x, x^2, ...] with x normalized by `scale`."""
    xs = x / scale
    design = np.vander(xs, degree + 1, increasing=True)
    cond = np.linalg.cond(design)
    if cond > 1e8:
        raise IllConditionedFit(f"design matrix condition {cond:.3e} > 1e8")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = design @ coef - y
    # un-normalize
    coef = coef / scale ** np.arange(degree + 1)
    return coef, float(np.max(np.abs(resid)))


def fit_dispersion(branch: EigenBranch, fit_radius: float) -> DispersionFit:
    """Least-squares small-sigma fit of the branch along both axes.

    lambda(sigma1, 0) / sigma1^2 is fit by even powers of sigma1 and
    lambda(0, sigma2) / sigma2^2 by even powers of sigma2; returned
    coefficients follow lambda = -c1 s1^2 - c2 s2^2 - c3 s2^4.
    """
    s = np.array([p.as_tuple() for p in branch.grid])
    lam = branch.lambdas
    on_s1 = (s[:, 1] == 0.0) & (np.abs(s[:, 0]) <= fit_radius) & (s[:, 0] != 0.0)
    on_s2 = (s[:, 0] == 0.0) & (np.abs(s[:, 1]) <= fit_radius) & (s[:, 1] != 0.0)
    if on_s1.sum() < 3 or on_s2.sum() < 6:
        raise ValueError("branch grid does not cover both axes in fit_radius")

    x1 = s[on_s1, 0] ** 2
    y1 = lam[on_s1] / x1
    deg1 = min(2, on_s1.sum() // 2 - 1)
    coef1, r1 = _poly_fit_over_x(x1, y1, deg1, fit_radius**2)

    x2 = s[on_s2, 1] ** 2
    y2 = lam[on_s2] / x2
    deg2 = min(5, int(on_s2.sum()) // 2 - 1)
    coef2, r2 = _poly_fit_over_x(x2, y2, deg2, fit_radius**2)

    scale = max(np.max(np.abs(lam[on_s1] )), np.max(np.abs(lam[on_s2])), 1e-300)
    resid = max(r1 * np.max(x1), r2 * np.max(x2)) / scale
    return DispersionFit(
        c1=float(-coef1[0]),
        c2=float(-coef2[0]),
        c3=float(-coef2[1]),
        fit_residual=float(resid),
        fit_radius=fit_radius,
    )


DEFAULT_FIT_RADIUS = 0.08
DEFAULT_FIT_POINTS = 12


def fit_c2_spectral(
    eps: float,
    kappa: float,
    J: int = 64,
    n_modes: int = 32,
    fit_radius: float = DEFAULT_FIT_RADIUS,
    n_points: int = DEFAULT_FIT_POINTS,
) -> DispersionFit:
    """Roll solve + eigenbranch + dispersion fit at one parameter point."""
    roll = solve_roll(Params(eps, kappa), n_modes)
    grid = make_axis_grid(fit_radius, n_points)
    branch = critical_branch(roll, grid, J)
    return fit_dispersion(branch, fit_radius)


@dataclass(frozen=True)
class ZigzagResult:
    eps: float
    kappa_z_numeric: float
    kappa_z_spectral: float
    kappa_z_series: float


def _c2_closed_of_kappa(eps: float, kappa: float, n_modes: int) -> float:
    a1 = solve_roll(Params(eps, kappa), n_modes).a1
    return c2_closed(eps, kappa, a1)


def kappa_z_root(
    eps: float,
    n_modes: int = 32,
    J: int = 64,
    spectral: bool = True,
    fit_radius: float = DEFAULT_FIT_RADIUS,
) -> ZigzagResult:
    """Zigzag boundary kappa_z(eps) three ways.

    numeric: root of the closed-form c2 (with the Newton roll's a1) in
    kappa; spectral: root of the fitted transverse coefficient from the
    eigenbranch; series: -eps^4 / 512.
    """
    lo, hi = -eps / 2.0, 0.0
    f = lambda k: _c2_closed_of_kappa(eps, k, n_modes)
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0.0:
        raise NoRoot(f"no sign change of c2 on [{lo}, {hi}]")
    kz_numeric = brentq(f, lo, hi, xtol=1e-18, rtol=8.9e-16)

    kz_spectral = np.nan
    if spectral:
        g = lambda k: fit_c2_spectral(eps, k, J, n_modes, fit_radius).c2
        # fitted c2 is positive above the boundary, negative below
        glo, ghi = g(lo), g(hi)
        if glo * ghi > 0.0:
            raise NoRoot(f"no sign change of fitted c2 on [{lo}, {hi}]")
        kz_spectral = brentq(g, lo, hi, xtol=1e-16, rtol=8.9e-16)

    return ZigzagResult(
        eps=eps,
        kappa_z_numeric=float(kz_numeric),
        kappa_z_spectral=float(kz_spectral),
        kappa_z_series=-(eps**4) / 512.0,
    )
