"""Quadrature verification of the linear semigroup decay laws.

The critical dispersion relation near the zigzag boundary behaves like
``lambda(sigma) <= -d1*sigma1**2 - d2*sigma2**p`` with ``p = 4`` on the
boundary and ``p = 2`` above it.  The semigroup acting on the critical
amplitude then decays like ``t**(-1/4 - 1/(p) ... )`` depending on which
norm pair one measures; concretely the kernel norms computed here obey

* sup kind:       ``sup_sigma |sigma1|**k exp(...)``  ~ ``t**(-k/2)``
* integral kind:  ``int |sigma1|**k exp(...) dsigma`` ~ ``t**(-3/4 - k/2)``
  for ``p = 4`` and ``t**(-1 - k/2)`` for ``p = 2``.

sigma1 lives on the finite interval [-1/2, 1/2); the large-t asymptotics
nevertheless match the whole-line values because the Gaussian concentrates
at the origin.  sigma2 runs over the whole line, truncated adaptively where
the integrand falls below 1e-16 of its peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureFailure, WindowTooNarrow

QUAD_TOL = 1e-9
TRUNCATION_FLOOR = 1e-16

#: oracle for the pure-model integral norm (d1 = d2 = 1, p = 4, k = 0, t = 1)
#: with the sigma1 integral taken over all of R:
#: int exp(-x^2) dx * int exp(-y^4) dy = sqrt(pi) * 2*Gamma(5/4)
PURE_MODEL_ORACLE = math.sqrt(math.pi) * 2.0 * math.gamma(1.25)


@dataclass(frozen=True)
class DecayLawSpec:
    """Model dispersion ``-d1*sigma1**2 - d2*sigma2**p`` with sigma1 weight k."""

    d1: float
    d2: float
    transverse_power: int = 4
    k: int = 0

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError("d1 and d2 must be positive")
        if self.transverse_power not in (2, 4):
            raise ValueError("transverse_power must be 2 or 4")
        if self.k not in (0, 1):
            raise ValueError("k must be 0 or 1")

    @property
    def expected_slope_sup(self) -> float:
        return -self.k / 2.0

    @property
    def expected_slope_integral(self) -> float:
        if self.transverse_power == 4:
            return -0.75 - self.k / 2.0
        return -1.0 - self.k / 2.0


@dataclass(frozen=True)
class DecayCurve:
    """A sampled decay curve with its fitted log-log slope."""

    times: tuple
    values: tuple
    fitted_slope: float
    slope_stderr: float
    fit_window: tuple


def _sigma2_cutoff(d2: float, p: int, t: float) -> float:
    """Point beyond which exp(-d2*s^p*t) < TRUNCATION_FLOOR of its peak (=1)."""
    return (math.log(1.0 / TRUNCATION_FLOOR) / (d2 * t)) ** (1.0 / p)


def kernel_norm(spec: DecayLawSpec, t: float, norm_kind: str = "integral") -> float:
    """Sup or integral norm of |sigma1|^k exp(-(d1 s1^2 + d2 s2^p) t).

    sup kind maximizes over sigma1 in [-1/2, 1/2) (the sigma2 factor is 1 at
    its max); integral kind integrates over sigma1 in [-1/2, 1/2) and sigma2
    over the adaptively truncated line.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    d1, d2, p, k = spec.d1, spec.d2, spec.transverse_power, spec.k

    if norm_kind == "sup":
        if k == 0:
            return 1.0
        # maximize s1*exp(-d1*s1^2*t): interior max at s1 = 1/sqrt(2*d1*t)
        s_star = min(0.5, 1.0 / math.sqrt(2.0 * d1 * t))
        return s_star * math.exp(-d1 * s_star**2 * t)
    if norm_kind != "integral":
        raise ValueError("norm_kind must be 'sup' or 'integral'")

    def f1(s):
        return abs(s) ** k * math.exp(-d1 * s * s * t)

    i1, e1 = quad(f1, -0.5, 0.5, epsabs=0.0, epsrel=QUAD_TOL, limit=200)
    cut = _sigma2_cutoff(d2, p, t)
    i2, e2 = quad(
        lambda s: math.exp(-d2 * s**p * t),
        -cut,
        cut,
        epsabs=0.0,
        epsrel=QUAD_TOL,
        limit=200,
    )
    for val, err, name in ((i1, e1, "sigma1"), (i2, e2, "sigma2")):
        if err > QUAD_TOL * max(abs(val), 1.0):
            raise QuadratureFailure(
                f"{name} quadrature error {err:.2e} exceeds tolerance {QUAD_TOL:.1e}"
            )
    return i1 * i2


def fit_decay(times, values, window=None) -> DecayCurve:
    """Least-squares log-log slope of values vs times inside window.

    Requires >= 8 samples spanning at least one decade in t.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = (float(times.min()), float(times.max()))
    t_lo, t_hi = window
    mask = (times >= t_lo) & (times <= t_hi)
    ts, vs = times[mask], values[mask]
    if ts.size < 8:
        raise WindowTooNarrow(f"only {ts.size} samples in window, need >= 8")
    if ts.max() < 10.0 * ts.min():
        raise WindowTooNarrow(
            f"window spans factor {ts.max() / ts.min():.2f} < 10 in t"
        )
    if np.any(vs <= 0):
        raise ValueError("values must be strictly positive for log-log fit")
    x, y = np.log(ts), np.log(vs)
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    n = x.size
    if n > 2 and res.size:
        s2 = float(res[0]) / (n - 2)
        sxx = float(np.sum((x - x.mean()) ** 2))
        stderr = math.sqrt(s2 / sxx)
    else:
        stderr = 0.0
    return DecayCurve(
        times=tuple(ts.tolist()),
        values=tuple(vs.tolist()),
        fitted_slope=slope,
        slope_stderr=stderr,
        fit_window=(t_lo, t_hi),
    )


def decay_curve(
    spec: DecayLawSpec,
    norm_kind: str,
    t_lo: float = 10.0,
    t_hi: float = 1e3,
    n_samples: int = 25,
) -> DecayCurve:
    """Sample kernel_norm on a log grid and fit the decay slope."""
    times = np.geomspace(t_lo, t_hi, n_samples)
    values = [kernel_norm(spec, float(t), norm_kind) for t in times]
    return fit_decay(times, values, (t_lo, t_hi))


def rate_table(d1: float = 1.0, d2: float = 1.0, **kwargs) -> list:
    """Fitted slopes for all (k, kind, p) combinations.

    Returns a list of dicts with keys k, kind, p, slope, expected.
    """
    rows = []
    for k in (0, 1):
        for p in (2, 4):
            spec = DecayLawSpec(d1=d1, d2=d2, transverse_power=p, k=k)
            for kind in ("sup", "integral"):
                curve = decay_curve(spec, kind, **kwargs)
                expected = (
                    spec.expected_slope_sup
                    if kind == "sup"
                    else spec.expected_slope_integral
                )
                rows.append(
                    {
                        "k": k,
                        "kind": kind,
                        "p": p,
                        "slope": curve.fitted_slope,
                        "expected": expected,
                        "stderr": curve.slope_stderr,
                    }
                )
    return rows
